"""Dense statevector simulator with the small gate set QAOA and QPE need.

Qubit 0 is the least-significant bit of the basis index. Bitstrings are
printed most-significant first, so qubit 0 is the rightmost character.
Diagonal unitaries are carried as phase vectors over a contiguous qubit
range, never as dense matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 22


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amps: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))


@dataclass
class Histogram:
    counts: dict
    shots: int

    def most_common(self):
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


# -- gate specs ---------------------------------------------------------------

@dataclass(frozen=True)
class H:
    q: int


@dataclass(frozen=True)
class RX:
    q: int
    theta: float


@dataclass(frozen=True)
class RY:
    q: int
    theta: float


@dataclass(frozen=True)
class RZ:
    q: int
    theta: float


@dataclass(frozen=True)
class CNOT:
    c: int
    t: int


@dataclass(frozen=True)
class CZ:
    c: int
    t: int


@dataclass(frozen=True, eq=False)
class DiagonalPhase:
    """Multiply amplitude by exp(i * phases[k]), k = index within ``qubits``."""
    qubits: range
    phases: np.ndarray


@dataclass(frozen=True, eq=False)
class ControlledDiagonalPower:
    """DiagonalPhase raised to ``power``, applied only where ``control`` is 1."""
    control: int
    qubits: range
    phases: np.ndarray
    power: int = 1


@dataclass(frozen=True)
class InverseQFT:
    qubits: range


def new_state(q: int) -> StateVector:
    if not 1 <= q <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {q}")
    amps = np.zeros(2**q, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(q, amps)


def from_amplitudes(amps) -> StateVector:
    amps = np.asarray(amps, dtype=np.complex128)
    q = int(np.log2(amps.size))
    if 2**q != amps.size:
        raise ValueError("amplitude count must be a power of two")
    return StateVector(q, amps / np.linalg.norm(amps))


def uniform_state(q: int) -> StateVector:
    return StateVector(q, np.full(2**q, 2 ** (-q / 2), dtype=np.complex128))


def basis_state(q: int, index: int) -> StateVector:
    s = new_state(q)
    amps = np.zeros_like(s.amps)
    amps[index] = 1.0
    return StateVector(q, amps)


def _check_qubit(s, *qs):
    for q in qs:
        if not 0 <= q < s.num_qubits:
            raise ValueError(f"qubit {q} out of range for {s.num_qubits}-qubit state")
    if len(set(qs)) != len(qs):
        raise ValueError(f"qubit index collision: {qs}")


def _check_range(s, r: range):
    if r.step != 1 or len(r) == 0 or r.start < 0 or r.stop > s.num_qubits:
        raise ValueError(f"qubit range {r} invalid for {s.num_qubits}-qubit state")


def _one_qubit(s: StateVector, q: int, u: np.ndarray) -> StateVector:
    v = s.amps.reshape(-1, 2, 2**q)
    out = np.einsum("ab,ibj->iaj", u, v)
    return StateVector(s.num_qubits, out.reshape(-1))


def _sub_view(s: StateVector, r: range):
    """Reshape amps to (high, 2**len(r), low) around the qubit range."""
    return s.amps.reshape(-1, 2 ** len(r), 2**r.start)


def _rx(theta):
    c, sn = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * sn], [-1j * sn, c]])


def _ry(theta):
    c, sn = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -sn], [sn, c]], dtype=np.complex128)


def _rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_HAD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def apply_gate(s: StateVector, g) -> StateVector:
    n = s.num_qubits
    if isinstance(g, H):
        _check_qubit(s, g.q)
        return _one_qubit(s, g.q, _HAD)
    if isinstance(g, RX):
        _check_qubit(s, g.q)
        return _one_qubit(s, g.q, _rx(g.theta))
    if isinstance(g, RY):
        _check_qubit(s, g.q)
        return _one_qubit(s, g.q, _ry(g.theta))
    if isinstance(g, RZ):
        _check_qubit(s, g.q)
        return _one_qubit(s, g.q, _rz(g.theta))
    if isinstance(g, (CNOT, CZ)):
        _check_qubit(s, g.c, g.t)
        idx = np.arange(2**n)
        ctrl = (idx >> g.c) & 1 == 1
        amps = s.amps.copy()
        if isinstance(g, CNOT):
            src = idx ^ (1 << g.t)
            amps[ctrl] = s.amps[src[ctrl]]
        else:
            tgt = (idx >> g.t) & 1 == 1
            amps[ctrl & tgt] *= -1
        return StateVector(n, amps)
    if isinstance(g, DiagonalPhase):
        _check_range(s, g.qubits)
        phases = np.asarray(g.phases, dtype=np.float64)
        if phases.size != 2 ** len(g.qubits):
            raise ValueError("phase vector length must be 2**len(qubits)")
        v = _sub_view(s, g.qubits) * np.exp(1j * phases)[None, :, None]
        return StateVector(n, v.reshape(-1))
    if isinstance(g, ControlledDiagonalPower):
        _check_range(s, g.qubits)
        _check_qubit(s, g.control)
        if g.control in g.qubits:
            raise ValueError("control qubit overlaps target range")
        phases = np.asarray(g.phases, dtype=np.float64)
        if phases.size != 2 ** len(g.qubits):
            raise ValueError("phase vector length must be 2**len(qubits)")
        # reduce before exponentiating so large powers keep precision
        factor = np.exp(1j * np.mod(phases * g.power, 2 * np.pi))
        idx = np.arange(2**n)
        sub = (idx >> g.qubits.start) & (2 ** len(g.qubits) - 1)
        ctrl = (idx >> g.control) & 1 == 1
        amps = s.amps.copy()
        amps[ctrl] *= factor[sub[ctrl]]
        return StateVector(n, amps)
    if isinstance(g, InverseQFT):
        _check_range(s, g.qubits)
        v = np.fft.fft(_sub_view(s, g.qubits), axis=1, norm="ortho")
        return StateVector(n, v.reshape(-1))
    raise TypeError(f"unsupported gate {g!r}")


def apply_circuit(s: StateVector, gates) -> StateVector:
    for g in gates:
        s = apply_gate(s, g)
    return s


def bitstring(index: int, width: int) -> str:
    return format(index, f"0{width}b")


def measure(s: StateVector, shots: int, seed: int = 0, qubits: range | None = None) -> Histogram:
    """Seeded multinomial sampling; optionally marginal over a qubit range."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = s.probabilities()
    width = s.num_qubits
    if qubits is not None:
        _check_range(s, qubits)
        probs = _sub_view(StateVector(s.num_qubits, probs), qubits).sum(axis=(0, 2)).real
        width = len(qubits)
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    nz = np.flatnonzero(counts)
    return Histogram({bitstring(int(k), width): int(counts[k]) for k in nz}, shots)
