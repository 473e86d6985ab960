"""QAOA on the step/city QUBO: cost diagonal, two ansatz families, optimization
and sampling-based tour extraction.

Everything here minimizes the cost expectation. Two ansatz families are
supported:

* ``canonical``: uniform start, then p rounds of cost phase
  ``exp(-i gamma E)`` followed by the X mixer ``RX(2 beta)`` on every qubit.
* ``hardware``: |0...0>, then per layer an RY on every qubit followed by a
  linear CNOT chain. No cost-phase gates; 6 layers on 16 qubits is 96 angles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gatesim as gs
from .encode import DecodeReport, QuboModel, build_qubo_sa_form, decode_assignment
from .gatesim import Histogram, StateVector
from .instance import TspInstance
from .neldermead import OptimTrace, minimize

MAX_COST_VARS = 20


@dataclass(frozen=True, eq=False)
class CostDiagonal:
    energies: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(np.log2(self.energies.size))

    def shifted(self, c: float) -> "CostDiagonal":
        return CostDiagonal(self.energies + c)


@dataclass(frozen=True, eq=False)
class AnsatzParams:
    kind: str  # "canonical" or "hardware"
    depth: int  # p for canonical, layers for hardware
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("canonical", "hardware"):
            raise ValueError(f"unknown ansatz kind {self.kind!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).ravel())

    def expected_length(self, num_qubits: int) -> int:
        if self.kind == "canonical":
            return 2 * self.depth
        return self.depth * num_qubits

    @property
    def gammas(self):
        return self.values[: self.depth]

    @property
    def betas(self):
        return self.values[self.depth:]

    def with_values(self, values) -> "AnsatzParams":
        return AnsatzParams(self.kind, self.depth, values)

    @classmethod
    def random(cls, kind: str, depth: int, num_qubits: int, seed: int = 0) -> "AnsatzParams":
        size = 2 * depth if kind == "canonical" else depth * num_qubits
        vals = np.random.default_rng(seed).uniform(0, 2 * np.pi, size=size)
        return cls(kind, depth, vals)


def build_cost_diagonal(q: QuboModel) -> CostDiagonal:
    """Energy of every basis state; bit k of the index is variable k."""
    nv = q.num_vars
    if nv > MAX_COST_VARS:
        raise ValueError(f"too many variables for a dense cost diagonal: {nv} > {MAX_COST_VARS}")
    idx = np.arange(2**nv)
    energies = np.full(idx.size, q.offset)
    # chunked to bound memory at 2^20 x 20
    chunk = 1 << 14
    for lo in range(0, idx.size, chunk):
        bits = ((idx[lo:lo + chunk, None] >> np.arange(nv)) & 1).astype(np.float64)
        energies[lo:lo + chunk] += np.einsum("bi,ij,bj->b", bits, q.q, bits)
    return CostDiagonal(energies)


def evolve_ansatz(cost: CostDiagonal, params: AnsatzParams) -> StateVector:
    nq = cost.num_qubits
    if params.values.size != params.expected_length(nq):
        raise ValueError(
            f"{params.kind} ansatz with depth {params.depth} on {nq} qubits needs "
            f"{params.expected_length(nq)} angles, got {params.values.size}")
    if params.kind == "canonical":
        state = gs.uniform_state(nq)
        everything = range(0, nq)
        for g, b in zip(params.gammas, params.betas):
            state = gs.apply_gate(state, gs.DiagonalPhase(everything, -g * cost.energies))
            for k in range(nq):
                state = gs.apply_gate(state, gs.RX(k, 2 * b))
        return state
    state = gs.new_state(nq)
    thetas = params.values.reshape(params.depth, nq)
    for layer in thetas:
        for k in range(nq):
            state = gs.apply_gate(state, gs.RY(k, layer[k]))
        for k in range(nq - 1):
            state = gs.apply_gate(state, gs.CNOT(k, k + 1))
    return state


def expectation(cost: CostDiagonal, s: StateVector) -> float:
    if s.amps.size != cost.energies.size:
        raise ValueError("state and cost diagonal dimensions differ")
    return float(s.probabilities() @ cost.energies)


def optimize(cost: CostDiagonal, init: AnsatzParams, budget: int = 500,
             seed: int = 0) -> tuple[AnsatzParams, OptimTrace]:
    def objective(v):
        return expectation(cost, evolve_ansatz(cost, init.with_values(v)))

    trace = minimize(objective, init.values, budget, seed=seed)
    return init.with_values(trace.best_params), trace


@dataclass
class QaoaResult:
    report: DecodeReport | None
    params: AnsatzParams
    trace: OptimTrace
    expectation: float
    uniform_expectation: float
    histogram: Histogram

    @property
    def tour(self):
        return None if self.report is None else self.report.tour


def _unit_scaled(cost: CostDiagonal) -> CostDiagonal:
    e = cost.energies
    span = e.max() - e.min()
    return CostDiagonal((e - e.min()) / span if span > 0 else e - e.min())


def decode_most_frequent(qubo: QuboModel, hist: Histogram) -> DecodeReport | None:
    """Most frequently sampled feasible tour.

    Counts are pooled over grids that differ only by a rotation of the step
    index, since those encode the same cycle. Ties go to the lexicographically
    smaller canonical tour.
    """
    pooled, first = {}, {}
    for bits, count in hist.most_common():
        x = np.array([int(c) for c in reversed(bits)])
        rep = decode_assignment(qubo, x)
        if rep.feasible:
            key = rep.tour.canonical()
            pooled[key] = pooled.get(key, 0) + count
            first.setdefault(key, rep)
    if not pooled:
        return None
    key = min(pooled, key=lambda t: (-pooled[t], t.order))
    return first[key]


def qaoa_solve(inst: TspInstance, kind: str = "canonical", depth: int = 2, shots: int = 2048,
               seed: int = 0, budget: int = 500, gamma: float | None = None) -> QaoaResult:
    """SA-form QUBO -> cost diagonal -> optimize angles -> sample -> decode.

    Angles are optimized against the cost rescaled to [0, 1]; this is an
    affine map, so minimizers are unchanged, but it keeps useful gamma values
    inside [0, 2 pi) whatever the distance units.
    """
    if inst.n * inst.n > MAX_COST_VARS:
        raise ValueError(f"qubit budget: n={inst.n} needs {inst.n ** 2} qubits")
    qubo = build_qubo_sa_form(inst, gamma)
    cost = build_cost_diagonal(qubo)
    scaled = _unit_scaled(cost)
    ss = np.random.SeedSequence(seed).spawn(3)
    init = AnsatzParams.random(kind, depth, cost.num_qubits, int(ss[0].generate_state(1)[0]))
    params, trace = optimize(scaled, init, budget, int(ss[1].generate_state(1)[0]))
    state = evolve_ansatz(scaled, params)
    hist = gs.measure(state, shots, int(ss[2].generate_state(1)[0]))
    report = decode_most_frequent(qubo, hist)
    return QaoaResult(report, params, trace, expectation(cost, state),
                      float(cost.energies.mean()), hist)
