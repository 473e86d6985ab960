"""Tour-cost readout by quantum phase estimation.

Distances are min-max normalized and turned into phases ``2*pi*d/n`` so the
phases of an n-leg tour sum to less than one full turn. The lower register
holds one ``ceil(log2 n)``-bit slot per step; slot s stores the city visited
just before step s, and the diagonal factor acting on slot s carries the
phases of edges *into* the city at step s. The tour state is then an
eigenvector whose eigenphase is the sum of the traversed edge phases.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import gatesim as gs
from .encode import Tour, tour_cost
from .gatesim import Histogram
from .instance import NormalizationRecord, TspInstance, normalize_minmax

DEFAULT_PRECISION = 8
SEARCH_MAX_N = 6


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    phi: np.ndarray
    norm: NormalizationRecord

    @property
    def n(self) -> int:
        return self.phi.shape[0]


@dataclass
class QpeOutcome:
    tour: Tour
    j_hat: int
    precision: int
    est_cost: float
    histogram: Histogram

    @property
    def theta_hat(self) -> float:
        return self.j_hat / 2**self.precision

    @property
    def raw_phase(self) -> float:
        return 2 * np.pi * self.theta_hat

    def to_dict(self) -> dict:
        return {
            "tour": list(self.tour.order),
            "theta": self.theta_hat,
            "j": self.j_hat,
            "est_cost": self.est_cost,
            "histogram": dict(sorted(self.histogram.counts.items())),
        }


def build_phase_matrix(inst: TspInstance) -> PhaseMatrix:
    normed, rec = normalize_minmax(inst)
    phi = 2 * np.pi * normed.dist / inst.n
    return PhaseMatrix(phi, rec)


def bits_per_city(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def slot_values(tour: Tour) -> list[int]:
    """City index stored in each step slot: the predecessor of that step's city."""
    o = tour.order
    return [o[s - 1] for s in range(len(o))]


def build_tour_eigenstate(tour: Tour) -> int:
    """Basis index of the tour state; slot 0 occupies the most significant bits.

    Tour (0, 1, 3, 2) gives slots 2, 0, 1, 3 -> ``10 00 01 11``.
    """
    b = bits_per_city(tour.n)
    index = 0
    for v in slot_values(tour):
        index = (index << b) | v
    return index


def eigenstate_bits(tour: Tour) -> str:
    b = bits_per_city(tour.n)
    return gs.bitstring(build_tour_eigenstate(tour), b * tour.n)


def tour_unitary_phases(pm: PhaseMatrix, tour: Tour) -> np.ndarray:
    """Phase vector of U = U_slot0 x ... x U_slot(n-1) over the lower register."""
    n = pm.n
    b = bits_per_city(n)
    total = np.zeros(1)
    for s in range(n):
        dest = tour.order[s]
        col = np.zeros(2**b)
        col[:n] = pm.phi[:, dest]  # unused padding codes carry phase 0
        # slot 0 is most significant: kron places earlier slots higher
        total = (total[:, None] + col[None, :]).reshape(-1)
    return total


def analytic_theta(pm: PhaseMatrix, tour: Tour) -> float:
    return float(sum(pm.phi[a, b] for a, b in tour.edges()) / (2 * np.pi))


def cost_from_theta(pm: PhaseMatrix, theta: float) -> float:
    """Invert the phase encoding: tour cost in original distance units."""
    n = pm.n
    return float(theta * n * (pm.norm.d_max - pm.norm.d_min) + n * pm.norm.d_min)


def qpe_circuit(pm: PhaseMatrix, tour: Tour, m: int):
    """Gate list: upper register qubits [0, m), lower register above it."""
    n = pm.n
    low = range(m, m + n * bits_per_city(n))
    phases = tour_unitary_phases(pm, tour)
    gates = [gs.H(k) for k in range(m)]
    gates += [gs.ControlledDiagonalPower(k, low, phases, 2**k) for k in range(m)]
    gates.append(gs.InverseQFT(range(0, m)))
    return gates, low


def _check_budget(n: int, m: int):
    if not 1 <= m <= 12:
        raise ValueError(f"precision qubits must be in [1, 12], got {m}")
    total = m + n * bits_per_city(n)
    if total > gs.MAX_QUBITS:
        raise ValueError(f"qubit budget exceeded: {total} > {gs.MAX_QUBITS}")


def qpe_state(inst: TspInstance, tour: Tour, m: int = DEFAULT_PRECISION, pm: PhaseMatrix | None = None):
    """Final statevector before measurement, plus the lower-register range."""
    _check_budget(inst.n, m)
    pm = pm or build_phase_matrix(inst)
    gates, low = qpe_circuit(pm, tour, m)
    total = low.stop
    state = gs.basis_state(total, build_tour_eigenstate(tour) << m)
    return gs.apply_circuit(state, gates), low


def run_qpe(inst: TspInstance, tour: Tour, m: int = DEFAULT_PRECISION, shots: int = 8192,
            seed: int = 0, pm: PhaseMatrix | None = None) -> QpeOutcome:
    if tour.n != inst.n:
        raise ValueError("tour size does not match instance")
    pm = pm or build_phase_matrix(inst)
    state, _ = qpe_state(inst, tour, m, pm)
    hist = gs.measure(state, shots, seed, qubits=range(0, m))
    j_hat = int(hist.most_common()[0][0], 2)
    est = cost_from_theta(pm, j_hat / 2**m)
    return QpeOutcome(tour, j_hat, m, est, hist)


def canonical_tours(n: int):
    """All (n-1)! tours starting at city 0, in lexicographic order."""
    for perm in itertools.permutations(range(1, n)):
        yield Tour((0,) + perm)


def qpe_search(inst: TspInstance, m: int = DEFAULT_PRECISION, shots: int = 8192,
               seed: int = 0) -> tuple[Tour, float, list[QpeOutcome]]:
    """Phase-estimate every canonical tour and keep the cheapest readout."""
    if inst.n > SEARCH_MAX_N:
        raise ValueError(f"qpe_search enumerates (n-1)! tours; n <= {SEARCH_MAX_N} required")
    _check_budget(inst.n, m)
    pm = build_phase_matrix(inst)
    tours = list(canonical_tours(inst.n))
    seeds = np.random.SeedSequence(seed).spawn(len(tours))
    outcomes = [run_qpe(inst, t, m, shots, int(s.generate_state(1)[0]), pm)
                for t, s in zip(tours, seeds)]
    # strict < keeps the lexicographically first tour on ties
    best = outcomes[0]
    for o in outcomes[1:]:
        if o.est_cost < best.est_cost:
            best = o
    return best.tour, best.est_cost, outcomes


def exact_cost_check(inst: TspInstance, tour: Tour) -> float:
    """Difference between phase-decoded cost (from the exact theta) and tour_cost."""
    pm = build_phase_matrix(inst)
    return cost_from_theta(pm, analytic_theta(pm, tour)) - tour_cost(inst, tour)
