import numpy as np
import pytest

import tsplab.gatesim as gs
from tsplab import qpe
from tsplab.encode import Tour, tour_cost
from tsplab.instance import TspInstance, random_instance
from tsplab.oracle import brute_force

# normalized already: off-diagonals span [0, 1]; tour 0-1-2-3 sums to 1.25
DYADIC = np.array([[0, .5, 1, 1], [1, 0, .25, 1], [1, 1, 0, .5], [0, 1, 1, 0]])


def test_phase_matrix_two_point():
    pm = qpe.build_phase_matrix(TspInstance(np.array([[0, 2], [4, 0.0]])))
    assert np.allclose(pm.phi, [[0, 0], [np.pi, 0]])


def test_phase_matrix_extremes():
    pm = qpe.build_phase_matrix(random_instance(5, 3))
    off = pm.phi[~np.eye(5, dtype=bool)]
    assert np.sum(off == 0) == 1 and np.sum(np.isclose(off, 2 * np.pi / 5)) == 1


def test_worked_example_eigenstate():
    assert qpe.eigenstate_bits(Tour((0, 1, 3, 2))) == "10000111"


def test_two_city_eigenstate_width():
    assert len(qpe.eigenstate_bits(Tour((0, 1)))) == 2


def test_eigenstate_is_eigenvector_with_tour_phase():
    inst = random_instance(4, 6)
    pm = qpe.build_phase_matrix(inst)
    for tour in qpe.canonical_tours(4):
        nbits = 4 * qpe.bits_per_city(4)
        s = gs.basis_state(nbits, qpe.build_tour_eigenstate(tour))
        out = gs.apply_gate(s, gs.DiagonalPhase(range(0, nbits), qpe.tour_unitary_phases(pm, tour)))
        amp = out.amps[qpe.build_tour_eigenstate(tour)]
        assert abs(amp) == pytest.approx(1)
        sim = (np.angle(amp) / (2 * np.pi)) % 1
        assert abs(sim - qpe.analytic_theta(pm, tour) % 1) <= 1e-9


def test_dyadic_phase_exact_readout():
    inst = TspInstance(DYADIC)
    out = qpe.run_qpe(inst, Tour((0, 1, 2, 3)), m=4, shots=1000, seed=2)
    assert out.histogram.counts == {"0101": 1000}
    assert out.j_hat == 5 and out.theta_hat == 5 / 16
    assert out.est_cost == pytest.approx(tour_cost(inst, Tour((0, 1, 2, 3))))


def test_exact_cost_check_is_zero():
    inst = random_instance(4, 9)
    for tour in qpe.canonical_tours(4):
        assert abs(qpe.exact_cost_check(inst, tour)) <= 1e-9


def test_reverse_tour_same_distribution():
    inst = random_instance(4, 2, symmetric=True)
    t = Tour((0, 2, 1, 3))
    a = qpe.run_qpe(inst, t, m=6, shots=2000, seed=1)
    b = qpe.run_qpe(inst, t.reversed(), m=6, shots=2000, seed=1)
    assert a.histogram.counts == b.histogram.counts


def test_budget_errors():
    inst = random_instance(6, 0)
    with pytest.raises(ValueError, match="budget"):
        qpe.run_qpe(inst, Tour(range(6)), m=8)
    with pytest.raises(ValueError):
        qpe.run_qpe(random_instance(3, 0), Tour(range(3)), m=0)


def test_outcome_dict_keys():
    d = qpe.run_qpe(random_instance(3, 1), Tour((0, 1, 2)), m=5, shots=100).to_dict()
    assert {"tour", "theta", "j", "est_cost", "histogram"} <= set(d)


def test_search_three_city_matches_oracle():
    for seed in range(4):
        inst = random_instance(3, seed)
        tour, _, _ = qpe.qpe_search(inst, m=8, shots=1024, seed=seed)
        assert tour_cost(inst, tour) == pytest.approx(brute_force(inst).cost)


def test_search_four_city_within_one_bin():
    inst = random_instance(4, 3)
    _, est, _ = qpe.qpe_search(inst, m=8, shots=2048, seed=0)
    pm = qpe.build_phase_matrix(inst)
    bin_width = qpe.cost_from_theta(pm, 1 / 256) - qpe.cost_from_theta(pm, 0)
    assert abs(est - brute_force(inst).cost) <= bin_width + 1e-9


def test_search_tie_returns_first_tour():
    inst = TspInstance(np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0.0]]))
    tour, _, _ = qpe.qpe_search(inst, m=6, shots=512)
    assert tour == Tour((0, 1, 2))


def test_search_size_limit():
    with pytest.raises(ValueError):
        qpe.qpe_search(random_instance(7, 0))
