import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tsplab.gatesim as gs
from conftest import all_bits
from tsplab import qaoa
from tsplab.encode import QuboModel, Tour, build_qubo_sa_form, decode_assignment
from tsplab.instance import TspInstance, random_instance


def test_cost_diagonal_single_variable():
    assert np.allclose(qaoa.build_cost_diagonal(QuboModel(np.array([[3.0]]), 1.0)).energies, [1, 4])


def test_cost_diagonal_zero_model():
    assert np.allclose(qaoa.build_cost_diagonal(QuboModel(np.zeros((3, 3)), 2.5)).energies, 2.5)


def test_cost_diagonal_bit_order():
    q = build_qubo_sa_form(random_instance(3, 1))
    cost = qaoa.build_cost_diagonal(q)
    xs = all_bits(9)
    assert np.allclose(cost.energies, q.energies(xs))


def test_canonical_p0_is_uniform():
    cost = qaoa.CostDiagonal(np.arange(8.0))
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams("canonical", 0, []))
    assert np.allclose(s.probabilities(), 1 / 8)


def test_mixer_alone_keeps_uniform_probabilities():
    cost = qaoa.CostDiagonal(np.arange(8.0))
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams("canonical", 1, [0.0, 0.7]))
    assert np.allclose(s.probabilities(), 1 / 8)


def test_hardware_zero_angles_is_ground():
    cost = qaoa.CostDiagonal(np.zeros(16))
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams("hardware", 1, np.zeros(4)))
    assert abs(s.amps[0]) == pytest.approx(1)


def test_parameter_length_arithmetic():
    assert qaoa.AnsatzParams("hardware", 6, np.zeros(96)).expected_length(16) == 96
    assert qaoa.AnsatzParams("canonical", 3, np.zeros(6)).expected_length(9) == 6
    with pytest.raises(ValueError):
        qaoa.evolve_ansatz(qaoa.CostDiagonal(np.zeros(4)), qaoa.AnsatzParams("canonical", 2, [1.0]))
    with pytest.raises(ValueError):
        qaoa.AnsatzParams("ring", 1, [0.0])


def test_expectation_uniform_and_basis():
    e = np.random.default_rng(0).normal(size=16)
    cost = qaoa.CostDiagonal(e)
    assert qaoa.expectation(cost, gs.uniform_state(4)) == pytest.approx(e.mean())
    assert qaoa.expectation(cost, gs.basis_state(4, 9)) == pytest.approx(e[9])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_expectation_shift_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    cost = qaoa.CostDiagonal(rng.normal(size=16))
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams.random("canonical", 2, 4, seed))
    assert qaoa.expectation(cost.shifted(c), s) == pytest.approx(qaoa.expectation(cost, s) + c)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["canonical", "hardware"]), st.integers(1, 3), st.integers(0, 2**31))
def test_evolution_preserves_norm(kind, depth, seed):
    cost = qaoa.CostDiagonal(np.random.default_rng(seed).normal(size=32))
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams.random(kind, depth, 5, seed))
    assert s.norm() == pytest.approx(1, abs=1e-9)


def test_one_qubit_optimization():
    cost = qaoa.CostDiagonal(np.array([0.0, 1.0]))
    grid = np.linspace(0, 2 * np.pi, 61)
    scan = min(qaoa.expectation(cost, qaoa.evolve_ansatz(cost, qaoa.AnsatzParams("canonical", 1, [g, b])))
               for g in grid for b in grid)
    assert scan <= 0.05
    params, trace = qaoa.optimize(cost, qaoa.AnsatzParams.random("canonical", 1, 1, 0), budget=200)
    assert trace.best_value <= 0.05
    assert qaoa.expectation(cost, qaoa.evolve_ansatz(cost, params)) == pytest.approx(trace.best_value)


def test_budget_one_returns_init():
    cost = qaoa.CostDiagonal(np.array([0.0, 1.0, 2.0, 0.5]))
    init = qaoa.AnsatzParams.random("canonical", 1, 2, 3)
    params, trace = qaoa.optimize(cost, init, budget=1)
    assert np.array_equal(params.values, init.values) and len(trace.iterations) == 1


def test_three_city_feasible_fraction_uniform():
    q = build_qubo_sa_form(random_instance(3, 0))
    feasible = sum(decode_assignment(q, x).feasible for x in all_bits(9))
    assert feasible == 6
    cost = qaoa.build_cost_diagonal(q)
    s = qaoa.evolve_ansatz(cost, qaoa.AnsatzParams("canonical", 0, []))
    hist = gs.measure(s, 2048, seed=0)
    hits = sum(c for b, c in hist.counts.items()
               if decode_assignment(q, np.array([int(ch) for ch in reversed(b)])).feasible)
    # binomial(2048, 6/512): mean 24, sd ~4.9
    assert 6 <= hits <= 45


def test_two_city_degenerate():
    inst = TspInstance(np.array([[0, 2.0], [3.0, 0]]))
    res = qaoa.qaoa_solve(inst, depth=1, shots=512, seed=0, budget=50)
    assert res.tour is not None and res.tour.canonical() == Tour((0, 1))


def test_solve_beats_uniform_and_is_seeded():
    inst = random_instance(3, 5)
    a = qaoa.qaoa_solve(inst, seed=1, budget=150)
    b = qaoa.qaoa_solve(inst, seed=1, budget=150)
    assert a.expectation < a.uniform_expectation
    assert a.histogram.counts == b.histogram.counts


def test_solve_rejects_large_instances():
    with pytest.raises(ValueError):
        qaoa.qaoa_solve(random_instance(5, 0))


def test_decode_pools_rotations():
    q = build_qubo_sa_form(random_instance(3, 0))
    def key(order):
        g = np.zeros((3, 3), dtype=int)
        for t, c in enumerate(order):
            g[t, c] = 1
        return gs.bitstring(int(sum(1 << i for i, b in enumerate(g.ravel()) if b)), 9)
    hist = gs.Histogram({key((0, 2, 1)): 5, key((1, 2, 0)): 4, key((2, 1, 0)): 3}, 12)
    # (2,1,0) is a rotation of (0,2,1): 8 pooled counts against 4
    assert qaoa.decode_most_frequent(q, hist).tour.canonical() == Tour((0, 2, 1))
