import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tsplab.gatesim as gs


def _rand_state(q, seed):
    rng = np.random.default_rng(seed)
    return gs.from_amplitudes(rng.normal(size=2**q) + 1j * rng.normal(size=2**q))


def _dense(gate, q):
    cols = [gs.apply_gate(gs.basis_state(q, k), gate).amps for k in range(2**q)]
    return np.array(cols).T


def test_new_state():
    assert np.allclose(gs.new_state(1).amps, [1, 0])
    s = gs.new_state(3)
    assert s.amps[0] == 1 and not s.amps[1:].any()


def test_qubit_limit():
    with pytest.raises(ValueError):
        gs.new_state(gs.MAX_QUBITS + 1)


def test_hadamard():
    s = gs.apply_gate(gs.new_state(1), gs.H(0))
    assert np.allclose(s.amps, [2**-0.5, 2**-0.5])


def test_ry_pi_flips():
    s = gs.apply_gate(gs.new_state(1), gs.RY(0, np.pi))
    assert np.allclose(s.amps, [0, 1])


def test_ry_sign_convention():
    assert np.allclose(_dense(gs.RY(0, np.pi), 1), [[0, -1], [1, 0]])


def test_qubit_zero_is_lsb():
    s = gs.apply_gate(gs.new_state(3), gs.RX(0, np.pi))
    assert abs(s.amps[1]) == pytest.approx(1)
    assert gs.bitstring(1, 3) == "001"


def test_cnot_truth_table():
    for c_bit in (0, 1):
        for t_bit in (0, 1):
            idx = c_bit | (t_bit << 1)
            out = gs.apply_gate(gs.basis_state(2, idx), gs.CNOT(0, 1))
            assert abs(out.amps[c_bit | ((t_bit ^ c_bit) << 1)]) == pytest.approx(1)


def test_cz_phase():
    s = gs.apply_gate(gs.basis_state(2, 3), gs.CZ(0, 1))
    assert s.amps[3] == pytest.approx(-1)


def test_collision_and_range_errors():
    with pytest.raises(ValueError):
        gs.apply_gate(gs.new_state(2), gs.CNOT(1, 1))
    with pytest.raises(ValueError):
        gs.apply_gate(gs.new_state(2), gs.H(2))


def test_inverse_qft_recovers_phase():
    k = np.arange(8)
    s = gs.from_amplitudes(np.exp(2j * np.pi * k * 5 / 8) / np.sqrt(8))
    out = gs.apply_gate(s, gs.InverseQFT(range(0, 3)))
    assert out.probabilities()[5] == pytest.approx(1)


def test_inverse_qft_matches_dense_matrix():
    n = 8
    w = np.exp(-2j * np.pi / n)
    f_inv = np.array([[w ** (a * b) for b in range(n)] for a in range(n)]) / np.sqrt(n)
    assert np.allclose(_dense(gs.InverseQFT(range(0, 3)), 3), f_inv)


def test_inverse_qft_on_sub_register():
    s = gs.basis_state(4, 1)  # qubit 0 set, register [1, 4) empty
    out = gs.apply_gate(s, gs.InverseQFT(range(1, 4)))
    assert np.isclose(out.probabilities()[1::2].sum(), 1)


def test_diagonal_phase_and_controlled_power():
    phases = np.array([0.0, 0.3, 1.1, 2.0])
    d = _dense(gs.DiagonalPhase(range(1, 3), phases), 3)
    expect = np.exp(1j * np.repeat(phases, 2))
    assert np.allclose(np.diag(d), expect)
    c = _dense(gs.ControlledDiagonalPower(0, range(1, 3), phases, 4), 3)
    diag = np.diag(c)
    assert np.allclose(diag[0::2], 1)
    assert np.allclose(diag[1::2], np.exp(4j * phases))


def test_measure_basis():
    s = gs.basis_state(1, 1)
    assert gs.measure(s, 100).counts == {"1": 100}


def test_measure_uniform_bounds():
    h = gs.measure(gs.uniform_state(2), 8192, seed=0)
    assert set(h.counts) == {"00", "01", "10", "11"}
    assert all(1850 <= c <= 2250 for c in h.counts.values())


def test_measure_deterministic():
    s = _rand_state(4, 1)
    assert gs.measure(s, 500, 3).counts == gs.measure(s, 500, 3).counts


def test_measure_marginal():
    s = gs.basis_state(3, 0b110)
    assert gs.measure(s, 10, qubits=range(1, 3)).counts == {"11": 10}


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31), st.floats(-7, 7))
def test_gates_preserve_norm(q, seed, theta):
    s = _rand_state(q, seed)
    for g in [gs.H(q - 1), gs.RX(0, theta), gs.RY(q - 1, theta), gs.RZ(0, theta)]:
        s = gs.apply_gate(s, g)
    if q > 1:
        s = gs.apply_gate(s, gs.CNOT(0, q - 1))
    assert s.norm() == pytest.approx(1, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_hadamard_involution(q, seed):
    s = _rand_state(q, seed)
    t = gs.apply_circuit(s, [gs.H(k) for k in range(q)] * 2)
    assert np.allclose(t.amps, s.amps)
