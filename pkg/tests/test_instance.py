import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsplab.instance import (InstanceError, TspInstance, dump_csv, dump_json, load_instance,
                             normalize_minmax, path_count, random_instance, read_instance)
from tsplab.oracle import brute_force


def test_two_city_instance_is_symmetric():
    inst = TspInstance(np.array([[0, 5], [5, 0]], dtype=float))
    assert inst.n == 2
    assert not inst.directed


def test_asymmetric_matrix_is_directed():
    inst = TspInstance(np.array([[0, 1, 2], [3, 0, 1], [2, 1, 0]], dtype=float))
    assert inst.directed


def test_nonzero_diagonal_rejected():
    d = np.ones((4, 4)) - np.eye(4)
    d[2, 2] = 1
    with pytest.raises(InstanceError, match="nonzero diagonal"):
        TspInstance(d)


@pytest.mark.parametrize("bad", [
    [[0, 1], [1, 0], [1, 1]],
    [[0]],
    [[0, -1], [1, 0]],
    [[0, float("nan")], [1, 0]],
])
def test_invalid_matrices_rejected(bad):
    with pytest.raises(InstanceError):
        TspInstance(np.array(bad, dtype=float))


def test_instance_matrix_is_read_only():
    inst = random_instance(4, 0)
    with pytest.raises(ValueError):
        inst.dist[0, 1] = 7


def test_random_instance_deterministic():
    a = random_instance(6, 1, 1, 10)
    b = random_instance(6, 1, 1, 10)
    assert a == b


def test_random_instance_range():
    inst = random_instance(5, 2, 0, 1)
    assert np.all(np.diag(inst.dist) == 0)
    assert inst.dist.min() >= 0 and inst.dist.max() <= 1


def test_random_instance_symmetric_option():
    inst = random_instance(6, 4, symmetric=True)
    assert np.array_equal(inst.dist, inst.dist.T)


def test_random_optimum_lower_bound():
    inst = random_instance(8, 3, 1, 100)
    assert brute_force(inst).cost >= 8 * 1


def test_normalize_two_point():
    inst = TspInstance(np.array([[0, 2], [4, 0]], dtype=float))
    normed, rec = normalize_minmax(inst)
    assert np.array_equal(normed.dist, [[0, 0], [1, 0]])
    assert (rec.d_min, rec.d_max) == (2, 4)


def test_normalize_fixed_point():
    d = np.array([[0, 0, 0.5], [1, 0, 0.25], [0.75, 0.1, 0]])
    normed, _ = normalize_minmax(TspInstance(d))
    assert np.allclose(normed.dist, d)


def test_normalize_random_scan():
    normed, _ = normalize_minmax(random_instance(6, 1))
    off = normed.off_diagonal()
    assert off.min() == 0 and off.max() == 1
    assert np.sum(off == 0) == 1 and np.sum(off == 1) == 1


def test_normalize_constant_rejected():
    d = np.full((3, 3), 4.0)
    np.fill_diagonal(d, 0)
    with pytest.raises(ValueError):
        normalize_minmax(TspInstance(d))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10_000))
def test_normalize_restore_round_trip(n, seed):
    inst = random_instance(n, seed)
    normed, rec = normalize_minmax(inst)
    off = ~np.eye(n, dtype=bool)
    assert np.allclose(rec.restore(normed.dist)[off], inst.dist[off])


def test_path_counts():
    assert path_count(3) == 1
    assert path_count(5) == 12
    assert path_count(20) == 60822550204416000


def test_path_count_rejects_small():
    with pytest.raises(ValueError):
        path_count(2)


def test_json_and_csv_round_trip(tmp_path):
    inst = random_instance(5, 9)
    assert load_instance(dump_json(inst)) == inst
    assert load_instance(dump_csv(inst)) == inst
    p = tmp_path / "inst.json"
    p.write_text(dump_json(inst))
    assert read_instance(p) == inst


def test_load_bare_list_and_mismatched_n():
    assert load_instance("[[0, 1], [1, 0]]").n == 2
    with pytest.raises(InstanceError):
        load_instance(json.dumps({"n": 3, "dist": [[0, 1], [1, 0]]}))
