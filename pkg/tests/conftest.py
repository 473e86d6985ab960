import numpy as np
import pytest

from tsplab.instance import TspInstance

TRI = [[0, 1, 2], [1, 0, 3], [2, 3, 0]]


@pytest.fixture
def tri():
    return TspInstance(np.array(TRI, dtype=float))


@pytest.fixture
def tri_path(tmp_path):
    p = tmp_path / "tri.json"
    p.write_text('{"n": 3, "dist": [[0, 1, 2], [1, 0, 3], [2, 3, 0]]}')
    return p


def all_bits(nv):
    idx = np.arange(2**nv)
    return ((idx[:, None] >> np.arange(nv)) & 1).astype(np.int64)
