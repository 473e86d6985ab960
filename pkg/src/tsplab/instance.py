"""TSP instances: validation, generation, min-max normalization and file I/O.

Every pipeline in the package consumes a :class:`TspInstance`. Instances are
immutable; the distance matrix is stored as a read-only float64 array.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data."""


@dataclass(frozen=True, eq=False)
class TspInstance:
    dist: np.ndarray
    n: int = field(init=False)
    directed: bool = field(init=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InstanceError(f"distance matrix must be square, got shape {d.shape}")
        if d.shape[0] < 2:
            raise InstanceError("instance needs at least 2 cities")
        if not np.all(np.isfinite(d)):
            raise InstanceError("distance matrix has non-finite entries")
        if np.any(d < 0):
            raise InstanceError("negative entry in distance matrix")
        if np.any(np.diag(d) != 0):
            raise InstanceError("nonzero diagonal in distance matrix")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "n", d.shape[0])
        object.__setattr__(self, "directed", not np.array_equal(d, d.T))

    def __eq__(self, other):
        if not isinstance(other, TspInstance):
            return NotImplemented
        return np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash(self.dist.tobytes())

    def off_diagonal(self) -> np.ndarray:
        return self.dist[~np.eye(self.n, dtype=bool)]

    def max_distance(self) -> float:
        return float(self.off_diagonal().max())


@dataclass(frozen=True)
class NormalizationRecord:
    d_min: float
    d_max: float
    method: str = "minmax"

    def restore(self, d_norm):
        """Map normalized distance(s) back to original units."""
        return np.asarray(d_norm) * (self.d_max - self.d_min) + self.d_min


def random_instance(n: int, seed: int, lo: float = 1.0, hi: float = 100.0,
                    symmetric: bool = False) -> TspInstance:
    """Off-diagonal entries drawn uniformly from [lo, hi].

    With ``symmetric=True`` the upper triangle is mirrored.
    """
    if n < 2:
        raise InstanceError("n must be >= 2")
    if not (0 <= lo < hi):
        raise InstanceError(f"invalid range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    d = rng.uniform(lo, hi, size=(n, n))
    if symmetric:
        d = np.triu(d, 1)
        d = d + d.T
    np.fill_diagonal(d, 0.0)
    return TspInstance(d)


def normalize_minmax(inst: TspInstance) -> tuple[TspInstance, NormalizationRecord]:
    # Range is taken over off-diagonal entries only; self-distances stay 0.
    off = inst.off_diagonal()
    d_min, d_max = float(off.min()), float(off.max())
    if d_max == d_min:
        raise InstanceError("cannot normalize a constant off-diagonal matrix")
    d = (inst.dist - d_min) / (d_max - d_min)
    d = np.clip(d, 0.0, 1.0)
    np.fill_diagonal(d, 0.0)
    return TspInstance(d), NormalizationRecord(d_min, d_max)


def path_count(n: int) -> int:
    """Number of distinct undirected Hamiltonian cycles, (n-1)!/2."""
    if n < 3:
        raise InstanceError("path_count needs n >= 3")
    return math.factorial(n - 1) // 2


# -- file formats -------------------------------------------------------------

def load_instance(text: str) -> TspInstance:
    """Parse JSON (``{"n": .., "dist": [[..]]}``) or headerless CSV content."""
    stripped = text.strip()
    if not stripped:
        raise InstanceError("empty instance file")
    if stripped[0] in "{[":
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"parse failure: {exc}") from exc
        if isinstance(obj, dict):
            if "dist" not in obj:
                raise InstanceError("parse failure: missing 'dist'")
            rows = obj["dist"]
            if "n" in obj and obj["n"] != len(rows):
                raise InstanceError(f"declared n={obj['n']} but matrix has {len(rows)} rows")
        else:
            rows = obj
    else:
        rows = []
        for lineno, line in enumerate(stripped.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise InstanceError(f"parse failure on line {lineno}: {exc}") from exc
    try:
        arr = np.array(rows, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise InstanceError(f"non-square or ragged matrix: {exc}") from exc
    return TspInstance(arr)


def dump_json(inst: TspInstance) -> str:
    # repr round-trips float64 exactly
    return json.dumps({"n": inst.n, "dist": inst.dist.tolist()})


def dump_csv(inst: TspInstance) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in inst.dist) + "\n"


def read_instance(path) -> TspInstance:
    with open(path) as fh:
        return load_instance(fh.read())
