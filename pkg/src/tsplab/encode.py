"""QUBO / Ising encodings of the TSP and decoding of assignments back to tours.

Conventions
-----------
Models are minimized. A QUBO has energy ``x @ Q @ x + offset`` with Q
symmetric (quadratic terms split evenly over (i, j) and (j, i), linear terms
on the diagonal). An Ising model has energy ``s @ J @ s + h @ s + offset``
with J symmetric and zero on the diagonal, so a pair (i, j) contributes
``2 * J[i, j] * s_i * s_j``. Physics texts usually write
``-sum J s s - mu * sum h s``; that maps to ours by flipping signs of both
J and h and absorbing mu into h.

Grid layout: variable ``a[t, k] = 1`` means city k is visited at step t.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .instance import TspInstance


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(c) for c in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"tour must visit every city exactly once: {order}")
        object.__setattr__(self, "order", order)

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def closed(self) -> bool:
        return True

    def edges(self):
        n = len(self.order)
        return [(self.order[t], self.order[(t + 1) % n]) for t in range(n)]

    def canonical(self) -> "Tour":
        """Rotate so the tour starts at city 0."""
        i = self.order.index(0)
        return Tour(self.order[i:] + self.order[:i])

    def reversed(self) -> "Tour":
        return Tour((self.order[0],) + tuple(reversed(self.order[1:])))


def tour_cost(inst: TspInstance, tour: Tour) -> float:
    if tour.n != inst.n:
        raise ValueError(f"tour has {tour.n} cities, instance has {inst.n}")
    # fixed summation order: every rotation of a cycle gets bit-identical cost
    total = 0.0
    for a, b in tour.canonical().edges():
        total += inst.dist[a, b]
    return float(total)


@dataclass(frozen=True, eq=False)
class QuboModel:
    q: np.ndarray
    offset: float = 0.0
    # (step, city) -> flat variable index, for free variables only
    var_grid: dict = field(default_factory=dict)
    grid_shape: tuple[int, int] | None = None
    # (step, city) -> pinned value, for variables eliminated at build time
    fixed: dict = field(default_factory=dict)
    penalty: float | None = None
    form: str = "raw"

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(q, q.T, rtol=0, atol=1e-12):
            q = (q + q.T) / 2
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if self.var_grid and sorted(self.var_grid.values()) != list(range(q.shape[0])):
            raise ValueError("var_grid must be a bijection onto the variable indices")

    @property
    def num_vars(self) -> int:
        return self.q.shape[0]

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(x @ self.q @ x + self.offset)

    def energies(self, xs) -> np.ndarray:
        """Vectorized energy over rows of ``xs``."""
        xs = np.asarray(xs, dtype=np.float64)
        return np.einsum("bi,ij,bj->b", xs, self.q, xs) + self.offset

    def to_grid(self, x) -> np.ndarray:
        """Full (steps, cities) 0/1 grid with pinned variables filled in."""
        if self.grid_shape is None:
            raise ValueError("model has no variable grid")
        grid = np.zeros(self.grid_shape, dtype=np.int64)
        for (t, k), v in self.fixed.items():
            grid[t, k] = v
        x = np.asarray(x)
        for (t, k), idx in self.var_grid.items():
            grid[t, k] = x[idx]
        return grid

    def terms(self):
        """Upper-triangular (i, j, coeff) list with i <= j."""
        out = []
        n = self.num_vars
        for i in range(n):
            if self.q[i, i] != 0:
                out.append((i, i, float(self.q[i, i])))
            for j in range(i + 1, n):
                c = self.q[i, j] + self.q[j, i]
                if c != 0:
                    out.append((i, j, float(c)))
        return out


@dataclass(frozen=True, eq=False)
class IsingModel:
    j: np.ndarray
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        j = np.array(self.j, dtype=np.float64)
        h = np.array(self.h, dtype=np.float64).ravel()
        if j.shape != (h.size, h.size):
            raise ValueError("J and h sizes disagree")
        if np.any(np.diag(j) != 0):
            raise ValueError("J must have a zero diagonal")
        if not np.allclose(j, j.T, rtol=0, atol=1e-12):
            raise ValueError("J must be symmetric")
        j.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "h", h)

    @property
    def num_spins(self) -> int:
        return self.h.size

    def energy(self, s) -> float:
        s = np.asarray(s, dtype=np.float64)
        return float(s @ self.j @ s + self.h @ s + self.offset)


@dataclass
class DecodeReport:
    tour: Tour | None
    row_violations: list[int]
    col_violations: list[int]

    @property
    def feasible(self) -> bool:
        return self.tour is not None


def default_penalty(inst: TspInstance) -> float:
    return inst.n * inst.max_distance()


def _add_square_penalty(q, idxs, weight):
    """Add weight * (sum_{i in idxs} x_i - 1)^2 into q; return the constant."""
    # (sum x - 1)^2 = sum x_i^2 + 2 sum_{i<j} x_i x_j - 2 sum x_i + 1, with x^2 = x
    for a in idxs:
        q[a, a] -= weight
        for b in idxs:
            if a != b:
                q[a, b] += weight
    return weight


def build_qubo_sa_form(inst: TspInstance, gamma: float | None = None) -> QuboModel:
    """H_obj + gamma * H_cons over an n x n step/city grid, steps wrapping mod n."""
    if gamma is None:
        gamma = default_penalty(inst)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    n = inst.n
    w = inst.dist
    idx = lambda t, k: t * n + k  # noqa: E731
    q = np.zeros((n * n, n * n))
    for t in range(n):
        t1 = (t + 1) % n
        for k in range(n):
            for l in range(n):
                if k != l and w[k, l] != 0:
                    a, b = idx(t, k), idx(t1, l)
                    q[a, b] += w[k, l] / 2
                    q[b, a] += w[k, l] / 2
    offset = 0.0
    for t in range(n):
        offset += _add_square_penalty(q, [idx(t, k) for k in range(n)], gamma)
    for k in range(n):
        offset += _add_square_penalty(q, [idx(t, k) for t in range(n)], gamma)
    grid = {(t, k): idx(t, k) for t in range(n) for k in range(n)}
    return QuboModel(q, offset, grid, (n, n), {}, gamma, "sa")


def sa_form_energy_direct(inst: TspInstance, gamma: float, grid) -> float:
    """Evaluate H_obj + gamma * H_cons straight from the grid (no Q matrix)."""
    a = np.asarray(grid, dtype=np.float64)
    n = inst.n
    w = inst.dist.copy()
    np.fill_diagonal(w, 0.0)
    obj = sum(a[t] @ w @ a[(t + 1) % n] for t in range(n))
    cons = ((a.sum(axis=1) - 1) ** 2).sum() + ((a.sum(axis=0) - 1) ** 2).sum()
    return float(obj + gamma * cons)


def build_qubo_dwave_form(inst: TspInstance, lam: float | None = None) -> QuboModel:
    """(N+1) x (N+1) time/city grid with x[0,0] = x[N,N] = 1 pinned.

    City N is a copy of city 0, so the tour returns home at t = N. Pinned
    variables are substituted away; the model only carries free variables.
    """
    if lam is None:
        lam = default_penalty(inst)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    N = inst.n
    size = N + 1

    def d(i, j):
        return inst.dist[i % N, j % N]

    fixed = {(0, 0): 1, (N, N): 1}
    full = [(t, i) for t in range(size) for i in range(size)]
    pos = {key: p for p, key in enumerate(full)}
    m = len(full)
    qf = np.zeros((m, m))
    for t in range(N):
        for i in range(size):
            for j in range(size):
                c = d(i, j)
                if c != 0:
                    a, b = pos[(t, i)], pos[(t + 1, j)]
                    qf[a, b] += c / 2
                    qf[b, a] += c / 2
    offset = 0.0
    for i in range(size):
        offset += _add_square_penalty(qf, [pos[(t, i)] for t in range(size)], lam)
    for t in range(size):
        offset += _add_square_penalty(qf, [pos[(t, i)] for i in range(size)], lam)

    pinned = np.array([pos[k] for k in fixed])
    vals = np.array([fixed[k] for k in fixed], dtype=np.float64)
    free_keys = [k for k in full if k not in fixed]
    free = np.array([pos[k] for k in free_keys])
    # x^T Q x with x = [free; pinned=vals]
    q = qf[np.ix_(free, free)].copy()
    cross = qf[np.ix_(free, pinned)] @ vals  # appears twice (i,p) and (p,i)
    q[np.diag_indices_from(q)] += 2 * cross
    offset += float(vals @ qf[np.ix_(pinned, pinned)] @ vals)
    grid = {k: idx for idx, k in enumerate(free_keys)}
    return QuboModel(q, offset, grid, (size, size), fixed, lam, "dwave")


def dwave_form_energy_direct(inst: TspInstance, lam: float, grid) -> float:
    x = np.asarray(grid, dtype=np.float64)
    N = inst.n
    size = N + 1
    d = np.array([[inst.dist[i % N, j % N] for j in range(size)] for i in range(size)])
    tour = sum(x[t] @ d @ x[t + 1] for t in range(N))
    cons = ((x.sum(axis=0) - 1) ** 2).sum() + ((x.sum(axis=1) - 1) ** 2).sum()
    return float(tour + lam * cons)


def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Substitute x = (1 + s) / 2."""
    q = model.q
    j = q / 4
    np.fill_diagonal(j, 0.0)
    h = q.sum(axis=1) / 2
    offset = model.offset + (q.sum() + np.trace(q)) / 4
    return IsingModel(j, h, float(offset))


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Inverse substitution s = 2x - 1; returns a raw model without grid."""
    j, h = model.j, model.h
    q = 4 * j
    q[np.diag_indices_from(q)] += 2 * h - 4 * j.sum(axis=1)
    offset = model.offset + j.sum() - h.sum()
    return QuboModel(q, float(offset))


def decode_assignment(model: QuboModel, x) -> DecodeReport:
    x = np.asarray(x)
    if x.shape != (model.num_vars,):
        raise ValueError(f"assignment length {x.shape} != num_vars {model.num_vars}")
    grid = model.to_grid(x)
    rows = [int(t) for t in np.flatnonzero(grid.sum(axis=1) != 1)]
    cols = [int(k) for k in np.flatnonzero(grid.sum(axis=0) != 1)]
    tour = None
    if not rows and not cols:
        order = grid.argmax(axis=1)
        if model.form == "dwave":
            # drop the return step; city N is city 0's copy
            order = order[:-1]
        tour = Tour(order)
    return DecodeReport(tour, rows, cols)


def tour_to_assignment(model: QuboModel, tour: Tour) -> np.ndarray:
    """Binary vector that encodes ``tour`` in ``model``'s free variables."""
    x = np.zeros(model.num_vars, dtype=np.int64)
    order = list(tour.order)
    if model.form == "dwave":
        if order[0] != 0:
            order = list(tour.canonical().order)
        order = order + [len(order)]
    for t, k in enumerate(order):
        if (t, k) in model.var_grid:
            x[model.var_grid[(t, k)]] = 1
        elif model.fixed.get((t, k)) != 1:
            raise ValueError(f"grid cell {(t, k)} is not representable")
    return x


def qubo_to_json(model: QuboModel) -> str:
    return json.dumps({
        "num_vars": model.num_vars,
        "offset": model.offset,
        "terms": [[i, j, c] for i, j, c in model.terms()],
    })


def qubo_from_json(text: str) -> QuboModel:
    obj = json.loads(text)
    n = int(obj["num_vars"])
    q = np.zeros((n, n))
    for i, j, c in obj["terms"]:
        i, j = int(i), int(j)
        if i > j:
            i, j = j, i
        if i == j:
            q[i, i] += c
        else:
            q[i, j] += c / 2
            q[j, i] += c / 2
    return QuboModel(q, float(obj.get("offset", 0.0)))
