"""Budgeted Nelder-Mead simplex search with seeded random restarts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class _BudgetExhausted(Exception):
    pass


@dataclass
class OptimTrace:
    iterations: list = field(default_factory=list)  # (params, value) per evaluation

    @property
    def best(self) -> int:
        values = [v for _, v in self.iterations]
        return int(np.argmin(values))

    @property
    def best_value(self) -> float:
        return self.iterations[self.best][1]

    @property
    def best_params(self) -> np.ndarray:
        return self.iterations[self.best][0]

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate([v for _, v in self.iterations])

    def to_csv(self) -> str:
        rows = ["iteration,objective"]
        rows += [f"{i},{v!r}" for i, (_, v) in enumerate(self.iterations)]
        return "\n".join(rows) + "\n"


def minimize(fun, x0, budget: int, seed: int = 0, step: float = 0.5,
             bounds: tuple[float, float] = (0.0, 2 * np.pi), xtol: float = 1e-6,
             ftol: float = 1e-9) -> OptimTrace:
    """Minimize ``fun`` with at most ``budget`` evaluations.

    The first evaluation is always ``x0``. When a simplex collapses, the search
    restarts from a uniform random point inside ``bounds``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    trace = OptimTrace()

    def f(x):
        if len(trace.iterations) >= budget:
            raise _BudgetExhausted
        x = np.array(x, dtype=np.float64)
        v = float(fun(x))
        trace.iterations.append((x, v))
        return v

    x0 = np.asarray(x0, dtype=np.float64)
    dim = x0.size
    start = x0
    try:
        while True:
            _simplex(f, start, step, xtol, ftol, dim)
            start = rng.uniform(bounds[0], bounds[1], size=dim)
    except _BudgetExhausted:
        pass
    return trace


def _simplex(f, x0, step, xtol, ftol, dim):
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    pts = [x0.copy()]
    for i in range(dim):
        p = x0.copy()
        p[i] += step
        pts.append(p)
    vals = [f(p) for p in pts]
    while True:
        order = np.argsort(vals, kind="stable")
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        spread = max(np.max(np.abs(p - pts[0])) for p in pts[1:]) if dim else 0.0
        if spread < xtol or abs(vals[-1] - vals[0]) < ftol:
            return
        centroid = np.mean(pts[:-1], axis=0)
        xr = centroid + alpha * (centroid - pts[-1])
        fr = f(xr)
        if vals[0] <= fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + rho * (xr - centroid)
        else:
            xc = centroid + rho * (pts[-1] - centroid)
        fc = f(xc)
        if fc < min(fr, vals[-1]):
            pts[-1], vals[-1] = xc, fc
            continue
        for i in range(1, len(pts)):
            pts[i] = pts[0] + sigma * (pts[i] - pts[0])
            vals[i] = f(pts[i])
