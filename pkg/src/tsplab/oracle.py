"""Exact TSP solvers used as ground truth: brute force and Held-Karp."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numba
import numpy as np

from .encode import Tour
from .instance import TspInstance

BRUTE_FORCE_MAX_N = 10
HELD_KARP_MAX_N = 18


@dataclass(frozen=True)
class OracleResult:
    tour: Tour
    cost: float
    method: str
    explored: int


def brute_force(inst: TspInstance) -> OracleResult:
    """Enumerate all (n-1)! tours anchored at city 0; lexicographic tie-break."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    d = inst.dist
    best_cost, best_perm, explored = np.inf, None, 0
    rest = range(1, n)
    chunk = 40320
    perms = itertools.permutations(rest)
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(len(block), n - 1)
        full = np.hstack([np.zeros((len(block), 1), dtype=np.int64), block])
        legs = d[full, np.roll(full, -1, axis=1)]
        # left-to-right accumulation, same order as tour_cost and Held-Karp
        costs = np.zeros(len(block))
        for k in range(n):
            costs += legs[:, k]
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best_perm = float(costs[i]), full[i]
        explored += len(block)
    return OracleResult(Tour(best_perm), best_cost, "brute_force", explored)


@numba.njit(cache=True)
def _held_karp_kernel(d):
    # dp[mask, last]: cheapest path from city 0 through ``mask`` ending at
    # ``last``; only masks containing city 0 are filled.
    n = d.shape[0]
    full = 1 << n
    inf = np.finfo(np.float64).max
    dp = np.full((full, n), inf)
    dp[1, 0] = 0.0
    for mask in range(3, full, 2):
        for last in range(1, n):
            bit = 1 << last
            if not mask & bit:
                continue
            prev_mask = mask ^ bit
            best = inf
            for prev in range(n):
                c = dp[prev_mask, prev]
                if c == inf:
                    continue
                c = c + d[prev, last]
                if c < best:
                    best = c
            dp[mask, last] = best
    best = inf
    best_last = -1
    for last in range(1, n):
        if dp[full - 1, last] == inf:
            continue
        c = dp[full - 1, last] + d[last, 0]
        if c < best:
            best = c
            best_last = last
    # walk back: the predecessor is the one that reproduces the stored value
    order = np.empty(n, dtype=np.int64)
    mask = full - 1
    cur = best_last
    for pos in range(n - 1, 0, -1):
        order[pos] = cur
        prev_mask = mask ^ (1 << cur)
        target = dp[mask, cur]
        nxt = -1
        for prev in range(n):
            c = dp[prev_mask, prev]
            if c != inf and c + d[prev, cur] == target:
                nxt = prev
                break
        mask = prev_mask
        cur = nxt
    order[0] = 0
    return best, order


def held_karp(inst: TspInstance) -> OracleResult:
    """Subset DP over (visited-set, last-city) states, O(2^n n^2)."""
    n = inst.n
    if n > HELD_KARP_MAX_N:
        raise ValueError(f"Held-Karp limited to n <= {HELD_KARP_MAX_N}, got {n}")
    if n == 2:
        return OracleResult(Tour((0, 1)), float(inst.dist[0, 1] + inst.dist[1, 0]), "held_karp", 8)
    cost, order = _held_karp_kernel(np.ascontiguousarray(inst.dist))
    return OracleResult(Tour(order), float(cost), "held_karp", (1 << n) * n)
