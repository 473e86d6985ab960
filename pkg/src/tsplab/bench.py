"""Experiment harness: constraint violation, normalization, runtime scaling and
solution quality across backends, with CSV / JSON / SVG reports.

Wall time covers the solve call only; instance generation, normalization and
model encoding happen before the clock starts.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import ilp, qaoa, qpe
from .anneal import default_schedule, sample
from .encode import build_qubo_sa_form, qubo_to_ising, tour_cost
from .instance import TspInstance, normalize_minmax, random_instance
from .oracle import brute_force, held_karp

BACKENDS = ("SA", "QAOA", "QPE", "ILP-Anneal", "BruteForce", "HeldKarp")
CSV_HEADER = ["backend", "n", "trial", "seed", "normalized", "feasible", "cost",
              "optimum", "approx_ratio", "wall_ms"]
ORACLE_MAX_N = 10


@dataclass
class BenchRecord:
    backend: str
    n: int
    trial: int
    seed: int
    normalized: bool
    feasible: bool
    cost: float | None
    optimum: float | None
    approx_ratio: float | None
    wall_ms: float | None


@dataclass
class CurveFit:
    family: str  # "exponential" (a * b**n) or "power" (a * n**k)
    a: float
    b: float  # base for exponential, exponent k for power law
    r2: float

    def predict(self, n):
        n = np.asarray(n, dtype=np.float64)
        if self.family == "exponential":
            return self.a * self.b**n
        return self.a * n**self.b


# -- backends -----------------------------------------------------------------
# Each factory does the encoding work and returns solve(seed) -> Tour | None.

def _sa_backend(inst: TspInstance, gamma=None, sweeps=None, sweep_factor=None, runs=1, **_):
    qubo = build_qubo_sa_form(inst, gamma)
    ising = qubo_to_ising(qubo)
    sched = default_schedule(ising, sweeps)
    if sweep_factor is not None:
        sched = sched.scaled(sweep_factor)

    def solve(seed):
        return sample(ising, qubo, sched, runs, seed).best_tour()
    return solve


def _qaoa_backend(inst, depth=2, shots=2048, budget=500, kind="canonical", **_):
    def solve(seed):
        return qaoa.qaoa_solve(inst, kind, depth, shots, seed, budget).tour
    return solve


def _qpe_backend(inst, m=None, shots=2048, **_):
    if m is None:
        m = min(qpe.DEFAULT_PRECISION, 22 - inst.n * qpe.bits_per_city(inst.n))

    def solve(seed):
        return qpe.qpe_search(inst, m, shots, seed)[0]
    return solve


def _ilp_backend(inst, runs=20, formulation="mtz", penalty=None, **_):
    def solve(seed):
        return ilp.solve_anneal(inst, formulation, runs, seed, penalty)[0]
    return solve


def _bf_backend(inst, **_):
    return lambda seed: brute_force(inst).tour


def _hk_backend(inst, **_):
    return lambda seed: held_karp(inst).tour


_FACTORIES = {
    "SA": _sa_backend,
    "QAOA": _qaoa_backend,
    "QPE": _qpe_backend,
    "ILP-Anneal": _ilp_backend,
    "BruteForce": _bf_backend,
    "HeldKarp": _hk_backend,
}

_SIZE_LIMITS = {"QAOA": 4, "QPE": 6, "ILP-Anneal": 8, "BruteForce": 10, "HeldKarp": 18, "SA": 40}


def get_backend(backend):
    if callable(backend):
        return getattr(backend, "__name__", "custom"), backend
    if backend not in _FACTORIES:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    return backend, _FACTORIES[backend]


def trial_seeds(seed: int, n: int, trial: int) -> tuple[int, int]:
    """(instance seed, solver seed) derived from (seed, n, trial)."""
    a, b = np.random.SeedSequence([seed, n, trial]).generate_state(2)
    return int(a), int(b)


def run_trial(backend, n: int, trial: int, seed: int, normalized: bool = False,
              lo: float = 1.0, hi: float = 100.0, with_optimum: bool = True, **opts) -> BenchRecord:
    name, factory = get_backend(backend)
    limit = _SIZE_LIMITS.get(name)
    if limit is not None and n > limit:
        raise ValueError(f"budget exceeded: {name} supports n <= {limit}, got {n}")
    inst_seed, solve_seed = trial_seeds(seed, n, trial)
    inst = random_instance(n, inst_seed, lo, hi)
    work = normalize_minmax(inst)[0] if normalized else inst
    solve = factory(work, **opts)
    t0 = time.perf_counter()
    tour = solve(solve_seed)
    wall_ms = (time.perf_counter() - t0) * 1e3
    optimum = held_karp(inst).cost if with_optimum and n <= ORACLE_MAX_N else None
    cost = tour_cost(inst, tour) if tour is not None else None
    ratio = cost / optimum if cost is not None and optimum else None
    return BenchRecord(name, n, trial, inst_seed, normalized, tour is not None,
                       cost, optimum, ratio, wall_ms)


def _sorted(records):
    return sorted(records, key=lambda r: (r.backend, r.normalized, r.n, r.trial))


def violation_study(backend, sizes, trials: int, normalized: bool, seed: int = 0,
                    **opts) -> list[BenchRecord]:
    """Feasibility per (size, trial) on random instances, optionally normalized.

    For the SA backend the penalty weight defaults to ``n``, the automatic
    weight for a unit-range matrix, and is held fixed whether or not the
    instance is normalized, as on hardware where the penalty is tuned once.
    """
    name, _ = get_backend(backend)
    records = []
    for n in sizes:
        o = dict(opts)
        if name == "SA" and o.get("gamma") is None:
            o["gamma"] = float(n)
        for trial in range(trials):
            records.append(run_trial(backend, n, trial, seed, normalized, with_optimum=False, **o))
    return _sorted(records)


def violation_probability(records) -> dict:
    """(backend, normalized, n) -> fraction of infeasible trials."""
    groups = {}
    for r in records:
        groups.setdefault((r.backend, r.normalized, r.n), []).append(r.feasible)
    return {k: 1.0 - sum(v) / len(v) for k, v in sorted(groups.items())}


def feasible_counts(records) -> dict:
    out = {}
    for r in records:
        key = (r.normalized, r.n)
        out[key] = out.get(key, 0) + int(r.feasible)
    return out


def fit_curve(ns, times, family: str) -> CurveFit:
    """Least squares on log(time); r2 measured in log space."""
    ns = np.asarray(ns, dtype=np.float64)
    y = np.log(np.asarray(times, dtype=np.float64))
    if family == "exponential":
        xvar = ns
    elif family == "power":
        xvar = np.log(ns)
    else:
        raise ValueError(f"unknown family {family!r}")
    A = np.vstack([np.ones_like(xvar), xvar]).T
    (c0, c1), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (c0 + c1 * xvar)
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else 1.0
    r2 = float(min(1.0, max(0.0, r2)))
    b = math.exp(c1) if family == "exponential" else float(c1)
    return CurveFit(family, math.exp(c0), b, r2)


def fit_runtime(records) -> list[CurveFit]:
    """Both families, best r2 first. Needs at least 3 distinct sizes."""
    ns = [r.n for r in records if r.wall_ms]
    if len(set(ns)) < 3:
        raise ValueError("insufficient sizes: need at least 3 distinct sizes to fit")
    ts = [r.wall_ms for r in records if r.wall_ms]
    fits = [fit_curve(ns, ts, "exponential"), fit_curve(ns, ts, "power")]
    return sorted(fits, key=lambda f: -f.r2)


def runtime_study(backend, sizes, trials: int, seed: int = 0, warmup: bool = True,
                  **opts) -> tuple[list[BenchRecord], CurveFit]:
    if len(set(sizes)) < 3:
        raise ValueError("insufficient sizes: need at least 3 distinct sizes to fit")
    if warmup:
        # JIT compilation and first-touch allocation stay out of the timings
        run_trial(backend, min(sizes), 0, seed, with_optimum=False, **opts)
    records = [run_trial(backend, n, t, seed, with_optimum=False, **opts)
               for n in sizes for t in range(trials)]
    records = _sorted(records)
    return records, fit_runtime(records)[0]


def quality_study(backend, sizes, trials: int, seed: int = 0, **opts) -> list[BenchRecord]:
    if max(sizes) > ORACLE_MAX_N:
        raise ValueError(f"quality study needs oracle-solvable sizes (n <= {ORACLE_MAX_N})")
    records = [run_trial(backend, n, t, seed, **opts) for n in sizes for t in range(trials)]
    return _sorted(records)


def mean_ratio(records) -> float:
    vals = [r.approx_ratio for r in records if r.approx_ratio is not None]
    return float(np.mean(vals)) if vals else float("nan")


# -- reports ------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        row = asdict(r)
        if not timing:
            row["wall_ms"] = None
        w.writerow([_cell(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def records_from_csv(text: str) -> list[BenchRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        def num(k, cast=float):
            return None if row[k] == "" else cast(row[k])
        out.append(BenchRecord(row["backend"], int(row["n"]), int(row["trial"]), int(row["seed"]),
                               row["normalized"] == "true", row["feasible"] == "true",
                               num("cost"), num("optimum"), num("approx_ratio"), num("wall_ms")))
    return out


def _series(records, metric):
    groups = {}
    for r in records:
        label = r.backend + (" (normalized)" if r.normalized else "")
        groups.setdefault(label, {}).setdefault(r.n, []).append(r)
    out = {}
    for label, by_n in sorted(groups.items()):
        pts = []
        for n in sorted(by_n):
            rs = by_n[n]
            if metric == "wall_ms":
                vals = [r.wall_ms for r in rs if r.wall_ms]
                if vals:
                    pts.append((n, float(np.median(vals))))
            elif metric == "violation":
                pts.append((n, 1.0 - sum(r.feasible for r in rs) / len(rs)))
            else:
                vals = [r.approx_ratio for r in rs if r.approx_ratio is not None]
                if vals:
                    pts.append((n, float(np.mean(vals))))
        if pts:
            out[label] = pts
    return out


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def render_svg(records, fits=(), metric: str | None = None, reference_lines: bool = True) -> str:
    if not records:
        raise ValueError("cannot render an empty record set")
    if metric is None:
        metric = "wall_ms" if any(r.wall_ms for r in records) else "violation"
    series = _series(records, metric)
    log_y = metric == "wall_ms"
    W, H, pad = 640, 400, 60
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    if not xs:
        raise ValueError(f"no data for metric {metric!r}")
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x1 = x0 + 1
    tf = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    ty = [tf(max(y, 1e-12)) for y in ys]
    y0, y1 = min(ty), max(ty)
    if y1 == y0:
        y1 = y0 + 1

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (W - 2 * pad)

    def py(y):
        return H - pad - (tf(max(y, 1e-12)) - y0) / (y1 - y0) * (H - 2 * pad)

    ylabel = {"wall_ms": "wall time (ms, log scale)", "violation": "violation probability",
              "approx_ratio": "approximation ratio"}[metric]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="12">n (cities)</text>',
           f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" text-anchor="middle" '
           f'font-size="12">{ylabel}</text>']
    for n in sorted(set(xs)):
        out.append(f'<text x="{px(n):.1f}" y="{H - pad + 15}" text-anchor="middle" '
                   f'font-size="10">{n}</text>')
    for i, (label, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}">'
                   f'<title>{label}</title></polyline>')
        out.append(f'<text x="{W - pad + 4}" y="{pad + 14 * i}" font-size="10" '
                   f'fill="{color}">{label}</text>')
    if log_y:
        grid = np.linspace(x0, x1, 50)
        for fit in fits:
            d = " ".join(f"{'M' if k == 0 else 'L'}{px(g):.1f},{py(v):.1f}"
                         for k, (g, v) in enumerate(zip(grid, fit.predict(grid))))
            out.append(f'<path d="{d}" fill="none" stroke="gray" stroke-dasharray="2,2">'
                       f'<title>{fit.family} fit r2={fit.r2:.3f}</title></path>')
        if reference_lines:
            # hardware scaling claims, shown for comparison only
            anchor = min(ys)
            for label, f in (("O(2 log n)", lambda n: 2 * np.log2(n)), ("O(n^1.5)", lambda n: n**1.5)):
                vals = anchor * f(grid) / f(grid[0])
                d = " ".join(f"{'M' if k == 0 else 'L'}{px(g):.1f},{py(v):.1f}"
                             for k, (g, v) in enumerate(zip(grid, vals)))
                out.append(f'<path d="{d}" fill="none" stroke="silver" stroke-dasharray="6,4">'
                           f'<title>reference {label}</title></path>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(records, fits=(), fmt: str = "csv", timing: bool = True, metric=None) -> str:
    if fmt == "csv":
        return records_to_csv(records, timing)
    if fmt == "json":
        recs = [asdict(r) for r in records]
        if not timing:
            for r in recs:
                r["wall_ms"] = None
        return json.dumps({"records": recs, "fits": [asdict(f) for f in fits]}, indent=1) + "\n"
    if fmt == "svg":
        return render_svg(records, fits, metric)
    raise ValueError(f"unknown report format {fmt!r}")

