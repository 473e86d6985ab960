"""MTZ and DFJ integer programs for the TSP, plus their penalty polynomials.

City 0 is the anchor (city "1" in 1-based texts): MTZ order variables exist
for cities 1..n-1 only and take values in [2, n].

``to_polynomial`` turns a model into an unconstrained quadratic over
binaries: order variables are one-hot over their range, inequalities get a
one-hot slack, and every constraint is squared and weighted by the penalty.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .encode import QuboModel, Tour
from .instance import TspInstance

DFJ_MAX_N = 12


@dataclass(frozen=True)
class Constraint:
    coeffs: dict  # variable index -> coefficient
    sense: str  # "<=", "==", ">="
    rhs: float
    name: str
    kind: str  # "degree", "mtz", "bound", "subtour"

    def lhs(self, values) -> float:
        return float(sum(c * values[i] for i, c in self.coeffs.items()))

    def satisfied(self, values, tol: float = 1e-9) -> bool:
        v = self.lhs(values)
        if self.sense == "==":
            return abs(v - self.rhs) <= tol
        if self.sense == "<=":
            return v <= self.rhs + tol
        return v >= self.rhs - tol


@dataclass
class IlpModel:
    formulation: str
    n: int
    x_vars: dict  # (i, j) -> index
    u_vars: dict  # city -> index (MTZ only)
    bounds: list  # (lo, hi) per variable
    constraints: list
    objective: dict  # index -> cost

    @property
    def num_vars(self) -> int:
        return len(self.bounds)

    def names(self) -> list[str]:
        out = [""] * self.num_vars
        for (i, j), k in self.x_vars.items():
            out[k] = f"x_{i}_{j}"
        for i, k in self.u_vars.items():
            out[k] = f"u_{i}"
        return out

    def of_kind(self, kind: str) -> list[Constraint]:
        return [c for c in self.constraints if c.kind == kind]

    def objective_value(self, x) -> float:
        return float(sum(c * x[k] for k, c in self.objective.items()))


@dataclass
class Violation:
    name: str
    detail: str
    cycle: tuple | None = None


def _x_block(inst: TspInstance):
    n = inst.n
    x_vars, objective, bounds = {}, {}, []
    for i in range(n):
        for j in range(n):
            if i != j:
                k = len(bounds)
                x_vars[(i, j)] = k
                objective[k] = float(inst.dist[i, j])
                bounds.append((0, 1))
    return x_vars, objective, bounds


def _degree_constraints(n, x_vars):
    cons = []
    for i in range(n):
        cons.append(Constraint({x_vars[(i, j)]: 1.0 for j in range(n) if j != i}, "==", 1.0,
                               f"out_{i}", "degree"))
    for j in range(n):
        cons.append(Constraint({x_vars[(i, j)]: 1.0 for i in range(n) if i != j}, "==", 1.0,
                               f"in_{j}", "degree"))
    return cons


def build_mtz(inst: TspInstance) -> IlpModel:
    n = inst.n
    if n < 3:
        raise ValueError("MTZ formulation needs n >= 3")
    x_vars, objective, bounds = _x_block(inst)
    u_vars = {}
    for i in range(1, n):
        u_vars[i] = len(bounds)
        bounds.append((2, n))
    cons = _degree_constraints(n, x_vars)
    # u_j - u_i >= 1 - (n-1)(1 - x_ij)  <=>  u_j - u_i - (n-1) x_ij >= 2 - n
    for i in range(1, n):
        for j in range(1, n):
            if i != j:
                cons.append(Constraint(
                    {u_vars[j]: 1.0, u_vars[i]: -1.0, x_vars[(i, j)]: -(n - 1.0)},
                    ">=", 2.0 - n, f"mtz_{i}_{j}", "mtz"))
    for i in range(1, n):
        cons.append(Constraint({u_vars[i]: 1.0}, ">=", 2.0, f"ulo_{i}", "bound"))
        cons.append(Constraint({u_vars[i]: 1.0}, "<=", float(n), f"uhi_{i}", "bound"))
    return IlpModel("mtz", n, x_vars, u_vars, bounds, cons, objective)


def build_dfj(inst: TspInstance, max_subset: int | None = None) -> IlpModel:
    n = inst.n
    if max_subset is None:
        max_subset = n - 1
    if n > DFJ_MAX_N and max_subset >= n - 1:
        raise ValueError(f"DFJ subset enumeration limited to n <= {DFJ_MAX_N}")
    if not 2 <= max_subset <= n - 1:
        raise ValueError("max_subset must be in [2, n-1]")
    x_vars, objective, bounds = _x_block(inst)
    cons = _degree_constraints(n, x_vars)
    for size in range(2, max_subset + 1):
        for subset in itertools.combinations(range(n), size):
            coeffs = {x_vars[(i, j)]: 1.0 for i in subset for j in subset if i != j}
            cons.append(Constraint(coeffs, "<=", size - 1.0,
                                   "sub_" + "_".join(map(str, subset)), "subtour"))
    return IlpModel("dfj", n, x_vars, {}, bounds, cons, objective)


def tour_to_x(model: IlpModel, tour: Tour) -> np.ndarray:
    x = np.zeros(len(model.x_vars), dtype=np.int64)
    for a, b in tour.edges():
        x[model.x_vars[(a, b)]] = 1
    return x


def tour_positions(tour: Tour) -> dict:
    """MTZ witness: u_i = 1 + position of city i along the tour from city 0."""
    t = tour.canonical().order
    return {c: pos + 1 for pos, c in enumerate(t) if c != 0}


def successor_cycles(model: IlpModel, x) -> list[tuple] | None:
    """Cycles of the successor map, or None when x is not degree-feasible."""
    n = model.n
    succ = {}
    indeg = [0] * n
    for (i, j), k in model.x_vars.items():
        if x[k]:
            if i in succ:
                return None
            succ[i] = j
            indeg[j] += 1
    if len(succ) != n or any(d != 1 for d in indeg):
        return None
    seen, cycles = set(), []
    for start in range(n):
        if start in seen:
            continue
        cyc, c = [], start
        while c not in seen:
            seen.add(c)
            cyc.append(c)
            c = succ[c]
        cycles.append(tuple(cyc))
    return cycles


def x_to_tour(model: IlpModel, x) -> Tour | None:
    cycles = successor_cycles(model, x)
    if cycles is None or len(cycles) != 1:
        return None
    return Tour(cycles[0])


def _values(model: IlpModel, x, u: dict | None):
    vals = np.zeros(model.num_vars)
    vals[: len(model.x_vars)] = np.asarray(x)[: len(model.x_vars)]
    if u is not None:
        for i, k in model.u_vars.items():
            vals[k] = u[i]
    return vals


def check_feasible(model: IlpModel, x, u: dict | None = None) -> list[Violation]:
    """List every violated constraint; an empty list means feasible.

    For MTZ without ``u``, subtours are found on the successor graph and, if
    there is a single cycle, the visit-position witness is built and checked.
    """
    x = np.asarray(x)
    if x.size != len(model.x_vars):
        raise ValueError(f"x has length {x.size}, expected {len(model.x_vars)}")
    out = []
    vals = _values(model, x, u)
    for c in model.of_kind("degree"):
        if not c.satisfied(vals):
            out.append(Violation(c.name, f"lhs {c.lhs(vals):g} {c.sense} {c.rhs:g}"))
    if model.formulation == "dfj":
        for c in model.of_kind("subtour"):
            if not c.satisfied(vals):
                out.append(Violation(c.name, f"lhs {c.lhs(vals):g} > {c.rhs:g}"))
        return out
    if u is None:
        if out:
            return out
        cycles = successor_cycles(model, x)
        if len(cycles) > 1:
            for cyc in cycles:
                if 0 not in cyc:
                    out.append(Violation("mtz", "subtour avoids city 0; no order witness exists", cyc))
            return out
        vals = _values(model, x, tour_positions(Tour(cycles[0])))
    for c in model.constraints:
        if c.kind in ("mtz", "bound") and not c.satisfied(vals):
            out.append(Violation(c.name, f"lhs {c.lhs(vals):g} {c.sense} {c.rhs:g} fails"))
    return out


# -- penalty polynomial ---------------------------------------------------------

@dataclass
class PolyObjective:
    """E(b) = linear . b + b^T quadratic b + offset over binaries b."""
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float
    model: IlpModel
    penalty: float
    u_onehot: dict = field(default_factory=dict)  # city -> {value: binary index}
    slack_onehot: dict = field(default_factory=dict)  # constraint name -> {value: index}

    @property
    def num_vars(self) -> int:
        return self.linear.size

    def energy(self, b) -> float:
        b = np.asarray(b, dtype=np.float64)
        return float(self.linear @ b + b @ self.quadratic @ b + self.offset)

    def to_qubo(self) -> QuboModel:
        q = self.quadratic.copy()
        q[np.diag_indices_from(q)] += self.linear
        return QuboModel(q, self.offset)

    def decode_u(self, b) -> dict | None:
        u = {}
        for city, slots in self.u_onehot.items():
            on = [v for v, k in slots.items() if b[k]]
            if len(on) != 1:
                return None
            u[city] = on[0]
        return u

    def decode(self, b) -> "PolyDecode":
        b = np.asarray(b)
        x = b[: len(self.model.x_vars)]
        return PolyDecode(x, self.decode_u(b), check_feasible(self.model, x),
                          x_to_tour(self.model, x), self.model.objective_value(x))

    def embed(self, x, u: dict | None = None) -> np.ndarray:
        """Binary vector for (x, u) with every slack set to its best value."""
        b = np.zeros(self.num_vars, dtype=np.int64)
        b[: len(self.model.x_vars)] = x
        vals = _values(self.model, x, u)
        if u is not None:
            for city, slots in self.u_onehot.items():
                b[slots[u[city]]] = 1
        for c in self.model.constraints:
            if c.name in self.slack_onehot:
                slots = self.slack_onehot[c.name]
                gap = c.lhs(vals) - c.rhs if c.sense == ">=" else c.rhs - c.lhs(vals)
                best = min(slots, key=lambda v: abs(v - gap))
                b[slots[best]] = 1
        return b


@dataclass
class PolyDecode:
    x: np.ndarray
    u: dict | None
    violations: list
    tour: Tour | None
    objective: float = float("nan")

    @property
    def feasible(self) -> bool:
        return not self.violations and self.tour is not None


def _add_square(lin, quad, terms, const, weight):
    """weight * (sum_k a_k b_k + const)^2 over binaries, with b^2 = b."""
    offset = weight * const * const
    items = list(terms.items())
    for k, a in items:
        lin[k] += weight * (a * a + 2 * const * a)
    for (k, a), (l, b) in itertools.combinations(items, 2):
        quad[k, l] += weight * a * b
        quad[l, k] += weight * a * b
    return offset


def to_polynomial(model: IlpModel, penalty: float | None = None) -> PolyObjective:
    if penalty is None:
        penalty = model.n * max(model.objective.values())
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    nx = len(model.x_vars)
    # binary layout: x, then u one-hots, then slack one-hots
    size = nx
    u_onehot = {}
    for city in model.u_vars:
        lo, hi = model.bounds[model.u_vars[city]]
        u_onehot[city] = {v: size + t for t, v in enumerate(range(int(lo), int(hi) + 1))}
        size += len(u_onehot[city])

    def expand(coeffs):
        """Integer-variable linear form -> binary-variable linear form."""
        out = {}
        for k, c in coeffs.items():
            if k < nx:
                out[k] = out.get(k, 0.0) + c
            else:
                city = next(ci for ci, kk in model.u_vars.items() if kk == k)
                for v, b in u_onehot[city].items():
                    out[b] = out.get(b, 0.0) + c * v
        return out

    def span(coeffs):
        lo = hi = 0.0
        for k, c in coeffs.items():
            blo, bhi = model.bounds[k]
            lo += min(c * blo, c * bhi)
            hi += max(c * blo, c * bhi)
        return lo, hi

    slack_onehot = {}
    for c in model.constraints:
        if c.kind == "bound" or c.sense == "==":
            continue
        lo, hi = span(c.coeffs)
        top = hi - c.rhs if c.sense == ">=" else c.rhs - lo
        top = max(0, int(np.floor(top + 1e-9)))
        slack_onehot[c.name] = {v: size + v for v in range(top + 1)}
        size += top + 1

    lin = np.zeros(size)
    quad = np.zeros((size, size))
    offset = 0.0
    for k, cost in model.objective.items():
        lin[k] += cost
    for slots in list(u_onehot.values()) + list(slack_onehot.values()):
        offset += _add_square(lin, quad, {b: 1.0 for b in slots.values()}, -1.0, penalty)
    for c in model.constraints:
        if c.kind == "bound":
            continue  # implied by the one-hot range
        terms = expand(c.coeffs)
        if c.name in slack_onehot:
            sign = -1.0 if c.sense == ">=" else 1.0
            for v, b in slack_onehot[c.name].items():
                terms[b] = terms.get(b, 0.0) + sign * v
        offset += _add_square(lin, quad, terms, -c.rhs, penalty)
    return PolyObjective(lin, quad, offset, model, penalty, u_onehot, slack_onehot)


def solve_anneal(inst: TspInstance, formulation: str = "mtz", runs: int = 10, seed: int = 0,
                 penalty: float | None = None, sched=None):
    """Penalty polynomial -> Ising -> simulated annealing.

    Returns (best tour or None, sample set). Feasible samples are
    ranked by ILP objective: the auxiliary order and slack bits can freeze in
    a non-minimal pattern without affecting whether x is a valid tour.
    """
    from .anneal import sample
    from .encode import qubo_to_ising

    model = build_mtz(inst) if formulation == "mtz" else build_dfj(inst)
    poly = to_polynomial(model, penalty)
    ising = qubo_to_ising(poly.to_qubo())
    ss = sample(ising, None, sched, runs, seed, decoder=poly.decode)
    feasible = [r for r in ss.reports if r.feasible]
    best = min(feasible, key=lambda r: (r.objective, r.tour.canonical().order), default=None)
    return (None if best is None else best.tour), ss


# -- LP text export -------------------------------------------------------------

def _fmt_expr(coeffs, names):
    parts = []
    for k, c in sorted(coeffs.items()):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = names[k] if mag == 1 else f"{mag:g} {names[k]}"
        parts.append(f"{sign} {term}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def to_lp(model: IlpModel) -> str:
    """CPLEX-LP-style text: objective, constraints, bounds, variable types."""
    names = model.names()
    lines = [f"\\ {model.formulation.upper()} TSP formulation, n={model.n}", "Minimize"]
    lines.append(" obj: " + _fmt_expr(model.objective, names))
    lines.append("Subject To")
    sense = {"==": "=", "<=": "<=", ">=": ">="}
    for c in model.constraints:
        if c.kind != "bound":
            lines.append(f" {c.name}: {_fmt_expr(c.coeffs, names)} {sense[c.sense]} {c.rhs:g}")
    lines.append("Bounds")
    for i, k in model.u_vars.items():
        lo, hi = model.bounds[k]
        lines.append(f" {lo:g} <= {names[k]} <= {hi:g}")
    lines.append("Binary")
    lines.append(" " + " ".join(names[k] for k in sorted(model.x_vars.values())))
    if model.u_vars:
        lines.append("General")
        lines.append(" " + " ".join(names[k] for k in sorted(model.u_vars.values())))
    lines.append("End")
    return "\n".join(lines) + "\n"
