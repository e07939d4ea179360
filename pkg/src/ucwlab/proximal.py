"""Convex functionals, proximal maps and the proximal point iteration.

Functionals are built from a small closed library of primitives so that
their convexity and properness can be checked empirically.  Values are
extended reals: ``math.inf`` marks points outside the domain and
absorbs under the sum, max and positive-scale combinators.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .shadow import ConvexSetSpec, ball_set, point_set, segment_set, subtree_set, ternary_search
from .space import AxiomReport, GeodesicSpace, SolverError, UsageError, sample_lambda

INF = math.inf
PROX_TOL = 1e-6
MEMBER_TOL = 1e-9


class Functional:
    """Base class; subclasses implement :meth:`split`.

    ``split(x)`` returns ``(violation, value)``: ``violation`` is the
    total distance of ``x`` to the sets of the indicator terms (a convex
    function, zero exactly on the domain) and ``value`` the finite part.
    Evaluation treats points within ``MEMBER_TOL`` of the domain as
    inside; the solvers use the raw violation.
    """

    checked = True
    descriptor = "f"

    def split(self, x) -> tuple[float, float]:
        raise NotImplementedError

    def __call__(self, x) -> float:
        v, val = self.split(x)
        return INF if v > MEMBER_TOL else val

    def points(self) -> list:
        """Points referenced by the expression (used to size search regions)."""
        return []

    def __repr__(self) -> str:
        return self.descriptor


@dataclass(repr=False)
class SqDist(Functional):
    space: GeodesicSpace
    p: object
    name: str = "p"

    def split(self, x):
        return 0.0, self.space.dist(x, self.p) ** 2

    def points(self):
        return [self.p]

    @property
    def descriptor(self):
        return f"sqdist({self.name})"


@dataclass(repr=False)
class DistTo(Functional):
    space: GeodesicSpace
    p: object
    name: str = "p"

    def split(self, x):
        return 0.0, self.space.dist(x, self.p)

    def points(self):
        return [self.p]

    @property
    def descriptor(self):
        return f"dist({self.name})"


@dataclass(repr=False)
class Indicator(Functional):
    S: ConvexSetSpec
    anchor_points: list = field(default_factory=list)

    def split(self, x):
        return self.S.space.dist(x, self.S.project(x)), 0.0

    def points(self):
        return list(self.anchor_points)

    @property
    def descriptor(self):
        return f"indicator({self.S.name})"


@dataclass(repr=False)
class Scale(Functional):
    """``c f`` for ``c >= 0``; ``0 f`` is taken to be the indicator of ``dom f``."""

    c: float
    f: Functional

    def __post_init__(self):
        if not self.c >= 0:
            raise UsageError(f"scale factor must be nonnegative, got {self.c}")
        self.checked = self.f.checked

    def split(self, x):
        v, val = self.f.split(x)
        return v, self.c * val if self.c else 0.0

    def points(self):
        return self.f.points()

    @property
    def descriptor(self):
        return f"scale({self.c:g}, {self.f.descriptor})"


@dataclass(repr=False)
class Sum(Functional):
    terms: Sequence[Functional]

    def __post_init__(self):
        self.checked = all(t.checked for t in self.terms)

    def split(self, x):
        parts = [t.split(x) for t in self.terms]
        return sum(p[0] for p in parts), sum(p[1] for p in parts)

    def points(self):
        return [p for t in self.terms for p in t.points()]

    @property
    def descriptor(self):
        return "sum(" + ", ".join(t.descriptor for t in self.terms) + ")"


@dataclass(repr=False)
class Max(Functional):
    terms: Sequence[Functional]

    def __post_init__(self):
        self.checked = all(t.checked for t in self.terms)

    def split(self, x):
        parts = [t.split(x) for t in self.terms]
        return sum(p[0] for p in parts), max(p[1] for p in parts)

    def points(self):
        return [p for t in self.terms for p in t.points()]

    @property
    def descriptor(self):
        return "max(" + ", ".join(t.descriptor for t in self.terms) + ")"


@dataclass(repr=False)
class Custom(Functional):
    """A user-supplied function; accepted but flagged as unchecked."""

    func: Callable
    name: str = "custom"
    checked = False

    def split(self, x):
        val = float(self.func(x))
        return (1.0, 0.0) if val == INF else (0.0, val)

    @property
    def descriptor(self):
        return f"{self.name}[unchecked]"


def half_sqdist(space, p, name: str = "p") -> Functional:
    return Scale(0.5, SqDist(space, p, name))


# ---------------------------------------------------------------------------
# expression grammar


def parse_functional(text: str, space: GeodesicSpace, bindings: dict | None = None) -> Functional:
    """Build a functional from an expression such as
    ``sum(scale(0.5, sqdist(p)), indicator(ball(c, 1)))``.

    Points are names bound in ``bindings``, list literals ``[x, y]`` for
    vector models, or tree vertex names.  Sets: ``ball(c, r)``,
    ``segment(p, q)``, ``point(p)`` and ``subtree(A, B, ...)``.
    """
    bindings = dict(bindings or {})
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise UsageError(f"cannot parse functional {text!r}: {exc.msg}") from None

    def number(node) -> float:
        try:
            v = ast.literal_eval(node)
        except ValueError:
            raise UsageError(f"expected a number, got {ast.unparse(node)!r}") from None
        if not isinstance(v, (int, float)):
            raise UsageError(f"expected a number, got {v!r}")
        return float(v)

    def point(node):
        if isinstance(node, ast.Name):
            if node.id in bindings:
                return bindings[node.id], node.id
            if space.kind == "tree" and node.id in space.index:
                return space.vertex(node.id), node.id
            raise UsageError(f"unbound point {node.id!r}")
        if isinstance(node, (ast.List, ast.Tuple)) and space.kind != "tree":
            p = np.array([number(e) for e in node.elts])
            space.check_point(p)
            return p, ast.unparse(node)
        raise UsageError(f"expected a point, got {ast.unparse(node)!r}")

    def set_(node) -> tuple[ConvexSetSpec, list]:
        if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
            raise UsageError(f"expected a set, got {ast.unparse(node)!r}")
        op, args = node.func.id, node.args
        if op == "ball" and len(args) == 2:
            (c, cn), r = point(args[0]), number(args[1])
            return ball_set(space, c, r, f"ball({cn}, {r:g})"), [c]
        if op == "segment" and len(args) == 2:
            (p, pn), (q, qn) = point(args[0]), point(args[1])
            return segment_set(space, p, q, f"segment({pn}, {qn})"), [p, q]
        if op == "point" and len(args) == 1:
            p, pn = point(args[0])
            return point_set(space, p, pn), [p]
        if op == "subtree" and space.kind == "tree":
            names = [a.id for a in args if isinstance(a, ast.Name)]
            if len(names) != len(args) or not names:
                raise UsageError("subtree(...) takes vertex names")
            return subtree_set(space, names), [space.vertex(v) for v in names]
        raise UsageError(f"unknown set {ast.unparse(node)!r}")

    def expr(node) -> Functional:
        if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
            raise UsageError(f"expected a functional, got {ast.unparse(node)!r}")
        op, args = node.func.id, node.args
        if op == "sqdist" and len(args) == 1:
            return SqDist(space, *point(args[0]))
        if op in ("half_sqdist", "half_sq_dist") and len(args) == 1:
            return half_sqdist(space, *point(args[0]))
        if op in ("dist", "dist_to") and len(args) == 1:
            return DistTo(space, *point(args[0]))
        if op == "indicator" and len(args) == 1:
            return Indicator(*set_(args[0]))
        if op == "scale" and len(args) == 2:
            return Scale(number(args[0]), expr(args[1]))
        if op in ("sum", "max") and len(args) >= 1:
            terms = [expr(a) for a in args]
            return Sum(terms) if op == "sum" else Max(terms)
        raise UsageError(f"unknown functional {ast.unparse(node)!r}")

    return expr(tree)


# ---------------------------------------------------------------------------
# problems and solvers


@dataclass
class ProxProblem:
    """Minimize ``f(x) + d^2(x, a) / (2 lam)`` over the model."""

    model: object
    f: Functional
    lam: float
    anchor: object

    def __post_init__(self):
        if not self.lam > 0:
            raise UsageError(f"lambda must be positive, got {self.lam}")


def objective(prob: ProxProblem, x) -> float:
    fx = prob.f(x)
    if fx == INF:
        return INF
    return fx + prob.model.space.dist(x, prob.anchor) ** 2 / (2.0 * prob.lam)


def _key(prob: ProxProblem):
    """Lexicographic ``(violation, value)`` objective; convex in both parts."""
    dist = prob.model.space.dist
    a, two_lam, f = prob.anchor, 2.0 * prob.lam, prob.f

    def key(x):
        v, val = f.split(x)
        return (v, val + dist(x, a) ** 2 / two_lam)

    return key


def _unwrap_scale(f: Functional) -> tuple[float, Functional]:
    c = 1.0
    while isinstance(f, Scale):
        c *= f.c
        f = f.f
    return c, f


def closed_form_prox(prob: ProxProblem):
    """Known minimizers, or ``None`` when the expression has no closed form here.

    Indicators give the projection; ``c d^2(., p)`` gives the point
    ``W(a, p, 2 c lam / (1 + 2 c lam))`` and ``c d(., p)`` the point
    ``W(a, p, min(1, c lam / d(a, p)))``, in any geodesic space.
    """
    space = prob.model.space
    c, base = _unwrap_scale(prob.f)
    a = prob.anchor
    if isinstance(base, Indicator):
        return base.S.project(a)
    if c == 0:
        return None
    if isinstance(base, SqDist):
        k = 2.0 * c * prob.lam
        return space.combine(a, base.p, k / (1.0 + k))
    if isinstance(base, DistTo):
        D = space.dist(a, base.p)
        return base.p if D <= c * prob.lam else space.combine(a, base.p, c * prob.lam / D)
    return None


def _search_radius(prob: ProxProblem) -> float:
    """Radius around the anchor that must contain the minimizer.

    All library functionals are nonnegative, so for any ``w`` with
    ``f(w) < inf`` the minimizer satisfies
    ``d(x*, a)^2 <= 2 lam f(w) + d(w, a)^2``.
    """
    space = prob.model.space
    a = prob.anchor
    cands = [a] + list(prob.f.points())
    cands += [t.S.project(a) for t in _indicators(prob.f)]
    best = INF
    for w in cands:
        fw = prob.f(w)
        if fw < INF:
            best = min(best, math.sqrt(2.0 * prob.lam * fw + space.dist(w, a) ** 2))
    if best == INF:
        raise SolverError("no point of finite value found; f looks improper on the search region")
    return best


def _indicators(f: Functional) -> list:
    if isinstance(f, Indicator):
        return [f]
    if isinstance(f, Scale):
        return _indicators(f.f)
    if isinstance(f, (Sum, Max)):
        return [i for t in f.terms for i in _indicators(t)]
    return []


INNER_REL_TOL = 1e-13


def _bracket_search(f, lo: float, hi: float, guess: float, step: float, tol: float):
    """Golden-section search started from a bracket grown around ``guess``.

    For a unimodal ``f`` the walk downhill from ``guess`` (doubling the
    step) stops at a bracket that contains a minimizer; clamping to
    ``[lo, hi]`` keeps boundary minima reachable.
    """
    seen = {}

    def ev(t):
        if t not in seen:
            seen[t] = f(t)
        return seen[t]

    m = min(max(guess, lo), hi)
    a, b = max(lo, m - step), min(hi, m + step)
    fm = ev(m)
    if ev(a) < fm:
        while a > lo:
            b, m, fm = m, a, seen[a]
            step *= 2.0
            a = max(lo, m - step)
            if not ev(a) < fm:
                break
    elif ev(b) < fm:
        while b < hi:
            a, m, fm = m, b, seen[b]
            step *= 2.0
            b = min(hi, m + step)
            if not ev(b) < fm:
                break
    return ternary_search(ev, a, b, tol)


def _nested_search(key, lo: np.ndarray, hi: np.ndarray, tol: float, variant: int = 0,
                   inner_tol: float | None = None):
    """Minimize a key that is convex along every straight line of the box.

    One golden-section search per coordinate, nested: the inner minimum
    of a jointly convex function is convex in the outer coordinates, so
    each level is unimodal.  Keys compare lexicographically, which
    handles constraints and kinks without any smoothness.

    At a constrained or kinked minimum the inner line minima have
    nonzero slope, so their errors enter the outer values to first
    order; inner levels are therefore solved close to machine precision
    and only the outermost level stops at ``tol``.  Inner searches start
    from a small bracket around the previous inner minimizer.  ``variant``
    reverses the nesting order, giving an independent second start.
    """
    dim = len(lo)
    order = list(range(dim))
    if variant % 2:
        order.reverse()
    width = float((hi - lo).max())
    if inner_tol is None:
        inner_tol = INNER_REL_TOL * max(1.0, width)
    tols = [tol * 1e-3] + [inner_tol] * (dim - 1)
    warm = [0.5 * (lo[i] + hi[i]) for i in order]
    steps = [1e-3 * width] * dim

    def solve(th: np.ndarray, level: int):
        i = order[level]
        memo = {}

        def g(s):
            t = th.copy()
            t[i] = s
            r = (key(t), t) if level == dim - 1 else solve(t, level + 1)
            memo[s] = r
            return r[0]

        if level == 0:
            s, _ = ternary_search(g, lo[i], hi[i], tols[0])
        else:
            s, _ = _bracket_search(g, lo[i], hi[i], warm[level], steps[level], tols[level])
            # the next bracket is sized by how far this minimizer moved
            steps[level] = max(2.0 * abs(s - warm[level]), 100.0 * tols[level])
            warm[level] = s
        return memo[s]

    k, th = solve(0.5 * (lo + hi), 0)
    return th, k


def _klein_to_poincare(k: np.ndarray) -> np.ndarray:
    r2 = float(k @ k)
    return k / (1.0 + math.sqrt(max(0.0, 1.0 - r2)))


def _region(model, center, radius: float):
    """``(param, lo, hi)``: a parameter box whose straight lines are geodesics
    and whose image contains the closed ball ``B(center, radius)``."""
    space = model.space
    if model.kind in ("euclidean", "lp"):
        R = radius * (1 + 1e-9) + 1e-12
        c = np.asarray(center, dtype=float)
        return (lambda th: c + th), -np.full(space.n, R), np.full(space.n, R)
    if model.kind == "poincare":
        from .models import _from_c, _to_c, mobius_from_origin

        # Klein coordinates around the center; a hyperbolic radius R is Klein radius tanh(R)
        kr = min(math.tanh(radius) * (1 + 1e-9) + 1e-12, 1 - 1e-12)
        cz = _to_c(center)

        def param(th):
            if float(th @ th) >= 1.0:
                return None
            return _from_c(mobius_from_origin(cz, _to_c(_klein_to_poincare(th))))

        return param, -np.full(2, kr), np.full(2, kr)
    raise UsageError(f"no box parameterization for {model.kind}")


def _guarded(key, param):
    # outside the model the key grows with the parameter norm, keeping lines unimodal
    def k(th):
        x = param(th)
        return (INF, float(np.linalg.norm(th))) if x is None else key(x)

    return k


def _tree_search(key, tree, tol: float):
    """Golden-section search on every edge; ``key`` is convex along each edge."""
    best = None
    for e, (a, b, length) in enumerate(tree.edges):
        t, k = ternary_search(lambda s: key(tree.canonical(e, s)), 0.0, length, tol * 1e-3)
        if best is None or k < best[1]:
            best = (tree.canonical(e, t), k)
    return best


REFINE_RADIUS = 1e-2
COARSE_TOL = 1e-3
COARSE_INNER_TOL = 1e-10


def generic_minimize(model, key, center, radius: float, tol: float = PROX_TOL, variant: int = 0):
    """Minimize a lexicographic convex key over ``B(center, radius)`` (a superset for trees).

    A second pass re-centers a small box at the first answer.  Far from
    the center the box coordinates are badly conditioned (Klein
    coordinates near the unit circle, or large slopes), which limits how
    well kinked or constrained minima are resolved; near the center they
    are not.
    """
    if model.kind == "tree":
        return _tree_search(key, model.space, tol)
    param, lo, hi = _region(model, center, radius)
    # the first pass only has to land well inside the refinement box
    th, k = _nested_search(_guarded(key, param), lo, hi, COARSE_TOL, variant, COARSE_INNER_TOL)
    x = param(th)
    param, lo, hi = _region(model, x, REFINE_RADIUS)
    width = float((hi - lo).max())
    th2, k2 = _nested_search(_guarded(key, param), lo, hi, tol * width, variant, INNER_REL_TOL * width)
    if k2 <= k:
        return param(th2), k2
    return x, k


def prox(prob: ProxProblem, tol: float = PROX_TOL, method: str = "auto", variant: int = 0):
    """``argmin f(x) + d^2(x, a) / (2 lam)``.

    ``method="auto"`` uses a closed form when the expression has one,
    ``"generic"`` always runs the search solver.
    """
    if method not in ("auto", "generic"):
        raise UsageError(f"unknown prox method {method!r}")
    if method == "auto":
        x = closed_form_prox(prob)
        if x is not None:
            return x
    R = _search_radius(prob)
    x, k = generic_minimize(prob.model, _key(prob), prob.anchor, R, tol, variant)
    if k[0] > prob.model.space.tol:
        raise SolverError("solver ended outside the domain of f", k[0])
    return x


def prox_order(model, f: Functional, lam: float, a, tol: float = PROX_TOL, method: str = "auto"):
    """``Prox^lam_f a``, computed as ``Prox_{lam f} a``."""
    return prox(ProxProblem(model, Scale(lam, f), 1.0, a), tol, method)


# ---------------------------------------------------------------------------
# checks


def estimate_inf(model, f: Functional, center, radius: float, tol: float = PROX_TOL):
    """``(x, f(x))`` approximately minimizing ``f`` over ``B(center, radius)``."""

    def key(x):
        return f.split(x)

    x, k = generic_minimize(model, key, center, radius, tol)
    return x, (INF if k[0] > 0 else k[1])


def check_convexity(model, f: Functional, seed: int, trials: int, tol: float | None = None) -> AxiomReport:
    """Empirical ``f(W(x, y, l)) <= (1 - l) f(x) + l f(y)`` where both ends are finite."""
    space = model.space
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport(f"convexity[{f.descriptor}]", trials, tol)
    pts = f.points()
    finite = 0
    for _ in range(trials):
        x, y = space.sample(rng), space.sample(rng)
        if pts and rng.random() < 0.3:
            x = space.combine(pts[int(rng.integers(len(pts)))], x, float(rng.random()))
        for S in _indicators(f):
            if rng.random() < 0.5:
                x, y = S.S.project(x), S.S.project(y)
        fx, fy = f(x), f(y)
        if fx == INF or fy == INF:
            rep.skipped += 1
            continue
        finite += 1
        lam = sample_lambda(rng)
        lhs = f(space.combine(x, y, lam))
        rhs = (1 - lam) * fx + lam * fy
        rep.record(lhs - rhs, lhs, rhs, {"x": space.to_json(x), "y": space.to_json(y), "lam": lam})
    if finite == 0:
        raise UsageError(f"{f.descriptor}: no sampled pair with finite values; is f proper?")
    return rep


@dataclass
class FixedPointVerdict:
    candidate: list
    fix_residual: float
    min_gap: float
    is_fixed: bool
    is_minimizer: bool

    @property
    def agrees(self) -> bool:
        return self.is_fixed == self.is_minimizer

    def to_dict(self) -> dict:
        return {"candidate": self.candidate, "fix_residual": self.fix_residual,
                "min_gap": None if self.min_gap == INF else self.min_gap,
                "is_fixed": self.is_fixed, "is_minimizer": self.is_minimizer, "agrees": self.agrees}


def minimizer_fixed_point_check(model, f: Functional, candidates: Sequence, tol: float = PROX_TOL,
                                gap_tol: float | None = None, radius: float | None = None,
                                method: str = "auto") -> list[FixedPointVerdict]:
    """For each candidate ``a``: is ``a`` fixed by ``Prox_f`` iff it minimizes ``f``?

    ``fix_residual = d(a, Prox_f a)`` is compared with ``tol`` and
    ``min_gap = f(a) - inf f`` with ``gap_tol`` (default ``10 tol``;
    ``inf f`` comes from the same nested search used by the solver).
    """
    space = model.space
    gap_tol = 10 * tol if gap_tol is None else gap_tol
    pts = f.points() or [candidates[0]]
    center = pts[0]
    if radius is None:
        radius = max(space.dist(center, p) for p in list(pts) + list(candidates)) + 1.0
    _, inf_f = estimate_inf(model, f, center, radius, tol)
    out = []
    for a in candidates:
        p = prox(ProxProblem(model, f, 1.0, a), tol, method)
        r = space.dist(a, p)
        fa = f(a)
        gap = INF if fa == INF else fa - inf_f
        out.append(FixedPointVerdict(space.to_json(a), r, gap, r <= tol, gap <= gap_tol))
    return out


# ---------------------------------------------------------------------------
# proximal point iteration


@dataclass
class ProximalTrace:
    points: list
    lambdas: list
    values: list  # f(x_n)
    steps: list  # d(x_n, x_(n+1))
    scheme: str = "proximal_point"

    def to_dict(self, space) -> dict:
        return {"points": [space.to_json(p) for p in self.points], "lambdas": self.lambdas,
                "values": [None if v == INF else v for v in self.values], "steps": self.steps}


def proximal_point_iterate(model, f: Functional, lambdas, x0, horizon: int, tol: float = PROX_TOL,
                           method: str = "auto") -> ProximalTrace:
    """``x_(n+1) = Prox^(lam_n)_f x_n`` for ``horizon`` steps."""
    lam = lambdas if callable(lambdas) else (lambda n, c=float(lambdas): c)
    space = model.space
    pts, lams, vals, steps = [x0], [], [f(x0)], []
    for n in range(horizon):
        ln = float(lam(n))
        if not ln > 0:
            raise UsageError(f"lambda_{n} = {ln} is not positive")
        try:
            x = prox(ProxProblem(model, f, ln, pts[-1]), tol, method)
        except SolverError as exc:
            raise SolverError(f"proximal step {n} failed: {exc}", exc.residual) from None
        lams.append(ln)
        steps.append(space.dist(pts[-1], x))
        vals.append(f(x))
        pts.append(x)
    return ProximalTrace(pts, lams, vals, steps)


# ---------------------------------------------------------------------------
# functional library


def functional_library(model) -> list[tuple[str, Functional, ConvexSetSpec]]:
    """``(name, f, set of minimizers)`` for the given model."""
    space = model.space
    if model.kind == "tree":
        p, q, c = space.vertex("C"), space.point("D", "F", 0.4), space.vertex("B")
    elif model.kind == "poincare":
        p, q, c = np.array([0.3, -0.2]), np.array([-0.25, 0.35]), np.array([0.1, 0.1])
    else:
        n = space.n
        p, q, c = np.zeros(n), np.zeros(n), np.full(n, 0.2)
        p[0], q[0] = 1.0, -0.5
        if n >= 2:
            q[1] = 0.75
    mid = space.midpoint(p, q)
    ball = ball_set(space, c, 0.25, "ball(c, 0.25)")
    return [
        ("half_sqdist", half_sqdist(space, p), point_set(space, p)),
        ("dist_to", DistTo(space, p), point_set(space, p)),
        ("max_half_sqdist", Max([half_sqdist(space, p), half_sqdist(space, q, "q")]), point_set(space, mid)),
        ("indicator_ball", Indicator(ball, [c]), ball),
        ("half_sqdist_plus_ball", Sum([half_sqdist(space, p), Indicator(ball, [c])]),
         point_set(space, ball.project(p))),
        ("dist_sum", Sum([DistTo(space, p), DistTo(space, q, "q")]), segment_set(space, p, q)),
    ]


def library_candidates(model, minimizers: ConvexSetSpec, rng, inside: int = 3, outside: int = 5,
                       margin: float = 0.05) -> list:
    """Points of the minimizer set plus sampled points at least ``margin`` away from it.

    The margin keeps candidates out of the band where the two sides of
    the fixed-point test are decided by tolerances rather than geometry.
    """
    space = model.space
    pts = [minimizers.sample(rng) for _ in range(inside)]
    tries = 0
    while len(pts) < inside + outside:
        tries += 1
        if tries > 1000:
            raise UsageError("could not sample candidates away from the minimizer set")
        x = space.sample(rng)
        if space.dist(x, minimizers.project(x)) >= margin:
            pts.append(x)
    return pts
