"""Projections onto convex sets, Mann/Schu iterations and shadow sequences.

A :class:`ConvexSetSpec` carries a bounded parameterization whose
coordinate lines are geodesics, so that ``d(x, .)`` is convex along each
coordinate and a golden-section search per coordinate is valid.  Sets
with a known nearest-point map supply it as ``closed_form``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fixpoint import MappingSpec
from .moduli import PropertyGModulus, derived_psi
from .rates import CounterFn, InputError, MetastabilityReport, tilde_iterate
from .space import TOL_EXACT, GeodesicSpace, SolverError, UsageError

SEARCH_TOL = 1e-10
SEARCH_CAP = 500
SWEEP_CAP = 50
TRACE_CAP = 2**17
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def ternary_search(f: Callable[[float], float], lo: float, hi: float, tol: float = SEARCH_TOL,
                   cap: int = SEARCH_CAP) -> tuple[float, float]:
    """Minimize a convex function of one variable on ``[lo, hi]``.

    Golden-section variant of ternary search; returns ``(t, f(t))``.
    The best evaluated point is returned, and the endpoints are always
    evaluated so boundary minima are exact.
    """
    best = None

    def ev(t):
        nonlocal best
        v = f(t)
        if best is None or v < best[0]:
            best = (v, t)
        return v

    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = ev(c), ev(d)
    it = 0
    while b - a > tol:
        it += 1
        if it > cap:
            raise SolverError(f"ternary search did not reach {tol} in {cap} steps", b - a)
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = ev(d)
    for t in (0.5 * (a + b), lo, hi):
        ev(t)
    return best[1], best[0]


@dataclass
class ConvexSetSpec:
    """A closed convex set with a bounded search parameterization.

    ``param(theta)`` maps a parameter vector in the box ``bounds`` to a
    point of the set; every coordinate line must be a geodesic.
    """

    name: str
    space: GeodesicSpace
    param: Callable[[Sequence[float]], object] | None
    bounds: list[tuple[float, float]] = field(default_factory=list)
    closed_form: Callable | None = None
    member: Callable | None = None
    start: Sequence[float] | None = None

    def project(self, x, tol: float = SEARCH_TOL):
        return project(self, x, tol)

    def contains(self, p, tol: float = TOL_EXACT) -> bool:
        if self.member is not None:
            return bool(self.member(p, tol))
        return self.space.dist(p, self.project(p)) <= tol

    def sample(self, rng: np.random.Generator):
        if self.param is None:
            # closed-form sets without a parameterization sample by projection
            return self.closed_form(self.space.sample(rng))
        theta = [lo + (hi - lo) * float(rng.random()) for lo, hi in self.bounds]
        return self.param(theta)


def project(S: ConvexSetSpec, x, tol: float = SEARCH_TOL):
    """Nearest point of ``S`` to ``x``.

    Uses the closed form when present, otherwise coordinate descent with
    a golden-section search along each parameter.
    """
    if S.closed_form is not None:
        return S.closed_form(x)
    if S.param is None or not S.bounds:
        raise UsageError(f"set {S.name} has neither a closed form nor a parameterization")
    for lo, hi in S.bounds:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise UsageError(f"set {S.name}: unbounded parameterization {S.bounds}")
    dist = S.space.dist
    theta = list(S.start) if S.start is not None else [0.5 * (lo + hi) for lo, hi in S.bounds]
    if len(theta) == 1:
        lo, hi = S.bounds[0]
        t, _ = ternary_search(lambda s: dist(x, S.param([s])), lo, hi, tol)
        return S.param([t])
    best = dist(x, S.param(theta))
    for _ in range(SWEEP_CAP):
        moved = 0.0
        for i, (lo, hi) in enumerate(S.bounds):
            def f(s, i=i):
                th = list(theta)
                th[i] = s
                return dist(x, S.param(th))

            t, v = ternary_search(f, lo, hi, tol)
            if v <= best:
                moved = max(moved, abs(t - theta[i]))
                theta[i], best = t, v
        if moved <= tol:
            return S.param(theta)
    raise SolverError(f"coordinate descent on {S.name} did not settle in {SWEEP_CAP} sweeps", moved)


# ---------------------------------------------------------------------------
# set constructors


def segment_set(space: GeodesicSpace, s0, s1, name: str | None = None) -> ConvexSetSpec:
    """The geodesic segment ``[s0, s1]``."""
    if space.kind == "euclidean":
        v = s1 - s0
        vv = float(v @ v)

        def closed(x):
            if vv == 0.0:
                return s0
            return space.combine(s0, s1, min(1.0, max(0.0, float((x - s0) @ v) / vv)))
    else:
        closed = None
    return ConvexSetSpec(name or "segment", space, lambda th: space.combine(s0, s1, th[0]), [(0.0, 1.0)],
                         closed_form=closed)


def point_set(space: GeodesicSpace, c, name: str = "point") -> ConvexSetSpec:
    return ConvexSetSpec(name, space, lambda th: c, [(0.0, 0.0)], closed_form=lambda x: c)


def ball_set(space: GeodesicSpace, c, r: float, name: str | None = None) -> ConvexSetSpec:
    """Closed ball ``B(c, r)``; the radial point is nearest in any geodesic space."""
    if not r >= 0:
        raise UsageError("ball radius must be nonnegative")

    def closed(x):
        d = space.dist(c, x)
        return x if d <= r else space.combine(c, x, r / d)

    return ConvexSetSpec(name or f"ball(r={r:g})", space, None, closed_form=closed,
                         member=lambda p, tol: space.dist(c, p) <= r + tol)


def affine_set(space: GeodesicSpace, origin, basis, box: float, name: str = "affine") -> ConvexSetSpec:
    """``origin + span(basis)`` with coefficients in ``[-box, box]`` (vector models).

    Euclidean models get the orthogonal projection in closed form,
    for a single direction; other cases use coordinate descent.
    """
    origin = np.asarray(origin, dtype=float)
    V = np.atleast_2d(np.asarray(basis, dtype=float))
    bounds = [(-box, box)] * V.shape[0]
    closed = None
    if space.kind == "euclidean":
        if V.shape[0] == 1:
            u = V[0] / np.linalg.norm(V[0])
            lim = box * np.linalg.norm(V[0])
            closed = lambda x: origin + float(np.clip((x - origin) @ u, -lim, lim)) * u  # noqa: E731
    return ConvexSetSpec(name, space, lambda th: origin + np.asarray(th) @ V, bounds, closed_form=closed)


def subtree_set(tree, vertices: Sequence[str]) -> ConvexSetSpec:
    project_, contains = tree.subtree_projection(vertices)
    return ConvexSetSpec(f"subtree({','.join(vertices)})", tree, None, closed_form=project_, member=contains)


def fixed_point_set(T: MappingSpec, S: ConvexSetSpec, rng=None, checks: int = 100) -> ConvexSetSpec:
    """View ``S`` as (a bounded piece of) ``Fix(T)`` after checking samples are fixed."""
    rng = rng or np.random.default_rng(0)
    space = S.space
    for _ in range(checks):
        p = S.sample(rng)
        if space.dist(T(p), p) > space.tol:
            raise UsageError(f"{S.name} is not contained in Fix({T.name})")
    return ConvexSetSpec(f"Fix({T.name})~{S.name}", space, S.param, S.bounds, S.closed_form, S.member, S.start)


def projection_map(S: ConvexSetSpec) -> MappingSpec:
    """``P_S`` as a nonexpansive map with ``Fix = S``."""
    return MappingSpec(f"P[{S.name}]", S.project, fixed_sampler=S.sample)


def check_convexity(S: ConvexSetSpec, seed: int, trials: int, tol: float | None = None) -> int:
    """Number of sampled ``combine(s, t, lam)`` falling outside ``S``."""
    rng = np.random.default_rng(seed)
    tol = S.space.tol if tol is None else tol
    bad = 0
    for _ in range(trials):
        s, t = S.sample(rng), S.sample(rng)
        if not S.contains(S.space.combine(s, t, float(rng.random())), tol):
            bad += 1
    return bad


# ---------------------------------------------------------------------------
# error sequences and traces


@dataclass(frozen=True)
class ErrorSeq:
    """Nonnegative summable errors with ``sum <= B`` and a tail-sum modulus.

    ``gamma_tail(eps)`` satisfies ``sum_{i >= gamma_tail(eps)} delta_i <= eps``.
    """

    delta: Callable[[int], float]
    B: float
    gamma_tail: Callable[[float], int]
    name: str = "delta"

    def scaled(self, k: float) -> "ErrorSeq":
        if not k > 0:
            raise UsageError("error scale must be positive")
        base = self
        return ErrorSeq(lambda n: k * base.delta(n), k * base.B, lambda eps: base.gamma_tail(eps / k),
                        f"{k:.4g}*{base.name}")


def geometric_errors(c: float) -> ErrorSeq:
    """``delta_n = c 2^-n``; the tail from ``k`` sums to ``c 2^(1-k)``."""

    def gamma_tail(eps: float) -> int:
        return max(0, math.ceil(math.log2(2.0 * c / eps)))

    return ErrorSeq(lambda n: c * 2.0**-n, 2.0 * c, gamma_tail, f"{c:g}*2^-n")


def table_errors(values: Sequence[float], name: str = "table") -> ErrorSeq:
    """Finitely supported errors given by ``values`` (zero afterwards)."""
    vals = tuple(float(v) for v in values)
    tails = np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])

    def gamma_tail(eps: float) -> int:
        return int(np.argmax(tails <= eps))

    return ErrorSeq(lambda n: vals[n] if n < len(vals) else 0.0, float(tails[0]), gamma_tail, name)


ZERO_ERRORS = ErrorSeq(lambda n: 0.0, 0.0, lambda eps: 0, "0")


class IterationTrace:
    """A lazily extended iteration ``x_0, x_1, ...``.

    ``step(n, x_n)`` returns ``x_{n+1}``.  Extension stops at ``cap``;
    Fejér residuals ``d(x_{n+1}, q) - d(x_n, q) - delta_n`` against the
    witness points are tracked as the trace grows.
    """

    def __init__(self, space: GeodesicSpace, scheme: str, x0, step, alphas, errors: ErrorSeq | None = None,
                 witnesses: Sequence = (), cap: int = TRACE_CAP):
        self.space = space
        self.scheme = scheme
        self.points = [x0]
        self._step = step
        self.alphas = alphas
        self.errors = errors
        self.witnesses = list(witnesses)
        self.cap = cap
        self.fejer_residual = -math.inf
        self.fejer_violation: int | None = None
        self._wd = [space.dist(x0, q) for q in self.witnesses]

    def __len__(self) -> int:
        return len(self.points)

    def delta(self, n: int) -> float:
        return 0.0 if self.errors is None else self.errors.delta(n)

    def extend(self, stop: int) -> bool:
        """Materialize ``x_0 .. x_{stop-1}``; False if ``stop`` exceeds the cap."""
        if stop > self.cap + 1:
            return False
        d = self.space.dist
        tol = self.space.tol
        pts = self.points
        while len(pts) < stop:
            n = len(pts) - 1
            x = self._step(n, pts[-1])
            if self.witnesses:
                wd = [d(x, q) for q in self.witnesses]
                r = max(b - a for a, b in zip(self._wd, wd)) - self.delta(n)
                if r > self.fejer_residual:
                    self.fejer_residual = r
                if r > tol and self.fejer_violation is None:
                    self.fejer_violation = n
                self._wd = wd
            pts.append(x)
        return True

    def __getitem__(self, n: int):
        if n >= len(self.points) and not self.extend(n + 1):
            raise IndexError(f"index {n} beyond trace cap {self.cap}")
        return self.points[n]


def _alpha_fn(alphas) -> Callable[[int], float]:
    if callable(alphas):
        return alphas
    a = float(alphas)
    return lambda n: a


def iterate_scheme(model, T: MappingSpec, x0, alphas, scheme: str = "mann", horizon: int = 1,
                   witnesses: Sequence = (), errors: ErrorSeq | None = None, seed: int = 0,
                   cap: int = TRACE_CAP) -> IterationTrace:
    """Run a Mann, Schu or inexact Mann iteration of ``T`` for ``horizon`` steps.

    ``mann``: ``x_{n+1} = W(x_n, T x_n, a_n)``.  ``schu``:
    ``x_{n+1} = W(x_n, T^n x_n, a_n)`` (``T`` asymptotically
    nonexpansive).  ``inexact_mann``: the Mann step followed by a seeded
    perturbation of size at most ``errors.delta(n)``.
    """
    if horizon < 1:
        raise UsageError("horizon must be >= 1")
    space = model.space
    alpha = _alpha_fn(alphas)
    W = space.combine
    if scheme == "mann":
        def step(n, x):
            return W(x, T(x), alpha(n))
    elif scheme == "schu":
        if T.kind != "asymptotically_nonexpansive":
            raise UsageError("schu iteration needs an asymptotically nonexpansive mapping")

        def step(n, x):
            return W(x, T.power(x, n), alpha(n))
    elif scheme == "inexact_mann":
        if errors is None:
            raise UsageError("inexact_mann needs an error sequence")
        rng = np.random.default_rng(seed)

        def step(n, x):
            y = W(x, T(x), alpha(n))
            return space.sample_near(rng, y, errors.delta(n) * float(rng.random()))
    else:
        raise UsageError(f"unknown scheme {scheme!r}")
    trace = IterationTrace(space, scheme, x0, step, alpha, errors, witnesses, cap)
    trace.extend(horizon + 1)
    return trace


def schu_errors(T: MappingSpec, base: ErrorSeq, alpha_max: float, radius: float) -> ErrorSeq:
    """Quasi-Fejér errors of a Schu iteration w.r.t. a set inside ``Fix(T)``.

    From ``d(x_{n+1}, q) <= (1 + a_n delta_n) d(x_n, q)`` and
    ``d(x_0, q) <= radius`` for every ``q`` in the set,
    ``d(x_n, q) <= radius * exp(sum delta)`` and the additive error is
    ``a_n delta_n`` times that.  ``base`` must dominate ``T.delta``.
    """
    for n in range(256):
        if T.delta(n) > base.delta(n) * (1 + 1e-12):
            raise UsageError(f"error sequence {base.name} does not dominate delta_{n} of {T.name}")
    return base.scaled(alpha_max * radius * math.exp(base.B))


# ---------------------------------------------------------------------------
# shadow sequences

PAIRWISE_LIMIT = 4000


class ShadowCache:
    """Projections ``P_S x_n`` computed on demand and memoized per index."""

    def __init__(self, S: ConvexSetSpec, trace: IterationTrace):
        self.S = S
        self.trace = trace
        self._p: dict[int, object] = {}
        self._d: dict[int, float] = {}
        self.calls = 0

    def __getitem__(self, n: int):
        p = self._p.get(n)
        if p is None:
            x = self.trace[n]
            p = self.S.project(x)
            self.calls += 1
            self._p[n] = p
            self._d[n] = self.S.space.dist(x, p)
        return p

    def gap(self, n: int) -> float:
        """``d(x_n, P_S x_n)``."""
        self[n]
        return self._d[n]

    def window(self, lo: int, hi: int) -> list:
        return [self[i] for i in range(lo, hi + 1)]


def window_diameter(space: GeodesicSpace, pts: Sequence, eps: float | None = None) -> tuple[float, str]:
    """Diameter of ``pts`` as ``(value, kind)`` with kind in exact/upper/lower.

    With ``eps`` given the computation stops as soon as the comparison
    with ``eps`` is settled by the triangle inequality
    ``r <= diam <= 2 r``, ``r`` the largest distance from the first point.
    """
    seen, uniq = set(), []
    js = space.to_json
    for p in pts:
        key = tuple(js(p))
        if key not in seen:
            seen.add(key)
            uniq.append(p)
    if len(uniq) <= 1:
        return 0.0, "exact"
    d = space.dist
    p0 = uniq[0]
    r = max(d(p0, p) for p in uniq[1:])
    if eps is not None:
        if r > eps:
            return r, "lower"
        if 2.0 * r <= eps:
            return 2.0 * r, "upper"
    if len(uniq) > PAIRWISE_LIMIT:
        return 2.0 * r, "upper"
    best = r
    for i in range(1, len(uniq)):
        pi = uniq[i]
        for j in range(i + 1, len(uniq)):
            v = d(pi, uniq[j])
            if v > best:
                best = v
                if eps is not None and best > eps:
                    return best, "lower"
    return best, "exact"


def _check_b(model, shadows: ShadowCache, b: float, tol: float) -> None:
    if shadows.gap(0) > b + tol:
        raise InputError(f"d(x_0, P_S x_0) = {shadows.gap(0):.6g} exceeds the certified b = {b}")


def _check_monotone_gaps(shadows: ShadowCache, visited: int, slack: Callable[[int], float], tol: float) -> None:
    """``d^2(P x_(n+1), x_(n+1)) <= d^2(P x_n, x_n) + slack(n)`` on consecutive computed indices."""
    idx = sorted(i for i in shadows._d if i < visited)
    for a, b in zip(idx, idx[1:]):
        if b == a + 1 and shadows._d[b] ** 2 > shadows._d[a] ** 2 + slack(a) + tol:
            raise InputError(f"distance to the set increased at n={a}: {shadows._d[a]:.6g} -> {shadows._d[b]:.6g}")


def _search_shadow(shadows: ShadowCache, g: CounterFn, eps: float, start: int, bound: int, tol: float):
    space = shadows.S.space
    cap = shadows.trace.cap
    N = start
    last = min(bound, cap)
    while N <= last:
        end = N + g(N)
        if end > cap:
            return None, None, None, "inconclusive", ""
        val, kind = window_diameter(space, shadows.window(N, end), eps + tol)
        if kind != "lower" and val <= eps + tol:
            return N, end, val, "pass", ("oscillation upper bound" if kind == "upper" else "")
        N += 1
    return None, None, None, ("inconclusive" if bound > cap else "fail"), ""


def fejer_shadow_metastability(model, S: ConvexSetSpec, trace: IterationTrace, b: float, eps: float,
                               g: CounterFn, psi: PropertyGModulus | None = None,
                               tol: float | None = None) -> MetastabilityReport:
    """Find ``N`` with ``d(P x_n, P x_m) <= eps`` on ``[N, N + g(N)]`` for a Fejér trace.

    The bound is ``g~^(ceil(b^2 / psi(b, eps)))(0)``.
    """
    if not eps > 0:
        raise UsageError("eps must be positive")
    psi = psi or derived_psi(model.eta)
    tol = model.space.tol if tol is None else tol
    shadows = ShadowCache(S, trace)
    _check_b(model, shadows, b, tol)
    k = math.ceil(b * b / psi(b, eps)) if b > 0 else 0
    bound, exact = tilde_iterate(g, k, 0, trace.cap)
    N, end, val, status, note = _search_shadow(shadows, g, eps, 0, bound, tol)
    if trace.fejer_violation is not None:
        raise InputError(f"trace is not Fejér monotone at n={trace.fejer_violation}")
    _check_monotone_gaps(shadows, len(trace), lambda n: 0.0, 10 * tol)
    rep = MetastabilityReport(eps, g.name, bound, exact, N, (N, end) if N is not None else None, val, status,
                              note=note)
    rep.projections = shadows.calls
    return rep


def quasi_fejer_shadow_metastability(model, S: ConvexSetSpec, trace: IterationTrace, b: float, B: float,
                                     eps: float, g: CounterFn, psi: PropertyGModulus | None = None,
                                     tol: float | None = None) -> MetastabilityReport:
    """Shadow metastability for ``d(x_(n+1), q) <= d(x_n, q) + delta_n``.

    With ``C = 2b + 3B`` the search starts at
    ``gamma_tail(psi(C, eps) / (4C))`` and the bound is
    ``(g^M)~^(ceil(2C / psi(C, eps)))`` of that start.
    """
    if not eps > 0:
        raise UsageError("eps must be positive")
    if not B > 0:
        raise UsageError("B must be positive")
    errors = trace.errors or ZERO_ERRORS
    if errors.B > B * (1 + 1e-12):
        raise InputError(f"error sum bound {errors.B} exceeds B = {B}")
    psi = psi or derived_psi(model.eta)
    tol = model.space.tol if tol is None else tol
    shadows = ShadowCache(S, trace)
    _check_b(model, shadows, b, tol)
    C = 2 * b + 3 * B
    ps = psi(C, eps)
    start = int(errors.gamma_tail(ps / (4 * C)))
    k = math.ceil(2 * C / ps)
    bound, exact = tilde_iterate(g.M, k, start, trace.cap)
    N, end, val, status, note = _search_shadow(shadows, g, eps, start, bound, tol)
    if trace.fejer_violation is not None:
        raise InputError(f"trace is not quasi-Fejér monotone at n={trace.fejer_violation}")
    _check_monotone_gaps(shadows, len(trace), lambda n: C * errors.delta(n), 10 * tol)
    rep = MetastabilityReport(eps, g.name, bound, exact, N, (N, end) if N is not None else None, val, status,
                              lower=start, note=note)
    rep.projections = shadows.calls
    return rep


def shadow_tail_oscillation(S: ConvexSetSpec, trace: IterationTrace, n0: int, k: int) -> float:
    """``max d(P x_n, P x_m)`` over ``n, m`` in ``[n0, n0 + k]`` (an upper bound for huge windows)."""
    shadows = ShadowCache(S, trace)
    return window_diameter(S.space, shadows.window(n0, n0 + k))[0]


def export_trace_csv(path, S: ConvexSetSpec, trace: IterationTrace, stop: int | None = None) -> None:
    """Write ``n, coordinates, d(x_n, P_S x_n), delta_n`` rows."""
    stop = len(trace) if stop is None else stop
    shadows = ShadowCache(S, trace)
    js = S.space.to_json
    width = len(js(trace[0]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n"] + [f"x{i}" for i in range(width)] + ["dist_to_set", "delta"])
        for n in range(stop):
            w.writerow([n] + [repr(float(c)) for c in js(trace[n])] + [repr(shadows.gap(n)), repr(trace.delta(n))])


# ---------------------------------------------------------------------------
# scenario library


@dataclass
class ShadowScenario:
    """A trace generator, a target set and the constants the verifiers need."""

    name: str
    model: object
    S: ConvexSetSpec
    make_trace: Callable[[int], IterationTrace]
    b: float
    quasi: bool = False
    B: float = 0.0
    convergent: bool = True

    def verify(self, trace: IterationTrace, eps: float, g: CounterFn) -> MetastabilityReport:
        if self.quasi:
            return quasi_fejer_shadow_metastability(self.model, self.S, trace, self.b, self.B, eps, g)
        return fejer_shadow_metastability(self.model, self.S, trace, self.b, eps, g)


def _witnesses(S: ConvexSetSpec, k: int = 6, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    return [S.sample(rng) for _ in range(k)]


def _scenario(name, model, S, T, x0, alphas, scheme="mann", errors=None, seed=0) -> ShadowScenario:
    wit = _witnesses(S)

    def make(horizon: int) -> IterationTrace:
        return iterate_scheme(model, T, x0, alphas, scheme, horizon, wit, errors, seed)

    gap = model.space.dist(x0, S.project(x0))
    b = 0.0 if gap == 0.0 else gap * (1 + 1e-6) + 1e-12
    quasi = errors is not None
    return ShadowScenario(name, model, S, make, b, quasi, errors.B if quasi else 0.0)


def _e(n: int, i: int, scale: float = 1.0) -> np.ndarray:
    v = np.zeros(n)
    v[i] = scale
    return v


def _vector_scenarios(model) -> list[ShadowScenario]:
    from . import fixpoint as fx

    space = model.space
    n = space.n
    out = []
    x0 = np.linspace(1.3, -0.7, n) + 0.4
    if model.kind == "euclidean":
        axis = affine_set(space, np.zeros(n), _e(n, 0), 3.0, "x1-axis")
        out.append(_scenario("mann/project_axis", model, axis, fx.line_projection_map(model), x0, 0.5))
        if n >= 2:
            refl = fx.reflection_map(model)
            seg = segment_set(space, _e(n, 0, -2.0), _e(n, 0, 2.0), "axis segment")
            out.append(_scenario("mann/reflection", model, seg, refl, x0, 0.5))
            out.append(_scenario("inexact_mann/reflection", model, seg, refl, x0, 0.5, "inexact_mann",
                                 geometric_errors(0.25), seed=3))
            rot = fx.rotation_map(model, 0.7)
            if n == 2:
                target = point_set(space, np.zeros(2), "origin")
            else:
                target = fixed_point_set(rot, affine_set(space, np.zeros(n), np.eye(n)[2:], 2.0, "rotation axis"))
            out.append(_scenario("mann/rotation", model, target, rot, x0, 0.3))
            arot = fx.as_asymptotic(rot, *fx.geometric_delta(0.5))
            radius = max(space.dist(x0, target.sample(np.random.default_rng(i))) for i in range(64))
            if n == 2:
                out.append(_scenario("schu/rotation", model, target, arot, x0, 0.5, "schu",
                                     schu_errors(arot, geometric_errors(0.5), 0.5, radius)))
        out.append(_scenario("pure/contraction", model, point_set(space, np.zeros(n), "origin"),
                             fx.contraction_map(model, np.zeros(n), 0.9), x0, 1.0))
        ball = ball_set(space, _e(n, 0, 0.5), 1.0)
        out.append(_scenario("mann/ball_projection", model, ball, projection_map(ball), x0 * 2,
                             lambda k: 1.0 / (k + 2)))
        out.append(_scenario("identity/inside", model, ball, fx.identity_map(model), _e(n, 0, 0.9), 0.5))
        if n == 2:
            # the trace slides radially onto the unit ball; its shadow on the chord moves with it
            unit = ball_set(space, np.zeros(2), 1.0)
            chord = segment_set(space, np.array([-0.6, -0.3]), np.array([0.6, -0.3]), "chord")
            out.append(_scenario("mann/ball_projection_chord", model, chord, projection_map(unit),
                                 np.array([0.9, -2.0]), 0.5))
        if n == 3:
            T = fx.block_shear_map(model)
            seg = segment_set(space, _e(3, 0, -2.0), _e(3, 0, 2.0), "axis segment")
            base = table_errors([T.delta(k) for k in range(64)], "shear")
            radius = max(space.dist(x0, _e(3, 0, -2.0)), space.dist(x0, _e(3, 0, 2.0)))
            out.append(_scenario("schu/block_shear", model, seg, T, x0, 0.5, "schu",
                                 schu_errors(T, base, 0.5, radius)))
    else:  # lp
        diag = np.ones(n) / n ** (1.0 / space.p)
        cyc = fx.cycle_map(model)
        seg = affine_set(space, np.zeros(n), diag, 1.5, "diagonal")
        out.append(_scenario("mann/cycle", model, seg, cyc, x0, 0.5))
        out.append(_scenario("inexact_mann/cycle", model, seg, cyc, x0, 0.5, "inexact_mann",
                             geometric_errors(0.3), seed=5))
        acyc = fx.as_asymptotic(cyc, *fx.geometric_delta(0.5))
        radius = max(space.dist(x0, seg.param([t])) for t in (-1.5, 1.5))
        out.append(_scenario("schu/cycle", model, seg, acyc, x0, 0.5, "schu",
                             schu_errors(acyc, geometric_errors(0.5), 0.5, radius)))
        if n >= 2:
            M = np.eye(n)
            M[-1, -1] = 0.0
            flat = fx.linear_map(model, M, "drop_last", np.eye(n)[:-1], 2.0)
            plane = affine_set(space, np.zeros(n), np.eye(n)[:-1], 3.0, "coordinate plane")
            out.append(_scenario("mann/drop_last", model, plane, flat, x0, 0.5))
        c = np.full(n, 0.25)
        out.append(_scenario("mann/contraction", model, point_set(space, c, "center"),
                             fx.contraction_map(model, c, 0.8), x0, 0.7))
    return out


def _disk_scenarios(model) -> list[ShadowScenario]:
    from . import fixpoint as fx

    space = model.space
    x0 = np.array([0.35, 0.55])
    diam = segment_set(space, np.array([-0.5, 0.0]), np.array([0.5, 0.0]), "diameter piece")
    refl = fx.poincare_reflection_map(model)
    out = [
        _scenario("mann/disk_reflection", model, diam, refl, x0, 0.5),
        _scenario("mann/disk_rotation", model, point_set(space, np.zeros(2), "origin"),
                  fx.poincare_rotation_map(model, 0.9), x0, 0.5),
        _scenario("inexact_mann/disk_reflection", model, diam, refl, x0, 0.5, "inexact_mann",
                  geometric_errors(0.05), seed=7),
    ]
    arefl = fx.as_asymptotic(refl, *fx.geometric_delta(0.5))
    radius = max(space.dist(x0, np.array([s, 0.0])) for s in (-0.5, 0.5))
    out.append(_scenario("schu/disk_reflection", model, diam, arefl, x0, 0.5, "schu",
                         schu_errors(arefl, geometric_errors(0.5), 0.5, radius)))
    ball = ball_set(space, np.array([0.2, 0.1]), 0.3)
    out.append(_scenario("mann/disk_ball_projection", model, ball, projection_map(ball), x0, 0.5))
    inner = segment_set(space, np.array([0.12, 0.02]), np.array([0.27, 0.17]), "inner chord")
    out.append(_scenario("mann/disk_ball_projection_chord", model, inner, projection_map(ball),
                         np.array([0.8, -0.3]), 0.5))
    chord = segment_set(space, np.array([-0.3, 0.4]), np.array([0.5, -0.2]), "chord")
    out.append(_scenario("mann/disk_chord_projection", model, chord, projection_map(chord),
                         np.array([-0.6, -0.5]), 0.6))
    return out


def _tree_scenarios(model) -> list[ShadowScenario]:
    from . import fixpoint as fx

    tree = model.space
    sub = fx.DEFAULT_SUBTREE
    S = subtree_set(tree, sub)
    fold = fx.tree_fold_map(model, sub)
    x0 = tree.point("F", "H", 0.6)
    out = [
        _scenario("mann/fold", model, S, fold, x0, 0.5),
        _scenario("pure/contraction", model, point_set(tree, tree.vertex("D"), "D"),
                  fx.contraction_map(model, tree.vertex("D"), 0.7), x0, 1.0),
        _scenario("mann/fold_segment", model, segment_set(tree, tree.vertex("A"), tree.vertex("F"), "A-F"),
                  fold, tree.point("A", "G", 0.5), 0.3),
        _scenario("inexact_mann/fold", model, S, fold, x0, 0.5, "inexact_mann", geometric_errors(0.2), seed=11),
    ]
    afold = fx.as_asymptotic(fold, *fx.geometric_delta(0.5))
    radius = max(tree.dist(x0, tree.vertex(v)) for v in sub)
    out.append(_scenario("schu/fold", model, S, afold, x0, 0.5, "schu",
                         schu_errors(afold, geometric_errors(0.5), 0.5, radius)))
    return out


def shadow_scenarios(model) -> list[ShadowScenario]:
    """Fejér and quasi-Fejér scenarios available for ``model``."""
    if model.kind in ("euclidean", "lp"):
        return _vector_scenarios(model)
    if model.kind == "poincare":
        return _disk_scenarios(model)
    return _tree_scenarios(model)
