"""Approximate fixed points along geodesic segments.

For a nonexpansive ``T`` and ``x, y`` that are ``delta``-fixed, every
point of the segment ``[x, y]`` is ``eps``-fixed once ``delta`` is chosen
by :func:`afp_delta`.  :func:`afp_bundle` carries the analogous rates for
asymptotically nonexpansive maps.  A small library of maps with known
fixed point sets is shipped for campaigns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .space import AxiomReport, UsageError, sample_lambda

U_CHECK_HORIZON = 10**4
U_CHECK_EPS = tuple(10.0**-k for k in range(0, 9))


@dataclass
class MappingSpec:
    """A self-map with the data needed by the fixed point checks.

    ``fixed_sampler(rng)`` returns a point of ``Fix(T)``.  ``power(x, n)``
    may be supplied when ``T^n`` has a cheap closed form.
    """

    name: str
    apply: Callable
    kind: str = "nonexpansive"
    delta_seq: Callable[[int], float] | None = None
    u: Callable[[float], int] | None = None
    B: float = 0.0
    fixed_sampler: Callable | None = None
    power_fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("nonexpansive", "asymptotically_nonexpansive"):
            raise UsageError(f"unknown mapping kind {self.kind!r}")
        if self.kind == "asymptotically_nonexpansive" and (self.delta_seq is None or self.u is None):
            raise UsageError("asymptotic mappings need delta_seq and u")

    def __call__(self, x):
        return self.apply(x)

    def power(self, x, n: int):
        if self.power_fn is not None:
            return self.power_fn(x, n)
        for _ in range(n):
            x = self.apply(x)
        return x

    def delta(self, n: int) -> float:
        return 0.0 if self.delta_seq is None else self.delta_seq(n)


def as_asymptotic(T: MappingSpec, delta_seq, u, B: float) -> MappingSpec:
    """View a nonexpansive map as asymptotically nonexpansive w.r.t. ``delta_seq``."""
    return MappingSpec(T.name + "[asym]", T.apply, "asymptotically_nonexpansive", delta_seq, u, B,
                       T.fixed_sampler, T.power_fn)


def validate_moduli(T: MappingSpec, horizon: int = U_CHECK_HORIZON, eps_grid=U_CHECK_EPS) -> None:
    """Reject ``u`` or ``B`` inconsistent with ``delta_seq`` on ``0..horizon``."""
    if T.delta_seq is None:
        return
    deltas = np.array([T.delta_seq(n) for n in range(horizon + 1)])
    if np.any(deltas < 0):
        raise UsageError(f"{T.name}: delta_seq has negative entries")
    if deltas.max() > T.B:
        raise UsageError(f"{T.name}: B={T.B} is below max delta_n={deltas.max()}")
    for eps in eps_grid:
        k = T.u(eps)
        if k < horizon and deltas[k:].max() > eps:
            raise UsageError(f"{T.name}: u({eps})={k} but delta_n > eps for some n >= {k}")


def check_mapping(model, T: MappingSpec, seed: int, trials: int, tol: float | None = None,
                  max_power: int = 8) -> AxiomReport:
    """Empirical ``d(T^n x, T^n y) <= (1 + delta_n) d(x, y)`` on samples."""
    space = model.space
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport(f"lipschitz[{T.name}]", trials, tol)
    d = space.dist
    for _ in range(trials):
        x, y = space.sample(rng), space.sample(rng)
        n = 1 if T.kind == "nonexpansive" else int(rng.integers(0, max_power + 1))
        lhs = d(T.power(x, n), T.power(y, n))
        rhs = (1 + T.delta(n)) * d(x, y)
        rep.record(lhs - rhs, lhs, rhs, {"n": n})
    return rep


def check_fix_convex(model, T: MappingSpec, seed: int, trials: int, tol: float | None = None) -> AxiomReport:
    """Points on segments between fixed points are fixed, to tolerance."""
    space = model.space
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport(f"fix_convex[{T.name}]", trials, tol)
    for _ in range(trials):
        p, q = T.fixed_sampler(rng), T.fixed_sampler(rng)
        z = space.combine(p, q, sample_lambda(rng))
        r = space.dist(z, T(z))
        rep.record(r, r, 0.0)
    return rep


# ---------------------------------------------------------------------------
# rates


def afp_delta(b: float, eps: float, eta: Callable[[float, float], float]) -> float:
    """Fixed-point tolerance at the endpoints that forces ``eps`` along the segment."""
    if not (b > 0 and eps > 0):
        raise UsageError(f"afp_delta needs b > 0 and eps > 0, got b={b}, eps={eps}")
    return min(eps / 2.0, b, eps * eps / (16.0 * b) * eta(2.0 * b, min(eps / (2.0 * b), 2.0)))


@dataclass(frozen=True)
class AfpBundle:
    b: float
    eta: Callable[[float, float], float]
    u: Callable[[float], int]
    B: float

    def __post_init__(self):
        if not self.b > 0:
            raise UsageError(f"b must be positive, got {self.b}")
        if self.B < 0:
            raise UsageError(f"B must be nonnegative, got {self.B}")

    def theta(self, eps: float) -> float:
        return 0.5 * afp_delta(self.b, eps, self.eta)

    def gamma_rate(self, eps: float) -> int:
        return int(self.u(self.theta(eps) / self.b))

    def n_index(self, eps: float) -> int:
        return self.gamma_rate(eps / (2.0 + self.B))

    def omega(self, eps: float) -> float:
        return self.theta(eps / (2.0 + self.B)) / ((self.n_index(eps) + 1) * (1.0 + self.B))


def afp_bundle(b: float, eta, u, B: float) -> AfpBundle:
    return AfpBundle(b, eta, u, B)


@dataclass
class Verdict:
    admissible: bool
    passed: bool
    residual: float
    bound: float
    case: str = ""
    details: dict = field(default_factory=dict)


def proof_case(lam: float, dxy: float, eps: float, b: float) -> str:
    """Which branch of the case analysis applies (diagnostic only)."""
    if lam <= eps / (4 * b):
        return "I"
    if 1 - lam <= eps / (4 * b):
        return "II"
    if dxy <= eps / 4:
        return "III"
    return "IV"


def check_afp_segment(model, T: MappingSpec, x, y, lam: float, eps: float, b: float,
                      tol: float | None = None) -> Verdict:
    space = model.space
    tol = space.tol if tol is None else tol
    d = space.dist
    delta = afp_delta(b, eps, model.eta)
    dxy, rx, ry = d(x, y), d(x, T(x)), d(y, T(y))
    info = {"delta": delta, "d_xy": dxy, "d_xTx": rx, "d_yTy": ry, "lam": lam}
    if dxy > b or rx > delta or ry > delta:
        return Verdict(False, True, math.nan, eps, "", info)
    z = space.combine(x, y, lam)
    res = d(z, T(z))
    return Verdict(True, res <= eps + tol, res, eps, proof_case(lam, dxy, eps, b), info)


def check_afp_asymptotic(model, T: MappingSpec, x, y, lam: float, eps: float, bundle: AfpBundle,
                         mode: str = "power_n", n: int | None = None, tol: float | None = None) -> Verdict:
    space = model.space
    tol = space.tol if tol is None else tol
    d = space.dist
    dxy = d(x, y)
    if mode == "power_n":
        gam = bundle.gamma_rate(eps)
        n = gam if n is None else n
        if n < gam:
            raise UsageError(f"power_n mode needs n >= {gam}, got {n}")
        th = bundle.theta(eps)
        rx, ry = d(x, T.power(x, n)), d(y, T.power(y, n))
        info = {"n": n, "theta": th, "d_xTnx": rx, "d_yTny": ry, "d_xy": dxy}
        if dxy > bundle.b or rx > th or ry > th:
            return Verdict(False, True, math.nan, eps, "", info)
        z = space.combine(x, y, lam)
        res = d(z, T.power(z, n))
    elif mode == "single_step":
        om = bundle.omega(eps)
        rx, ry = d(x, T(x)), d(y, T(y))
        info = {"omega": om, "d_xTx": rx, "d_yTy": ry, "d_xy": dxy}
        if dxy > bundle.b or rx > om or ry > om:
            return Verdict(False, True, math.nan, eps, "", info)
        z = space.combine(x, y, lam)
        res = d(z, T(z))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    return Verdict(True, res <= eps + tol, res, eps, proof_case(lam, dxy, eps, bundle.b), info)


@dataclass
class CampaignResult:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.skipped

    @property
    def admissible_rate(self) -> float:
        return (self.passed + self.failed) / self.total if self.total else 0.0

    def add(self, v: Verdict, inputs: dict):
        if not v.admissible:
            self.skipped += 1
        elif v.passed:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.violations) < 25:
                self.violations.append({"inputs": inputs, "residual": v.residual, "bound": v.bound,
                                        "case": v.case, **v.details})

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failed": self.failed,
                "skipped": self.skipped, "violations": self.violations}


def _log_uniform(rng, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _afp_pair(space, rng, T, eps, radius_fn):
    p, q = T.fixed_sampler(rng), T.fixed_sampler(rng)
    if rng.random() < 0.1:
        q = p
    b = (space.dist(p, q) + eps) * (1.0 + 0.5 * float(rng.random()))
    rad = 0.6 * radius_fn(b)
    x = space.sample_near(rng, p, rad * float(rng.random()))
    y = space.sample_near(rng, q, rad * float(rng.random()))
    return x, y, b


def afp_campaign(model, T: MappingSpec, seed: int, trials: int, eps_range=(1e-3, 1.0)) -> CampaignResult:
    """Falsification campaign for the nonexpansive segment transfer."""
    space = model.space
    rng = np.random.default_rng(seed)
    res = CampaignResult(f"afp_segment[{T.name}]")
    js = space.to_json
    for _ in range(trials):
        eps = _log_uniform(rng, *eps_range)
        x, y, b = _afp_pair(space, rng, T, eps, lambda b: afp_delta(b, eps, model.eta))
        lam = sample_lambda(rng)
        v = check_afp_segment(model, T, x, y, lam, eps, b)
        res.add(v, {"x": js(x), "y": js(y), "lam": lam, "eps": eps, "b": b})
    return res


def afp_asymptotic_campaign(model, T: MappingSpec, seed: int, trials: int, mode: str,
                            eps_range=(1e-3, 1.0)) -> CampaignResult:
    space = model.space
    rng = np.random.default_rng(seed)
    res = CampaignResult(f"afp_{mode}[{T.name}]")
    js = space.to_json
    for _ in range(trials):
        eps = _log_uniform(rng, *eps_range)
        holder = {}

        def radius(b):
            holder["bundle"] = bundle = afp_bundle(b, model.eta, T.u, T.B)
            return bundle.theta(eps) if mode == "power_n" else bundle.omega(eps)

        x, y, b = _afp_pair(space, rng, T, eps, radius)
        bundle = holder["bundle"]
        lam = sample_lambda(rng)
        n = bundle.gamma_rate(eps) + int(rng.integers(0, 4)) if mode == "power_n" else None
        v = check_afp_asymptotic(model, T, x, y, lam, eps, bundle, mode, n)
        res.add(v, {"x": js(x), "y": js(y), "lam": lam, "eps": eps, "b": b, "n": n})
    return res


# ---------------------------------------------------------------------------
# mapping library


def identity_map(model) -> MappingSpec:
    space = model.space
    return MappingSpec("identity", lambda x: x, fixed_sampler=space.sample, power_fn=lambda x, n: x)


def contraction_map(model, center, kappa: float = 0.9) -> MappingSpec:
    """``x -> W(c, x, kappa)``; Lipschitz with constant ``kappa``, ``Fix = {c}``."""
    space = model.space
    return MappingSpec(f"contraction(k={kappa:g})", lambda x: space.combine(center, x, kappa),
                       fixed_sampler=lambda rng: center,
                       power_fn=lambda x, n: space.combine(center, x, kappa**n))


def linear_map(model, M, name: str, fixed_basis=None, scale: float = 1.0) -> MappingSpec:
    """``x -> M x`` on a vector model; fixed points sampled from ``span(fixed_basis)``."""
    M = np.asarray(M, dtype=float)
    basis = None if fixed_basis is None else np.atleast_2d(np.asarray(fixed_basis, dtype=float))

    @lru_cache(maxsize=None)
    def mpow(n: int):
        return np.linalg.matrix_power(M, n)

    def fixed(rng):
        if basis is None:
            return np.zeros(M.shape[0])
        return rng.uniform(-scale, scale, basis.shape[0]) @ basis

    return MappingSpec(name, lambda x: M @ x, fixed_sampler=fixed, power_fn=lambda x, n: mpow(n) @ x)


def rotation_map(model, theta: float = 0.3) -> MappingSpec:
    n = model.space.n
    M = np.eye(n)
    c, s = math.cos(theta), math.sin(theta)
    M[:2, :2] = [[c, -s], [s, c]]
    basis = np.eye(n)[2:] if n > 2 else None
    return linear_map(model, M, f"rotation({theta:g})", basis)


def reflection_map(model) -> MappingSpec:
    """Reflection ``x_2 -> -x_2``; fixes the hyperplane ``x_2 = 0``."""
    n = model.space.n
    M = np.eye(n)
    M[1, 1] = -1.0
    return linear_map(model, M, "reflection", np.delete(np.eye(n), 1, axis=0))


def line_projection_map(model) -> MappingSpec:
    """Orthogonal projection onto the first coordinate axis (Euclidean)."""
    n = model.space.n
    M = np.zeros((n, n))
    M[0, 0] = 1.0
    return linear_map(model, M, "project_axis", np.eye(n)[:1], scale=2.0)


def cycle_map(model) -> MappingSpec:
    """Cyclic coordinate shift, an isometry of every l_p; fixes the diagonal."""
    n = model.space.n
    M = np.roll(np.eye(n), 1, axis=0)
    return linear_map(model, M, "coordinate_cycle", np.ones((1, n)) / n ** 0.5)


def block_shear_map(model, c: float = 1.0, q: float = 0.5) -> MappingSpec:
    """Asymptotically nonexpansive linear map on Euclidean R^3.

    ``T(x1, x2, x3) = (x1, q x2 + c x3, q x3)``.  Its first powers expand
    (``||T|| > 1``) but ``||T^n|| -> 1``; ``Fix(T)`` is the ``x1`` axis.
    """
    if model.kind != "euclidean" or model.space.n != 3:
        raise UsageError("block_shear_map needs Euclidean R^3")
    M = np.array([[1.0, 0, 0], [0, q, c], [0, 0, q]])
    deltas = []
    for n in range(64):
        deltas.append(max(0.0, float(np.linalg.norm(np.linalg.matrix_power(M, n), 2)) - 1.0))
    # powers beyond 63 are contractions on the (x2, x3) block
    deltas_t = tuple(deltas)

    def delta_seq(n: int) -> float:
        return deltas_t[n] if n < len(deltas_t) else 0.0

    def u(eps: float) -> int:
        bad = [n for n, dn in enumerate(deltas_t) if dn > eps]
        return bad[-1] + 1 if bad else 0

    base = linear_map(model, M, f"block_shear(c={c:g},q={q:g})", np.eye(3)[:1], scale=2.0)
    return MappingSpec(base.name, base.apply, "asymptotically_nonexpansive", delta_seq, u, max(deltas),
                       base.fixed_sampler, base.power_fn)


def geometric_delta(c: float = 1.0):
    """``delta_n = c 2^-n`` with its convergence modulus and bound."""

    def delta_seq(n: int) -> float:
        return c * 2.0**-n

    def u(eps: float) -> int:
        return max(0, math.ceil(math.log2(c / eps))) if eps < c else 0

    return delta_seq, u, c


def poincare_reflection_map(model) -> MappingSpec:
    """``(x, y) -> (x, -y)``: an isometry fixing the real diameter."""
    r = model.space.r_sample

    def fixed(rng):
        return np.array([rng.uniform(-r, r), 0.0])

    def power(p, n):
        return np.array([p[0], -p[1]]) if n % 2 else p

    return MappingSpec("disk_reflection", lambda p: np.array([p[0], -p[1]]), fixed_sampler=fixed,
                       power_fn=power)


def poincare_rotation_map(model, theta: float = 0.3) -> MappingSpec:
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])

    def power(p, n):
        cn, sn = math.cos(n * theta), math.sin(n * theta)
        return np.array([[cn, -sn], [sn, cn]]) @ p

    return MappingSpec(f"disk_rotation({theta:g})", lambda p: R @ p, fixed_sampler=lambda rng: np.zeros(2),
                       power_fn=power)


def tree_fold_map(model, vertices) -> MappingSpec:
    """Projection onto the subtree spanned by ``vertices``; fixes that subtree."""
    tree = model.space
    project, _ = tree.subtree_projection(vertices)

    def fixed(rng):
        for _ in range(1000):
            p = tree.sample(rng)
            if project(p) == p:
                return p
        return project(tree.sample(rng))

    # a projection is idempotent
    return MappingSpec(f"fold({','.join(vertices)})", project, fixed_sampler=fixed,
                       power_fn=lambda p, n: project(p) if n else p)


DEFAULT_SUBTREE = ("A", "B", "D", "F")


def mapping_library(model) -> list[MappingSpec]:
    """Nonexpansive maps with known fixed point sets for the given model."""
    space = model.space
    kind = model.kind
    maps = [identity_map(model)]
    if kind == "euclidean":
        maps += [rotation_map(model), reflection_map(model), line_projection_map(model),
                 contraction_map(model, np.zeros(space.n), 0.9)]
    elif kind == "lp":
        maps += [cycle_map(model), contraction_map(model, np.full(space.n, 0.25), 0.8)]
    elif kind == "poincare":
        maps += [poincare_reflection_map(model), poincare_rotation_map(model),
                 contraction_map(model, np.array([0.3, -0.2]), 0.8)]
    elif kind == "tree":
        maps += [tree_fold_map(model, DEFAULT_SUBTREE), contraction_map(model, space.vertex("D"), 0.7)]
    return maps


def asymptotic_library(model) -> list[MappingSpec]:
    """Asymptotically nonexpansive maps for the given model."""
    dseq, u, B = geometric_delta(0.5)
    maps = [as_asymptotic(T, dseq, u, B) for T in mapping_library(model)]
    if model.kind == "euclidean" and model.space.n == 3:
        maps.append(block_shear_map(model))
    return maps
