"""Moduli of uniform convexity and of uniform convexity of the squared distance.

``UCModulus`` wraps a monotone modulus ``eta(r, eps)``; :func:`psi_eta`
turns it into a modulus for property (G), i.e. for the inequality

    d^2(m, a) <= d^2(x, a) / 2 + d^2(y, a) / 2 - psi(r, eps)

where ``m`` is the midpoint of ``x`` and ``y``, ``d(x, a), d(y, a) <= r``
and ``d(x, y) >= eps``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import AxiomReport, SamplingError, UsageError, sample_lambda

MONOTONE_R_GRID = tuple(float(v) for v in np.geomspace(1e-3, 1e3, 25))
EPS_GRID = tuple(float(v) for v in np.linspace(0.01, 2.0, 25))
SAMPLER_RETRIES = 1000


@dataclass(frozen=True)
class UCModulus:
    """A monotone modulus of uniform convexity ``(r, eps) -> (0, 1]``.

    Construction sweeps a grid and rejects functions that are not
    nonincreasing in ``r`` or not positive.  Values above 1 only warn.
    """

    func: Callable[[float, float], float]
    name: str = "eta"
    monotone: bool = True

    def __post_init__(self):
        if not self.monotone:
            raise UsageError("only monotone moduli are supported")
        over_one = False
        for eps in EPS_GRID:
            prev = math.inf
            for r in MONOTONE_R_GRID:
                v = self.func(r, eps)
                if not v > 0:
                    raise UsageError(f"{self.name}({r}, {eps}) = {v} is not positive")
                if v > prev * (1 + 1e-12):
                    raise UsageError(f"{self.name} is not nonincreasing in r at eps={eps}")
                over_one |= v > 1.0
                prev = v
        if over_one:
            warnings.warn(f"modulus {self.name} exceeds 1 on the check grid", stacklevel=2)

    def __call__(self, r: float, eps: float) -> float:
        return self.func(r, eps)


@dataclass(frozen=True)
class PropertyGModulus:
    func: Callable[[float, float], float]
    provenance: str  # "from_eta" or "cat0_direct"

    def __call__(self, r: float, eps: float) -> float:
        return self.func(r, eps)


def cat0_modulus() -> UCModulus:
    return UCModulus(lambda r, eps: eps * eps / 8.0, name="eps^2/8")


def clarkson_modulus(p: float) -> UCModulus:
    """Modulus of l_p (p >= 2) obtained from Clarkson's inequality."""
    if p < 2:
        raise UsageError(f"Clarkson modulus requires p >= 2, got p={p}")
    # 1 - (1 - (eps/2)^p)^(1/p) without cancellation for small eps
    return UCModulus(lambda r, eps: -math.expm1(math.log1p(-((eps / 2.0) ** p)) / p) if eps < 2 else 1.0,
                     name=f"clarkson(p={p:g})")


def _inner_eps(r: float, eps: float) -> float:
    return min(eps / (2.0 * r), 2.0)


def psi_eta(eta: Callable[[float, float], float], r: float, eps: float) -> float:
    """Property-(G) modulus built from a monotone modulus ``eta``."""
    if not (r > 0 and eps > 0):
        raise UsageError(f"psi_eta needs r > 0 and eps > 0, got r={r}, eps={eps}")
    e2 = eta(r, _inner_eps(r, eps)) ** 2
    delta = min(eps / 2.0, eps * eps / (96.0 * r) * e2)
    return min(delta * delta / 4.0, eps * eps / 32.0 * e2)


def psi_cat0_direct(r: float, eps: float) -> float:
    """The CAT(0) modulus ``eps^2 / 4``; ``r`` is unused."""
    return eps * eps / 4.0


def derived_psi(eta: UCModulus) -> PropertyGModulus:
    return PropertyGModulus(lambda r, eps: psi_eta(eta, r, eps), "from_eta")


def cat0_psi() -> PropertyGModulus:
    return PropertyGModulus(psi_cat0_direct, "cat0_direct")


# ---------------------------------------------------------------------------
# samplers and verifiers


def _far_point(space, rng, a, bias: float = 0.3):
    s = space.sample(rng)
    t = float(rng.random()) ** bias
    return space.combine(a, s, t)


def sample_constrained(model, rng, r: float | None = None, eps: float | None = None):
    """Draw ``(a, x, y, r, eps)`` with ``d(x,a), d(y,a) <= r`` and ``d(x,y) >= eps``.

    With ``r`` and ``eps`` free, both are drawn conditionally on the
    triple, so every draw is feasible.  With both fixed, rejection
    sampling is used and :class:`SamplingError` signals infeasibility.
    """
    space = model.space
    d = space.dist
    if r is None and eps is None:
        for _ in range(SAMPLER_RETRIES):
            a = space.sample(rng)
            x = _far_point(space, rng, a)
            y = _far_point(space, rng, a)
            dxy = d(x, y)
            if dxy <= 1e-12:
                continue
            rr = max(d(x, a), d(y, a))
            if rng.random() < 0.5:
                rr *= 1.0 + float(rng.random())
            ee = dxy if rng.random() < 0.1 else dxy * float(rng.random()) ** 0.5
            if ee <= 0.0:
                continue
            return a, x, y, rr, ee
        raise SamplingError("could not draw a nondegenerate triple")
    if r is None or eps is None:
        raise UsageError("give both r and eps, or neither")
    if eps > 2 * r:
        raise SamplingError(f"infeasible request: eps={eps} > 2r={2 * r}")
    for _ in range(SAMPLER_RETRIES):
        a = space.sample(rng)
        x = space.sample_near(rng, a, r * float(rng.random()) ** 0.2)
        y = space.sample_near(rng, a, r * float(rng.random()) ** 0.2)
        if d(x, a) <= r and d(y, a) <= r and d(x, y) >= eps:
            return a, x, y, r, eps
    raise SamplingError(f"no feasible triple found for r={r}, eps={eps} after {SAMPLER_RETRIES} tries")


def check_uniform_convexity(model, seed: int, trials: int, tol: float | None = None) -> AxiomReport:
    """Check that ``model.eta`` certifies the uniform convexity of the space."""
    space, eta = model.space, model.eta
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport("uniform_convexity", trials, tol)
    js = space.to_json
    for _ in range(trials):
        a, x, y, r, _ = sample_constrained(model, rng)
        e = min(space.dist(x, y) / r, 2.0) * (1.0 if rng.random() < 0.2 else float(rng.random()))
        if e <= 0:
            rep.skipped += 1
            continue
        lhs = space.dist(space.midpoint(x, y), a)
        rhs = (1.0 - eta(r, e)) * r
        rep.record(lhs - rhs, lhs, rhs, lambda: {"a": js(a), "x": js(x), "y": js(y), "r": r, "eps": e})
    return rep


def check_eta_monotone(eta: Callable[[float, float], float], r_grid=MONOTONE_R_GRID, eps_grid=EPS_GRID) -> AxiomReport:
    """Grid check of ``s <= r  =>  eta(r, eps) <= eta(s, eps)``."""
    rep = AxiomReport("eta_monotone", len(r_grid) ** 2 * len(eps_grid), 0.0)
    for eps in eps_grid:
        vals = [eta(r, eps) for r in r_grid]
        for i, s in enumerate(r_grid):
            for j in range(i, len(r_grid)):
                rep.record(vals[j] - vals[i], vals[j], vals[i], {"s": s, "r": r_grid[j], "eps": eps})
    return rep


def check_property_G(model, psi: PropertyGModulus, seed: int, trials: int, tol: float | None = None,
                     r: float | None = None, eps: float | None = None) -> AxiomReport:
    """Randomized check of the property-(G) inequality with modulus ``psi``."""
    space = model.space
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport(f"property_G[{psi.provenance}]", trials, tol)
    d = space.dist
    js = space.to_json
    for _ in range(trials):
        a, x, y, rr, ee = sample_constrained(model, rng, r, eps)
        lhs = d(space.midpoint(x, y), a) ** 2
        rhs = 0.5 * d(x, a) ** 2 + 0.5 * d(y, a) ** 2 - psi(rr, ee)
        rep.record(lhs - rhs, lhs, rhs, lambda: {"a": js(a), "x": js(x), "y": js(y), "r": rr, "eps": ee})
    return rep


def check_lambda_convexity(model, seed: int, trials: int, tol: float | None = None,
                           psi: PropertyGModulus | None = None) -> list[AxiomReport]:
    """Weighted uniform convexity of ``d^2(., a)`` along geodesics.

    Returns three reports: the ``2 min(l, 1-l)`` form, the weaker
    ``2 l (1-l)`` form, and the intermediate chain
    ``d^2(W(x,y,l), a) <= (1-2l) d^2(x,a) + 2l d^2(m,a)`` for ``l <= 1/2``.
    """
    space = model.space
    psi = psi or derived_psi(model.eta)
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep_min = AxiomReport("lambda_min", trials, tol)
    rep_prod = AxiomReport("lambda_product", trials, tol)
    rep_chain = AxiomReport("midpoint_chain", trials, tol)
    d = space.dist
    js = space.to_json
    for _ in range(trials):
        a, x, y, rr, ee = sample_constrained(model, rng)
        lam = sample_lambda(rng)
        p = space.combine(x, y, lam)
        ps = psi(rr, ee)
        dxa2, dya2 = d(x, a) ** 2, d(y, a) ** 2
        lhs = d(p, a) ** 2
        base = (1 - lam) * dxa2 + lam * dya2

        def inputs():
            return {"a": js(a), "x": js(x), "y": js(y), "r": rr, "eps": ee, "lam": lam}

        rhs = base - 2 * min(lam, 1 - lam) * ps
        rep_min.record(lhs - rhs, lhs, rhs, inputs)
        rhs = base - 2 * lam * (1 - lam) * ps
        rep_prod.record(lhs - rhs, lhs, rhs, inputs)

        # orient so the weight on the far endpoint is at most 1/2
        if lam <= 0.5:
            u, l2, du2 = x, lam, dxa2
        else:
            u, l2, du2 = y, 1 - lam, dya2
        m = space.midpoint(x, y)
        rhs = (1 - 2 * l2) * du2 + 2 * l2 * d(m, a) ** 2
        rep_chain.record(lhs - rhs, lhs, rhs, inputs)
    return [rep_min, rep_prod, rep_chain]
