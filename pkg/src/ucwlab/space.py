"""Geodesic space abstraction and the axiom-verification engine.

A space is a metric ``dist`` together with a convexity operator
``combine(x, y, lam)`` returning the point ``(1 - lam) x + lam y`` on the
chosen geodesic from ``x`` to ``y``.  Every concrete model in
:mod:`ucwlab.models` subclasses :class:`GeodesicSpace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

TOL_EXACT = 1e-9
TOL_TRANSCENDENTAL = 1e-7
DEGENERATE_RATE = 0.01
MAX_RECORDED = 25


class UsageError(ValueError):
    """Raised when an operation is called with invalid arguments."""


class SamplingError(RuntimeError):
    """Raised when a constrained sampler cannot satisfy its constraints."""


class SolverError(RuntimeError):
    """A numerical solver stopped without meeting its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3g})")
        self.residual = residual


class GeodesicSpace:
    """Base class for a W-hyperbolic space with a sampler.

    Subclasses implement ``_dist``, ``_combine``, ``_sample`` and
    ``owns``.  Instances are immutable after construction.
    """

    kind: str = "abstract"
    tol: float = TOL_EXACT

    def __init__(self, name: str):
        self.name = name

    # -- subclass hooks -------------------------------------------------
    def owns(self, p) -> bool:
        raise NotImplementedError

    def _dist(self, x, y) -> float:
        raise NotImplementedError

    def _combine(self, x, y, lam: float):
        raise NotImplementedError

    def _sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def to_json(self, p) -> Any:
        return [float(c) for c in p]

    # -- public surface -------------------------------------------------
    def dist(self, x, y) -> float:
        return self._dist(x, y)

    def combine(self, x, y, lam: float):
        if not 0.0 <= lam <= 1.0:
            raise UsageError(f"lam must lie in [0, 1], got {lam!r}")
        if lam == 0.0:
            return x
        if lam == 1.0:
            return y
        return self._combine(x, y, lam)

    def midpoint(self, x, y):
        return self._combine(x, y, 0.5)

    def sample(self, rng: np.random.Generator):
        return self._sample(rng)

    def sample_near(self, rng: np.random.Generator, p, radius: float):
        """Return a point within ``radius`` of ``p`` in a random direction."""
        if radius <= 0.0:
            return p
        for _ in range(100):
            s = self._sample(rng)
            d = self._dist(p, s)
            if d > 1e-12:
                return self.combine(p, s, min(1.0, radius / d))
        return p

    def check_point(self, p) -> None:
        if not self.owns(p):
            raise UsageError(f"point {p!r} does not belong to space {self.name}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


def combine(space: GeodesicSpace, x, y, lam: float):
    """Validated ``W(x, y, lam)``."""
    space.check_point(x)
    space.check_point(y)
    return space.combine(x, y, lam)


@dataclass
class AxiomReport:
    """Outcome of a randomized check of one inequality family."""

    axiom: str
    trials: int
    tol: float
    violations: list[dict] = field(default_factory=list)
    max_gap: float = -math.inf
    min_gap: float = math.inf
    n_violations: int = 0
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def record(self, gap: float, lhs: float, rhs: float, inputs: Callable[[], dict] | dict | None = None):
        if gap > self.max_gap:
            self.max_gap = gap
        if gap < self.min_gap:
            self.min_gap = gap
        if gap > self.tol:
            self.n_violations += 1
            if len(self.violations) < MAX_RECORDED:
                data = inputs() if callable(inputs) else (inputs or {})
                self.violations.append({"inputs": data, "lhs": lhs, "rhs": rhs, "gap": gap})

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "trials": self.trials,
            "skipped": self.skipped,
            "tol": self.tol,
            "max_gap": None if self.max_gap == -math.inf else self.max_gap,
            "min_gap": None if self.min_gap == math.inf else self.min_gap,
            "n_violations": self.n_violations,
            "violations": self.violations,
        }


def sample_lambda(rng: np.random.Generator) -> float:
    """Uniform on [0, 1] with a small atom on the special values 0, 1/2, 1."""
    u = rng.random()
    if u < 0.03:
        return (0.0, 0.5, 1.0)[int(u / 0.01)]
    return float(rng.random())


def sample_tuple(space: GeodesicSpace, rng: np.random.Generator, k: int) -> list:
    """Sample ``k`` points; with probability 1% the second equals the first."""
    pts = [space.sample(rng) for _ in range(k)]
    if k >= 2 and rng.random() < DEGENERATE_RATE:
        pts[1] = pts[0]
    return pts


def check_axioms(space: GeodesicSpace, seed: int, trials: int, tol: float | None = None) -> list[AxiomReport]:
    """Randomized sweep of the metric axioms and (W1)-(W5).

    Also checks convexity of the squared distance along geodesics
    (``quad``) and the geodesic consistency ``d(x, W(x,y,l)) = l d(x,y)``
    (``geodesic``).
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    ids = ("metric", "W1", "W2", "W3", "W4", "W5", "quad", "geodesic")
    reports = {a: AxiomReport(a, trials, tol) for a in ids}
    d = space.dist
    W = space.combine
    js = space.to_json

    for _ in range(trials):
        x, y, z, w = sample_tuple(space, rng, 4)
        lam = sample_lambda(rng)
        mu = sample_lambda(rng)

        def inputs():
            return {"x": js(x), "y": js(y), "z": js(z), "w": js(w), "lam": lam, "mu": mu}

        dxy, dyx, dyz, dxz = d(x, y), d(y, x), d(y, z), d(x, z)
        gap = max(abs(dxy - dyx), d(x, x), dxz - dxy - dyz, -min(dxy, dxz, dyz))
        reports["metric"].record(gap, dxz, dxy + dyz, inputs)

        p = W(x, y, lam)
        lhs = d(z, p)
        rhs = (1 - lam) * d(z, x) + lam * d(z, y)
        reports["W1"].record(lhs - rhs, lhs, rhs, inputs)

        q = W(x, y, mu)
        lhs = d(p, q)
        rhs = abs(lam - mu) * dxy
        reports["W2"].record(abs(lhs - rhs), lhs, rhs, inputs)

        lhs = d(p, W(y, x, 1 - lam))
        reports["W3"].record(lhs, lhs, 0.0, inputs)

        lhs = d(W(x, z, lam), W(y, w, lam))
        rhs = (1 - lam) * dxy + lam * d(z, w)
        reports["W4"].record(lhs - rhs, lhs, rhs, inputs)

        lhs = d(W(x, z, lam), W(y, z, lam))
        reports["W5"].record(lhs - dxy, lhs, dxy, inputs)

        dpz = d(p, z)
        lhs = dpz * dpz
        rhs = (1 - lam) * dxz**2 + lam * d(y, z) ** 2
        reports["quad"].record(lhs - rhs, lhs, rhs, inputs)

        lhs = d(x, p)
        reports["geodesic"].record(abs(lhs - lam * dxy), lhs, lam * dxy, inputs)

    return [reports[a] for a in ids]


def summarize(reports: Sequence[AxiomReport]) -> dict:
    return {r.axiom: r.n_violations for r in reports}
