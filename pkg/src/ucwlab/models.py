"""Concrete geodesic spaces: Euclidean R^n, l_p R^n, the Poincare disk and metric trees."""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .moduli import UCModulus, cat0_modulus, clarkson_modulus
from .space import (
    TOL_EXACT,
    TOL_TRANSCENDENTAL,
    AxiomReport,
    GeodesicSpace,
    UsageError,
)

KINDS = ("euclidean", "lp", "poincare", "tree")
DISK_MARGIN = 1e-12


class EuclideanSpace(GeodesicSpace):
    kind = "euclidean"
    tol = TOL_EXACT

    def __init__(self, n: int = 2, r_sample: float = 2.0):
        super().__init__(f"euclidean(n={n})")
        self.n = n
        self.r_sample = r_sample

    def owns(self, p) -> bool:
        return isinstance(p, np.ndarray) and p.shape == (self.n,)

    def point(self, coords) -> np.ndarray:
        p = np.asarray(coords, dtype=float)
        self.check_point(p)
        return p

    def _dist(self, x, y) -> float:
        return math.sqrt(float(np.dot(x - y, x - y)))

    def _combine(self, x, y, lam):
        return x + lam * (y - x)

    def _sample(self, rng):
        v = rng.standard_normal(self.n)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return np.zeros(self.n)
        return v * (self.r_sample * rng.random() ** (1.0 / self.n) / nv)


class LpSpace(EuclideanSpace):
    """R^n with the p-norm, p >= 2; straight segments as geodesics."""

    kind = "lp"

    def __init__(self, n: int = 2, p: float = 4.0, r_sample: float = 2.0):
        super().__init__(n, r_sample)
        self.p = float(p)
        self.name = f"lp(n={n}, p={p:g})"

    def _dist(self, x, y) -> float:
        return float(np.add.reduce(np.abs(x - y) ** self.p) ** (1.0 / self.p))

    def _sample(self, rng):
        return rng.uniform(-self.r_sample, self.r_sample, self.n)


def _to_c(p) -> complex:
    return complex(p[0], p[1])


def _from_c(z: complex) -> np.ndarray:
    return np.array([z.real, z.imag])


def mobius_to_origin(c: complex, z: complex) -> complex:
    """Disk isometry sending ``c`` to 0."""
    return (z - c) / (1 - c.conjugate() * z)


def mobius_from_origin(c: complex, z: complex) -> complex:
    """Inverse of :func:`mobius_to_origin`."""
    return (z + c) / (1 + c.conjugate() * z)


class PoincareDisk(GeodesicSpace):
    """The Poincare disk model of the hyperbolic plane (curvature -1)."""

    kind = "poincare"
    tol = TOL_TRANSCENDENTAL

    def __init__(self, r_sample: float = 0.9):
        if not 0 < r_sample < 1:
            raise UsageError(f"poincare r_sample must lie in (0, 1), got {r_sample}")
        super().__init__(f"poincare(r_sample={r_sample:g})")
        self.r_sample = r_sample

    def owns(self, p) -> bool:
        return isinstance(p, np.ndarray) and p.shape == (2,) and float(p @ p) < 1 - DISK_MARGIN

    def point(self, coords) -> np.ndarray:
        p = np.asarray(coords, dtype=float)
        self.check_point(p)
        return p

    def _dist(self, x, y) -> float:
        x0, x1, y0, y1 = float(x[0]), float(x[1]), float(y[0]), float(y[1])
        num = math.hypot(x0 - y0, x1 - y1)
        if num == 0.0:
            return 0.0
        den = math.sqrt((1 - x0 * x0 - x1 * x1) * (1 - y0 * y0 - y1 * y1))
        # 2 asinh form of arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))
        return 2.0 * math.asinh(num / den)

    def _combine(self, x, y, lam):
        c = _to_c(x)
        w = mobius_to_origin(c, _to_c(y))
        rho = abs(w)
        if rho == 0.0:
            return x
        # distance from 0 to w is 2 atanh(rho); move lam of the way
        t = math.tanh(lam * math.atanh(rho))
        z = mobius_from_origin(c, w / rho * t)
        a = abs(z)
        if a >= 1 - DISK_MARGIN:
            z *= (1 - 2 * DISK_MARGIN) / a
        return _from_c(z)

    def _sample(self, rng):
        rad = self.r_sample * math.sqrt(rng.random())
        th = 2 * math.pi * rng.random()
        return np.array([rad * math.cos(th), rad * math.sin(th)])


class TreePoint(NamedTuple):
    edge: int
    offset: float


class MetricTree(GeodesicSpace):
    """A finite metric tree; points are ``(edge index, offset from the edge's tail)``.

    Every non-root vertex is the tail (offset 0) of the edge to its
    parent, which is its canonical representation.  The root is
    represented at the head (offset = length) of its first child edge.
    """

    kind = "tree"
    tol = TOL_EXACT

    def __init__(self, edges: Sequence[tuple[str, str, float]]):
        super().__init__(f"tree({len(edges)} edges)")
        if not edges:
            raise UsageError("tree needs at least one edge")
        names: list[str] = []
        index: dict[str, int] = {}
        for u, v, length in edges:
            if not length > 0:
                raise UsageError(f"edge {u}-{v} has non-positive length {length}")
            if u == v:
                raise UsageError(f"self-loop at vertex {u}")
            for s in (u, v):
                if s not in index:
                    index[s] = len(names)
                    names.append(s)
        nv = len(names)
        if len(edges) != nv - 1:
            raise UsageError(f"edge list is not a tree: {nv} vertices but {len(edges)} edges")
        adj: list[list[tuple[int, float]]] = [[] for _ in range(nv)]
        for u, v, length in edges:
            adj[index[u]].append((index[v], float(length)))
            adj[index[v]].append((index[u], float(length)))

        # root at vertex 0, orient each edge child -> parent
        parent = [-1] * nv
        seen = [False] * nv
        seen[0] = True
        order = [0]
        queue = deque([0])
        self.edges: list[tuple[int, int, float]] = []
        self.vertex_edge = [-1] * nv
        while queue:
            v = queue.popleft()
            for w, length in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    self.vertex_edge[w] = len(self.edges)
                    self.edges.append((w, v, length))
                    order.append(w)
                    queue.append(w)
        if not all(seen):
            raise UsageError("edge list is not connected")
        self.vertex_edge[0] = next(i for i, (a, b, _) in enumerate(self.edges) if b == 0)
        self.names = names
        self.index = index
        self.edge_of = {}
        for i, (a, b, _) in enumerate(self.edges):
            self.edge_of[(a, b)] = i
            self.edge_of[(b, a)] = i

        # all-pairs vertex distances and next hops by BFS from each vertex
        self.D = np.zeros((nv, nv))
        self.nxt = np.zeros((nv, nv), dtype=int)
        for s in range(nv):
            self.nxt[s, s] = s
            first = [-1] * nv
            first[s] = s
            dist = [0.0] * nv
            q = deque([s])
            while q:
                v = q.popleft()
                for w, length in adj[v]:
                    if first[w] == -1:
                        dist[w] = dist[v] + length
                        first[w] = w if v == s else first[v]
                        q.append(w)
            self.D[s] = dist
            self.nxt[s] = first
        self._Dl = self.D.tolist()
        self._nxtl = self.nxt.tolist()
        self.lengths = np.array([e[2] for e in self.edges])
        self._cum = np.cumsum(self.lengths) / self.lengths.sum()

    @classmethod
    def from_text(cls, text: str) -> "MetricTree":
        return cls(parse_tree_edges(text))

    # -- points ---------------------------------------------------------
    def vertex(self, name: str) -> TreePoint:
        v = self.index[name]
        e = self.vertex_edge[v]
        a, b, length = self.edges[e]
        return TreePoint(e, 0.0 if a == v else length)

    def point(self, u: str, v: str, offset_from_u: float) -> TreePoint:
        """Point at distance ``offset_from_u`` from vertex ``u`` on edge ``u-v``."""
        iu, iv = self.index[u], self.index[v]
        e = self.edge_of.get((iu, iv))
        if e is None:
            raise UsageError(f"no edge {u}-{v}")
        a, b, length = self.edges[e]
        if not 0 <= offset_from_u <= length:
            raise UsageError(f"offset {offset_from_u} outside [0, {length}]")
        t = offset_from_u if a == iu else length - offset_from_u
        return self.canonical(e, t)

    def canonical(self, e: int, t: float) -> TreePoint:
        a, b, length = self.edges[e]
        if t <= 0.0:
            return self._vertex_point(a)
        if t >= length:
            return self._vertex_point(b)
        return TreePoint(e, float(t))

    def _vertex_point(self, v: int) -> TreePoint:
        e = self.vertex_edge[v]
        a, b, length = self.edges[e]
        return TreePoint(e, 0.0 if a == v else length)

    def owns(self, p) -> bool:
        return (
            isinstance(p, TreePoint)
            and 0 <= p.edge < len(self.edges)
            and 0.0 <= p.offset <= self.edges[p.edge][2]
        )

    def to_json(self, p):
        return [int(p.edge), float(p.offset)]

    # -- metric ---------------------------------------------------------
    def _ends(self, p: TreePoint):
        a, b, length = self.edges[p.edge]
        return ((a, p.offset), (b, length - p.offset))

    def _route(self, p: TreePoint, q: TreePoint):
        best = None
        D = self._Dl
        for va, da in self._ends(p):
            for vb, db in self._ends(q):
                tot = da + D[va][vb] + db
                if best is None or tot < best[0]:
                    best = (tot, va, da, vb, db)
        return best

    def _dist(self, p, q) -> float:
        if p.edge == q.edge:
            return abs(p.offset - q.offset)
        return self._route(p, q)[0]

    def _along(self, e: int, start_vertex: int, s: float) -> TreePoint:
        a, b, length = self.edges[e]
        return self.canonical(e, s if start_vertex == a else length - s)

    def _combine(self, p, q, lam):
        if p.edge == q.edge:
            return self.canonical(p.edge, p.offset + lam * (q.offset - p.offset))
        total, va, da, vb, db = self._route(p, q)
        s = lam * total
        if s <= da:
            a = self.edges[p.edge][0]
            return self.canonical(p.edge, p.offset - s if va == a else p.offset + s)
        s -= da
        v = va
        nxt = self._nxtl
        while v != vb:
            w = nxt[v][vb]
            e = self.edge_of[(v, w)]
            length = self.edges[e][2]
            if s <= length:
                return self._along(e, v, s)
            s -= length
            v = w
        # final leg from vb toward q
        s = min(s, db)
        a = self.edges[q.edge][0]
        return self.canonical(q.edge, s if vb == a else self.edges[q.edge][2] - s)

    def _sample(self, rng):
        if rng.random() < 0.05:
            return self._vertex_point(int(rng.integers(len(self.names))))
        e = int(np.searchsorted(self._cum, rng.random(), side="right"))
        e = min(e, len(self.edges) - 1)
        return self.canonical(e, float(rng.random()) * self.edges[e][2])

    def subtree_projection(self, vertices: Sequence[str]):
        """Metric projection onto the subtree spanned by full edges between ``vertices``."""
        vs = [self.index[v] for v in vertices]
        vset = set(vs)
        inside = {i for i, (a, b, _) in enumerate(self.edges) if a in vset and b in vset}
        vpts = [self._vertex_point(v) for v in vs]

        def project(p: TreePoint) -> TreePoint:
            if p.edge in inside:
                return p
            a, b, length = self.edges[p.edge]
            if (p.offset == 0.0 and a in vset) or (p.offset == length and b in vset):
                return p
            return min(vpts, key=lambda v: self._dist(p, v))

        def contains(p: TreePoint, tol: float = TOL_EXACT) -> bool:
            return self._dist(p, project(p)) <= tol

        return project, contains


def parse_tree_edges(text: str) -> list[tuple[str, str, float]]:
    """Parse ``vertex vertex length`` lines; ``#`` starts a comment."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise UsageError(f"line {lineno}: expected 'vertex vertex length', got {raw!r}")
        try:
            length = float(parts[2])
        except ValueError as exc:
            raise UsageError(f"line {lineno}: bad length {parts[2]!r}") from exc
        edges.append((parts[0], parts[1], length))
    return edges


DEFAULT_TREE_EDGES = (
    ("A", "B", 1.0),
    ("B", "C", 2.0),
    ("B", "D", 0.5),
    ("D", "E", 1.5),
    ("D", "F", 1.0),
    ("A", "G", 0.7),
    ("F", "H", 0.8),
)


@dataclass
class ModelParams:
    kind: str
    n: int = 2
    p: float = 2.0
    edges: Sequence[tuple[str, str, float]] | None = None
    r_sample: float | None = None


@dataclass
class ModelSpace:
    params: ModelParams
    space: GeodesicSpace
    eta: UCModulus

    @property
    def kind(self) -> str:
        return self.params.kind

    @property
    def is_cat0(self) -> bool:
        return self.kind in ("euclidean", "poincare", "tree") or (self.kind == "lp" and self.params.p == 2)

    @property
    def tol(self) -> float:
        return self.space.tol


def instantiate_model(params: ModelParams) -> ModelSpace:
    kind = params.kind
    if kind not in KINDS:
        raise UsageError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if kind in ("euclidean", "lp") and (int(params.n) != params.n or params.n < 1):
        raise UsageError(f"dimension n must be an integer >= 1, got {params.n}")
    if params.r_sample is not None and not params.r_sample > 0:
        raise UsageError("r_sample must be positive")
    if kind == "euclidean":
        return ModelSpace(params, EuclideanSpace(params.n, params.r_sample or 2.0), cat0_modulus())
    if kind == "lp":
        if not params.p >= 2:
            raise UsageError(f"lp model requires p >= 2, got p={params.p}")
        return ModelSpace(params, LpSpace(params.n, params.p, params.r_sample or 2.0), clarkson_modulus(params.p))
    if kind == "poincare":
        return ModelSpace(params, PoincareDisk(params.r_sample or 0.9), cat0_modulus())
    edges = params.edges if params.edges is not None else DEFAULT_TREE_EDGES
    return ModelSpace(params, MetricTree(list(edges)), cat0_modulus())


def load_tree(path: str | Path) -> list[tuple[str, str, float]]:
    return parse_tree_edges(Path(path).read_text())


def check_cat0(model: ModelSpace, seed: int, trials: int, tol: float | None = None) -> AxiomReport:
    """Randomized check of the CAT(0) midpoint inequality."""
    if not model.is_cat0:
        raise UsageError(f"{model.space.name} is not a CAT(0) space; the midpoint inequality does not apply")
    space = model.space
    tol = space.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    rep = AxiomReport("cat0", trials, tol)
    d = space.dist
    js = space.to_json
    for _ in range(trials):
        a, x, y = space.sample(rng), space.sample(rng), space.sample(rng)
        if rng.random() < 0.01:
            y = x
        lhs = d(space.midpoint(x, y), a) ** 2
        rhs = 0.5 * d(x, a) ** 2 + 0.5 * d(y, a) ** 2 - 0.25 * d(x, y) ** 2
        rep.record(lhs - rhs, lhs, rhs, lambda: {"a": js(a), "x": js(x), "y": js(y)})
    return rep
