"""Counter functions and metastability bounds for real sequences.

A counter function ``g`` stands for the adversary in the metastable
Cauchy statement: find ``N`` such that the sequence oscillates by at
most ``eps`` on ``[N, N + g(N)]``.  Bounds on ``N`` are iterates of
``g~(n) = n + g(n)`` or of its running-max version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .space import UsageError

INDEX_CAP = 2**24


class InputError(ValueError):
    """A sequence or trace violates the preconditions of a verifier."""


class CounterFn:
    """A total function ``N -> N`` with cached running maxima.

    ``const`` marks constant functions, ``nondecreasing`` lets the
    running max short-circuit to ``g`` itself, and ``gmax`` supplies a
    closed form for the running max when neither applies.
    """

    def __init__(self, g: Callable[[int], int], name: str = "g", *, const: int | None = None,
                 nondecreasing: bool = False, gmax: Callable[[int], int] | None = None):
        self.g = g
        self.name = name
        self.const = const
        self.nondecreasing = nondecreasing or const is not None
        self._gmax = gmax
        self._prefix: list[int] = []

    def __call__(self, n: int) -> int:
        return self.g(n)

    def tilde(self, n: int) -> int:
        return n + self.g(n)

    def running_max(self, n: int) -> int:
        if self.nondecreasing:
            return self.g(n)
        if self._gmax is not None:
            return self._gmax(n)
        if n > INDEX_CAP:
            raise UsageError(f"running max of {self.name} at {n} exceeds the scan cap")
        pre = self._prefix
        while len(pre) <= n:
            v = self.g(len(pre))
            pre.append(v if not pre or v > pre[-1] else pre[-1])
        return pre[n]

    @property
    def M(self) -> "CounterFn":
        """The running max ``g^M(n) = max_{i <= n} g(i)`` as a counter function."""
        if self.nondecreasing:
            return self
        return CounterFn(self.running_max, self.name + "^M", nondecreasing=True)

    def __repr__(self) -> str:
        return f"CounterFn({self.name})"


def counter_combinators(g: CounterFn):
    """Return ``(tilde, M, iterate)`` for ``g``."""
    return g.tilde, g.M, iterate


def iterate(f: Callable[[int], int], k: int, n0: int) -> int:
    """``f`` applied ``k`` times to ``n0``."""
    v = n0
    for _ in range(k):
        v = f(v)
    return v


def tilde_iterate(g: CounterFn, k: int, n0: int, ceiling: int | None = INDEX_CAP) -> tuple[int, bool]:
    """``g~^(k)(n0)``, stopping early once the value passes ``ceiling``.

    Returns ``(value, exact)``.  When ``exact`` is false the value is a
    lower bound on the true iterate (``g~`` is inflationary).
    """
    if g.const is not None:
        return n0 + k * g.const, True
    v = n0
    for _ in range(k):
        w = v + g(v)
        if w == v:
            return v, True
        v = w
        if ceiling is not None and v > ceiling:
            return v, False
    return v, True


# ---------------------------------------------------------------------------
# counter-function test family


def g_const(c: int) -> CounterFn:
    return CounterFn(lambda n: c, f"const({c})", const=c)


def g_linear() -> CounterFn:
    return CounterFn(lambda n: n, "n", nondecreasing=True)


def g_exp(cap_log2: int = 20) -> CounterFn:
    return CounterFn(lambda n: 1 << min(n, cap_log2), f"2^n capped 2^{cap_log2}", nondecreasing=True)


def g_random(seed: int, high: int = 100, period: int = 4096) -> CounterFn:
    """Seeded pseudo-random ``g`` with values in ``[1, high]``, periodic in ``n``."""
    table = np.random.default_rng(seed).integers(1, high + 1, period)
    pre = np.maximum.accumulate(table)
    tl, pl, top = table.tolist(), pre.tolist(), int(pre[-1])
    return CounterFn(lambda n: tl[n % period], f"random(seed={seed},<= {high})",
                     gmax=lambda n: pl[n] if n < period else top)


def g_family(seed: int = 0) -> list[CounterFn]:
    return [g_const(1), g_const(10), g_linear(), g_exp(), g_random(seed)]


# ---------------------------------------------------------------------------
# sequences


@dataclass
class RealSeq:
    """A lazily evaluated real sequence with optional summable error sequence.

    ``batch`` maps an integer index array to values; it is used in
    preference to ``eval`` when present.  ``gamma_tail(eps)`` must satisfy
    ``sum_{i in [gamma_tail(eps), m)} delta_i <= eps`` for all ``m``.
    """

    eval: Callable[[int], float] | None = None
    descriptor: str = "a"
    b: float = 1.0
    batch: Callable[[np.ndarray], np.ndarray] | None = None
    error_batch: Callable[[np.ndarray], np.ndarray] | None = None
    gamma_tail: Callable[[float], int] | None = None
    B: float | None = None
    _cache: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def values(self, stop: int) -> np.ndarray:
        """``a_0 .. a_{stop-1}``."""
        have = len(self._cache)
        if stop > have:
            new = max(stop, 2 * have, 64)
            idx = np.arange(have, new)
            if self.batch is not None:
                ext = np.asarray(self.batch(idx), dtype=float)
            else:
                ext = np.array([self.eval(int(i)) for i in idx], dtype=float)
            self._cache = np.concatenate([self._cache, ext])
        return self._cache[:stop]

    def __call__(self, n: int) -> float:
        return float(self.values(n + 1)[n])

    def errors(self, stop: int) -> np.ndarray:
        if self.error_batch is None:
            return np.zeros(stop)
        return np.asarray(self.error_batch(np.arange(stop)), dtype=float)


def check_monotone_prefix(seq: RealSeq, stop: int, tol: float = 1e-12) -> None:
    a = seq.values(stop)
    if a.size and (a.min() < -tol or a.max() > seq.b + tol):
        raise InputError(f"{seq.descriptor}: values leave [0, {seq.b}] before index {stop}")
    if np.any(np.diff(a) > tol):
        n = int(np.argmax(np.diff(a) > tol))
        raise InputError(f"{seq.descriptor}: not nonincreasing at n={n}")


def check_quasi_monotone_prefix(seq: RealSeq, stop: int, tol: float = 1e-12) -> None:
    a = seq.values(stop)
    dl = seq.errors(stop)
    if a.size and (a.min() < -tol or a.max() > seq.b + tol):
        raise InputError(f"{seq.descriptor}: values leave [0, {seq.b}] before index {stop}")
    bad = np.diff(a) > dl[:-1] + tol
    if np.any(bad):
        n = int(np.argmax(bad))
        raise InputError(f"{seq.descriptor}: a_(n+1) > a_n + delta_n at n={n}")


def check_gamma_tail(seq: RealSeq, eps_grid=(1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6), horizon: int = 10**5) -> None:
    """Empirical validation of the tail-sum modulus."""
    dl = seq.errors(horizon)
    if np.any(dl < 0):
        raise InputError(f"{seq.descriptor}: negative error terms")
    cs = np.concatenate([[0.0], np.cumsum(dl)])
    if seq.B is not None and cs[-1] > seq.B + 1e-12:
        raise InputError(f"{seq.descriptor}: partial sums exceed B={seq.B}")
    for eps in eps_grid:
        k = seq.gamma_tail(eps)
        if k < horizon and cs[-1] - cs[k] > eps + 1e-15:
            raise InputError(f"{seq.descriptor}: gamma_tail({eps})={k} leaves tail {cs[-1] - cs[k]}")


@dataclass
class MetastabilityReport:
    eps: float
    g: str
    theoretical_bound: int
    bound_exact: bool
    found_N: int | None
    window: tuple[int, int] | None
    max_oscillation: float | None
    status: str  # "pass", "fail" or "inconclusive"
    lower: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "g": self.g,
            "theoretical_bound": str(self.theoretical_bound) if self.theoretical_bound > 2**53 else self.theoretical_bound,
            "bound_exact": self.bound_exact,
            "found_N": self.found_N,
            "window": list(self.window) if self.window else None,
            "max_oscillation": self.max_oscillation,
            "status": self.status,
            "note": self.note,
        }


def _window_ends(g: CounterFn, lo: int, hi: int) -> np.ndarray:
    return np.fromiter((n + g(n) for n in range(lo, hi)), dtype=np.int64, count=hi - lo)


def _search_monotone(seq: RealSeq, g: CounterFn, eps: float, start: int, bound: int, cap: int,
                     tol: float, chunk: int = 4096):
    """Least admissible ``N``, using ``osc = a_N - a_(N+g(N))`` (valid for monotone sequences)."""
    last = min(bound, cap)
    lo = start
    while lo <= last:
        hi = min(lo + chunk, last + 1)
        ends = _window_ends(g, lo, hi)
        over = np.nonzero(ends >= cap)[0]
        usable = int(over[0]) if over.size else hi - lo
        if usable:
            vals = seq.values(int(ends[:usable].max()) + 1)
            idx = np.arange(lo, lo + usable)
            osc = np.abs(vals[idx] - vals[ends[:usable]])
            ok = np.nonzero(osc <= eps + tol)[0]
            if ok.size:
                i = int(ok[0])
                return lo + i, int(ends[i]), float(osc[i]), "pass"
        if over.size:
            return None, None, None, "inconclusive"
        lo = hi
    return None, None, None, ("inconclusive" if bound > cap else "fail")


class _RangeOsc:
    """Block decomposition for repeated ``max - min`` queries on a fixed array."""

    BLOCK = 4096

    def __init__(self, vals: np.ndarray):
        self.vals = vals
        nb = len(vals) // self.BLOCK
        blocks = vals[: nb * self.BLOCK].reshape(nb, self.BLOCK) if nb else np.empty((0, self.BLOCK))
        self.bmax = blocks.max(axis=1) if nb else np.empty(0)
        self.bmin = blocks.min(axis=1) if nb else np.empty(0)

    def __call__(self, n: int, m: int) -> float:
        v, B = self.vals, self.BLOCK
        if m - n < 2 * B:
            w = v[n:m + 1]
            return float(w.max() - w.min())
        b0, b1 = -(-n // B), (m + 1) // B
        parts_max = [self.bmax[b0:b1].max(), v[n:b0 * B].max(initial=-np.inf), v[b1 * B:m + 1].max(initial=-np.inf)]
        parts_min = [self.bmin[b0:b1].min(), v[n:b0 * B].min(initial=np.inf), v[b1 * B:m + 1].min(initial=np.inf)]
        return float(max(parts_max) - min(parts_min))


def _search_general(seq: RealSeq, g: CounterFn, eps: float, start: int, bound: int, cap: int, tol: float):
    last = min(bound, cap)
    rq = None
    N = start
    while N <= last:
        end = N + g(N)
        if end >= cap:
            return None, None, None, "inconclusive"
        vals = seq.values(end + 1)
        # endpoint gap is a lower bound on the window oscillation
        if abs(vals[N] - vals[end]) <= eps + tol:
            if rq is None or len(rq.vals) <= end:
                rq = _RangeOsc(seq.values(max(end + 1, 2 * len(vals))))
            o = rq(N, end)
            if o <= eps + tol:
                return N, end, o, "pass"
        N += 1
    return None, None, None, ("inconclusive" if bound > cap else "fail")


def mono_metastability(seq: RealSeq, eps: float, g: CounterFn, cap: int = INDEX_CAP,
                       tol: float = 1e-12) -> MetastabilityReport:
    """Find the metastability witness of a nonincreasing sequence in ``[0, b]``."""
    if not eps > 0:
        raise UsageError("eps must be positive")
    k = math.ceil(seq.b / eps)
    bound, exact = tilde_iterate(g, k, 0, cap)
    N, end, o, status = _search_monotone(seq, g, eps, 0, bound, cap, tol)
    visited = (end + 1) if end is not None else min(bound, cap) + 1
    check_monotone_prefix(seq, min(visited, cap))
    return MetastabilityReport(eps, g.name, bound, exact, N, (N, end) if N is not None else None, o, status)


def summable_metastability(seq: RealSeq, eps: float, g: CounterFn, cap: int = INDEX_CAP,
                           tol: float = 1e-12) -> MetastabilityReport:
    """Metastability witness for ``a_(n+1) <= a_n + delta_n`` with summable errors."""
    if not eps > 0:
        raise UsageError("eps must be positive")
    if seq.gamma_tail is None:
        raise UsageError("summable_metastability needs seq.gamma_tail")
    start = int(seq.gamma_tail(eps / 4))
    k = math.ceil(2 * seq.b / eps)
    bound, exact = tilde_iterate(g.M, k, start, cap)
    N, end, o, status = _search_general(seq, g, eps, start, bound, cap, tol)
    visited = (end + 1) if end is not None else min(bound, cap) + 1
    check_quasi_monotone_prefix(seq, min(visited, cap))
    return MetastabilityReport(eps, g.name, bound, exact, N, (N, end) if N is not None else None, o, status,
                               lower=start)


def g_star(seq: RealSeq, g: CounterFn) -> CounterFn:
    """``n -> argmax_{q <= g(n)} |a_n - a_(n+q)|`` (first maximizer)."""

    def f(n: int) -> int:
        w = seq.values(n + g(n) + 1)[n:]
        return int(np.argmax(np.abs(w - w[0])))

    return CounterFn(f, f"{g.name}*")


# ---------------------------------------------------------------------------
# sequence test families


def _hash01(n: np.ndarray, salt: float = 0.0) -> np.ndarray:
    x = np.sin(n * 12.9898 + salt * 78.233) * 43758.5453
    return x - np.floor(x)


def monotone_family() -> list[RealSeq]:
    seqs = [
        RealSeq(descriptor="2^-n", b=1.0, batch=lambda n: 2.0 ** -n.astype(float)),
        RealSeq(descriptor="1/(n+1)", b=1.0, batch=lambda n: 1.0 / (n + 1.0)),
        RealSeq(descriptor="1/log2(n+2)", b=1.0, batch=lambda n: 1.0 / np.log2(n + 2.0)),
        RealSeq(descriptor="const 0.4", b=1.0, batch=lambda n: np.full(n.shape, 0.4)),
        RealSeq(descriptor="staircase", b=1.0,
                batch=lambda n: np.maximum(0.0, 1.0 - 0.15 * np.floor(np.log2(n + 1.0)))),
    ]
    for K in (1, 7, 50):
        seqs.append(RealSeq(descriptor=f"step(K={K})", b=1.0,
                            batch=lambda n, K=K: np.where(n < K, 1.0, 0.0)))
    return seqs


def step_sequence(K: int, b: float = 1.0) -> RealSeq:
    return RealSeq(descriptor=f"step(K={K})", b=b, batch=lambda n: np.where(n < K, b, 0.0))


def _quasi(descr: str, mono, err, wobble, gamma_tail, B: float) -> RealSeq:
    # a_n = m_n + delta_n * w_n with m nonincreasing, delta nonincreasing, w in [0, 1]
    return RealSeq(descriptor=descr, b=1.0,
                   batch=lambda n: mono(n) + err(n) * wobble(n),
                   error_batch=err, gamma_tail=gamma_tail, B=B)


def quasi_monotone_family() -> list[RealSeq]:
    monos = {
        "2^-n": lambda n: 0.5 * 2.0 ** -n.astype(float),
        "1/(n+1)": lambda n: 0.5 / (n + 1.0),
        "const": lambda n: np.full(n.shape, 0.3),
    }
    errs = {
        "4^-n": (lambda n: 0.5 * 4.0 ** -n.astype(float),
                 lambda e: max(0, math.ceil(0.5 * math.log2(1.0 / e))), 2.0 / 3.0),
        "1/(n+1)^2": (lambda n: 0.5 / (n + 1.0) ** 2, lambda e: math.ceil(0.5 / e), 0.5 * math.pi**2 / 6),
    }
    wobbles = {
        "alt": lambda n: (n % 2).astype(float),
        "hash": lambda n: _hash01(n.astype(float)),
    }
    out = []
    for mn, m in monos.items():
        for en, (e, gt, B) in errs.items():
            for wn, w in wobbles.items():
                out.append(_quasi(f"{mn}+{en}*{wn}", m, e, w, gt, B))
    return out


def as_summable(seq: RealSeq) -> RealSeq:
    """The same sequence viewed with identically zero errors."""
    return RealSeq(eval=seq.eval, descriptor=seq.descriptor + "[delta=0]", b=seq.b, batch=seq.batch,
                   error_batch=lambda n: np.zeros(n.shape), gamma_tail=lambda e: 0, B=0.0)
