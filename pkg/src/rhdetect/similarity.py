"""Graph similarity measures: Relative Hausdorff (smooth and discrete),
Kolmogorov-Smirnov, and edit distance under the identity alignment.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Ccdh, Graph, ccdh_of

__all__ = [
    "RhResult",
    "KsTestResult",
    "rh_directional_smooth",
    "rh_directional_discrete",
    "rh_smooth",
    "rh_discrete",
    "rh",
    "ks_distance",
    "ks_distance_ccdh",
    "ks_two_sample",
    "ks_threshold",
    "edit_distance_aligned",
    "pairwise_rh",
    "write_matrix_csv",
    "read_matrix_csv",
]


@dataclass(frozen=True)
class RhResult:
    forward: float
    backward: float

    @property
    def value(self) -> float:
        return max(self.forward, self.backward)

    def __float__(self) -> float:
        return self.value


def _as_ccdh(x) -> Ccdh:
    return ccdh_of(x) if isinstance(x, Graph) else x


def _padded_curve(f: Ccdh, g: Ccdh) -> tuple[np.ndarray, int]:
    # gv[k] = G(k) for k = 1..K, zero past Delta(G); gv[0] is unused padding
    top = max(len(f), len(g) + 1)
    gv = np.zeros(top + 1, dtype=np.int64)
    gv[1 : len(g) + 1] = g.counts
    return gv, top


def rh_directional_smooth(f: Ccdh | Graph, g: Ccdh | Graph) -> float:
    """Smallest eps such that every point ``(d, F(d))`` lies within an
    eps-relative box of the piecewise-linear curve of ``g``.

    For each ``d`` the best ``d'`` sits where the degree error ``|d - d'|/d``
    meets the count error ``|F(d) - G(d')|/F(d)``; since ``G`` is monotone the
    crossing is found by bisection over integer nodes (all comparisons on
    integers) and then solved exactly on the bracketing segment.
    """
    f = _as_ccdh(f)
    g = _as_ccdh(g)
    if not f:
        raise ValueError("directional RH needs a nonempty source ccdh")
    gv, top = _padded_curve(f, g)
    d = np.arange(1, len(f) + 1, dtype=np.int64)
    fd = f.counts
    gd = gv[d]
    eps = np.zeros(len(d), dtype=float)

    # G(d) > F(d): move right until (a-d)/d >= (G(a)-F(d))/F(d)
    right = np.flatnonzero(gd > fd)
    if right.size:
        dr, fr = d[right], fd[right]
        lo = dr.copy()
        hi = np.full_like(dr, top)
        while True:
            active = hi - lo > 1
            if not active.any():
                break
            mid = (lo + hi) // 2
            ok = (mid - dr) * fr >= (gv[mid] - fr) * dr
            hi = np.where(active & ok, mid, hi)
            lo = np.where(active & ~ok, mid, lo)
        s = (gv[hi] - gv[lo]).astype(float)
        g0 = gv[lo].astype(float)
        eps[right] = (g0 - fr + s * (dr - lo)) / (fr - s * dr)

    # G(d) < F(d): move left until (d-a)/d >= (F(d)-G(a))/F(d), stopping at d' = 1
    left = np.flatnonzero(gd < fd)
    if left.size:
        dl, fl = d[left], fd[left]
        at_one = (dl - 1) * fl >= (fl - gv[1]) * dl
        out = np.empty(len(dl), dtype=float)
        stuck = ~at_one
        out[stuck] = (fl[stuck] - gv[1]) / fl[stuck]
        if at_one.any():
            dd, ff = dl[at_one], fl[at_one]
            lo = np.ones_like(dd)
            hi = dd.copy()
            while True:
                active = hi - lo > 1
                if not active.any():
                    break
                mid = (lo + hi) // 2
                ok = (dd - mid) * ff >= (ff - gv[mid]) * dd
                lo = np.where(active & ok, mid, lo)
                hi = np.where(active & ~ok, mid, hi)
            s = (gv[lo + 1] - gv[lo]).astype(float)
            g0 = gv[lo].astype(float)
            out[at_one] = (ff - g0 - s * (dd - lo)) / (ff - s * dd)
        eps[left] = out

    return float(max(eps.max(), 0.0))


def rh_directional_discrete(f: Ccdh | Graph, g: Ccdh | Graph) -> float:
    """Discrete directional RH: ``d'`` restricted to ``{1, ..., Delta(G)+1}``.

    Exhaustive over candidates, chunked over ``d`` to bound memory.
    """
    f = _as_ccdh(f)
    g = _as_ccdh(g)
    if not f:
        raise ValueError("directional RH needs a nonempty source ccdh")
    cand = np.arange(1, len(g) + 2, dtype=float)
    gvals = np.concatenate([g.counts.astype(float), [0.0]])
    d_all = np.arange(1, len(f) + 1, dtype=float)
    f_all = f.counts.astype(float)
    worst = 0.0
    chunk = max(1, 2_000_000 // len(cand))
    for start in range(0, len(d_all), chunk):
        d = d_all[start : start + chunk, None]
        fd = f_all[start : start + chunk, None]
        err = np.maximum(np.abs(d - cand) / d, np.abs(fd - gvals) / fd)
        worst = max(worst, float(err.min(axis=1).max()))
    return worst


def _symmetric(f, g, directional) -> RhResult:
    f = _as_ccdh(f)
    g = _as_ccdh(g)
    if not f and not g:
        return RhResult(0.0, 0.0)
    # one side empty: the nonempty side can only match the zero curve, eps = 1
    if not f:
        return RhResult(0.0, 1.0)
    if not g:
        return RhResult(1.0, 0.0)
    return RhResult(directional(f, g), directional(g, f))


def rh_smooth(f: Ccdh | Graph, g: Ccdh | Graph) -> RhResult:
    return _symmetric(f, g, rh_directional_smooth)


def rh_discrete(f: Ccdh | Graph, g: Ccdh | Graph) -> RhResult:
    return _symmetric(f, g, rh_directional_discrete)


def rh(f: Ccdh | Graph, g: Ccdh | Graph) -> float:
    """Smooth RH distance as a plain float."""
    return rh_smooth(f, g).value


def ks_distance_ccdh(f: Ccdh, g: Ccdh, n_f: int, n_g: int) -> float:
    """``max_x |F(x)/n_f - G(x)/n_g|`` over integer ``x >= 1``."""
    if not f or not g:
        raise ValueError("KS distance needs nonempty ccdhs")
    if n_f <= 0 or n_g <= 0:
        raise ValueError("vertex counts must be positive")
    top = max(len(f), len(g))
    fv = np.zeros(top)
    gv = np.zeros(top)
    fv[: len(f)] = f.counts / n_f
    gv[: len(g)] = g.counts / n_g
    return float(np.abs(fv - gv).max())


def ks_distance(f: Graph, g: Graph) -> float:
    """KS distance between degree distributions, normalized by vertex counts."""
    return ks_distance_ccdh(ccdh_of(f), ccdh_of(g), f.n, g.n)


def ks_threshold(alpha: float, n: int, m: int) -> float:
    """Rejection threshold ``c(alpha) * sqrt((n+m)/(n m))``, ``c = sqrt(-log(alpha)/2)``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha)) * math.sqrt((n + m) / (n * m))


def ks_pvalue(statistic: float, n: int, m: int) -> float:
    p = math.exp(-2.0 * statistic**2 * n * m / (n + m))
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class KsTestResult:
    statistic: float
    p_value: float
    n: int
    m: int

    def threshold(self, alpha: float) -> float:
        return ks_threshold(alpha, self.n, self.m)

    def rejects(self, alpha: float) -> bool:
        return self.statistic > self.threshold(alpha)


def ks_two_sample(a, b) -> KsTestResult:
    """Two-sample KS test; the p-value is ``exp(-2 D^2 n m / (n + m))``
    with no small-sample or ties correction."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("KS test needs two nonempty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    stat = float(np.abs(fa - fb).max())
    return KsTestResult(stat, ks_pvalue(stat, a.size, b.size), int(a.size), int(b.size))


def edit_distance_aligned(g1: Graph, g2: Graph) -> int:
    """Number of vertex pairs that are an edge in exactly one of the graphs."""
    if g1.n != g2.n:
        raise ValueError(f"graphs must share a vertex set (n={g1.n} vs n={g2.n})")
    a, b = g1.pair_indices, g2.pair_indices
    common = np.intersect1d(a, b, assume_unique=True).size
    return int(a.size + b.size - 2 * common)


def pairwise_rh(items: Sequence[Ccdh | Graph]) -> np.ndarray:
    """Symmetric matrix of smooth RH distances with a zero diagonal."""
    ccdhs = [_as_ccdh(x) for x in items]
    k = len(ccdhs)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = rh_smooth(ccdhs[i], ccdhs[j]).value
    return out


def write_matrix_csv(matrix: np.ndarray, labels: Sequence, path: str | Path) -> None:
    """Square matrix as CSV, first row and column holding the labels."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *labels])
        for label, row in zip(labels, matrix):
            w.writerow([label, *(repr(float(x)) for x in row)])


def read_matrix_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    matrix = np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float)
    return labels, matrix
