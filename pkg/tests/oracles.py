"""Independent reference implementations used only by the tests."""

import math

import numpy as np


def ccdh_value(counts, x):
    """Piecewise-linear ccdh built from scratch (not via smooth_eval)."""
    counts = list(counts)
    if x >= len(counts) + 1:
        return 0.0
    k = int(math.floor(x))
    lo = counts[k - 1]
    hi = counts[k] if k < len(counts) else 0
    frac = x - k
    return (1 - frac) * lo + frac * hi


def _box_hits_curve(counts, d, fd, eps):
    # does the box [d(1-eps), d(1+eps)] x [fd(1-eps), fd(1+eps)] touch the curve on x >= 1?
    x_lo, x_hi = max(1.0, d * (1 - eps)), d * (1 + eps)
    y_lo, y_hi = fd * (1 - eps), fd * (1 + eps)
    if x_lo > x_hi:
        return False
    nodes = list(counts) + [0]
    for a in range(1, len(nodes) + 1):
        seg_lo, seg_hi = float(a), float(a + 1) if a < len(nodes) else math.inf
        lo, hi = max(x_lo, seg_lo), min(x_hi, seg_hi)
        if lo > hi:
            continue
        ys = [ccdh_value(counts, lo), ccdh_value(counts, hi) if hi < math.inf else 0.0]
        if max(ys) >= y_lo and min(ys) <= y_hi:
            return True
    return False


def rh_directional_bisect(f_counts, g_counts, iters=80):
    """Directional smooth RH by bisection on eps with an exact box/segment test."""
    worst = 0.0
    for d, fd in enumerate(f_counts, start=1):
        lo, hi = 0.0, 1.0
        while not _box_hits_curve(g_counts, d, fd, hi):
            hi *= 2
        if _box_hits_curve(g_counts, d, fd, 0.0):
            continue
        for _ in range(iters):
            mid = (lo + hi) / 2
            if _box_hits_curve(g_counts, d, fd, mid):
                hi = mid
            else:
                lo = mid
        worst = max(worst, hi)
    return worst


def rh_directional_grid(f_counts, g_counts, step=1e-4):
    """Dense-grid approximation over d' in [1, Delta(G) + 1 + max(Delta(F))]."""
    top = max(len(f_counts), len(g_counts) + 1) + 1
    xs = np.arange(1.0, top + step, step)
    nodes = np.concatenate([np.asarray(g_counts, float), [0.0]])
    ys = np.interp(xs, np.arange(1, len(nodes) + 1), nodes, right=0.0)
    worst = 0.0
    for d, fd in enumerate(f_counts, start=1):
        err = np.maximum(np.abs(d - xs) / d, np.abs(fd - ys) / fd)
        worst = max(worst, float(err.min()))
    return worst


def rh_bisect(f_counts, g_counts):
    if not len(f_counts) and not len(g_counts):
        return 0.0
    if not len(f_counts) or not len(g_counts):
        return 1.0
    return max(rh_directional_bisect(f_counts, g_counts), rh_directional_bisect(g_counts, f_counts))


def random_graph_edges(rng, n, p):
    return [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
