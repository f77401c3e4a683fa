"""Chung-Lu sampling, HLM evolution, calibrated weight families and the two
planted anomalies (scan, lateral movement).

All stochastic functions take an explicit ``numpy.random.Generator``.
Pair-level state is handled as flat arrays over the upper triangle, in the
order given by :func:`rhdetect.graph.pair_index`.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)

__all__ = [
    "WeightVector",
    "HlmParams",
    "Calibration",
    "CalibrationError",
    "chung_lu_sample",
    "hlm_step",
    "hlm_step_presence",
    "hlm_step_timevarying",
    "presence_of",
    "graph_from_presence",
    "make_power_law_weights",
    "make_bump_power_law_weights",
    "calibrate_weights",
    "family_defaults",
    "make_weights",
    "sample_discrete_power_law",
    "inject_scan",
    "inject_lateral",
    "prufer_decode",
    "random_prufer_tree",
    "DEFAULT_ALPHA_GRID",
    "POWER_LAW_DEFAULTS",
    "BUMP_POWER_LAW_DEFAULTS",
]

# 21 evenly spaced evolution rates; contains 0.23 and 0.24
DEFAULT_ALPHA_GRID = tuple(round(0.05 + 0.01 * i, 2) for i in range(21))

POWER_LAW_DEFAULTS = dict(n=5000, exponent=3.5, target_edges=4742, target_max_degree=961)
BUMP_POWER_LAW_DEFAULTS = dict(
    n=5000,
    exponent=3.5,
    bump_mean=130.0,
    bump_fraction=0.005,
    target_edges=6067,
    target_max_degree=327,
)


def family_defaults(family: str, n: int = 5000) -> dict:
    """Full-scale targets, with edge count, maximum degree and bump
    centre scaled by ``n / 5000`` for reduced-scale runs."""
    if family == "power_law":
        base = dict(POWER_LAW_DEFAULTS)
    elif family == "bump_power_law":
        base = dict(BUMP_POWER_LAW_DEFAULTS)
    else:
        raise ValueError(f"unknown weight family {family!r}")
    f = n / base["n"]
    base["n"] = n
    for key in ("target_edges", "target_max_degree", "bump_mean"):
        if key in base:
            base[key] = base[key] * f
    return base


def make_weights(family: str, seed: int = 0, **params) -> WeightVector:
    if family == "power_law":
        return make_power_law_weights(seed=seed, **params)
    if family == "bump_power_law":
        return make_bump_power_law_weights(seed=seed, **params)
    raise ValueError(f"unknown weight family {family!r}")


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Calibration:
    """``w = scale * raw`` with the top raw weight replaced by ``top_raw``."""

    scale: float
    top_raw: float
    expected_edges: float
    max_expected_degree: float


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray
    calibration: Calibration | None = field(default=None, compare=False)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return len(self.w)

    @cached_property
    def rho(self) -> float:
        return float(self.w.sum())

    def probability(self, u: int, v: int) -> float:
        if self.rho == 0:
            return 0.0
        return min(1.0, self.w[u] * self.w[v] / self.rho)

    @cached_property
    def pair_probabilities(self) -> np.ndarray:
        """``min(1, w_u w_v / rho)`` for every pair ``u < v``, flattened."""
        n = self.n
        if self.rho == 0 or n < 2:
            return np.zeros(n * (n - 1) // 2)
        iu, ju = np.triu_indices(n, 1)
        p = np.minimum(1.0, self.w[iu] * self.w[ju] / self.rho)
        p.setflags(write=False)
        return p

    def expected_degrees(self) -> np.ndarray:
        return _expected_degrees(self.w)

    def expected_edges(self) -> float:
        return float(self.expected_degrees().sum() / 2)


def _expected_degrees(w: np.ndarray) -> np.ndarray:
    """Sum over v != u of min(1, w_u w_v / rho), in O(n log n)."""
    rho = w.sum()
    if rho == 0:
        return np.zeros_like(w)
    ws = np.sort(w)
    prefix = np.concatenate([[0.0], np.cumsum(ws)])
    with np.errstate(divide="ignore"):
        thresh = np.where(w > 0, rho / np.where(w > 0, w, 1.0), np.inf)
    k = np.searchsorted(ws, thresh, side="left")
    capped = len(w) - k
    deg = capped + w / rho * prefix[k]
    deg -= np.minimum(1.0, w * w / rho)
    return deg


@dataclass(frozen=True, eq=False)
class HlmParams:
    """Evolution rate ``alpha`` and an optional explicit edge-probability
    matrix that overrides the Chung-Lu probabilities."""

    alpha: float
    probability_matrix: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        P = self.probability_matrix
        if P is not None:
            P = np.asarray(P, dtype=float)
            if P.ndim != 2 or P.shape[0] != P.shape[1]:
                raise ValueError("probability matrix must be square")
            if not np.allclose(P, P.T) or np.any(np.diag(P) != 0):
                raise ValueError("probability matrix must be symmetric with zero diagonal")
            if P.min() < 0 or P.max() > 1:
                raise ValueError("probabilities must lie in [0, 1]")
            object.__setattr__(self, "probability_matrix", P)

    def pair_probabilities(self, w: WeightVector | None) -> np.ndarray:
        if self.probability_matrix is not None:
            return _flatten_matrix(self.probability_matrix)
        if w is None:
            raise ValueError("need weights or a probability matrix")
        return w.pair_probabilities


def _flatten_matrix(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return P[np.triu_indices(P.shape[0], 1)]


def presence_of(g: Graph) -> np.ndarray:
    present = np.zeros(g.n * (g.n - 1) // 2, dtype=bool)
    present[g.pair_indices] = True
    return present


def graph_from_presence(n: int, present: np.ndarray) -> Graph:
    return Graph.from_pair_indices(n, np.flatnonzero(present))


def chung_lu_sample(w: WeightVector, rng: np.random.Generator) -> Graph:
    p = w.pair_probabilities
    return graph_from_presence(w.n, rng.random(p.shape) < p)


def hlm_step_presence(present: np.ndarray, alpha: float, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One HLM transition on presence arrays; leading axes are independent chains.

    Each pair is masked with probability ``alpha``; masked pairs are redrawn
    with probability ``p``, the rest are copied.
    """
    out = np.array(present, dtype=bool, copy=True)
    if alpha == 0:
        return out
    mask = rng.random(out.shape) < alpha
    idx = np.nonzero(mask)
    pp = np.broadcast_to(p, out.shape)[idx]
    out[idx] = rng.random(pp.shape) < pp
    return out


def hlm_step(g: Graph, params: HlmParams, w: WeightVector | None, rng: np.random.Generator) -> Graph:
    p = params.pair_probabilities(w)
    if p.size != g.n * (g.n - 1) // 2:
        raise ValueError("graph and model have different vertex sets")
    return graph_from_presence(g.n, hlm_step_presence(presence_of(g), params.alpha, p, rng))


def hlm_step_timevarying(g: Graph, alpha: float, P_next, rng: np.random.Generator) -> Graph:
    """HLM transition whose masked pairs are redrawn from ``P_next``."""
    return hlm_step(g, HlmParams(alpha, P_next), None, rng)


# -- weight families -------------------------------------------------------


def sample_discrete_power_law(size: int, exponent: float, k_max: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from ``P(k) ~ k**-exponent`` on ``k = 1..k_max``."""
    ks = np.arange(1, max(k_max, 1) + 1, dtype=float)
    pmf = ks**-exponent
    cdf = np.cumsum(pmf / pmf.sum())
    cdf[-1] = 1.0
    return ks[np.searchsorted(cdf, rng.random(size), side="right")]


def _scale_for_edges(raw: np.ndarray, target_edges: float, tol: float = 1e-6) -> float:
    # expected edge count is increasing in a common multiplicative scale
    lo, hi = 0.0, 1.0
    while _expected_degrees(hi * raw).sum() / 2 < target_edges:
        hi *= 2
        if hi > 1e12:
            raise CalibrationError("edge target unreachable")
    for _ in range(200):
        mid = (lo + hi) / 2
        if _expected_degrees(mid * raw).sum() / 2 < target_edges:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return (lo + hi) / 2


def calibrate_weights(
    raw: np.ndarray,
    target_edges: float,
    target_max_degree: float,
    edge_tol: float = 0.02,
    degree_tol: float = 0.05,
    max_iter: int = 100,
) -> WeightVector:
    """Fit sampled degrees to an expected edge count and a maximum expected degree.

    Two parameters: a common scale (pins the edge count, found by bisection)
    and the raw weight of the top vertex (stretched or shrunk by an outer
    log-space bisection until its expected degree hits the target). Raises
    :class:`CalibrationError` when the targets are not met within tolerance.
    """
    raw = np.asarray(raw, dtype=float).copy()
    hub = int(np.argmax(raw))
    others = np.delete(raw, hub)
    floor = others.max() if others.size else raw[hub]

    def fit(top):
        r = raw.copy()
        r[hub] = top
        scale = _scale_for_edges(r, target_edges)
        return r, scale, _expected_degrees(scale * r)

    lo, hi = floor, max(raw[hub], floor)
    r, scale, deg = fit(hi)
    if deg.max() > target_max_degree:
        r, scale, deg = fit(lo)
        if deg.max() > target_max_degree * (1 + degree_tol):
            raise CalibrationError("maximum degree target too small for this sample")
        hi = raw[hub]
    else:
        while deg.max() < target_max_degree:
            lo, hi = hi, hi * 2
            if hi > 1e9 * floor:
                raise CalibrationError("maximum degree target unreachable")
            r, scale, deg = fit(hi)
    for _ in range(max_iter):
        if abs(deg.max() - target_max_degree) <= 0.2 * degree_tol * target_max_degree:
            break
        mid = np.sqrt(lo * hi)
        r, scale, deg = fit(mid)
        if deg.max() < target_max_degree:
            lo = mid
        else:
            hi = mid
    edges = deg.sum() / 2
    top = deg.max()
    if abs(edges - target_edges) > edge_tol * target_edges or abs(top - target_max_degree) > degree_tol * target_max_degree:
        raise CalibrationError(
            f"calibration missed targets: edges {edges:.1f} (want {target_edges}), "
            f"max degree {top:.1f} (want {target_max_degree})"
        )
    log.debug("calibrated scale=%.4g top=%.4g edges=%.1f max_deg=%.1f", scale, r[hub], edges, top)
    return WeightVector(scale * r, Calibration(float(scale), float(r[hub]), float(edges), float(top)))


def make_power_law_weights(
    n: int,
    exponent: float = 3.5,
    target_edges: float = 4742,
    target_max_degree: float = 961,
    seed: int = 0,
) -> WeightVector:
    if n < 1:
        raise ValueError("need at least one vertex")
    if exponent <= 2:
        raise ValueError("exponent must exceed 2")
    rng = np.random.default_rng(seed)
    raw = sample_discrete_power_law(n, exponent, n - 1, rng)
    if n == 1:
        return WeightVector(raw)
    return calibrate_weights(raw, target_edges, target_max_degree)


def make_bump_power_law_weights(
    n: int,
    exponent: float = 3.5,
    bump_mean: float = 130.0,
    bump_fraction: float = 0.005,
    target_edges: float = 6067,
    target_max_degree: float = 327,
    seed: int = 0,
) -> WeightVector:
    """Power-law "spokes" plus a fraction of binomially distributed "hubs"
    centred at ``bump_mean`` (in raw-degree units, before calibration)."""
    if n < 1:
        raise ValueError("need at least one vertex")
    if exponent <= 2:
        raise ValueError("exponent must exceed 2")
    if not 0 <= bump_fraction < 1:
        raise ValueError("bump_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    hubs = int(round(bump_fraction * n))
    spokes = sample_discrete_power_law(n - hubs, exponent, n - 1, rng)
    trials = int(round(2 * bump_mean))
    bump = np.maximum(rng.binomial(trials, 0.5, size=hubs).astype(float), 1.0)
    raw = np.concatenate([spokes, bump])
    if n == 1:
        return WeightVector(raw)
    return calibrate_weights(raw, target_edges, target_max_degree)


# -- anomalies -------------------------------------------------------------


def inject_scan(g: Graph, budget: int, rng: np.random.Generator, max_retries: int = 1000) -> Graph:
    """Add ``budget`` new edges from three random sources to uniform targets.

    Targets colliding with existing (or already added) edges are redrawn;
    after ``max_retries`` consecutive collisions the edge is drawn uniformly
    from the remaining free pairs, so the budget is always exact.
    """
    n = g.n
    if n < 4:
        raise ValueError("scan needs at least 4 vertices")
    if budget < 1:
        raise ValueError("budget must be positive")
    sources = rng.choice(n, size=3, replace=False)
    free = set()
    for s in sources:
        for v in range(n):
            if v != s:
                a, b = min(s, v), max(s, v)
                if not g.has_edge(a, b):
                    free.add((int(a), int(b)))
    if budget > len(free):
        raise ValueError(f"scan budget {budget} exceeds the {len(free)} free pairs at the sources")
    added: list[tuple[int, int]] = []
    for _ in range(budget):
        for _attempt in range(max_retries):
            s = int(sources[rng.integers(3)])
            t = int(rng.integers(n - 1))
            t += t >= s
            pair = (min(s, t), max(s, t))
            if pair in free:
                break
        else:
            pool = sorted(free)
            pair = pool[int(rng.integers(len(pool)))]
        free.discard(pair)
        added.append(pair)
    return g.add_edges(added)


def prufer_decode(seq, m: int) -> list[tuple[int, int]]:
    """Edges of the labeled tree on ``0..m-1`` with Prüfer sequence ``seq``."""
    seq = [int(x) for x in seq]
    if m < 2:
        return []
    if len(seq) != m - 2:
        raise ValueError("Prüfer sequence must have length m - 2")
    degree = [1] * m
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(m) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def random_prufer_tree(m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniformly random labeled tree on ``0..m-1``."""
    return prufer_decode(rng.integers(m, size=max(m - 2, 0)), m)


def inject_lateral(g: Graph, budget: int, rng: np.random.Generator) -> Graph:
    """Add a uniform random spanning tree on ``budget + 1`` random vertices.

    Tree edges already present in ``g`` are left as they are, so fewer than
    ``budget`` edges may be new.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    if budget + 1 > g.n:
        raise ValueError(f"lateral movement over {budget + 1} vertices needs n >= {budget + 1}")
    chosen = rng.choice(g.n, size=budget + 1, replace=False)
    tree = random_prufer_tree(budget + 1, rng)
    return g.add_edges([(chosen[a], chosen[b]) for a, b in tree])
