"""Simple undirected graphs, degree statistics and complementary cumulative
degree histograms (ccdh).

A graph is stored as a vertex count plus a sorted ``(E, 2)`` array of edges
with ``u < v``; there is no adjacency matrix since the graphs we deal with
(short time windows, sparse random models) have very few edges.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, TextIO

import numpy as np

__all__ = [
    "Graph",
    "Ccdh",
    "DegreeHistogram",
    "ccdh_of",
    "smooth_eval",
    "degree_histogram",
    "ccdh_from_histogram",
    "pair_index",
    "pair_endpoints",
    "read_edge_list",
    "write_edge_list",
]


def _normalize_edges(n: int, edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError(f"edge endpoint out of range for n={n}")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    arr = np.sort(arr, axis=1)
    arr = np.unique(arr, axis=0)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Duplicate edges are merged on construction; self-loops and out-of-range
    endpoints raise ``ValueError``.
    """

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))
        self.edges.setflags(write=False)

    @classmethod
    def from_pair_indices(cls, n: int, idx: np.ndarray) -> "Graph":
        """Build a graph from linear upper-triangle pair indices (see :func:`pair_index`)."""
        u, v = pair_endpoints(n, np.asarray(idx, dtype=np.int64))
        g = object.__new__(cls)
        object.__setattr__(g, "n", n)
        edges = np.stack([u, v], axis=1) if len(u) else np.empty((0, 2), dtype=np.int64)
        # pair indices in increasing order give lexicographically sorted edges
        order = np.argsort(idx, kind="stable")
        edges = np.ascontiguousarray(edges[order])
        edges.setflags(write=False)
        object.__setattr__(g, "edges", edges)
        return g

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)
        deg.setflags(write=False)
        return deg

    @cached_property
    def pair_indices(self) -> np.ndarray:
        """Sorted linear indices of the edges in the upper triangle ordering."""
        if self.num_edges == 0:
            return np.empty(0, dtype=np.int64)
        return np.sort(pair_index(self.n, self.edges[:, 0], self.edges[:, 1]))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        u, v = min(u, v), max(u, v)
        idx = pair_index(self.n, u, v)
        pos = np.searchsorted(self.pair_indices, idx)
        return bool(pos < len(self.pair_indices) and self.pair_indices[pos] == idx)

    def add_edges(self, extra) -> "Graph":
        """Return a new graph with ``extra`` edges added (existing ones are kept once)."""
        extra = np.asarray(extra, dtype=np.int64).reshape(-1, 2)
        return Graph(self.n, np.concatenate([self.edges, extra]))

    def complement(self) -> "Graph":
        iu, ju = np.triu_indices(self.n, 1)
        present = np.zeros(len(iu), dtype=bool)
        present[self.pair_indices] = True
        return Graph(self.n, np.stack([iu[~present], ju[~present]], axis=1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, num_edges={self.num_edges})"


def pair_index(n: int, u, v):
    """Linear index of pair ``{u, v}`` (``u < v``) in row-major upper-triangle order."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def pair_endpoints(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`pair_index`."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    # row u starts at offset u*(2n-u-1)/2; solve the quadratic then fix rounding
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2).astype(np.int64)
    u = np.clip(u, 0, max(n - 2, 0))
    start = u * (2 * n - u - 1) // 2
    too_far = start > idx
    while np.any(too_far):
        u[too_far] -= 1
        start = u * (2 * n - u - 1) // 2
        too_far = start > idx
    nxt = (u + 1) * (2 * n - u - 2) // 2
    behind = idx >= nxt
    while np.any(behind):
        u[behind] += 1
        start = u * (2 * n - u - 1) // 2
        nxt = (u + 1) * (2 * n - u - 2) // 2
        behind = idx >= nxt
    v = idx - start + u + 1
    return u, v


@dataclass(frozen=True, eq=False)
class Ccdh:
    """Counts ``N(1), ..., N(Delta)``; ``N(k)`` is the number of vertices of
    degree at least ``k``. Empty for a graph without edges."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        if counts.size:
            if counts.min() <= 0:
                raise ValueError("ccdh counts must be strictly positive")
            if np.any(np.diff(counts) > 0):
                raise ValueError("ccdh counts must be nonincreasing")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def max_degree(self) -> int:
        return len(self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def __bool__(self) -> bool:
        return len(self.counts) > 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ccdh):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())

    def __repr__(self) -> str:
        return f"Ccdh({self.counts.tolist()})"

    def at(self, k: int) -> int:
        """Discrete value ``N(k)`` for integer ``k >= 1``; zero beyond the max degree."""
        if k < 1:
            raise ValueError("ccdh is defined for k >= 1")
        return int(self.counts[k - 1]) if k <= len(self.counts) else 0


@dataclass(frozen=True)
class DegreeHistogram:
    """``counts[k]`` = number of vertices of degree exactly ``k`` (``k >= 1``)."""

    counts: Mapping[int, int]

    def to_ccdh(self) -> Ccdh:
        return ccdh_from_histogram(self)


def ccdh_of(g: Graph) -> Ccdh:
    deg = g.degrees
    if g.num_edges == 0:
        return Ccdh(np.empty(0, dtype=np.int64))
    per_degree = np.bincount(deg)
    # N(k) = sum_{j >= k} n(j); drop k = 0
    tail = np.cumsum(per_degree[::-1])[::-1]
    return Ccdh(tail[1:])


def degree_histogram(g: Graph) -> DegreeHistogram:
    per_degree = np.bincount(g.degrees) if g.n else np.zeros(1, dtype=np.int64)
    return DegreeHistogram({k: int(c) for k, c in enumerate(per_degree) if k >= 1 and c > 0})


def ccdh_from_histogram(h: DegreeHistogram) -> Ccdh:
    if not h.counts:
        return Ccdh(np.empty(0, dtype=np.int64))
    top = max(h.counts)
    exact = np.zeros(top + 1, dtype=np.int64)
    for k, c in h.counts.items():
        exact[k] = c
    tail = np.cumsum(exact[::-1])[::-1]
    return Ccdh(tail[1:])


def smooth_eval(c: Ccdh, d):
    """Piecewise-linear ccdh at real ``d >= 1``.

    Consecutive integer points are joined by segments, the last segment runs
    from ``(Delta, N(Delta))`` to ``(Delta + 1, 0)``, and the curve is zero from
    there on. Accepts a scalar or an array.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 1) or np.any(np.isnan(d_arr)):
        raise ValueError("smooth ccdh is defined for d >= 1")
    nodes = np.concatenate([c.counts.astype(float), [0.0]])
    xs = np.arange(1, len(nodes) + 1, dtype=float)
    out = np.interp(d_arr, xs, nodes, right=0.0)
    if np.ndim(d) == 0:
        return float(out)
    return out


def write_edge_list(g: Graph, dest: str | Path | TextIO, comments: Iterable[str] = ()) -> None:
    """Write ``n=<count>`` followed by one ``u v`` line per edge.

    ``comments`` are emitted as ``#`` lines after the header.
    """
    buf = io.StringIO()
    buf.write(f"n={g.n}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    for u, v in g.edges:
        buf.write(f"{u} {v}\n")
    text = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def read_edge_list(src: str | Path | TextIO) -> tuple[Graph, list[str]]:
    """Inverse of :func:`write_edge_list`; returns the graph and any comment lines."""
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("n="):
        raise ValueError("edge list must start with an 'n=<count>' header")
    n = int(lines[0][2:])
    comments = []
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return Graph(n, pairs), comments
