"""Event-log parsing, sliding-window graph sequences and the before/after
red-team window experiment.

Logs are comma-separated, one event per line, with these field orders:

    auth     time,srcUser@dom,dstUser@dom,srcComp,dstComp,authType,logonType,orientation,Success|Fail
    process  time,user@dom,computer,processName,Start|End
    dns      time,sourceComputer,computerResolved
    flow     time,duration,srcComp,srcPort,dstComp,dstPort,protocol,packets,bytes
"""

from __future__ import annotations

import bz2
import csv
import gzip
import io
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .graph import Graph, read_edge_list, write_edge_list
from .similarity import KsTestResult, ks_two_sample, pairwise_rh, rh

log = logging.getLogger(__name__)

# modality -> (expected field count, endpoint field indices)
_FORMATS = {
    "auth": (9, (1, 2)),
    "authfail": (9, (1, 2)),
    "process": (5, (2, 3)),
    "dns": (3, (1, 2)),
    "flow": (9, (2, 4)),
}
MODALITIES = ("Auth", "AuthFail", "Process", "Dns", "Flow")
_CANONICAL = {m.lower(): m for m in MODALITIES}


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class InsufficientData(ValueError):
    pass


def canonical_modality(name: str) -> str:
    try:
        return _CANONICAL[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown modality {name!r} (expected one of {', '.join(MODALITIES)})") from None


@dataclass(frozen=True)
class EventRecord:
    timestamp: int
    modality: str
    endpoint_a: str
    endpoint_b: str

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be nonnegative")
        if not self.endpoint_a or not self.endpoint_b:
            raise ValueError("endpoints must be nonempty")


@dataclass
class ParseReport:
    lines: int = 0
    events: int = 0
    filtered: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def malformed(self) -> int:
        return len(self.errors)


def open_text(path: str | Path) -> TextIO:
    """Open a plain, ``.gz`` or ``.bz2`` log as text."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    if path.suffix == ".bz2":
        return bz2.open(path, "rt")
    return open(path)


def _parse_line(line: str, modality: str) -> EventRecord | None:
    count, (ia, ib) = _FORMATS[modality.lower()]
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != count:
        raise ValueError(f"expected {count} fields, got {len(parts)}")
    try:
        t = int(parts[0])
    except ValueError:
        raise ValueError(f"bad timestamp {parts[0]!r}") from None
    if t < 0:
        raise ValueError("negative timestamp")
    a, b = parts[ia], parts[ib]
    if not a or not b:
        raise ValueError("empty endpoint")
    if modality == "AuthFail" and parts[8] != "Fail":
        return None
    return EventRecord(t, modality, a, b)


def parse_events(
    stream: Iterable[str],
    modality: str,
    strict: bool = False,
    report: ParseReport | None = None,
) -> Iterator[EventRecord]:
    """Yield events from a line iterator.

    Malformed lines are skipped and recorded in ``report`` with their line
    number; ``strict=True`` raises :class:`ParseError` on the first one.
    AuthFail keeps only auth lines whose last field is ``Fail``.
    """
    modality = canonical_modality(modality)
    report = report if report is not None else ParseReport()
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        report.lines += 1
        try:
            rec = _parse_line(line, modality)
        except ValueError as exc:
            if strict:
                raise ParseError(lineno, str(exc)) from None
            report.errors.append((lineno, str(exc)))
            log.debug("skipping line %d: %s", lineno, exc)
            continue
        if rec is None:
            report.filtered += 1
            continue
        report.events += 1
        yield rec


def parse_file(path: str | Path, modality: str, strict: bool = False, report: ParseReport | None = None) -> list[EventRecord]:
    with open_text(path) as fh:
        return list(parse_events(fh, modality, strict=strict, report=report))


class Vocabulary:
    """Interns endpoint strings to consecutive integers in order of appearance."""

    def __init__(self, names: Iterable[str] = ()):
        self.names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        idx = self._ids.get(name)
        if idx is None:
            idx = self._ids[name] = len(self.names)
            self.names.append(name)
        return idx

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, idx: int) -> str:
        return self.names[idx]


_EMPTY_IDS = np.empty(0, dtype=np.int64)
_EMPTY_IDS.setflags(write=False)
_EMPTY_GRAPH = Graph(0)


@dataclass(frozen=True)
class Window:
    """One window graph; local vertex ``i`` is vocabulary entry ``ids[i]``."""

    start: int
    graph: Graph
    ids: np.ndarray

    def aligned(self, n: int) -> Graph:
        """The same edges relabelled onto global ids ``0..n-1``."""
        if self.graph.num_edges == 0:
            return Graph(n)
        return Graph(n, self.ids[self.graph.edges])


def _window_graph(start: int, pairs: set, vertices: set) -> Window:
    if not vertices:
        return Window(start, _EMPTY_GRAPH, _EMPTY_IDS)
    ids = np.array(sorted(vertices), dtype=np.int64)
    local = {int(g): i for i, g in enumerate(ids)}
    edges = [(local[a], local[b]) for a, b in pairs]
    ids.setflags(write=False)
    return Window(start, Graph(len(ids), edges), ids)


def window_count(span: float, window_length: int, step: int) -> int:
    """Number of windows ``[s, s+L)`` at stride ``step`` fitting in ``span`` seconds."""
    if span < window_length:
        return 0
    return (int(span) - window_length) // step + 1


def iter_windows(
    events: Iterable[EventRecord],
    window_length: int = 60,
    step: int = 20,
    vocab: Vocabulary | None = None,
    span: tuple[int, int] | None = None,
) -> Iterator[Window]:
    """Stream window graphs from time-sorted events.

    Without ``span`` the first window starts ``ceil(L/step) - 1`` steps before
    the step-aligned first event, so every event lies in ``ceil(L/step)``
    windows, and the last window is the one starting at or just before the
    last event. With ``span=(start, end)`` the windows start at
    ``start, start+step, ...`` below ``end`` and events outside are ignored.

    Only events of the windows currently open are held in memory.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if window_length <= 0:
        raise ValueError("window_length must be positive")
    vocab = vocab if vocab is not None else Vocabulary()
    it = iter(events)
    pending: deque[tuple[int, int, int]] = deque()
    last_t = -math.inf

    def pull():
        nonlocal last_t
        ev = next(it, None)
        if ev is None:
            return None
        if ev.timestamp < last_t:
            raise ValueError(f"events out of order at t={ev.timestamp}")
        last_t = ev.timestamp
        return ev

    head = pull()
    if span is None:
        if head is None:
            return
        lead = -(-window_length // step) - 1
        start = (head.timestamp // step) * step - lead * step
        end = None
    else:
        start, end = int(span[0]), int(span[1])
        while head is not None and head.timestamp < start:
            head = pull()

    s = start
    while True:
        if end is not None and s >= end:
            break
        if end is None and head is None and (not pending or pending[-1][0] < s):
            break
        # admit events below the window's right edge
        while head is not None and head.timestamp < s + window_length and (end is None or head.timestamp < end):
            a, b = vocab.intern(head.endpoint_a), vocab.intern(head.endpoint_b)
            pending.append((head.timestamp, a, b))
            head = pull()
        while pending and pending[0][0] < s:
            pending.popleft()
        pairs, vertices = set(), set()
        for _, a, b in pending:
            vertices.add(a)
            vertices.add(b)
            if a != b:
                pairs.add((a, b) if a < b else (b, a))
        yield _window_graph(s, pairs, vertices)
        if end is not None and head is None and not pending:
            # the rest of the span is empty; emit shared empty windows
            s += step
            while s < end:
                yield Window(s, _EMPTY_GRAPH, _EMPTY_IDS)
                s += step
            break
        s += step


@dataclass
class GraphSequence:
    """Windows of one modality at fixed stride; ``windows[i].start == start + i*step``."""

    modality: str
    window_length: int
    step: int
    windows: list[Window]
    vocab: list[str]

    def __post_init__(self):
        for prev, cur in zip(self.windows, self.windows[1:]):
            if cur.start - prev.start != self.step:
                raise ValueError("window starts must advance by exactly one step")

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def start(self) -> int | None:
        return self.windows[0].start if self.windows else None

    @property
    def starts(self) -> np.ndarray:
        if not self.windows:
            return np.empty(0, dtype=np.int64)
        return self.windows[0].start + self.step * np.arange(len(self.windows), dtype=np.int64)

    def index_of(self, t: int) -> int | None:
        """Window index starting exactly at ``t``, or ``None``."""
        if not self.windows:
            return None
        off = t - self.windows[0].start
        if off % self.step:
            return None
        i = off // self.step
        return int(i) if 0 <= i < len(self.windows) else None

    def graph_at(self, t: int) -> Graph | None:
        i = self.index_of(t)
        return None if i is None else self.windows[i].graph

    def aligned(self, i: int) -> Graph:
        return self.windows[i].aligned(len(self.vocab))

    def slice(self, t0: int, t1: int) -> "GraphSequence":
        """Windows with start in ``[t0, t1)``."""
        kept = [w for w in self.windows if t0 <= w.start < t1]
        return GraphSequence(self.modality, self.window_length, self.step, kept, self.vocab)

    def save(self, directory: str | Path) -> None:
        """Write per-window edge lists, ``index.csv``, ``vocab.txt`` and ``meta.json``."""
        d = Path(directory)
        (d / "windows").mkdir(parents=True, exist_ok=True)
        for stale in (d / "windows").glob("*.txt"):
            stale.unlink()
        with open(d / "index.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["start", "file", "vertices", "edges"])
            for win in self.windows:
                name = f"windows/{win.start}.txt"
                ids = " ".join(str(int(x)) for x in win.ids)
                write_edge_list(win.graph, d / name, comments=[f"ids: {ids}"])
                w.writerow([win.start, name, win.graph.n, win.graph.num_edges])
        (d / "vocab.txt").write_text("".join(f"{name}\n" for name in self.vocab))
        meta = {"modality": self.modality, "window_length": self.window_length, "step": self.step, "windows": len(self.windows)}
        (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory: str | Path) -> "GraphSequence":
        d = Path(directory)
        meta = json.loads((d / "meta.json").read_text())
        vocab = (d / "vocab.txt").read_text().splitlines()
        windows = []
        with open(d / "index.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                g, comments = read_edge_list(d / row["file"])
                ids_line = next((c for c in comments if c.startswith("ids:")), "ids:")
                ids = np.array([int(x) for x in ids_line[4:].split()], dtype=np.int64)
                ids.setflags(write=False)
                windows.append(Window(int(row["start"]), g, ids))
        return cls(meta["modality"], int(meta["window_length"]), int(meta["step"]), windows, vocab)


def build_windows(
    events: Iterable[EventRecord],
    window_length: int = 60,
    step: int = 20,
    span: tuple[int, int] | None = None,
    modality: str | None = None,
) -> GraphSequence:
    """Collect :func:`iter_windows` into a :class:`GraphSequence`.

    Lists and tuples are sorted by timestamp first; other iterables must
    already be sorted.
    """
    if isinstance(events, (list, tuple)):
        events = sorted(events, key=lambda e: e.timestamp)
        if modality is None and events:
            modality = events[0].modality
    vocab = Vocabulary()
    windows = list(iter_windows(events, window_length, step, vocab=vocab, span=span))
    return GraphSequence(modality or "", window_length, step, windows, vocab.names)


@dataclass(frozen=True)
class RedTeamMarks:
    """Sorted distinct mark times; ``labels`` keeps any extra CSV columns."""

    times: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64).ravel()
        uniq = np.unique(t)
        t = uniq
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.size

    def any_in(self, lo: float, hi: float, closed: bool = False) -> bool:
        """Whether a mark lies in ``(lo, hi)`` (or ``[lo, hi]`` when ``closed``)."""
        if closed:
            i = np.searchsorted(self.times, lo, side="left")
            return bool(i < self.times.size and self.times[i] <= hi)
        i = np.searchsorted(self.times, lo, side="right")
        return bool(i < self.times.size and self.times[i] < hi)


def read_marks(src: str | Path | TextIO) -> RedTeamMarks:
    """Marks CSV: first column is the timestamp, further columns are kept as
    labels. A non-numeric first row is treated as a header."""
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    times, labels = [], []
    for i, row in enumerate(csv.reader(io.StringIO(text))):
        if not row or not row[0].strip():
            continue
        try:
            t = int(row[0])
        except ValueError:
            if i == 0:
                continue
            raise ValueError(f"marks line {i + 1}: bad timestamp {row[0]!r}") from None
        times.append(t)
        labels.append(tuple(c.strip() for c in row[1:]))
    order = sorted(range(len(times)), key=times.__getitem__)
    seen, kept = set(), []
    for j in order:
        if times[j] not in seen:
            seen.add(times[j])
            kept.append(labels[j])
    return RedTeamMarks(np.array(times, dtype=np.int64), tuple(kept))


def eligible_marks(marks: RedTeamMarks, ell: float) -> np.ndarray:
    """Marks ``r`` with no other mark in the open interval ``(r - ell/2, r)``."""
    half = ell / 2.0
    return np.array([r for r in marks.times if not marks.any_in(r - half, r)], dtype=np.int64)


def _lagged_rh(seq: GraphSequence, lo: float, hi: float, delta: int) -> list[float]:
    # pairs (t, t+delta) with both window starts in the open interval (lo, hi)
    out = []
    for i, w in enumerate(seq.windows):
        t = w.start
        if not (lo < t and t + delta < hi):
            continue
        j = seq.index_of(t + delta)
        if j is None:
            continue
        out.append(rh(w.graph, seq.windows[j].graph))
    return out


def before_after_samples(seq: GraphSequence, marks: RedTeamMarks, ell: int, delta: int) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate lagged RH values before and after each eligible mark."""
    if delta <= 0 or delta % seq.step:
        raise ValueError("delta must be a positive multiple of the window step")
    if not ell / 2 > delta:
        raise ValueError("need ell/2 > delta")
    half = ell / 2.0
    before, after = [], []
    for r in eligible_marks(marks, ell):
        before.extend(_lagged_rh(seq, r - half, r, delta))
        after.extend(_lagged_rh(seq, r, r + half, delta))
    return np.array(before), np.array(after)


def before_after_experiment(seq: GraphSequence, marks: RedTeamMarks, ell: int, delta: int) -> KsTestResult:
    """Two-sample KS test between the aggregated before and after RH values."""
    before, after = before_after_samples(seq, marks, ell, delta)
    if before.size == 0 or after.size == 0:
        raise InsufficientData(f"insufficient data (before={before.size}, after={after.size})")
    return ks_two_sample(before, after)


def pairwise_heatmap(seq: GraphSequence, t0: int | None = None, t1: int | None = None, sigma: float = 1.0):
    """RH matrix over windows with start in ``[t0, t1)`` and its Gaussian-kernel
    similarity ``exp(-M^2 / (2 sigma^2))``. Returns ``(starts, M, S)``."""
    sub = seq if t0 is None and t1 is None else seq.slice(t0 if t0 is not None else -math.inf, t1 if t1 is not None else math.inf)
    if len(sub) == 0:
        raise ValueError("empty window range")
    m = pairwise_rh([w.graph for w in sub.windows])
    s = np.exp(-(m**2) / (2.0 * sigma**2))
    return sub.starts, m, s


# synthetic sequences for the before/after null and power checks


def synthetic_events(
    rng: np.random.Generator,
    duration: int,
    rate: float = 1.0,
    hosts: int = 40,
    shifts: Iterable[tuple[int, int]] = (),
    shift_rate: float = 0.0,
    shift_hosts: int = 0,
    shift_period: int = 0,
    modality: str = "Flow",
) -> list[EventRecord]:
    """Poisson events per second between random hosts with a skewed activity
    profile. During each ``(start, end)`` in ``shifts`` extra events at
    ``shift_rate`` per second fan out from one attacker host to
    ``shift_hosts`` otherwise unused hosts; with ``shift_period > 0`` the
    extra activity alternates on and off every ``shift_period`` seconds."""
    weights = 1.0 / np.arange(1, hosts + 1) ** 1.2
    weights /= weights.sum()
    counts = rng.poisson(rate, size=duration)
    events = []
    for t in np.flatnonzero(counts):
        k = int(counts[t])
        a = rng.choice(hosts, size=k, p=weights)
        b = rng.choice(hosts, size=k, p=weights)
        events.extend(EventRecord(int(t), modality, f"h{x}", f"h{y}") for x, y in zip(a, b))
    for lo, hi in shifts:
        lo, hi = max(0, int(lo)), min(duration, int(hi))
        extra = rng.poisson(shift_rate, size=max(0, hi - lo))
        if shift_period > 0:
            extra[(np.arange(extra.size) // shift_period) % 2 == 1] = 0
        for dt in np.flatnonzero(extra):
            for _ in range(int(extra[dt])):
                target = int(rng.integers(shift_hosts))
                events.append(EventRecord(lo + int(dt), modality, "attacker", f"x{target}"))
    events.sort(key=lambda e: e.timestamp)
    return events
