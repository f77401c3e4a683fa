"""Multi-source, multi-lag temporal profiles scored against week-periodic
baselines."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import GraphSequence, RedTeamMarks
from .scoring import EmpiricalDistribution
from .similarity import rh

WEEK = 7 * 24 * 3600
SLACK = 600


class Unscorable(ValueError):
    pass


def lagged_rh(seq: GraphSequence, t: int, delta: int) -> float | None:
    """``RH(G_t, G_{t - delta})``, or ``None`` when either window is missing."""
    g, h = seq.graph_at(t), seq.graph_at(t - delta)
    if g is None or h is None:
        return None
    return rh(g, h)


def baseline_times(
    seq: GraphSequence,
    t: int,
    delta: int,
    period: int = WEEK,
    slack: int = SLACK,
    marks: RedTeamMarks | None = None,
    exclude_radius: int = SLACK,
) -> list[int]:
    """Window starts ``t*`` within ``slack`` of ``t + k*period`` (any integer
    ``k``) whose lagged pair exists, skipping ``|t* - t| <= exclude_radius``
    and any ``t*`` with a mark in ``[t* - delta, t*]``."""
    if not len(seq):
        return []
    first, last = int(seq.starts[0]), int(seq.starts[-1])
    k_lo = math.floor((first - slack - t) / period)
    k_hi = math.ceil((last + slack - t) / period)
    out = []
    for k in range(k_lo, k_hi + 1):
        centre = t + k * period
        lo = max(first, centre - slack)
        hi = min(last, centre + slack)
        if lo > hi:
            continue
        # first window start >= lo on the sequence grid
        s = first + -(-(lo - first) // seq.step) * seq.step
        while s <= hi:
            if abs(s - t) > exclude_radius and seq.index_of(s - delta) is not None:
                if marks is None or not marks.any_in(s - delta, s, closed=True):
                    out.append(s)
            s += seq.step
    return out


def baseline_distribution(
    seq: GraphSequence,
    t: int,
    delta: int,
    period: int = WEEK,
    slack: int = SLACK,
    marks: RedTeamMarks | None = None,
    exclude_radius: int = SLACK,
) -> EmpiricalDistribution:
    times = baseline_times(seq, t, delta, period, slack, marks, exclude_radius)
    return EmpiricalDistribution([lagged_rh(seq, s, delta) for s in times])


@dataclass(frozen=True)
class ProfileEntry:
    source: str
    delta: int
    value: float | None
    baseline: EmpiricalDistribution

    @property
    def epsilon(self) -> float:
        return self.baseline.range / 20.0

    def present(self, min_baseline: int = 5) -> bool:
        return self.value is not None and len(self.baseline) >= min_baseline and self.epsilon > 0

    def probability(self) -> float:
        """Baseline mass strictly within ``epsilon`` of the observed value."""
        eps = self.epsilon
        return self.baseline.prob_between(self.value - eps, self.value + eps)


@dataclass(frozen=True)
class TemporalProfile:
    t: int
    entries: tuple[ProfileEntry, ...]
    min_baseline: int = 5

    def values(self) -> dict[tuple[str, int], float | None]:
        return {(e.source, e.delta): e.value for e in self.entries}

    def scored(self) -> dict[tuple[str, int], float]:
        return {(e.source, e.delta): e.probability() for e in self.entries if e.present(self.min_baseline)}

    def dropped(self) -> list[tuple[str, int]]:
        return [(e.source, e.delta) for e in self.entries if not e.present(self.min_baseline)]


def temporal_profile(
    sources: Mapping[str, GraphSequence],
    t: int,
    deltas: Sequence[int],
    period: int = WEEK,
    slack: int = SLACK,
    marks: RedTeamMarks | None = None,
    min_baseline: int = 5,
) -> TemporalProfile:
    """One entry per (source, lag); missing graphs give ``value=None``."""
    entries = []
    for name, seq in sources.items():
        for delta in deltas:
            value = lagged_rh(seq, t, delta)
            base = baseline_distribution(seq, t, delta, period, slack, marks)
            entries.append(ProfileEntry(name, int(delta), value, base))
    return TemporalProfile(int(t), tuple(entries), min_baseline)


def geometric_mean(values) -> float:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise Unscorable("no entries")
    if np.any(v == 0):
        return 0.0
    return float(np.exp(np.log(v).mean()))


def temporal_score(profile: TemporalProfile) -> float:
    """Geometric mean of the per-entry baseline probabilities; entries whose
    baseline has fewer than ``min_baseline`` samples (or zero range) are
    dropped. Near 0 means unusual."""
    scored = profile.scored()
    if not scored:
        raise Unscorable(f"unscorable at t={profile.t}: every entry lacks baseline data")
    return geometric_mean(scored.values())


def profile_report(profile: TemporalProfile) -> dict:
    scored = profile.scored()
    try:
        score = temporal_score(profile)
    except Unscorable:
        score = None
    return {
        "t": profile.t,
        "entries": [
            {
                "source": e.source,
                "delta": e.delta,
                "value": e.value,
                "baseline_size": len(e.baseline),
                "epsilon": e.epsilon,
                "v_hat": scored.get((e.source, e.delta)),
            }
            for e in profile.entries
        ],
        "dropped": [list(k) for k in profile.dropped()],
        "score": score,
    }


def write_report(reports: list[dict], path: str | Path) -> None:
    Path(path).write_text(json.dumps(reports, indent=2) + "\n")
