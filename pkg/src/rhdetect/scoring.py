"""Empirical CDFs, anomaly scores, ROC-like curves and the normal
approximation for edge-flip (edit distance) counts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .hlm import WeightVector

__all__ = [
    "EmpiricalDistribution",
    "RocCurve",
    "NormalApproxParams",
    "anomaly_score",
    "self_scores",
    "roc_curve",
    "flip_moments",
    "normality_check",
    "normal_cdf",
    "normal_ppf",
    "edit_score_cdf",
    "write_roc_csv",
]

_STD_NORMAL = NormalDist()
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class EmpiricalDistribution:
    """Sorted sample with CDF ``F(x) = #{samples <= x} / size``."""

    def __init__(self, samples):
        arr = np.sort(np.asarray(samples, dtype=float).ravel())
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        self.samples = arr

    def __len__(self) -> int:
        return self.samples.size

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(size={self.samples.size})"

    def cdf(self, x):
        if self.samples.size == 0:
            raise ValueError("empty distribution")
        out = np.searchsorted(self.samples, x, side="right") / self.samples.size
        return float(out) if np.ndim(x) == 0 else out

    def prob_between(self, lo: float, hi: float) -> float:
        """Fraction of samples strictly inside ``(lo, hi)``."""
        if self.samples.size == 0:
            raise ValueError("empty distribution")
        left = np.searchsorted(self.samples, lo, side="right")
        right = np.searchsorted(self.samples, hi, side="left")
        return max(0, int(right - left)) / self.samples.size

    @property
    def range(self) -> float:
        return float(self.samples[-1] - self.samples[0]) if self.samples.size else 0.0


def anomaly_score(dist: EmpiricalDistribution, z):
    """``2 |F(z) - 1/2|``; near 1 means ``z`` sits in a tail of ``dist``."""
    if len(dist) == 0:
        raise ValueError("anomaly score needs a nonempty baseline")
    f = dist.cdf(z)
    out = 2.0 * np.abs(np.asarray(f) - 0.5)
    return float(out) if np.ndim(z) == 0 else out


def self_scores(samples) -> np.ndarray:
    """Score every sample against the distribution it belongs to."""
    dist = EmpiricalDistribution(samples)
    return anomaly_score(dist, np.asarray(samples, dtype=float))


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def area(self) -> float:
        # thresholds descend, so x ascends
        return float(_trapezoid(self.y, self.x))


def roc_curve(baseline_scores, anomalous_scores, analytic_x: bool = False) -> RocCurve:
    """ROC-like curve: ``y(t)`` is the fraction of anomalous scores ``>= t``,
    ``x(t)`` the fraction of baseline scores ``>= t`` (or ``1 - t`` when
    ``analytic_x`` is set).

    Thresholds run from just above the largest score down to 0, so the
    curve starts at ``(0, 0)`` and ends at ``(1, 1)``.
    """
    base = np.sort(np.asarray(baseline_scores, dtype=float).ravel())
    anom = np.sort(np.asarray(anomalous_scores, dtype=float).ravel())
    if base.size == 0 or anom.size == 0:
        raise ValueError("ROC curve needs nonempty baseline and anomalous scores")
    ts = np.unique(np.concatenate([base, anom, [0.0, 1.0]]))[::-1]
    top = np.nextafter(ts[0], np.inf)
    ts = np.concatenate([[top], ts])
    y = 1.0 - np.searchsorted(anom, ts, side="left") / anom.size
    if analytic_x:
        x = np.clip(1.0 - ts, 0.0, 1.0)
    else:
        x = 1.0 - np.searchsorted(base, ts, side="left") / base.size
    return RocCurve(ts, x, y)


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for t, x, y in zip(curve.thresholds, curve.x, curve.y):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


@dataclass(frozen=True)
class NormalApproxParams:
    mu: float
    sigma: float
    mu_a: float
    sigma_a: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.sigma_a > 0):
            raise ValueError("standard deviations must be positive")


def flip_moments(model: WeightVector | np.ndarray, alpha: float) -> tuple[float, float]:
    """Mean and standard deviation of the number of pairs that flip in one
    stationary HLM transition; each pair flips with ``2 alpha p (1 - p)``."""
    if isinstance(model, WeightVector):
        p = model.pair_probabilities
    else:
        P = np.asarray(model, dtype=float)
        p = P[np.triu_indices(P.shape[0], 1)]
    q = 2.0 * alpha * p * (1.0 - p)
    return float(q.sum()), float(math.sqrt((q * (1.0 - q)).sum()))


def normal_cdf(x):
    """Standard normal CDF via ``erfc`` (full double precision)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))
    return np.array([0.5 * math.erfc(-v / math.sqrt(2.0)) for v in np.ravel(x)]).reshape(np.shape(x))


def normal_ppf(p: float) -> float:
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return _STD_NORMAL.inv_cdf(p)


def normality_check(samples, mu: float, sigma: float) -> float:
    """One-sample KS statistic of standardized samples against N(0, 1)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    z = np.sort((np.asarray(samples, dtype=float).ravel() - mu) / sigma)
    if z.size == 0:
        raise ValueError("no samples")
    # evaluate at the distinct values, where the step function jumps
    vals, last = np.unique(z, return_index=False, return_counts=True)
    upper = np.cumsum(last) / z.size
    lower = upper - last / z.size
    phi = normal_cdf(vals)
    return float(max(np.abs(upper - phi).max(), np.abs(phi - lower).max()))


def edit_score_cdf(params: NormalApproxParams, s: float, reading: str = "standardized") -> float:
    """``P(S <= s)`` for the anomaly score ``S`` of a normal observation
    ``X ~ N(mu_a, sigma_a)`` scored against a ``N(mu, sigma)`` baseline.

    ``reading="standardized"`` uses the ratio ``sigma / sigma_a`` that follows
    from standardizing against the baseline; ``reading="printed"`` uses
    ``sigma_a / sigma``. The two agree when ``sigma == sigma_a``.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if reading == "standardized":
        ratio = params.sigma / params.sigma_a
    elif reading == "printed":
        ratio = params.sigma_a / params.sigma
    else:
        raise ValueError(f"unknown reading {reading!r}")
    if s == 0.0:
        return 0.0
    if s == 1.0:
        return 1.0
    shift = (params.mu - params.mu_a) / params.sigma_a
    q = normal_ppf((s + 1.0) / 2.0)
    return normal_cdf(shift + ratio * q) - normal_cdf(shift - ratio * q)
