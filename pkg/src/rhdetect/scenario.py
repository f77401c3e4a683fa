"""Scenario runner: baseline HLM transitions versus transitions with a
planted anomaly, measured by RH, KS and edit distance."""

from __future__ import annotations

import configparser
import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .graph import Graph, ccdh_of
from .hlm import (
    DEFAULT_ALPHA_GRID,
    WeightVector,
    chung_lu_sample,
    family_defaults,
    graph_from_presence,
    hlm_step_presence,
    inject_lateral,
    inject_scan,
    make_weights,
)
from .scoring import EmpiricalDistribution, anomaly_score, flip_moments, roc_curve, self_scores
from .similarity import edit_distance_aligned, ks_distance_ccdh, ks_pvalue, rh_smooth

log = logging.getLogger(__name__)

MEASURES = ("rh", "ks", "edit")
COLUMNS = ("rh", "ks", "ks_stat", "edit")
ANOMALY_KINDS = ("scan", "lateral")
WEIGHT_FAMILIES = ("power_law", "bump_power_law")
ANOMALY_SIZES = (10, 20, 30, 40, 50)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnomalySpec:
    kind: str
    edge_budget: int

    def __post_init__(self):
        if self.kind not in ANOMALY_KINDS:
            raise ConfigError(f"anomaly: unknown kind {self.kind!r} (expected one of {ANOMALY_KINDS})")
        if self.edge_budget < 1:
            raise ConfigError("edge_budget: must be at least 1")

    def inject(self, g: Graph, rng: np.random.Generator) -> Graph:
        if self.kind == "scan":
            return inject_scan(g, self.edge_budget, rng)
        return inject_lateral(g, self.edge_budget, rng)


@dataclass(frozen=True)
class ScenarioConfig:
    """One (weight family, anomaly, alpha) cell of the experiment grid.

    Family parameters left as ``None`` take the default full-scale values,
    scaled to ``n`` (see :func:`rhdetect.hlm.family_defaults`).
    """

    weight_family: str
    anomaly: AnomalySpec
    alpha: float
    trials: int
    baseline_transitions: int
    seed: int = 20190501
    n: int = 5000
    exponent: float = 3.5
    target_edges: float | None = None
    target_max_degree: float | None = None
    bump_mean: float | None = None
    bump_fraction: float | None = None
    weight_seed: int = 0

    def __post_init__(self):
        if self.weight_family not in WEIGHT_FAMILIES:
            raise ConfigError(f"weight_family: unknown family {self.weight_family!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha: must lie in [0, 1]")
        if self.trials < 0:
            raise ConfigError("trials: must be nonnegative")
        if self.baseline_transitions < 1:
            raise ConfigError("baseline_transitions: must be at least 1")
        if self.n < 4:
            raise ConfigError("n: need at least 4 vertices")

    def family_params(self) -> dict:
        params = family_defaults(self.weight_family, self.n)
        params["exponent"] = self.exponent
        for key in ("target_edges", "target_max_degree", "bump_mean", "bump_fraction"):
            value = getattr(self, key)
            if value is not None and key in params:
                params[key] = value
        return params

    def weights(self) -> WeightVector:
        return make_weights(self.weight_family, seed=self.weight_seed, **self.family_params())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["anomaly"] = self.anomaly.kind
        d["edge_budget"] = self.anomaly.edge_budget
        return d


_REQUIRED = ("weight_family", "anomaly", "edge_budget", "alpha", "trials", "baseline_transitions")
_INT_KEYS = {"edge_budget", "trials", "baseline_transitions", "seed", "n", "weight_seed"}
_FLOAT_KEYS = {"alpha", "exponent", "target_edges", "target_max_degree", "bump_mean", "bump_fraction"}


def config_from_mapping(raw: dict) -> ScenarioConfig:
    """Build and validate a config from string or typed values."""
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")
    known = {f.name for f in fields(ScenarioConfig)} | {"edge_budget"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    values = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = str(value).strip()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: cannot parse {value!r}") from exc
    anomaly = AnomalySpec(values.pop("anomaly"), values.pop("edge_budget"))
    return ScenarioConfig(anomaly=anomaly, **values)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a ``[scenario]`` section of ``key = value`` lines."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    return config_from_mapping(dict(parser["scenario"]))


def write_config(cfg: ScenarioConfig, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser["scenario"] = {k: str(v) for k, v in cfg.to_dict().items() if v is not None}
    with open(path, "w") as fh:
        parser.write(fh)


def measure_pair(g: Graph, h: Graph) -> dict[str, float]:
    """RH, KS p-value, KS statistic and edit distance between two graphs on
    the same vertex set."""
    cg, ch = ccdh_of(g), ccdh_of(h)
    rh = rh_smooth(cg, ch).value
    if cg and ch:
        stat = ks_distance_ccdh(cg, ch, g.n, h.n)
    else:
        stat = 0.0 if (not cg and not ch) else 1.0
    return {
        "rh": rh,
        "ks": ks_pvalue(stat, g.n, h.n),
        "ks_stat": stat,
        "edit": float(edit_distance_aligned(g, h)),
    }


def _transition(w: WeightVector, alpha: float, anomaly: AnomalySpec | None, rng: np.random.Generator):
    p = w.pair_probabilities
    present = rng.random(p.shape) < p
    g = graph_from_presence(w.n, present)
    h = graph_from_presence(w.n, hlm_step_presence(present, alpha, p, rng))
    if anomaly is not None:
        h = anomaly.inject(h, rng)
    return measure_pair(g, h)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    baseline: dict[str, np.ndarray]
    anomalous: dict[str, np.ndarray]
    weights: WeightVector = field(repr=False)

    def scores(self) -> dict[str, np.ndarray]:
        """Anomaly scores of every anomalous trial against the baseline ECDF."""
        return {m: anomaly_score(EmpiricalDistribution(self.baseline[m]), self.anomalous[m]) for m in MEASURES}

    def baseline_scores(self) -> dict[str, np.ndarray]:
        return {m: self_scores(self.baseline[m]) for m in MEASURES}

    def edit_normal_scores(self) -> np.ndarray:
        """Edit-distance scores against the normal approximation of the baseline."""
        from .scoring import normal_cdf

        mu, sigma = flip_moments(self.weights, self.config.alpha)
        if sigma == 0:
            return np.ones_like(self.anomalous["edit"])
        f = normal_cdf((self.anomalous["edit"] - mu) / sigma)
        return 2.0 * np.abs(np.asarray(f) - 0.5)

    def summary(self) -> dict:
        from .similarity import ks_two_sample

        out = {"config": self.config.to_dict(), "n_baseline": len(self.baseline["rh"]), "n_anomalous": len(self.anomalous["rh"])}
        cal = self.weights.calibration
        if cal is not None:
            out["weights"] = asdict(cal)
        mu, sigma = flip_moments(self.weights, self.config.alpha)
        out["flip_moments"] = {"mu": mu, "sigma": sigma}
        stats = {}
        for m in COLUMNS:
            b = self.baseline[m]
            entry = {"baseline_mean": float(b.mean()), "baseline_std": float(b.std())}
            a = self.anomalous[m]
            if a.size:
                entry["anomalous_mean"] = float(a.mean())
                entry["anomalous_std"] = float(a.std())
                test = ks_two_sample(a, b)
                entry["ks_test_statistic"] = test.statistic
                entry["ks_test_p_value"] = test.p_value
            stats[m] = entry
        out["measures"] = stats
        if self.anomalous["rh"].size:
            sc = self.scores()
            bs = self.baseline_scores()
            out["roc_area"] = {m: roc_curve(bs[m], sc[m]).area() for m in MEASURES}
            out["head_to_head"] = {
                "rh_beats_ks": float(np.mean(sc["rh"] > sc["ks"])),
                "rh_beats_edit": float(np.mean(sc["rh"] > sc["edit"])),
            }
        return out


def run_scenario(cfg: ScenarioConfig, rng: np.random.Generator | None = None, weights: WeightVector | None = None) -> ScenarioResult:
    """Baseline: ``G ~ CL(w)`` and one HLM step. Anomalous: the same plus the
    planted anomaly. Every repetition gets its own child seed, so results do
    not depend on execution order.
    """
    w = weights if weights is not None else cfg.weights()
    root = np.random.SeedSequence(cfg.seed) if rng is None else np.random.SeedSequence(int(rng.integers(2**63)))
    base_ss, anom_ss = root.spawn(2)

    def collect(ss, count, anomaly):
        rows = [_transition(w, cfg.alpha, anomaly, np.random.default_rng(child)) for child in ss.spawn(count)]
        return {c: np.array([r[c] for r in rows], dtype=float) for c in COLUMNS}

    baseline = collect(base_ss, cfg.baseline_transitions, None)
    anomalous = collect(anom_ss, cfg.trials, cfg.anomaly)
    return ScenarioResult(cfg, baseline, anomalous, w)


def scenario_grid(n: int = 5000, trials: int = 1000, baseline_transitions: int = 10000, alphas=DEFAULT_ALPHA_GRID, seed: int = 20190501):
    """All 2 x 2 x 5 x 21 = 420 scenario configurations."""
    for family in WEIGHT_FAMILIES:
        for kind in ANOMALY_KINDS:
            for size in ANOMALY_SIZES:
                for alpha in alphas:
                    yield ScenarioConfig(
                        weight_family=family,
                        anomaly=AnomalySpec(kind, size),
                        alpha=alpha,
                        trials=trials,
                        baseline_transitions=baseline_transitions,
                        seed=seed,
                        n=n,
                    )


def write_measures_csv(rows: dict[str, np.ndarray], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", *COLUMNS])
        for i in range(len(rows["rh"])):
            w.writerow([i, *(repr(float(rows[c][i])) for c in COLUMNS)])


def write_summary_json(summary: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
