"""``rhdetect`` command-line driver.

Every command writes its outputs plus a ``manifest.json`` into ``--out``
(default: ``$RHDETECT_OUT`` or ``./rhdetect-out``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("rhdetect")

OUT_ENV = "RHDETECT_OUT"
DEFAULT_OUT = "rhdetect-out"
DEFAULT_SEED = 20190501
_DURATION = re.compile(r"^\s*(\d+)\s*([smhd]?)\s*$")
_UNITS = {"": 1, "s": 1, "m": 60, "h": 3600, "d": 86400}


def duration(text: str) -> int:
    """Seconds from ``"20"``, ``"20s"``, ``"30m"``, ``"2h"`` or ``"1d"``."""
    m = _DURATION.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2)]


def _write_manifest(out: Path, args, started: float, inputs, outputs, extra=None) -> None:
    manifest = {
        "command": args.command,
        "config": str(getattr(args, "config", None) or ""),
        "seed": getattr(args, "seed", None),
        "inputs": [str(p) for p in inputs],
        "outputs": sorted(str(p) for p in outputs),
        "version": __version__,
        "duration_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    from dataclasses import replace

    from .scenario import MEASURES, load_config, run_scenario, write_measures_csv, write_summary_json
    from .scoring import roc_curve, write_roc_csv

    started = time.time()
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    args.seed = cfg.seed
    out = _out_dir(args)
    result = run_scenario(cfg)
    written = ["baseline.csv", "anomalous.csv", "scores.csv", "summary.json"]
    write_measures_csv(result.baseline, out / "baseline.csv")
    write_measures_csv(result.anomalous, out / "anomalous.csv")
    scores = result.scores() if cfg.trials else {m: np.empty(0) for m in MEASURES}
    with open(out / "scores.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", *MEASURES])
        for i in range(cfg.trials):
            w.writerow([i, *(repr(float(scores[m][i])) for m in MEASURES)])
    if cfg.trials:
        base = result.baseline_scores()
        for m in MEASURES:
            write_roc_csv(roc_curve(base[m], scores[m]), out / f"roc_{m}.csv")
            written.append(f"roc_{m}.csv")
    write_summary_json(result.summary(), out / "summary.json")
    _write_manifest(out, args, started, [args.config], written)
    print(f"wrote {len(written)} files to {out}")
    return 0


def cmd_ingest(args) -> int:
    from .ingest import ParseReport, build_windows, open_text, parse_events

    started = time.time()
    out = _out_dir(args)
    report = ParseReport()

    def events():
        for path in args.logs:
            with open_text(path) as fh:
                yield from parse_events(fh, args.modality, strict=args.strict_parse, report=report)

    span = None
    if args.span_start is not None or args.span_end is not None:
        if args.span_start is None or args.span_end is None:
            raise SystemExit("--span-start and --span-end go together")
        span = (args.span_start, args.span_end)
    seq = build_windows(events(), args.window, args.step, span=span, modality=args.modality)
    seq.save(out)
    extra = {
        "parse": {"lines": report.lines, "events": report.events, "filtered": report.filtered, "malformed": report.malformed},
        "windows": len(seq),
        "window": args.window,
        "step": args.step,
    }
    for lineno, msg in report.errors[:20]:
        log.warning("line %d: %s", lineno, msg)
    _write_manifest(out, args, started, args.logs, ["index.csv", "vocab.txt", "meta.json", "windows/"], extra)
    print(f"{len(seq)} windows, {report.events} events, {report.malformed} malformed lines skipped")
    return 0


def cmd_experiment(args) -> int:
    from .ingest import GraphSequence, InsufficientData, before_after_experiment, read_marks

    started = time.time()
    out = _out_dir(args)
    marks = read_marks(args.marks)
    rows = []
    for path in args.seq:
        seq = GraphSequence.load(path)
        for ell in args.ell:
            for delta in args.delta:
                row = {"modality": seq.modality, "ell": ell, "delta": delta}
                try:
                    res = before_after_experiment(seq, marks, ell, delta)
                    row.update(statistic=res.statistic, p_value=res.p_value, n_before=res.n, n_after=res.m, status="ok")
                except InsufficientData:
                    row.update(statistic="", p_value="", n_before=0, n_after=0, status="insufficient")
                rows.append(row)
    cols = ["modality", "ell", "delta", "statistic", "p_value", "n_before", "n_after", "status"]
    with open(out / "experiment.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    (out / "experiment.json").write_text(json.dumps(rows, indent=2) + "\n")
    _write_manifest(out, args, started, [*args.seq, args.marks], ["experiment.csv", "experiment.json"])
    print(f"{len(rows)} cells written to {out / 'experiment.csv'}")
    return 0


def cmd_heatmap(args) -> int:
    from .ingest import GraphSequence, pairwise_heatmap
    from .similarity import write_matrix_csv

    started = time.time()
    seq = GraphSequence.load(args.seq)
    try:
        starts, m, s = pairwise_heatmap(seq, args.start, args.end, sigma=args.sigma)
    except ValueError as exc:
        raise SystemExit(f"heatmap: {exc}")
    out = _out_dir(args)
    labels = [int(x) for x in starts]
    write_matrix_csv(m, labels, out / "rh_matrix.csv")
    write_matrix_csv(s, labels, out / "similarity.csv")
    _write_manifest(out, args, started, [args.seq], ["rh_matrix.csv", "similarity.csv"])
    print(f"{len(labels)}x{len(labels)} matrices written to {out}")
    return 0


def _read_column(path: str, column: str | None) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        return [], np.empty(0)
    try:
        float(rows[0][-1])
        header = None
    except ValueError:
        header, rows = rows[0], rows[1:]
    if column is None:
        idx = len(rows[0]) - 1 if rows else 0
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        raise SystemExit(f"{path}: no column {column!r}")
    keys = [r[0] if len(r) > 1 else str(i) for i, r in enumerate(rows)]
    return keys, np.array([float(r[idx]) for r in rows])


def cmd_score(args) -> int:
    from .scoring import EmpiricalDistribution, anomaly_score

    started = time.time()
    _, base = _read_column(args.baseline, args.column)
    if base.size == 0:
        raise SystemExit("score: empty baseline")
    keys, obs = _read_column(args.observations, args.column)
    out = _out_dir(args)
    scores = anomaly_score(EmpiricalDistribution(base), obs) if obs.size else np.empty(0)
    with open(out / "scored.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value", "score"])
        for k, v, s in zip(keys, obs, scores):
            w.writerow([k, repr(float(v)), repr(float(s))])
    _write_manifest(out, args, started, [args.baseline, args.observations], ["scored.csv"])
    print(f"scored {obs.size} observations against {base.size} baseline values")
    return 0


def cmd_temporal(args) -> int:
    from .ingest import GraphSequence, read_marks
    from .temporal import profile_report, temporal_profile, write_report

    started = time.time()
    seqs = {}
    for path in args.seq:
        seq = GraphSequence.load(path)
        seqs[seq.modality or Path(path).name] = seq
    marks = read_marks(args.marks) if args.marks else None
    times = list(args.time or [])
    if args.start is not None and args.end is not None:
        step = next(iter(seqs.values())).step
        times.extend(range(args.start, args.end, step))
    if not times:
        raise SystemExit("temporal: give --time or --start/--end")
    out = _out_dir(args)
    reports = []
    for t in times:
        prof = temporal_profile(seqs, t, args.delta, period=args.period, slack=args.slack, marks=marks, min_baseline=args.min_baseline)
        reports.append(profile_report(prof))
    write_report(reports, out / "temporal.json")
    with open(out / "temporal_scores.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "score"])
        for r in reports:
            w.writerow([r["t"], "" if r["score"] is None else repr(float(r["score"]))])
    _write_manifest(out, args, started, [*args.seq, *([args.marks] if args.marks else [])], ["temporal.json", "temporal_scores.csv"])
    print(f"scored {len(reports)} timestamps")
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .ingest import MODALITIES

    p = argparse.ArgumentParser(prog="rhdetect", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    sp = sub.add_parser("simulate", help="run one HLM anomaly scenario")
    sp.add_argument("--config", required=True, help="INI file with a [scenario] section")
    sp.add_argument("--seed", type=int, default=None, help=f"override the config seed (config default {DEFAULT_SEED})")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ingest", help="parse event logs into a window graph sequence")
    sp.add_argument("logs", nargs="+", help="log files (.gz/.bz2 accepted)")
    sp.add_argument("--modality", required=True, type=lambda s: s.strip().lower(), choices=[m.lower() for m in MODALITIES])
    sp.add_argument("--window", type=duration, default=60)
    sp.add_argument("--step", type=duration, default=20)
    sp.add_argument("--span-start", type=int, default=None)
    sp.add_argument("--span-end", type=int, default=None)
    sp.add_argument("--strict-parse", action="store_true", help="abort on the first malformed line")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("experiment", help="before/after red-team KS table")
    sp.add_argument("--seq", action="append", required=True, help="sequence directory (repeatable)")
    sp.add_argument("--marks", required=True, help="CSV of mark timestamps")
    sp.add_argument("--ell", action="append", type=duration, required=True, help="window length, e.g. 30m (repeatable)")
    sp.add_argument("--delta", action="append", type=duration, required=True, help="lag, e.g. 20s (repeatable)")
    common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("heatmap", help="pairwise RH and similarity matrices")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--start", type=int, default=None, help="first window start (inclusive)")
    sp.add_argument("--end", type=int, default=None, help="last window start (exclusive)")
    sp.add_argument("--sigma", type=float, default=1.0)
    common(sp)
    sp.set_defaults(func=cmd_heatmap)

    sp = sub.add_parser("score", help="anomaly scores of observations against a baseline")
    sp.add_argument("--baseline", required=True)
    sp.add_argument("--observations", required=True)
    sp.add_argument("--column", default=None, help="column name (default: last column)")
    common(sp)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("temporal", help="temporal scores over several sequences and lags")
    sp.add_argument("--seq", action="append", required=True)
    sp.add_argument("--marks", default=None)
    sp.add_argument("--delta", action="append", type=duration, required=True)
    sp.add_argument("--time", action="append", type=int)
    sp.add_argument("--start", type=int, default=None)
    sp.add_argument("--end", type=int, default=None)
    sp.add_argument("--period", type=duration, default=7 * 86400)
    sp.add_argument("--slack", type=duration, default=600)
    sp.add_argument("--min-baseline", type=int, default=5)
    common(sp)
    sp.set_defaults(func=cmd_temporal)
    return p


def main(argv=None) -> int:
    from .scenario import ConfigError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if getattr(args, "modality", None):
        from .ingest import canonical_modality

        args.modality = canonical_modality(args.modality)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"rhdetect: config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"rhdetect: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
