"""Command line front end.

Machine-readable output goes to files in ``--output``; stdout gets a single
summary line and diagnostics go to stderr. Exit codes: 0 success,
1 invalid data, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from exactsed import __version__, errors, metrics, oracle
from exactsed.core import CollarParams, IntersectionParams, PsdsParams
from exactsed.detection import median_filter
from exactsed.engine import statistics_curves
from exactsed.io import CurveReport, dataset_fingerprint, load_dataset, write_report

log = logging.getLogger("exactsed")

COMMANDS = ("validate", "psds", "psd-roc", "pr-curve", "best-threshold",
            "compare-approx", "segment-roc")


class UsageError(Exception):
    pass


def parse_grid(spec: str) -> np.ndarray:
    """``linear:N:LO:HI`` or a comma-separated list of thresholds."""
    try:
        if spec.startswith("linear:"):
            _, n, lo, hi = spec.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), n)
        values = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --grid {spec!r}; use linear:N:LO:HI or a comma list") from None
    if not values:
        raise UsageError("--grid is empty")
    return np.array(values)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    data = common.add_argument_group("dataset")
    data.add_argument("--scores", required=True, help="directory of <clip_id>.tsv score files")
    data.add_argument("--gt", required=True, help="ground-truth TSV")
    data.add_argument("--durations", required=True, help="clip durations TSV")
    data.add_argument("--median-filter", type=_positive_int, default=1, metavar="FRAMES",
                      help="odd median filter width applied to scores first (1 = off)")
    run = common.add_argument_group("run")
    run.add_argument("--output", default=".", help="output directory")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--jobs", type=_positive_int, default=1)
    run.add_argument("--mode", choices=("collar", "intersection"), default="collar",
                     help="matching criterion for pr-curve / best-threshold")
    col = common.add_argument_group("collar")
    col.add_argument("--collar", type=float, default=0.2, help="onset collar in seconds")
    col.add_argument("--offset-collar-rate", type=float, default=0.2)
    col.add_argument("--offset-collar-min", type=float, default=None,
                     help="minimum offset collar (defaults to --collar)")
    inter = common.add_argument_group("intersection / PSDS")
    inter.add_argument("--dtc", type=float, default=0.7)
    inter.add_argument("--gtc", type=float, default=0.7)
    inter.add_argument("--cttc", type=float, default=0.3)
    inter.add_argument("--alpha-ct", type=float, default=0.0)
    inter.add_argument("--alpha-st", type=float, default=1.0)
    inter.add_argument("--max-efpr", type=float, default=100.0)
    inter.add_argument("--unit-of-time", choices=("second", "minute", "hour"), default="hour")
    inter.add_argument("--clip-negative-etpr", action="store_true")
    other = common.add_argument_group("other")
    other.add_argument("--grid", default="linear:50:0.01:0.99",
                       help="thresholds for compare-approx")
    other.add_argument("--segment-length", type=float, default=1.0)
    other.add_argument("--fixed-threshold", type=float, default=0.5,
                       help="reference threshold reported by best-threshold")

    parser = argparse.ArgumentParser(
        prog="exactsed",
        description="Exact threshold-independent sound event detection evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check a dataset and print diagnostics",
        "psds": "exact PSDS report (JSON)",
        "psd-roc": "exact PSD-ROC curve",
        "pr-curve": "collar- or intersection-based PR/F1 curve per class",
        "best-threshold": "per-class F1-optimal threshold",
        "compare-approx": "exact PSDS against a threshold-grid approximation",
        "segment-roc": "segment-based ROC per class",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _params(args):
    try:
        collar = CollarParams(args.collar, args.offset_collar_rate, args.offset_collar_min)
        inter = IntersectionParams(args.dtc, args.gtc, args.cttc)
        psds = PsdsParams(args.alpha_ct, args.alpha_st, args.max_efpr, args.unit_of_time,
                          args.clip_negative_etpr)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.segment_length <= 0:
        raise UsageError("--segment-length must be positive")
    if args.median_filter % 2 == 0:
        raise UsageError("--median-filter must be odd")
    return collar, inter, psds


def _metadata(args, dataset, **params) -> dict:
    meta = {
        "command": args.command,
        "version": __version__,
        "dataset": {
            "fingerprint": dataset_fingerprint(dataset),
            "clips": len(dataset.clips),
            "classes": list(dataset.class_names),
            "total_duration": dataset.total_duration,
        },
        "median_filter": args.median_filter,
    }
    for key, value in params.items():
        meta[key] = dataclasses.asdict(value) if dataclasses.is_dataclass(value) else value
    return meta


def _write(report: CurveReport, out_dir: Path, stem: str, fmt: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    path.write_text(write_report(report, fmt), encoding="utf-8")
    if fmt == "csv":
        sidecar = CurveReport(report.kind, (), metadata=report.metadata, extra=report.extra)
        (out_dir / f"{stem}.meta.json").write_text(write_report(sidecar, "json"),
                                                   encoding="utf-8")
    return path


def psd_roc_report(roc: metrics.PsdRoc, value: float, rocs: dict, meta: dict) -> CurveReport:
    points = []
    for i, e in enumerate(roc.efpr):
        point = {"efpr": e, "etpr": roc.etpr[i], "mu_tpr": roc.mu[i], "sigma_tpr": roc.sigma[i]}
        for k, name in enumerate(roc.class_names):
            point[f"tpr[{name}]"] = roc.class_tpr[k, i]
        points.append(point)
    columns = ("efpr", "etpr", "mu_tpr", "sigma_tpr") + tuple(f"tpr[{c}]" for c in roc.class_names)
    extra = {
        "psds": value,
        "efpr": roc.efpr,
        "etpr": roc.etpr,
        "class_envelopes": {
            name: {"efpr": r.envelope_efpr, "tpr": r.envelope_tpr} for name, r in rocs.items()
        },
    }
    return CurveReport("psd_roc", columns, points, meta, extra, sort_key=("efpr",))


def _exact_psds(dataset, inter, psds_params, jobs):
    curves = statistics_curves(dataset, "intersection", inter, jobs=jobs)
    rocs = metrics.class_rocs(curves, psds_params)
    roc = metrics.psd_roc(rocs, psds_params)
    return metrics.psds(roc, psds_params), roc, rocs


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        collar, inter, psds_params = _params(args)
        for flag in ("scores", "gt", "durations"):
            if not Path(getattr(args, flag)).exists():
                raise UsageError(f"--{flag}: {getattr(args, flag)} does not exist")
        grid = parse_grid(args.grid) if args.command == "compare-approx" else None
    except UsageError as exc:
        parser.error(str(exc))

    out_dir = Path(args.output)
    try:
        dataset = load_dataset(args.scores, args.gt, args.durations, jobs=args.jobs)
        if args.median_filter > 1:
            dataset = dataset.map_timelines(lambda t: median_filter(t, args.median_filter))
        return _dispatch(args, dataset, collar, inter, psds_params, grid, out_dir)
    except errors.ValidationError as exc:
        print(f"exactsed: validation failed: {exc}", file=sys.stderr)
        return 1
    except errors.EvaluationError as exc:
        print(f"exactsed: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, dataset, collar, inter, psds_params, grid, out_dir) -> int:
    command = args.command
    if command == "validate":
        classes = dataset.class_names
        print(f"clips: {len(dataset.clips)}", file=sys.stderr)
        print(f"classes: {', '.join(classes)}", file=sys.stderr)
        print(f"total duration: {dataset.total_duration:g} s", file=sys.stderr)
        for name in classes:
            events = dataset.events_of(name)
            print(f"  {name}: {len(events)} events, {dataset.gt_duration(name):g} s",
                  file=sys.stderr)
        empty = [cid for cid, clip in dataset.clips.items() if not clip.events]
        if empty:
            print(f"clips without ground truth: {len(empty)}", file=sys.stderr)
        print(f"ok: {len(dataset.clips)} clips, {len(classes)} classes, "
              f"{dataset.total_duration:g} s")
        return 0

    if command in ("psds", "psd-roc"):
        value, roc, rocs = _exact_psds(dataset, inter, psds_params, args.jobs)
        meta = _metadata(args, dataset, intersection=inter, psds=psds_params)
        report = psd_roc_report(roc, value, rocs, meta)
        if command == "psds":
            path = _write(report, out_dir, "psds", "json")
        else:
            path = _write(report, out_dir, "psd_roc", args.format)
        print(f"psds={value:.6f} -> {path}")
        return 0

    if command in ("pr-curve", "best-threshold"):
        params = collar if args.mode == "collar" else inter
        curves = statistics_curves(dataset, args.mode, params, jobs=args.jobs)
        meta = _metadata(args, dataset, mode=args.mode, **{args.mode: params})
        if command == "pr-curve":
            points = []
            for name, curve in curves.items():
                if curve.n_gp == 0:
                    log.warning("class %r has no ground truth; skipped", name)
                    continue
                pr = metrics.pr_f1_curve(curve)
                for k in range(len(pr.f1)):
                    points.append({
                        "class": name, "threshold": pr.thresholds[k],
                        "precision": pr.precision[k], "recall": pr.recall[k], "f1": pr.f1[k],
                        "n_tp": curve.n_tp[k], "n_fp": curve.n_fp[k],
                    })
            report = CurveReport(
                "pr", ("class", "threshold", "precision", "recall", "f1", "n_tp", "n_fp"),
                points, meta, sort_key=("class", "threshold"),
            )
            path = _write(report, out_dir, "pr_curve", args.format)
            print(f"pr curves for {len({p['class'] for p in points})} classes -> {path}")
            return 0
        rows = []
        for name, curve in curves.items():
            if curve.n_gp == 0:
                log.warning("class %r has no ground truth; skipped", name)
                continue
            tau, f1 = metrics.best_threshold(metrics.pr_f1_curve(curve))
            rows.append({"class": name, "threshold": tau, "f1": f1,
                         "f1_fixed": metrics.f1_at(curve, args.fixed_threshold)})
        if not rows:
            raise errors.NoGroundTruth("no class has ground truth")
        macro = float(np.mean([r["f1"] for r in rows]))
        macro_fixed = float(np.mean([r["f1_fixed"] for r in rows]))
        meta["fixed_threshold"] = args.fixed_threshold
        report = CurveReport("summary", ("class", "threshold", "f1", "f1_fixed"), rows, meta,
                             {"macro_f1": macro, "macro_f1_fixed": macro_fixed},
                             sort_key=("class",))
        path = _write(report, out_dir, "best_threshold", args.format)
        print(f"macro_f1={macro:.6f} (fixed {args.fixed_threshold:g}: {macro_fixed:.6f}) -> {path}")
        return 0

    if command == "compare-approx":
        exact, _, _ = _exact_psds(dataset, inter, psds_params, args.jobs)
        approx, _ = oracle.approx_psds(dataset, grid, inter, psds_params)
        meta = _metadata(args, dataset, intersection=inter, psds=psds_params, grid=args.grid)
        report = CurveReport(
            "summary", ("threshold",), [{"threshold": t} for t in grid], meta,
            {"exact_psds": exact, "approx_psds": approx, "difference": exact - approx},
            sort_key=("threshold",),
        )
        path = _write(report, out_dir, "compare_approx", "json")
        print(f"exact={exact:.6f} approx={approx:.6f} diff={exact - approx:.6f} -> {path}")
        return 0

    if command == "segment-roc":
        curves = statistics_curves(dataset, "segment", segment_length=args.segment_length,
                                   jobs=args.jobs)
        meta = _metadata(args, dataset, segment_length=args.segment_length)
        points, areas = [], {}
        for name, curve in curves.items():
            if curve.n_gp == 0:
                log.warning("class %r has no positive segments; skipped", name)
                continue
            fpr, tpr, taus = metrics.segment_roc(curve)
            areas[name] = metrics.auc(np.column_stack([fpr, tpr]), 1.0)
            points += [{"class": name, "fpr": f, "tpr": t, "threshold": tau}
                       for f, t, tau in zip(fpr, tpr, taus)]
        report = CurveReport("roc", ("class", "fpr", "tpr", "threshold"), points, meta,
                             {"auc": areas}, sort_key=("class", "fpr", "tpr"))
        path = _write(report, out_dir, "segment_roc", args.format)
        print(f"segment roc for {len(areas)} classes -> {path}")
        return 0

    raise AssertionError(command)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="exactsed: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
