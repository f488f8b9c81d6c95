"""tapkin command line: batch processing, report tables, and SVG plots.

Exit codes: 0 success, 2 input/validation error, 3 internal invariant
violation.  Every command is deterministic given its inputs, flags, and seeds.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cycles as cyc
from . import landmarks as lm
from . import reports, signal, svgplot, synthlab
from .errors import TapkinError
from .features import extract_features, write_feature_doc


def _read_config_file(path) -> dict[str, str]:
    """key = value document; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("["):
            continue
        key, sep, val = line.partition("=")
        if sep:
            out[key.strip()] = val.strip()
    return out


def _setting(args, config: dict[str, str], name: str, cast, default):
    """Flag value if given, else config-file value, else default."""
    flag_val = getattr(args, name, None)
    if flag_val is not None:
        return flag_val
    if name in config:
        raw = config[name]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _sniff_input(path: Path) -> str:
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            return "landmarks" if line.startswith("{") else "annotations"
    raise TapkinError(f"{path}: empty input file")


def _pipeline_config(args, config) -> signal.PipelineConfig:
    return signal.PipelineConfig(
        target_fs=_setting(args, config, "resample_fps", float, None),
        window_samples=_setting(args, config, "smooth_window", int, None),
        poly_order=_setting(args, config, "poly_order", int, signal.DEFAULT_POLY_ORDER),
        dedupe=bool(_setting(args, config, "dedupe", bool, False)),
        normalize=not getattr(args, "no_normalize", False)
        and bool(_setting(args, config, "normalize", bool, True)),
    )


def _load_signal_for_analysis(path: Path, args, config):
    """Distance CSV is taken as-is; landmark/annotation files run the pipeline."""
    if path.suffix == ".csv" and _is_distance_csv(path):
        sig = signal.read_distance_csv(path)
        window, order = sig.provenance.smoothed or (
            signal.default_window_samples(sig.fs),
            signal.DEFAULT_POLY_ORDER,
        )
        velocity = signal.savgol_derivative(sig.values, window, order, 1, sig.fs)
        acceleration = signal.savgol_derivative(velocity, window, order, 1, sig.fs)
        jerk = signal.savgol_derivative(acceleration, window, order, 1, sig.fs)
        return sig, signal.DerivativeSet(velocity, acceleration, jerk)
    source = _read_movement_file(path)
    return signal.pipeline(source, _pipeline_config(args, config))


def _is_distance_csv(path: Path) -> bool:
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            return line == "t,value"
    return False


def _read_movement_file(path: Path):
    kind = _sniff_input(path)
    if kind == "landmarks":
        return lm.read_landmark_file(path)
    return lm.read_annotation_file(path)


# --- subcommands ------------------------------------------------------------------


def cmd_distance(args) -> int:
    config = _read_config_file(args.config) if args.config else {}
    source = _read_movement_file(Path(args.input))
    sig, _ = signal.pipeline(source, _pipeline_config(args, config))
    signal.write_distance_csv(sig, args.output)
    return 0


def cmd_cycles(args) -> int:
    config = _read_config_file(args.config) if args.config else {}
    sig = signal.read_distance_csv(Path(args.input))
    if args.annotations:
        marks = cyc.read_cycle_annotations(args.annotations)
        cycles = cyc.import_cycles(sig, marks)
    else:
        cycles = cyc.detect_cycles(
            sig,
            min_prominence=_setting(args, config, "min_prominence", float, cyc.DEFAULT_MIN_PROMINENCE),
            min_separation_fraction=_setting(
                args, config, "min_separation", float, cyc.DEFAULT_MIN_SEPARATION_FRACTION
            ),
        )
    cyc.write_cycles_csv(cycles, args.output)
    return 0


def cmd_features(args) -> int:
    config = _read_config_file(args.config) if args.config else {}
    path = Path(args.input)
    sig, derivs = _load_signal_for_analysis(path, args, config)
    if args.cycles == "auto":
        cycles = cyc.detect_cycles(
            sig,
            min_prominence=_setting(args, config, "min_prominence", float, cyc.DEFAULT_MIN_PROMINENCE),
            min_separation_fraction=_setting(
                args, config, "min_separation", float, cyc.DEFAULT_MIN_SEPARATION_FRACTION
            ),
        )
    else:
        marks = cyc.read_cycle_annotations(args.cycles)
        cycles = cyc.import_cycles(sig, marks)
    fv = extract_features(sig, derivs, cycles)
    meta = {
        "source_file": path.name,
        "cycles_source": cycles.source,
        "subject_id": args.subject,
        "hand": args.hand,
        "condition": args.condition,
        "stim_state": args.stim_state,
    }
    write_feature_doc(fv, meta, args.output)
    return 0


def _read_manifest(path: Path) -> list[dict[str, str]]:
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"truth_path", "estimate_path", "condition", "subject", "hand"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise TapkinError(
                f"{path}: manifest header must be truth_path,estimate_path,condition,subject,hand"
            )
        rows.extend(reader)
    if not rows:
        raise TapkinError(f"{path}: manifest has no rows")
    return rows


def cmd_accuracy(args) -> int:
    config = _read_config_file(args.config) if args.config else {}
    manifest_path = Path(args.manifest)
    pairs = _read_manifest(manifest_path)
    alpha = _setting(args, config, "alpha", float, 0.05)
    t_variant = _setting(args, config, "t_variant", str, "welch")

    rows = []
    overlays = []
    for entry in pairs:
        truth_path = _resolve(manifest_path, entry["truth_path"])
        est_path = _resolve(manifest_path, entry["estimate_path"])
        truth_sig, truth_der = _load_signal_for_analysis(truth_path, args, config)
        est_sig, _ = _load_signal_for_analysis(est_path, args, config)
        r2 = synthlab.aligned_r2(truth_sig, est_sig)
        rows.append(
            reports.AccuracyRow(
                recording_id=est_path.stem,
                condition=entry["condition"],
                subject=entry["subject"],
                hand=entry["hand"],
                max_speed=float(np.abs(truth_der.velocity).max()),
                r2=r2,
            )
        )
        overlays.append((est_path.stem, truth_sig, est_sig))

    report = reports.build_accuracy_report(
        rows, alpha=alpha, t_variant=t_variant,
        with_speed_correlation=args.speed_correlation,
    )
    reports.write_accuracy_csv(report, args.output)

    if args.plots:
        plots = Path(args.plots)
        plots.mkdir(parents=True, exist_ok=True)
        groups = {}
        for s in report.summaries:
            sel = [r for r in report.rows if r.condition == s.condition]
            groups[s.condition] = (
                [r.max_speed for r in sel],
                [r.r2 for r in sel],
            )
        (plots / "speed_vs_r2.svg").write_text(
            svgplot.svg_scatter(
                groups, "Maximum speed vs R2", "maximum speed (1/s)", "R2 score"
            ),
            encoding="utf-8",
        )
        for rec_id, truth_sig, est_sig in overlays:
            doc = svgplot.svg_lines(
                {
                    "reference": (truth_sig.times().tolist(), truth_sig.values.tolist()),
                    "estimate": (est_sig.times().tolist(), est_sig.values.tolist()),
                },
                f"Distance overlay: {rec_id}",
                "time (s)",
                "normalized distance",
            )
            (plots / f"overlay_{rec_id}.svg").write_text(doc, encoding="utf-8")
    _print_accuracy(report)
    return 0


def _resolve(manifest_path: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else manifest_path.parent / p


def _print_accuracy(report: reports.AccuracyReport) -> None:
    print("condition            n   R2 mean +- std        normal")
    for s in report.summaries:
        print(
            f"{s.condition:20s} {s.n:3d} {s.mean_r2:8.4f} +- {s.std_r2:7.4f}   "
            f"{'yes' if s.normal else 'no'}"
        )
    if report.comparison is not None:
        c = report.comparison
        print(
            f"comparison ({c.gate}): statistic={c.test.statistic:.6g} "
            f"p={c.test.p_value:.6g}"
        )
    if report.speed_correlation is not None:
        sc = report.speed_correlation
        print(f"speed vs R2 (spearman): rho={sc.statistic:.4f} p={sc.p_value:.6g}")


def cmd_reliability(args) -> int:
    truth = reports.read_feature_table(Path(args.truth))
    estimate = reports.read_feature_table(Path(args.estimate))
    keys = {}
    for spec_pair in args.key or []:
        k, _, v = spec_pair.partition("=")
        keys[k] = v
    report = reports.build_reliability_report(truth, estimate, keys)
    reports.write_reliability_csv(report, args.output)
    _print_reliability(report)
    return 0


def _print_reliability(report: reports.ReliabilityReport) -> None:
    for k in sorted(report.keys):
        print(f"{k}: {report.keys[k]}")
    print("feature            icc      raw_icc   label")
    for r in report.rows:
        print(f"{r.feature:16s} {r.icc:8.4f} {r.raw_icc:+9.4f}  {r.label}")


def cmd_synth(args) -> int:
    if args.preset not in synthlab.DEGRADATION_PRESETS:
        valid = ", ".join(sorted(synthlab.DEGRADATION_PRESETS))
        raise TapkinError(f"unknown preset {args.preset!r}; valid presets: {valid}")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    cfg = synthlab.SynthConfig(
        n_cycles=args.n_cycles,
        base_period=args.base_period,
        period_jitter_cv=args.period_jitter_cv,
        amp_decrement_per_cycle=args.amp_decrement,
        speed_decrement_per_cycle=args.speed_decrement,
        noise_sigma=args.noise_sigma,
        fs=args.fs,
        seed=args.seed,
    )
    rec = synthlab.generate(cfg)
    meta_clean = lm.SeriesMeta(
        subject_id=args.subject, hand="right", condition="synthetic", stim_state="none"
    )

    clean_samples = list(zip(rec.signal.times().tolist(), rec.signal.values.tolist()))
    lm.write_landmark_file(
        synthlab.to_landmark_series(clean_samples, cfg.fs, meta_clean),
        out / "clean_landmarks.jsonl",
    )

    pipe_cfg = signal.PipelineConfig(target_fs=cfg.fs)
    clean_sig, clean_der = signal.pipeline(clean_samples, pipe_cfg)
    signal.write_distance_csv(clean_sig, out / "clean_distance.csv")

    deg_cfg = replace(
        synthlab.DEGRADATION_PRESETS[args.preset], seed=args.seed + 1
    )
    deg_samples = synthlab.degrade(rec.signal, clean_der, deg_cfg)
    target_fps = deg_cfg.target_fps if deg_cfg.target_fps is not None else cfg.fs
    meta_deg = replace(meta_clean, condition="streaming")
    lm.write_landmark_file(
        synthlab.to_landmark_series(deg_samples, target_fps, meta_deg),
        out / "degraded_landmarks.jsonl",
    )
    deg_sig, _ = signal.pipeline(deg_samples, pipe_cfg)
    signal.write_distance_csv(deg_sig, out / "degraded_distance.csv")

    cyc.write_cycles_csv(rec.cycles, out / "truth_cycles.csv")
    write_feature_doc(
        rec.truth,
        {
            "subject_id": args.subject,
            "hand": "right",
            "condition": "synthetic",
            "stim_state": "none",
            "seed": str(args.seed),
            "preset": args.preset,
        },
        out / "truth_features.txt",
    )
    with (out / "manifest.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("truth_path,estimate_path,condition,subject,hand\n")
        fh.write(
            f"clean_distance.csv,degraded_distance.csv,streaming,{args.subject},right\n"
        )
    return 0


def cmd_report(args) -> int:
    path = Path(args.input)
    first = ""
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if "reliability" in first:
        report = reports.read_reliability_csv(path)
        _print_reliability(report)
        return 0
    rows, header = reports.read_accuracy_rows(path)
    alpha = float(header.get("alpha", ["0.05"])[0])
    rebuilt = reports.build_accuracy_report(
        rows,
        alpha=alpha,
        with_speed_correlation="speed_correlation" in header,
    )
    _print_accuracy(rebuilt)
    # a report must agree with its own stored summary block
    stored = [
        f"{s.condition},{s.n},{s.mean_r2!r},{s.std_r2!r},{s.shapiro_w!r},{s.shapiro_p!r},{s.normal}"
        for s in rebuilt.summaries
    ]
    if stored != header.get("summary", []):
        raise TapkinError(f"{path}: stored summaries do not match recomputation")
    return 0


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tapkin",
        description="Finger-tapping kinematics toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="key = value config file; flags override it")

    p = sub.add_parser("distance", help="landmarks/annotations -> distance CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--smooth-window", dest="smooth_window", type=int)
    p.add_argument("--poly-order", dest="poly_order", type=int)
    p.add_argument("--resample-fps", dest="resample_fps", type=float)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--dedupe", action="store_true", default=None)
    add_config(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("cycles", help="distance CSV -> peak/valley events CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--min-prominence", dest="min_prominence", type=float)
    p.add_argument("--min-separation", dest="min_separation", type=float)
    p.add_argument("--annotations", help="manual (t,kind) CSV; overrides detection")
    add_config(p)
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("features", help="distance CSV (or raw input) -> feature document")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--cycles", default="auto", help="'auto' or manual annotation CSV")
    p.add_argument("--min-prominence", dest="min_prominence", type=float)
    p.add_argument("--min-separation", dest="min_separation", type=float)
    p.add_argument("--subject", default="unknown")
    p.add_argument("--hand", default="right")
    p.add_argument("--condition", default="on_device")
    p.add_argument("--stim-state", dest="stim_state", default="none")
    add_config(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("accuracy", help="pairs manifest -> accuracy report (+SVGs)")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plots", help="directory for SVG plots")
    p.add_argument("--alpha", type=float)
    p.add_argument("--t-variant", dest="t_variant", choices=("welch", "pooled"))
    p.add_argument("--speed-correlation", action="store_true")
    add_config(p)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("reliability", help="two feature tables -> per-feature ICC report")
    p.add_argument("truth")
    p.add_argument("estimate")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--key", action="append", help="context key=value (repeatable)")
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("synth", help="generate a clean + degraded synthetic dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--preset", default="zoom-like")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subject", default="synth01")
    p.add_argument("--n-cycles", dest="n_cycles", type=int, default=30)
    p.add_argument("--base-period", dest="base_period", type=float, default=0.5)
    p.add_argument("--period-jitter-cv", dest="period_jitter_cv", type=float, default=0.03)
    p.add_argument("--amp-decrement", dest="amp_decrement", type=float, default=0.0)
    p.add_argument("--speed-decrement", dest="speed_decrement", type=float, default=0.0)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    p.add_argument("--fs", type=float, default=100.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="re-render and verify an emitted report CSV")
    p.add_argument("input")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (TapkinError, OSError, ValueError) as exc:
        print(f"tapkin: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - invariant violations
        print(f"tapkin: internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
