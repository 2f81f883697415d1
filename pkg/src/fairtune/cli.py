"""Command-line entry point.

Subcommands:
  run <config>              execute an experiment config, write the report
  synth <preset> <out.csv>  generate a preset dataset and save it as CSV
  audit <model> <data.csv>  evaluate a saved model on a CSV dataset

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .dataset import load_csv, save_csv
from .errors import ConfigError, DataError, FairtuneError, NumericError
from .experiment import emit_report, load_config, run_experiment
from .model import load_params, predict_proba
from .optimize import FairnessSpec, evaluate_model
from .synthgen import generate, preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _exit_code(exc: FairtuneError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return EXIT_DATA


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairtune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="path to a flat key=value config file")
    run.add_argument("--output-dir", default=None, help="override run.output_dir")
    run.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    run.add_argument("--seed", type=int, default=None, help="override train.seed (base seed)")

    synth = sub.add_parser("synth", help="generate a preset dataset as CSV")
    synth.add_argument("preset", help="preset name (sud-like, sepsis-like)")
    synth.add_argument("out", help="output CSV path")
    synth.add_argument("--seed", type=int, default=None, help="override the preset seed")

    audit = sub.add_parser("audit", help="evaluate a saved model on a CSV dataset")
    audit.add_argument("model", help="path to a saved model file")
    audit.add_argument("data", help="path to a CSV dataset")
    audit.add_argument("--label-column", default="y")
    audit.add_argument("--sensitive-columns", default="", help="comma-separated attribute names")
    audit.add_argument("--threshold", type=float, default=0.5)
    audit.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    audit.add_argument("--output-dir", default=None, help="unused; accepted for symmetry")
    audit.add_argument("--seed", type=int, default=None, help="unused; accepted for symmetry")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.output_dir is not None:
        config = replace(config, output_dir=args.output_dir)
    if args.seed is not None:
        config = replace(config, train=replace(config.train, seed=args.seed))
    report = run_experiment(config)
    paths = emit_report(report, config.output_dir, args.format)
    for path in paths:
        print(path)
    if report.errors:
        for token, message in report.errors.items():
            print(f"scenario {token} aborted: {message}", file=sys.stderr)
        first = next(iter(report.errors.values()))
        if first.startswith("ConfigError"):
            return EXIT_CONFIG
        if first.startswith("NumericError"):
            return EXIT_NUMERIC
        return EXIT_DATA
    return EXIT_OK


def _cmd_synth(args) -> int:
    config = preset(args.preset)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    data = generate(config)
    save_csv(data, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_audit(args) -> int:
    sensitive = [c.strip() for c in args.sensitive_columns.split(",") if c.strip()]
    if not sensitive:
        raise ConfigError("--sensitive-columns is required for audit")
    data = load_csv(args.data, args.label_column, sensitive)
    params = load_params(args.model)
    spec = FairnessSpec(attributes=tuple(sensitive), thresholds={})
    report = evaluate_model(params, data, spec, args.threshold)
    _, probs = predict_proba(params, data.features)
    rows = [
        ("auroc", report.auroc),
        ("sensitivity", report.sensitivity),
        ("specificity", report.specificity),
        ("mean_predicted_positive", float((probs >= args.threshold).mean())),
    ]
    for attr in sensitive:
        rows.append((f"eod_{attr}", report.eod_by_attribute[attr]))
        rows.append((f"dp_diff_{attr}", report.dp_diff[attr]))
        rows.append((f"eopp_diff_{attr}", report.eopp_diff[attr]))
        rows.append((f"calibration_gap_{attr}", report.calibration_gap[attr]))
    if args.format == "markdown":
        print("| metric | value |")
        print("|---|---|")
        for name, value in rows:
            print(f"| {name} | {value:.4f} |")
    else:
        print("metric,value")
        for name, value in rows:
            print(f"{name},{value:.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "synth": _cmd_synth, "audit": _cmd_audit}
    try:
        return handlers[args.command](args)
    except FairtuneError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
