"""Command line interface: sweep, estimate, quantize, selftest."""

import argparse
import math
import sys
import tempfile
from dataclasses import fields
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError
from .harness import (
    EXIT_FATAL,
    ExperimentConfig,
    QuantizeSpec,
    ingest_csv,
    quantize_returns,
    run_experiment,
)

_CONFIG_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {
    "T", "m", "n", "epochs", "batch_size", "outer_iterations", "phi_steps_per_iter",
    "refit_epochs", "trials", "base_seed", "workers",
}
_FLOAT_KEYS = {
    "rho", "lam", "noise_std", "clip_tau", "learning_rate", "train_fraction",
    "phi_learning_rate",
}


def load_config_file(path):
    """Parse a simple ``key = value`` config file; '#' starts a comment."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise ConfigurationError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = _coerce(key, value)
    return values


def _coerce(key, value):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "hidden_widths":
        return tuple(int(v) for v in value.split(",") if v.strip())
    if key == "sweep_values":
        return tuple(float(v) for v in value.split(",") if v.strip())
    return value


def _parse_sweep(text):
    if "=" not in text:
        raise ConfigurationError(f"--sweep expects 'param=v1,v2,...', got {text!r}")
    param, values = text.split("=", 1)
    return param.strip(), tuple(float(v) for v in values.split(",") if v.strip())


def _add_experiment_flags(parser, include_sweep):
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--source", choices=("threshold", "xor", "independent", "csv"))
    parser.add_argument("--rho", type=float)
    parser.add_argument("--lam", type=float)
    parser.add_argument("--noise-std", dest="noise_std", type=float)
    parser.add_argument("--T", type=int)
    parser.add_argument("--csv", dest="csv_path")
    parser.add_argument("--x-col", dest="x_col")
    parser.add_argument("--y-col", dest="y_col")
    parser.add_argument("-m", type=int, dest="m")
    parser.add_argument("-n", type=int, dest="n")
    parser.add_argument("--tau", dest="clip_tau", type=float)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--train-fraction", dest="train_fraction", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--hidden", dest="hidden_widths", type=lambda s: tuple(int(v) for v in s.split(",")))
    parser.add_argument("--optimizer", choices=("adam", "sgd"))
    parser.add_argument("--outer-iterations", dest="outer_iterations", type=int)
    parser.add_argument("--phi-steps", dest="phi_steps_per_iter", type=int)
    parser.add_argument("--phi-learning-rate", dest="phi_learning_rate", type=float)
    parser.add_argument("--phi-optimizer", dest="phi_optimizer", choices=("adam", "sgd"))
    parser.add_argument("--refit-epochs", dest="refit_epochs", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", dest="base_seed", type=int)
    parser.add_argument("--units", choices=("nats", "bits"))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", dest="out_dir")
    if include_sweep:
        parser.add_argument("--sweep", help="parameter sweep, e.g. 'lam=-3,-1,0,1,3'")


def _build_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key in _CONFIG_FIELDS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    sweep = getattr(args, "sweep", None)
    if sweep:
        param, sweep_values = _parse_sweep(sweep)
        values["sweep_param"] = param
        values["sweep_values"] = sweep_values
    return ExperimentConfig(**values)


def _report(result):
    factor = 1.0 / math.log(2.0) if result.config.units == "bits" else 1.0
    unit = result.config.units
    for entry in result.summary:
        point = "" if entry["sweep_value"] is None else f"{result.config.sweep_param}={entry['sweep_value']:g} "
        line = (
            f"{point}te={entry['te_median'] * factor:.4f} "
            f"ite={entry['ite_median'] * factor:.4f} "
            f"ste={entry['ste_median'] * factor:.4f} {unit} "
            f"(min/max te {entry['te_min'] * factor:.4f}/{entry['te_max'] * factor:.4f})"
        )
        if "oracle_te_nats" in entry:
            line += f" oracle={entry['oracle_te_nats'] * factor:.4f}"
        print(line)


def _cmd_run(args):
    config = _build_config(args)
    result = run_experiment(config, out_dir=config.out_dir)
    _report(result)
    print(f"reports written to {Path(config.out_dir).resolve()} "
          f"({result.wall_clock_seconds:.1f}s)")
    return result.exit_code


def _cmd_quantize(args):
    spec = QuantizeSpec(up_threshold=args.up, down_threshold=args.down)
    try:
        prices = ingest_csv(args.input, args.column, args.column).x
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FATAL
    try:
        levels = quantize_returns(prices, spec)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FATAL
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("level\n")
        for v in levels:
            fh.write(f"{v:.1f}\n")
    counts = {int(k): int(v) for k, v in zip(*np.unique(levels, return_counts=True))}
    print(f"wrote {len(levels)} levels to {args.out} (counts: {counts})")
    return 0


def _cmd_selftest(args):
    out_dir = args.out or tempfile.mkdtemp(prefix="infoflow-selftest-")
    config = ExperimentConfig(
        source="threshold", rho=0.9, lam=0.0, T=500, trials=1, base_seed=0,
        epochs=30, outer_iterations=3, phi_steps_per_iter=2, refit_epochs=5,
        out_dir=out_dir,
    )
    result = run_experiment(config, out_dir=out_dir)
    ok = result.exit_code == 0 and all(r["error"] is None for r in result.rows)
    for row in result.rows:
        print(
            f"selftest trial {row['trial']}: te={row['te_nats']:.4f} "
            f"ite={row['ite_nats']:.4f} ste={row['ste_nats']:.4f}"
        )
    print(f"selftest {'PASS' if ok else 'FAIL'} ({result.wall_clock_seconds:.1f}s, reports in {out_dir})")
    return 0 if ok else EXIT_FATAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="infoflow",
        description="Neural estimation of transfer entropy and its intrinsic part.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep over seeded trials")
    _add_experiment_flags(p_sweep, include_sweep=True)
    p_sweep.set_defaults(func=_cmd_run)

    p_est = sub.add_parser("estimate", help="estimate one configuration over seeded trials")
    _add_experiment_flags(p_est, include_sweep=False)
    p_est.set_defaults(func=_cmd_run)

    p_q = sub.add_parser("quantize", help="quantize a price series into levels {-1, 0, +1}")
    p_q.add_argument("--input", required=True, help="CSV file with a header")
    p_q.add_argument("--column", required=True, help="price column name")
    p_q.add_argument("--out", required=True, help="output CSV path")
    p_q.add_argument("--up", type=float, default=0.008)
    p_q.add_argument("--down", type=float, default=-0.008)
    p_q.set_defaults(func=_cmd_quantize)

    p_self = sub.add_parser("selftest", help="tiny end-to-end smoke run")
    p_self.add_argument("--out", help="report directory (default: temp dir)")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
