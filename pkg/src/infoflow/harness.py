"""Batch experiment runner: seeded trials, sweeps, and CSV/JSON reports."""

import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .classifier_mi import MineConfig
from .embedding import EmbeddingConfig
from .exceptions import ConfigurationError, NumericError
from .intrinsic import IteneConfig, fit_itene
from .synthetic import (
    SeriesPair,
    ThresholdProcessSpec,
    closed_form_te,
    gen_independent,
    gen_threshold_process,
    gen_xor_process,
)
from .validation import STREAM_DATA, derive_seed

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2

SOURCES = ("threshold", "xor", "independent", "csv")


@dataclass(frozen=True)
class QuantizeSpec:
    """Three-level quantization thresholds on daily relative returns."""

    up_threshold: float = 0.008
    down_threshold: float = -0.008

    def __post_init__(self):
        if not (self.down_threshold < 0.0 < self.up_threshold):
            raise ConfigurationError(
                f"need down_threshold < 0 < up_threshold, got "
                f"({self.down_threshold}, {self.up_threshold})"
            )


def quantize_returns(prices, spec=None):
    """Map a price series to levels in {-1, 0, +1} by relative return.

    +1 for a relative daily gain strictly above the up threshold, -1 for
    a drop strictly below the down threshold, 0 otherwise. Output has
    one entry fewer than the input.
    """
    spec = spec or QuantizeSpec()
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 1 or len(prices) < 2:
        raise ValueError("need a 1-D price series of length >= 2")
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise ValueError("prices must be positive and finite")
    returns = np.diff(prices) / prices[:-1]
    levels = np.zeros(len(returns))
    levels[returns > spec.up_threshold] = 1.0
    levels[returns < spec.down_threshold] = -1.0
    return levels


def ingest_csv(path, x_col, y_col, min_rows=2):
    """Read two named columns from a delimited text file into a SeriesPair.

    Rows must be in time order; blank lines and unparseable cells are
    rejected with their line number.
    """
    path = Path(path)
    xs, ys = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        for col in (x_col, y_col):
            if col not in header:
                raise ValueError(f"{path}: column {col!r} not found in header {header}")
        ix, iy = header.index(x_col), header.index(y_col)
        for line_no, row in enumerate(reader, start=2):
            if len(row) == 0 or all(cell.strip() == "" for cell in row):
                raise ValueError(f"{path}: blank line at line {line_no}")
            try:
                xs.append(float(row[ix]))
                ys.append(float(row[iy]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}: unparseable row at line {line_no}: {row!r}") from None
    if len(xs) < min_rows:
        raise ValueError(f"{path}: only {len(xs)} rows, need at least {min_rows}")
    return SeriesPair(np.asarray(xs), np.asarray(ys))


def write_series_csv(pair, path):
    """Write a SeriesPair in the same schema ingest_csv reads (columns x, y)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y\n")
        for a, b in zip(pair.x, pair.y):
            fh.write(f"{format(a, '.17g')},{format(b, '.17g')}\n")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything describing one batch run."""

    source: str = "threshold"
    rho: float = 0.9
    lam: float = 0.0
    noise_std: float = 0.05
    T: int = 20000
    csv_path: str | None = None
    x_col: str = "x"
    y_col: str = "y"
    m: int = 1
    n: int = 1
    clip_tau: float = 0.9
    learning_rate: float = 0.001
    train_fraction: float = 0.75
    epochs: int = 200
    batch_size: int = 256
    hidden_widths: tuple = (100, 100)
    optimizer: str = "adam"
    outer_iterations: int = 25
    phi_steps_per_iter: int = 5
    phi_learning_rate: float = 0.03
    phi_optimizer: str = "adam"
    refit_epochs: int = 20
    trials: int = 10
    base_seed: int = 0
    sweep_param: str | None = None
    sweep_values: tuple = ()
    units: str = "nats"
    workers: int = 1
    out_dir: str = "."

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ConfigurationError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.source == "csv" and not self.csv_path:
            raise ConfigurationError("csv source needs csv_path")
        if self.sweep_param is not None:
            if self.source == "csv":
                raise ConfigurationError("sweeps are only supported for generator sources")
            if self.sweep_param not in ("lam", "rho", "T"):
                raise ConfigurationError(f"sweep_param must be lam, rho or T, got {self.sweep_param!r}")
            values = tuple(float(v) for v in self.sweep_values)
            if len(values) == 0 or not np.all(np.isfinite(values)):
                raise ConfigurationError("sweep_values must be nonempty and finite")
            object.__setattr__(self, "sweep_values", values)
        if self.units not in ("nats", "bits"):
            raise ConfigurationError("units must be 'nats' or 'bits'")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def mine_config(self):
        return MineConfig(
            hidden_widths=tuple(self.hidden_widths),
            clip_tau=self.clip_tau,
            learning_rate=self.learning_rate,
            train_fraction=self.train_fraction,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
        )

    def itene_config(self):
        return IteneConfig(
            outer_iterations=self.outer_iterations,
            phi_steps_per_iter=self.phi_steps_per_iter,
            phi_learning_rate=self.phi_learning_rate,
            phi_optimizer=self.phi_optimizer,
            refit_epochs=self.refit_epochs,
        )


def _point_config(config, value):
    if config.sweep_param is None:
        return config
    if config.sweep_param == "T":
        return replace(config, T=int(value), sweep_param=None, sweep_values=())
    return replace(config, **{config.sweep_param: float(value)}, sweep_param=None, sweep_values=())


def _generate(config, seed):
    data_seed = derive_seed(seed, STREAM_DATA)
    if config.source == "threshold":
        return gen_threshold_process(
            ThresholdProcessSpec(config.rho, config.lam, config.T, seed=data_seed)
        )
    if config.source == "xor":
        return gen_xor_process(config.noise_std, config.T, seed=data_seed)
    if config.source == "independent":
        return gen_independent(config.T, seed=data_seed)
    pair = ingest_csv(config.csv_path, config.x_col, config.y_col)
    return pair


def _oracle(config):
    if config.source == "threshold":
        return closed_form_te(config.rho, config.lam)
    return None


def run_trial(config, sweep_value, trial):
    """One seeded trial at one sweep point; returns a report row dict."""
    point = _point_config(config, sweep_value) if sweep_value is not None else config
    seed = point.base_seed + trial
    row = {"sweep_value": sweep_value, "trial": trial, "seed": seed}
    try:
        pair = _generate(point, seed)
        flows = fit_itene(
            pair.x,
            pair.y,
            embedding=EmbeddingConfig(point.m, point.n),
            mine=point.mine_config(),
            itene=point.itene_config(),
            rng_seed=seed,
        )
        row.update(
            te_nats=flows.te_nats, ite_nats=flows.ite_nats, ste_nats=flows.ste_nats, error=None
        )
    except (NumericError, ConfigurationError, ValueError) as err:
        row.update(te_nats=None, ite_nats=None, ste_nats=None, error=str(err))
    oracle = _oracle(point)
    if config.source == "threshold":
        row["oracle_te_nats"] = oracle
    return row


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    summary: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    exit_code: int = EXIT_OK


def run_experiment(config, out_dir=None, log=None):
    """Run all sweep points and trials, write reports, return the result.

    Failures in single trials are recorded and the run continues; the
    exit code is 1 if some trials failed and 2 if every trial of some
    sweep point failed.
    """
    log = log or (lambda msg: print(msg, file=sys.stderr))
    t0 = time.perf_counter()
    sweep_values = list(config.sweep_values) if config.sweep_param else [None]
    tasks = [(value, trial) for value in sweep_values for trial in range(config.trials)]
    if config.source == "csv":
        ingest_csv(config.csv_path, config.x_col, config.y_col)  # fail fast on bad input
    if config.workers > 1:
        rows = Parallel(n_jobs=config.workers, backend="loky")(
            delayed(run_trial)(config, value, trial) for value, trial in tasks
        )
    else:
        rows = [run_trial(config, value, trial) for value, trial in tasks]
    exit_code = EXIT_OK
    summary = []
    for value in sweep_values:
        point_rows = [r for r in rows if r["sweep_value"] == value]
        good = [r for r in point_rows if r["error"] is None]
        for r in point_rows:
            if r["error"] is not None:
                log(f"trial {r['trial']} at sweep={value} failed: {r['error']}")
        if not good:
            exit_code = EXIT_FATAL
            continue
        if len(good) < len(point_rows):
            exit_code = max(exit_code, EXIT_PARTIAL)
        entry = {"sweep_value": value}
        for key in ("te_nats", "ite_nats", "ste_nats"):
            vals = np.array([r[key] for r in good])
            stem = key[:-5]
            entry[f"{stem}_median"] = float(np.median(vals))
            entry[f"{stem}_min"] = float(np.min(vals))
            entry[f"{stem}_max"] = float(np.max(vals))
        if config.source == "threshold":
            entry["oracle_te_nats"] = good[0]["oracle_te_nats"]
        summary.append(entry)
    result = ExperimentResult(
        config=config,
        rows=rows,
        summary=summary,
        wall_clock_seconds=time.perf_counter() - t0,
        exit_code=exit_code,
    )
    if out_dir is not None:
        emit_report(result, out_dir)
    return result


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def emit_report(result, out_dir):
    """Write trials.csv, summary.csv and run.json into ``out_dir``.

    Column order is fixed, text is UTF-8 with LF line endings, and a
    rerun with an identical config produces byte-identical trials.csv.
    """
    if not result.rows:
        raise ValueError("no trial rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config
    oracle = config.source == "threshold"

    columns = ["sweep_value", "trial", "seed", "te_nats", "ite_nats", "ste_nats"]
    if oracle:
        columns.append("oracle_te_nats")
    with open(out / "trials.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in result.rows:
            fh.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")

    columns = ["sweep_value"]
    for stem in ("te", "ite", "ste"):
        columns += [f"{stem}_median", f"{stem}_min", f"{stem}_max"]
    if oracle:
        columns.append("oracle_te_nats")
    with open(out / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in result.summary:
            fh.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")

    failures = [
        {"sweep_value": r["sweep_value"], "trial": r["trial"], "error": r["error"]}
        for r in result.rows
        if r["error"] is not None
    ]
    meta = {
        "config": asdict(config),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
        "wall_clock_seconds": result.wall_clock_seconds,
        "exit_code": result.exit_code,
        "failures": failures,
        "estimate_units": "nats",
    }
    with open(out / "run.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
