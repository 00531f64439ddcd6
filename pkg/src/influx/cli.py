"""Command-line front end: per-stage analysis, JSON report, plot-data CSVs.

Subcommands mirror the pipeline stages (stats, regress, spectrum, arma,
forecast, factor, fractal, all).  Each stage contributes a keyed fragment to
``report.json`` and writes figure-ready CSVs; numbers are serialized with 12
significant digits so identical runs produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import arma, factor, fractal, ingest, regress, spectral, stats
from .errors import ConvergenceError, InfluxError

STAGES = ("stats", "regress", "spectrum", "arma", "forecast", "factor", "fractal")
FACTOR_METHODS = ("svd", "ppca", "ica", "ksvd")

DEFAULTS = {
    "column": "total",
    "out_dir": ".",
    "seed": 42,
    "interpolate": None,
    "bins": 6,
    "window": {"regress": 13, "spectrum": 20},
    "threshold": 9.5,
    "maxlag": 10,
    "orders": "21,1,1",
    "horizon": 7,
    "method": "all",
    "nonlinearity": "tanh",
    "mode": "symmetric",
    "dict_size": 11,
    "sparsity": 7,
    "q": 0.8,
}


def _round_sig(value: float, digits: int = 12):
    if not math.isfinite(value):
        return None
    if value == 0:
        return 0.0
    return float(f"{value:.{digits}g}")


def jsonify(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {key: jsonify(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round_sig(float(obj))
    return obj


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v
                             for v in row])


class RunConfig:
    """Resolved parameters: CLI flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace, file_config: dict):
        self._args = vars(args)
        self._file = file_config

    def get(self, key: str, stage: str | None = None):
        value = self._args.get(key)
        if value is not None:
            return value
        for table in (self._file.get(stage, {}) if stage else {}, self._file):
            if isinstance(table, dict) and table.get(key) is not None:
                return table[key]
        default = DEFAULTS.get(key)
        if isinstance(default, dict):
            return default.get(stage)
        return default

    def orders(self, stage="arma"):
        text = str(self.get("orders", stage))
        parts = [int(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 3:
            raise ValueError("--orders expects m,k,q")
        return tuple(parts)


def _load_file_config(path):
    if not path:
        return {}
    import tomli
    with open(path, "rb") as handle:
        return tomli.load(handle)


# ---------------------------------------------------------------- stages


def run_stats(series, cfg: RunConfig, out_dir: Path):
    weekly = ingest.to_weekly_matrix(series)
    averages = stats.weekday_averages(weekly)
    return {
        "moments": stats.moments(series).as_dict(),
        "histogram": stats.histogram(series, bins=int(cfg.get("bins", "stats"))).as_dict(),
        "poisson": stats.fit_poisson(series).as_dict(),
        "gev": stats.fit_gev(series).as_dict(),
        "weekday_averages": [float(a) for a in averages],
    }


def run_regress(series, cfg: RunConfig, out_dir: Path):
    window = int(cfg.get("window", "regress"))
    linear = regress.fit_linear_ar(series, window=window)
    cosine = regress.fit_cosine_linear(series)
    t = np.arange(1, len(series) + 1, dtype=float)
    predicted = cosine.predict(t)
    _write_csv(out_dir / "regress_fit.csv", ["t", "actual", "predicted"],
               [(int(ti), int(a), float(p))
                for ti, a, p in zip(t, series.values, predicted)])
    return {"linear_ar": linear.as_dict(), "cosine_linear": cosine.as_dict()}


def run_spectrum(series, cfg: RunConfig, out_dir: Path):
    spectrum = spectral.dft(series)
    log_power = spectral.log_power_halfspectrum(spectrum)
    window = int(cfg.get("window", "spectrum"))
    window = min(window, log_power.size)
    smoothed = spectral.moving_average(log_power, window)
    band = spectral.band_limit_frequency(smoothed, float(cfg.get("threshold", "spectrum")),
                                         n=spectrum.n)
    _write_csv(out_dir / "spectrum_logpower.csv", ["k", "log_power", "smoothed"],
               [(k + 1, float(lp), float(sm))
                for k, (lp, sm) in enumerate(zip(log_power, smoothed))])
    return band.as_dict()


def _fit_arma_model(series, cfg: RunConfig, stage="arma"):
    m, k, q = cfg.orders(stage)
    inputs = ingest.weekday_channel(series)
    return arma.fit_armax(series, inputs, m, k, q), inputs


def run_arma(series, cfg: RunConfig, out_dir: Path):
    model, inputs = _fit_arma_model(series, cfg)
    corr = arma.autocorrelation(series, maxlag=int(cfg.get("maxlag", "arma")))
    predictions = arma.one_step_predictions(model, series, inputs)
    start = max(model.orders[0], model.input_delay + model.orders[1],
                model.orders[2])
    _write_csv(out_dir / "arma_fit.csv", ["t", "actual", "predicted"],
               [(t + 1, int(series.values[t]), float(predictions[t]))
                for t in range(start, len(series))])
    fragment = model.as_dict()
    fragment["autocorrelation"] = [float(v) for v in corr.values]
    return fragment


def run_forecast(series, cfg: RunConfig, out_dir: Path):
    model, inputs = _fit_arma_model(series, cfg, stage="forecast")
    horizon = int(cfg.get("horizon", "forecast"))
    last_weekday = series.end_date.isoweekday()
    future = (last_weekday + np.arange(horizon)) % 7 + 1
    values = arma.forecast(model, series, future, horizon, history_inputs=inputs)
    fragment = model.as_dict()
    fragment["forecast"] = [float(v) for v in values]
    return fragment


def _factor_models(weekly, cfg: RunConfig):
    seed = int(cfg.get("seed", "factor"))
    chosen = cfg.get("method", "factor")
    methods = FACTOR_METHODS if chosen == "all" else (chosen,)
    models = {}
    for method in methods:
        if method == "svd":
            models[method] = factor.svd_decompose(weekly)
        elif method == "ppca":
            models[method] = factor.fit_ppca(weekly, n_components=7, seed=seed)
        elif method == "ica":
            models[method] = factor.fast_ica(
                weekly, nonlinearity=str(cfg.get("nonlinearity", "factor")),
                mode=str(cfg.get("mode", "factor")), seed=seed)
        elif method == "ksvd":
            config = factor.KsvdConfig(dict_size=int(cfg.get("dict_size", "factor")),
                                       sparsity=int(cfg.get("sparsity", "factor")))
            models[method] = factor.ksvd(weekly, config, seed=seed)
        else:
            raise ValueError(f"unknown factor method {method!r}")
    return models


def run_factor(series, cfg: RunConfig, out_dir: Path):
    weekly = ingest.to_weekly_matrix(series)
    actual = weekly.flatten()
    fragment = {}
    for method, model in _factor_models(weekly, cfg).items():
        fragment[method] = model.as_dict()
        for rank in range(1, model.n_components + 1):
            recon = factor.reconstruct_rank(model, rank).ravel()
            _write_csv(out_dir / f"factor_{method}_rank{rank}.csv",
                       ["day", "actual", "reconstructed"],
                       [(d + 1, int(a), float(r))
                        for d, (a, r) in enumerate(zip(actual, recon))])
    return fragment


def run_fractal(series, cfg: RunConfig, out_dir: Path):
    q = float(cfg.get("q", "fractal"))
    curve = fractal.pair_count_curve(series)
    estimates = fractal.fd_estimates(curve, q=q)
    fit = fractal.fit_sigmoid(curve, q=q)
    fitted = fit.predict(curve.log_inv_r)
    _write_csv(out_dir / "fractal_pc.csv", ["log_inv_r", "log_pc", "fitted"],
               [(float(x), float(y), float(f))
                for x, y, f in zip(curve.log_inv_r, curve.log_pc, fitted)])
    return estimates.as_dict(q)


STAGE_RUNNERS = {
    "stats": run_stats,
    "regress": run_regress,
    "spectrum": run_spectrum,
    "arma": run_arma,
    "forecast": run_forecast,
    "factor": run_factor,
    "fractal": run_fractal,
}


# ---------------------------------------------------------------- driver


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="influx",
        description="Statistical / spectral identification and short-term "
                    "forecasting of daily event-count series.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--column", help="count column name (default: total)")
        p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
        p.add_argument("--seed", type=int, help="seed for stochastic fits")
        p.add_argument("--config", help="optional TOML config file")
        p.add_argument("--interpolate", choices=["linear"],
                       help="fill date gaps instead of failing")

    specs = {
        "stats": [("--bins", int)],
        "regress": [("--window", int)],
        "spectrum": [("--window", int), ("--threshold", float)],
        "arma": [("--orders", str), ("--maxlag", int)],
        "forecast": [("--orders", str), ("--horizon", int)],
        "factor": [("--method", str), ("--nonlinearity", str), ("--mode", str),
                   ("--dict-size", int), ("--sparsity", int)],
        "fractal": [("--q", float)],
    }
    all_flags = sorted({flag for flags in specs.values() for flag in flags},
                       key=lambda f: f[0])
    for name in STAGES + ("all",):
        p = sub.add_parser(name)
        add_shared(p)
        flags = all_flags if name == "all" else specs.get(name, [])
        for flag, kind in flags:
            p.add_argument(flag, type=kind)
        if name == "all":
            p.add_argument("--parallel", action="store_true",
                           help="run independent stages concurrently")
    return parser


def _execute(args) -> int:
    cfg = RunConfig(args, _load_file_config(args.config))
    out_dir = Path(cfg.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    series = ingest.load_series(args.input, column=str(cfg.get("column")),
                                interpolate=cfg.get("interpolate"))

    if args.command == "all":
        stages = list(STAGES)
    else:
        stages = [args.command]

    report = {}
    if args.command == "all" and getattr(args, "parallel", False):
        with concurrent.futures.ThreadPoolExecutor() as pool:
            futures = {stage: pool.submit(STAGE_RUNNERS[stage], series, cfg, out_dir)
                       for stage in stages}
            for stage, future in futures.items():
                report[stage] = future.result()
    else:
        for stage in stages:
            report[stage] = STAGE_RUNNERS[stage](series, cfg, out_dir)

    payload = json.dumps(jsonify(report), sort_keys=True, indent=2) + "\n"
    (out_dir / "report.json").write_text(payload, encoding="utf-8")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _execute(args)
    except ConvergenceError as exc:
        print(f"influx: convergence failure: {exc}", file=sys.stderr)
        return 3
    except (InfluxError, ValueError, OSError) as exc:
        print(f"influx: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
