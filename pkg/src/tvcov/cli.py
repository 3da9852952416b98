"""Command-line interface: simulate, estimate, backtest.

Every command resolves its configuration from an optional JSON file plus
flag overrides, writes the resolved config and input content hashes to a
manifest, and produces byte-deterministic outputs (no timestamps, fixed row
order, 17-significant-digit floats). A previous run's manifest can be passed
back through --config to reproduce it.

Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .backtest import ESTIMATORS, BacktestConfig, run_backtest
from .engine import EstimatorConfig, estimate_path
from .errors import ConfigError, DataError, NumericError, TvcovError
from .kernels import interior_region
from .localpca import LOCAL_PCA, LOCAL_PPCA
from .panel import load_characteristics, load_panel
from .simulation import SimulationConfig, run_monte_carlo

_FMT = ".17g"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if "command" in data and "config" in data:
        data = data["config"]  # a manifest from a previous run
    return data


def _merge(defaults: dict, file_config: dict, overrides: dict) -> dict:
    unknown = sorted(set(file_config) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown config fields: {unknown}")
    merged = dict(defaults)
    merged.update(file_config)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: dict[str, str], outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": sorted(outputs),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")


def _write_matrix_csv(path: Path, matrix: np.ndarray, row_labels, col_labels,
                      corner: str = "entity") -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([corner, *col_labels])
        for label, row in zip(row_labels, matrix):
            writer.writerow([label, *(format(v, _FMT) for v in row)])


def _parse_anchors(spec: str, n_periods: int, h: float) -> list[int]:
    spec = spec.strip()
    if spec == "interior":
        lo, hi = interior_region(n_periods, h)
        return list(range(lo, hi + 1))
    if spec == "all":
        return list(range(1, n_periods + 1))
    if ":" in spec:
        lo_s, hi_s = spec.split(":", 1)
        return list(range(int(lo_s), int(hi_s) + 1))
    try:
        return [int(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse anchors {spec!r}") from exc


# ---------------------------------------------------------------------------
# simulate

_SIMULATE_DEFAULTS = {
    "n_entities": 100,
    "n_periods": 151,
    "replications": 1,
    "regime": "smooth",
    "seed": 0,
    "sieve_dim": 4,
    "sieve_exponent": 2.0,
    "h_grid": [0.05, 0.1, 0.2, 0.3],
    "scale_grid": [0.1, 0.4, 0.8, 1.2],
    "char_mean": [0.0, 0.0],
    "char_corr": 0.2,
    "anchors": None,
    "ridge": None,
}


def cmd_simulate(args: argparse.Namespace) -> int:
    overrides = {
        "n_entities": args.n,
        "n_periods": args.t,
        "replications": args.reps,
        "regime": args.regime,
        "seed": args.seed,
        "anchors": _parse_int_list(args.anchors) if args.anchors else None,
    }
    resolved = _merge(_SIMULATE_DEFAULTS, _load_config_file(args.config), overrides)
    try:
        config = SimulationConfig(
            n_entities=resolved["n_entities"],
            n_periods=resolved["n_periods"],
            replications=resolved["replications"],
            regime=resolved["regime"],
            seed=resolved["seed"],
            sieve_dim=resolved["sieve_dim"],
            sieve_exponent=resolved["sieve_exponent"],
            h_grid=tuple(resolved["h_grid"]),
            scale_grid=tuple(resolved["scale_grid"]),
            char_mean=tuple(resolved["char_mean"]),
            char_corr=resolved["char_corr"],
            anchors=tuple(resolved["anchors"]) if resolved["anchors"] else None,
            ridge=resolved["ridge"],
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    result = run_monte_carlo(config, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.write_records_csv(out_dir / "results.csv")
    result.write_summary_csv(out_dir / "summary.csv")
    _write_manifest(out_dir, "simulate", resolved, {},
                    ["results.csv", "summary.csv"])
    if result.failures:
        for rep, message in result.failures:
            print(f"replication {rep} failed: {message}", file=sys.stderr)
    if args.verbose:
        print(f"simulate: {len(result.records)} records over "
              f"{result.n_effective}/{config.replications} replications -> {out_dir}")
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# estimate

_ESTIMATE_DEFAULTS = {
    "panel": None,
    "layout": "entities-as-rows",
    "chars": [],
    "method": LOCAL_PCA,
    "anchors": "interior",
    "h": 0.1,
    "threshold_scale": 0.5,
    "sieve_dim": 4,
    "n_factors": 2,
    "ridge": None,
}


def cmd_estimate(args: argparse.Namespace) -> int:
    overrides = {
        "panel": args.panel,
        "layout": args.layout,
        "chars": args.chars or None,
        "method": args.method,
        "anchors": args.anchors,
        "h": args.h,
        "threshold_scale": args.cnt,
        "sieve_dim": args.J,
        "n_factors": args.R,
        "ridge": args.ridge,
    }
    resolved = _merge(_ESTIMATE_DEFAULTS, _load_config_file(args.config), overrides)
    if resolved["panel"] is None:
        raise ConfigError("an input panel CSV is required (--panel)")
    if resolved["method"] not in (LOCAL_PCA, LOCAL_PPCA):
        raise ConfigError(f"method must be {LOCAL_PCA} or {LOCAL_PPCA}")
    if resolved["method"] == LOCAL_PPCA and not resolved["chars"]:
        raise ConfigError(f"method {LOCAL_PPCA} requires characteristic files (--chars)")

    panel = load_panel(resolved["panel"], resolved["layout"])
    chars = None
    if resolved["method"] == LOCAL_PPCA:
        chars = load_characteristics(resolved["chars"], panel)
    config = EstimatorConfig(
        n_factors=resolved["n_factors"],
        h=resolved["h"],
        threshold_scale=resolved["threshold_scale"],
        sieve_dim=resolved["sieve_dim"],
        ridge=resolved["ridge"],
    )
    anchors = _parse_anchors(str(resolved["anchors"]), panel.n_periods, config.h)
    path_result = estimate_path(panel, anchors, config, chars=chars)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []
    for est in path_result.estimates:
        name = f"anchor_{est.anchor:04d}.json"
        payload = {
            "anchor": est.anchor,
            "method": est.method,
            "boundary_flag": est.boundary_flag,
            "config": est.config_dict(),
            "applied_threshold_scale": est.applied_scale,
            "zero_fraction": est.zero_fraction,
            "entity_ids": list(panel.entity_ids),
            "sigma_y": est.sigma_y.tolist(),
            "sigma_y_inv": est.sigma_y_inv.tolist(),
            "loadings": est.loadings.tolist(),
            "factor_cov": est.factor_cov.tolist(),
            "sigma_u": est.sigma_u.tolist(),
        }
        with open(out_dir / name, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True, indent=2)
            f.write("\n")
        outputs.append(name)
        for label, matrix in (("sigma_y", est.sigma_y),
                              ("sigma_y_inv", est.sigma_y_inv)):
            csv_name = f"{label}_{est.anchor:04d}.csv"
            _write_matrix_csv(out_dir / csv_name, matrix,
                              panel.entity_ids, panel.entity_ids)
            outputs.append(csv_name)

    inputs = {resolved["panel"]: _sha256(Path(resolved["panel"]))}
    for char_path in resolved["chars"] or []:
        inputs[str(char_path)] = _sha256(Path(char_path))
    _write_manifest(out_dir, "estimate", resolved, inputs, outputs)

    if path_result.failures:
        print(path_result.summary(), file=sys.stderr)
    if args.verbose:
        print(f"estimate: {path_result.summary()} -> {out_dir}")
    if not path_result.estimates:
        raise NumericError(f"all anchors failed: {path_result.summary()}")
    return 0


# ---------------------------------------------------------------------------
# backtest

_BACKTEST_DEFAULTS = {
    "panel": None,
    "layout": "entities-as-rows",
    "chars": [],
    "factors": None,
    "factors_layout": "entities-as-rows",
    "estimators": ["sample"],
    "initial_training": 102,
    "holding_length": 26,
    "annualization": 52.0,
    "n_factors": 2,
    "h": 0.1,
    "threshold_scale": 0.5,
    "sieve_dim": 4,
    "ridge": None,
    "drift": False,
}


def cmd_backtest(args: argparse.Namespace) -> int:
    overrides = {
        "panel": args.panel,
        "layout": args.layout,
        "chars": args.chars or None,
        "factors": args.factors,
        "estimators": args.estimator or None,
        "initial_training": args.training,
        "holding_length": args.holding,
        "annualization": args.annualization,
        "n_factors": args.R,
        "h": args.h,
        "threshold_scale": args.cnt,
        "sieve_dim": args.J,
        "drift": True if args.drift else None,
    }
    resolved = _merge(_BACKTEST_DEFAULTS, _load_config_file(args.config), overrides)
    if resolved["panel"] is None:
        raise ConfigError("an input panel CSV is required (--panel)")
    unknown = sorted(set(resolved["estimators"]) - set(ESTIMATORS))
    if unknown:
        raise ConfigError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")

    panel = load_panel(resolved["panel"], resolved["layout"])
    chars = load_characteristics(resolved["chars"], panel) if resolved["chars"] else None
    factors = load_panel(resolved["factors"], resolved["factors_layout"]) \
        if resolved["factors"] else None
    needs_chars = [e for e in resolved["estimators"] if e.endswith("ppca")]
    if needs_chars and chars is None:
        raise ConfigError(f"estimators {needs_chars} require --chars")
    if "observed-factor" in resolved["estimators"] and factors is None:
        raise ConfigError("estimator 'observed-factor' requires --factors")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []
    summary_rows = []
    for estimator in resolved["estimators"]:
        config = BacktestConfig(
            estimator=estimator,
            initial_training=resolved["initial_training"],
            holding_length=resolved["holding_length"],
            annualization=resolved["annualization"],
            n_factors=resolved["n_factors"],
            h=resolved["h"],
            threshold_scale=resolved["threshold_scale"],
            sieve_dim=resolved["sieve_dim"],
            ridge=resolved["ridge"],
            drift=resolved["drift"],
        )
        result = run_backtest(panel, config, chars=chars, factors=factors)
        summary_rows.append((estimator, result))

        returns_name = f"returns_{estimator}.csv"
        with open(out_dir / returns_name, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["period", "portfolio_return"])
            period = config.initial_training + 1
            for value in result.portfolio_returns:
                writer.writerow([panel.period_ids[period - 1], format(value, _FMT)])
                period += 1
        outputs.append(returns_name)

        weights_name = f"weights_{estimator}.csv"
        with open(out_dir / weights_name, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["train_end", *panel.entity_ids])
            for window, weights in zip(result.schedule, result.weights_per_rebalance):
                writer.writerow([window.train_end,
                                 *(format(w, _FMT) for w in weights)])
        outputs.append(weights_name)

    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["estimator", "ex_post_std_annualized_pct",
                         "n_rebalances", "n_held_periods"])
        for estimator, result in summary_rows:
            writer.writerow([
                estimator,
                format(result.ex_post_std_annualized_pct, _FMT),
                len(result.schedule),
                int(result.portfolio_returns.size),
            ])
    outputs.append("summary.csv")

    inputs = {resolved["panel"]: _sha256(Path(resolved["panel"]))}
    for char_path in resolved["chars"] or []:
        inputs[str(char_path)] = _sha256(Path(char_path))
    if resolved["factors"]:
        inputs[str(resolved["factors"])] = _sha256(Path(resolved["factors"]))
    _write_manifest(out_dir, "backtest", resolved, inputs, outputs)

    if args.verbose:
        for estimator, result in summary_rows:
            print(f"backtest[{estimator}]: ex-post std "
                  f"{result.ex_post_std_annualized_pct:.4f}% -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvcov",
        description="Time-varying covariance estimation, simulation, and backtesting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    sim.add_argument("--config", help="JSON config (or a previous manifest)")
    sim.add_argument("--n", type=int, help="entities")
    sim.add_argument("--t", type=int, help="periods")
    sim.add_argument("--reps", type=int, help="replications")
    sim.add_argument("--regime", help="smooth or structural-break")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--anchors", help="comma-separated anchor list")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sim.add_argument("-v", "--verbose", action="count", default=0)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate covariance paths from CSVs")
    est.add_argument("--config", help="JSON config (or a previous manifest)")
    est.add_argument("--panel", help="panel CSV")
    est.add_argument("--layout", choices=("entities-as-rows", "entities-as-columns"))
    est.add_argument("--chars", action="append", help="characteristic CSV (repeatable)")
    est.add_argument("--method", choices=(LOCAL_PCA, LOCAL_PPCA))
    est.add_argument("--anchors", help="'interior', 'all', 'a:b', or comma list")
    est.add_argument("--h", type=float, help="bandwidth")
    est.add_argument("--cnt", type=float, help="threshold scale")
    est.add_argument("--J", type=int, help="sieve dimension")
    est.add_argument("--R", type=int, help="number of factors")
    est.add_argument("--ridge", type=float, help="projection ridge (0 = exact)")
    est.add_argument("--out", required=True)
    est.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    est.add_argument("-v", "--verbose", action="count", default=0)
    est.set_defaults(func=cmd_estimate)

    back = sub.add_parser("backtest", help="rolling minimum-variance backtest")
    back.add_argument("--config", help="JSON config (or a previous manifest)")
    back.add_argument("--panel", help="panel CSV")
    back.add_argument("--layout", choices=("entities-as-rows", "entities-as-columns"))
    back.add_argument("--chars", action="append", help="characteristic CSV (repeatable)")
    back.add_argument("--factors", help="observed factor CSV (factors as rows)")
    back.add_argument("--estimator", action="append", choices=ESTIMATORS,
                      help="repeatable; one summary row per estimator")
    back.add_argument("--training", type=int, help="initial training periods")
    back.add_argument("--holding", type=int, help="holding window length")
    back.add_argument("--annualization", type=float)
    back.add_argument("--h", type=float)
    back.add_argument("--cnt", type=float)
    back.add_argument("--J", type=int)
    back.add_argument("--R", type=int)
    back.add_argument("--drift", action="store_true",
                      help="compound weights within the window")
    back.add_argument("--out", required=True)
    back.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    back.add_argument("-v", "--verbose", action="count", default=0)
    back.set_defaults(func=cmd_backtest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except TvcovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
