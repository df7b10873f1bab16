"""Command line interface: generate, train, backtest, bootstrap.

Every subcommand accepts --config PATH, --seed N, and --out DIR. The
config file is a flat ``key = value`` text format ('#' starts a comment);
every key also exists as a command line flag, and flags override file
values, which override defaults. Reports are JSON with sorted keys and
shortest round-trip float formatting, so a rerun under the same seed
produces byte-identical files.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 training
did not converge (models are still written).
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

import numpy as np

from . import charts
from .estimator import FundamentalPEModel
from .exceptions import ConfigError, DataError, InferenceError, InvalidModelError
from .inference import filtered_z_path, forward_filter
from .market_data import (
    PriceSeries,
    QuarterlyEarnings,
    SplitSpec,
    build_observations,
    load_earnings_csv,
    load_price_csv,
    ttm_earnings,
    write_earnings_csv,
    write_price_csv,
)
from .model import (
    ModelParams,
    ObservationSeries,
    StateGrids,
    concat_series,
    generate_series,
    weekday_dates,
)
from .portfolio import BootstrapConfig, bootstrap, histogram, load_pool_csv
from .trading import StrategyConfig, baseline_series, buy_and_hold, compare, run_strategy

MODEL_SCHEMA = "pedbn.model/1"
TRUTH_SCHEMA = "pedbn.truth/1"
UNIVERSE_SCHEMA = "pedbn.universe/1"
BACKTEST_SCHEMA = "pedbn.backtest/1"
SUMMARY_SCHEMA = "pedbn.backtest_summary/1"
TRAINING_SCHEMA = "pedbn.training/1"
PORTFOLIO_SCHEMA = "pedbn.portfolio/1"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the contract here is 1
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# config plumbing


def _parse_int(text, key):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _parse_float(text, key):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not np.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {text!r}")
    return value


def _parse_floats(text, key):
    values = [
        _parse_float(token.strip(), key)
        for token in str(text).split(",")
        if token.strip()
    ]
    if not values:
        raise ConfigError(f"{key}: expected a comma separated list of numbers")
    return values


def _parse_bool(text, key):
    lowered = str(text).strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}")


def _parse_date(text, key):
    try:
        return dt.date.fromisoformat(str(text).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an ISO date, got {text!r}") from None


def _parse_str(text, key):
    return str(text).strip()


_PARSERS = {
    "int": _parse_int,
    "float": _parse_float,
    "floats": _parse_floats,
    "bool": _parse_bool,
    "date": _parse_date,
    "str": _parse_str,
}

# key: (kind, default, help). None defaults mean "optional" or "required",
# noted in the help string; seed and out are shared by every subcommand.
_COMMON_KEYS = {
    "seed": ("int", 0, "master seed, non-negative"),
    "out": ("str", None, "output directory (required)"),
}

_GENERATE_KEYS = {
    **_COMMON_KEYS,
    "instruments": ("int", 3, "number of synthetic instruments"),
    "train_days": ("int", 380, "training window length"),
    "test_days": ("int", 190, "test window length"),
    "start_date": ("date", dt.date(2012, 1, 2), "first candidate calendar date"),
    "z_grid": ("floats", [-0.12, 0.0, 0.12], "mispricing grid"),
    "pe_grid": ("floats", [10.0, 13.0, 17.0, 22.0, 29.0], "fundamental PE grid"),
    "sigma": ("float", 0.05, "observation noise level"),
    "w_self": ("float", 0.90, "self-transition probability of the true chain"),
    "quarterly_base": ("float", 2.5, "first quarterly earnings value"),
    "quarterly_growth": ("float", 0.01, "per-quarter earnings growth"),
    "market": ("str", "SYN", "market label stamped on every instrument"),
}

_TRAIN_KEYS = {
    **_COMMON_KEYS,
    "data": ("str", None, "universe directory from generate"),
    "prices": ("str", None, "single-instrument price CSV"),
    "earnings": ("str", None, "single-instrument quarterly earnings CSV"),
    "symbol": ("str", None, "symbol for single-instrument mode"),
    "train_end": ("date", None, "last training date (defaults to the universe value)"),
    "z_grid": ("floats", None, "explicit mispricing grid"),
    "n_z_states": ("int", 7, "default mispricing grid size"),
    "z_span": ("float", 0.30, "default mispricing grid half-width"),
    "pe_grid": ("floats", None, "explicit fundamental PE grid"),
    "n_pe_levels": ("int", 15, "default PE grid size"),
    "w_self_weight": ("float", 0.95, "persistence prior diagonal fraction"),
    "w_strength": ("float", 20.0, "persistence prior pseudo-count budget"),
    "max_iters": ("int", 500, "EM iteration cap"),
    "tol": ("float", 1e-8, "EM convergence tolerance"),
    "n_restarts": ("int", 5, "extra EM runs from random starts"),
}

_BACKTEST_KEYS = {
    **_COMMON_KEYS,
    "data": ("str", None, "universe directory from generate"),
    "models": ("str", None, "models directory from train"),
    "prices": ("str", None, "single-instrument price CSV"),
    "earnings": ("str", None, "single-instrument quarterly earnings CSV"),
    "model": ("str", None, "single-instrument model JSON"),
    "long_thresholds": ("floats", [0.05, 0.10, 0.15, 0.20], "long-term bands"),
    "medium_thresholds": ("floats", [0.03, 0.05, 0.07, 0.10], "medium-term bands"),
    "commission": ("float", 0.9987, "commission factor per executed trade"),
    "initial_cash": ("float", 100.0, "starting cash"),
    "charts": ("bool", False, "write SVG band charts"),
}

_BOOTSTRAP_KEYS = {
    **_COMMON_KEYS,
    "summary": ("str", None, "backtest summary.json"),
    "pool": ("str", None, "symbol,x_percent CSV for a single pool"),
    "portfolio_size": ("int", 15, "instruments per resample, pooled section"),
    "market_portfolio_size": ("int", 7, "instruments per resample, market sections"),
    "n_resamples": ("int", 10000, "bootstrap resamples per cell"),
    "bins": ("int", 20, "histogram bins"),
    "workers": ("int", 1, "resampling threads (result is identical for any value)"),
    "charts": ("bool", False, "write SVG histograms"),
}


def read_config_file(path):
    """Parse a flat key = value file into a string-to-string mapping."""
    entries = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        if key in entries:
            raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _resolve_config(table, args):
    """Merge defaults, config file, and flags (flags win)."""
    file_cfg = read_config_file(args.config) if args.config else {}
    unknown = sorted(set(file_cfg) - set(table))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    resolved = {}
    for key, (kind, default, _help) in table.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = _PARSERS[kind](flag_value, key)
        elif key in file_cfg:
            resolved[key] = _PARSERS[kind](file_cfg[key], key)
        else:
            resolved[key] = default
    if resolved["out"] is None:
        raise ConfigError("out is required (flag --out or config key 'out')")
    if resolved["seed"] < 0:
        raise ConfigError(f"seed must be non-negative, got {resolved['seed']}")
    return resolved


def _derive_seed(master: int, *key) -> int:
    """A child seed that is a pure function of (master, key)."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# JSON helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dt.date):
        return obj.isoformat()
    return obj


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(obj), handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_json(path, expected_schema=None):
    try:
        with open(path, encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if expected_schema is not None and obj.get("schema") != expected_schema:
        raise DataError(
            f"{path}: expected schema {expected_schema!r}, got {obj.get('schema')!r}"
        )
    return obj


# ---------------------------------------------------------------------------
# generate


def _synthetic_quarters(first_day, last_day, base, growth, rng) -> QuarterlyEarnings:
    """Quarterly reports covering the window, four of them predating it."""
    if base <= 0.0:
        raise ConfigError(f"quarterly_base must be positive, got {base!r}")
    if growth <= -1.0:
        raise ConfigError(f"quarterly_growth must exceed -1, got {growth!r}")
    report_dates = [first_day - dt.timedelta(days=10 + 91 * k) for k in (3, 2, 1, 0)]
    while report_dates[-1] + dt.timedelta(days=91) <= last_day:
        report_dates.append(report_dates[-1] + dt.timedelta(days=91))
    jitter = rng.uniform(-1.0, 1.0, size=len(report_dates))
    values = [
        base * (1.0 + growth) ** j * (1.0 + 0.08 * jitter[j])
        for j in range(len(report_dates))
    ]
    return QuarterlyEarnings(report_dates=tuple(report_dates), values=np.array(values))


def _generator_params(cfg) -> tuple:
    z = np.asarray(cfg["z_grid"], dtype=float)
    pe = np.asarray(cfg["pe_grid"], dtype=float)
    grids = StateGrids(z_values=z, pe_values=pe)
    m = grids.n_z
    if not 0.0 < cfg["w_self"] < 1.0:
        raise ConfigError(f"w_self must lie in (0, 1), got {cfg['w_self']!r}")
    if m == 1:
        transition = np.ones((1, 1))
    else:
        transition = np.full((m, m), (1.0 - cfg["w_self"]) / (m - 1))
        np.fill_diagonal(transition, cfg["w_self"])
    params = ModelParams(
        transition=transition,
        z_initial=np.full(m, 1.0 / m),
        pe_prior=np.full(grids.n_pe, 1.0 / grids.n_pe),
        sigma=cfg["sigma"],
    )
    return params, grids


def cmd_generate(args) -> int:
    cfg = _resolve_config(_GENERATE_KEYS, args)
    if cfg["instruments"] < 1:
        raise ConfigError("instruments must be at least 1")
    if cfg["train_days"] < 2 or cfg["test_days"] < 1:
        raise ConfigError("need train_days >= 2 and test_days >= 1")
    params, grids = _generator_params(cfg)
    n_steps = cfg["train_days"] + cfg["test_days"]
    dates = weekday_dates(cfg["start_date"], n_steps)
    train_end = dates[cfg["train_days"] - 1]
    out = Path(cfg["out"])

    symbols = []
    for index in range(cfg["instruments"]):
        symbol = f"{cfg['market']}{index + 1}"
        quarter_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg["seed"], spawn_key=(index, 0))
        )
        quarterly = _synthetic_quarters(
            dates[0], dates[-1], cfg["quarterly_base"], cfg["quarterly_growth"], quarter_rng
        )
        earnings = ttm_earnings(quarterly, dates)
        series_seed = _derive_seed(cfg["seed"], index, 1)
        series, truth = generate_series(
            params, grids, n_steps, earnings.values, series_seed, start_date=cfg["start_date"]
        )
        instrument_dir = out / symbol
        instrument_dir.mkdir(parents=True, exist_ok=True)
        write_price_csv(instrument_dir / "prices.csv", PriceSeries(series.dates, series.prices))
        write_earnings_csv(instrument_dir / "earnings.csv", quarterly)
        write_json(
            instrument_dir / "truth.json",
            {
                "schema": TRUTH_SCHEMA,
                "symbol": symbol,
                "seed": series_seed,
                "pe_index": truth.pe_index,
                "pe_value": truth.pe_value,
                "z_indices": truth.z_indices,
                "grids": {"z_values": grids.z_values, "pe_values": grids.pe_values},
                "params": {
                    "transition": params.transition,
                    "z_initial": params.z_initial,
                    "pe_prior": params.pe_prior,
                    "sigma": params.sigma,
                },
            },
        )
        symbols.append({"symbol": symbol, "market": cfg["market"]})

    write_json(
        out / "universe.json",
        {
            "schema": UNIVERSE_SCHEMA,
            "seed": cfg["seed"],
            "config": cfg,
            "symbols": symbols,
            "train_end": train_end,
            "dates": {
                "start": dates[0],
                "end": dates[-1],
                "n_train": cfg["train_days"],
                "n_test": cfg["test_days"],
            },
        },
    )
    print(f"wrote {len(symbols)} instruments to {out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _load_instrument(prices_path, earnings_path, train_end):
    prices = load_price_csv(prices_path)
    quarterly = load_earnings_csv(earnings_path)
    earnings = ttm_earnings(quarterly, prices.dates)
    return build_observations(prices, earnings, SplitSpec(train_end=train_end))


def _train_jobs(cfg):
    """Yield (symbol, prices_path, earnings_path, train_end) per instrument."""
    single = cfg["prices"] is not None or cfg["earnings"] is not None
    if single:
        for key in ("prices", "earnings", "symbol", "train_end"):
            if cfg[key] is None:
                raise ConfigError(f"single-instrument mode needs {key}")
        return [(cfg["symbol"], cfg["prices"], cfg["earnings"], cfg["train_end"])], None
    if cfg["data"] is None:
        raise ConfigError("either data (universe directory) or prices/earnings is required")
    data = Path(cfg["data"])
    universe = read_json(data / "universe.json", UNIVERSE_SCHEMA)
    train_end = cfg["train_end"] or _parse_date(universe["train_end"], "train_end")
    jobs = [
        (entry["symbol"], data / entry["symbol"] / "prices.csv",
         data / entry["symbol"] / "earnings.csv", train_end)
        for entry in universe["symbols"]
    ]
    return jobs, universe


def cmd_train(args) -> int:
    cfg = _resolve_config(_TRAIN_KEYS, args)
    jobs, _ = _train_jobs(cfg)
    out = Path(cfg["out"])
    rows = []
    all_converged = True
    for index, (symbol, prices_path, earnings_path, train_end) in enumerate(jobs):
        train, _test = _load_instrument(prices_path, earnings_path, train_end)
        estimator = FundamentalPEModel(
            z_grid=cfg["z_grid"],
            pe_grid=cfg["pe_grid"],
            n_z_states=cfg["n_z_states"],
            z_span=cfg["z_span"],
            n_pe_levels=cfg["n_pe_levels"],
            w_self_weight=cfg["w_self_weight"],
            w_strength=cfg["w_strength"],
            max_iters=cfg["max_iters"],
            tol=cfg["tol"],
            n_restarts=cfg["n_restarts"],
            random_state=_derive_seed(cfg["seed"], index),
        )
        estimator.fit(train.observed_pe)
        all_converged = all_converged and estimator.converged_
        write_json(
            out / symbol / "model.json",
            {
                "schema": MODEL_SCHEMA,
                "symbol": symbol,
                "seed": cfg["seed"],
                "config": cfg,
                "train_end": train_end,
                "grids": {
                    "z_values": estimator.grids_.z_values,
                    "pe_values": estimator.grids_.pe_values,
                },
                "prior": {
                    "w_counts": estimator.prior_.w_counts,
                    "u_counts": estimator.prior_.u_counts,
                    "v_counts": estimator.prior_.v_counts,
                },
                "params": {
                    "transition": estimator.params_.transition,
                    "z_initial": estimator.params_.z_initial,
                    "pe_prior": estimator.params_.pe_prior,
                    "sigma": estimator.params_.sigma,
                },
                "fit": {
                    "converged": estimator.converged_,
                    "n_iter": estimator.n_iter_,
                    "log_posterior": estimator.log_posterior_,
                    "restart": estimator.trace_.restart,
                    "restart_log_posteriors": estimator.trace_.restart_log_posteriors,
                },
                "pe_star": {
                    "index": estimator.pe_index_,
                    "value": estimator.pe_value_,
                    "marginal": estimator.pe_marginal_,
                },
            },
        )
        rows.append(
            {
                "symbol": symbol,
                "converged": estimator.converged_,
                "n_iter": estimator.n_iter_,
                "log_posterior": estimator.log_posterior_,
                "pe_value": estimator.pe_value_,
                "sigma": estimator.params_.sigma,
            }
        )
        status = "" if estimator.converged_ else " (no convergence)"
        print(f"trained {symbol}: PE* {estimator.pe_value_:.4g}{status}")
    write_json(
        out / "training.json",
        {"schema": TRAINING_SCHEMA, "seed": cfg["seed"], "config": cfg, "instruments": rows},
    )
    return 0 if all_converged else 3


# ---------------------------------------------------------------------------
# backtest


def _model_from_json(payload):
    grids = StateGrids(
        z_values=np.asarray(payload["grids"]["z_values"], dtype=float),
        pe_values=np.asarray(payload["grids"]["pe_values"], dtype=float),
    )
    params = ModelParams(
        transition=np.asarray(payload["params"]["transition"], dtype=float),
        z_initial=np.asarray(payload["params"]["z_initial"], dtype=float),
        pe_prior=np.asarray(payload["params"]["pe_prior"], dtype=float),
        sigma=float(payload["params"]["sigma"]),
    )
    return params, grids


def _backtest_jobs(cfg):
    single = cfg["model"] is not None or cfg["prices"] is not None
    if single:
        for key in ("prices", "earnings", "model"):
            if cfg[key] is None:
                raise ConfigError(f"single-instrument mode needs {key}")
        payload = read_json(cfg["model"], MODEL_SCHEMA)
        return [(payload["symbol"], cfg["prices"], cfg["earnings"], payload, None)]
    if cfg["data"] is None or cfg["models"] is None:
        raise ConfigError("universe mode needs both data and models directories")
    data, models = Path(cfg["data"]), Path(cfg["models"])
    universe = read_json(data / "universe.json", UNIVERSE_SCHEMA)
    jobs = []
    for entry in universe["symbols"]:
        symbol = entry["symbol"]
        payload = read_json(models / symbol / "model.json", MODEL_SCHEMA)
        if payload["symbol"] != symbol:
            raise DataError(
                f"model file for {symbol} names {payload['symbol']!r}"
            )
        jobs.append(
            (symbol, data / symbol / "prices.csv", data / symbol / "earnings.csv",
             payload, entry.get("market"))
        )
    return jobs


def _run_cells(test: ObservationSeries, pe_star, z_test, cfg):
    """All (variant, threshold) cells plus the benchmark for one instrument."""
    benchmark = buy_and_hold(test, cfg["commission"], cfg["initial_cash"])
    cells = {}
    for variant, thresholds in (
        ("long_term", cfg["long_thresholds"]),
        ("medium_term", cfg["medium_thresholds"]),
    ):
        cells[variant] = {}
        for threshold in thresholds:
            strategy_config = StrategyConfig(
                variant=variant,
                threshold=threshold,
                commission=cfg["commission"],
                initial_cash=cfg["initial_cash"],
            )
            baseline = baseline_series(
                variant, pe_star, len(test), z_test if variant == "medium_term" else None
            )
            result = run_strategy(test, baseline, strategy_config)
            comparison = compare(result.profit, benchmark.profit, cfg["initial_cash"])
            cells[variant][f"{threshold:g}"] = {
                "threshold": threshold,
                "profit": result.profit,
                "profit_pct": result.profit_pct,
                "x_percent": comparison.x_percent,
                "outcome": comparison.outcome,
                "n_trades": result.ledger.n_trades,
                "baseline": baseline,
                "result": result,
            }
    return benchmark, cells


def cmd_backtest(args) -> int:
    cfg = _resolve_config(_BACKTEST_KEYS, args)
    out = Path(cfg["out"])
    summary_rows = []
    for job in _backtest_jobs(cfg):
        symbol, prices_path, earnings_path, payload, market = job
        params, grids = _model_from_json(payload)
        train_end = _parse_date(payload["train_end"], "train_end")
        train, test = _load_instrument(prices_path, earnings_path, train_end)
        full = concat_series(train, test)
        # causal mispricing path, carried across the train/test boundary
        z_path = filtered_z_path(forward_filter(full.y, params, grids), grids)
        z_test = z_path.mode_values[len(train):]
        pe_star = float(payload["pe_star"]["value"])
        benchmark, cells = _run_cells(test, pe_star, z_test, cfg)

        json_cells = {}
        for variant, by_threshold in cells.items():
            json_cells[variant] = {}
            for key, cell in by_threshold.items():
                json_cells[variant][key] = {
                    "threshold": cell["threshold"],
                    "profit": cell["profit"],
                    "profit_pct": cell["profit_pct"],
                    "x_percent": cell["x_percent"],
                    "outcome": cell["outcome"],
                    "n_trades": cell["n_trades"],
                    "ledger": cell["result"].ledger.to_rows(),
                }
                if cfg["charts"]:
                    chart_dir = out / symbol / "charts"
                    chart_dir.mkdir(parents=True, exist_ok=True)
                    charts.band_chart(
                        chart_dir / f"{variant}_{key}.svg",
                        test.dates,
                        test.observed_pe,
                        cell["baseline"],
                        cell["threshold"],
                        [r.action for r in cell["result"].ledger.records],
                        f"{symbol} {variant} band {key}",
                    )
        write_json(
            out / symbol / "backtest.json",
            {
                "schema": BACKTEST_SCHEMA,
                "symbol": symbol,
                "market": market,
                "seed": cfg["seed"],
                "config": cfg,
                "train_end": train_end,
                "test_window": {
                    "start": test.dates[0],
                    "end": test.dates[-1],
                    "n_dates": len(test),
                },
                "benchmark": {
                    "shares": benchmark.shares,
                    "profit": benchmark.profit,
                    "profit_pct": benchmark.profit_pct,
                },
                "cells": json_cells,
            },
        )
        summary_rows.append(
            {
                "symbol": symbol,
                "market": market,
                "benchmark_pct": benchmark.profit_pct,
                "cells": {
                    variant: {
                        key: {
                            "profit_pct": cell["profit_pct"],
                            "x_percent": cell["x_percent"],
                            "outcome": cell["outcome"],
                        }
                        for key, cell in by_threshold.items()
                    }
                    for variant, by_threshold in cells.items()
                },
            }
        )
        print(f"backtested {symbol}: benchmark {benchmark.profit_pct:.2f}%")
    write_json(
        out / "summary.json",
        {
            "schema": SUMMARY_SCHEMA,
            "seed": cfg["seed"],
            "config": cfg,
            "columns": {
                "long_term": [f"{t:g}" for t in cfg["long_thresholds"]],
                "medium_term": [f"{t:g}" for t in cfg["medium_thresholds"]],
            },
            "rows": summary_rows,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# bootstrap


def _bootstrap_sections(cfg):
    """Yield (name, portfolio_size, symbols, cells) where cells maps
    variant -> threshold key -> margin pool."""
    if (cfg["summary"] is None) == (cfg["pool"] is None):
        raise ConfigError("exactly one of summary or pool is required")
    if cfg["pool"] is not None:
        symbols, values = load_pool_csv(cfg["pool"])
        return [("ALL", cfg["portfolio_size"], symbols, {"pool": {"all": values}})]
    summary = read_json(cfg["summary"], SUMMARY_SCHEMA)
    rows = summary["rows"]
    if not rows:
        raise DataError("summary holds no instruments")

    def cells_for(subset):
        cells = {}
        for variant, keys in summary["columns"].items():
            cells[variant] = {
                key: np.array(
                    [row["cells"][variant][key]["x_percent"] for row in subset]
                )
                for key in keys
            }
        return cells

    sections = [("ALL", cfg["portfolio_size"], [r["symbol"] for r in rows], cells_for(rows))]
    markets = sorted({row.get("market") for row in rows if row.get("market")})
    for market in markets:
        subset = [row for row in rows if row.get("market") == market]
        sections.append(
            (market, cfg["market_portfolio_size"], [r["symbol"] for r in subset],
             cells_for(subset))
        )
    return sections


def cmd_bootstrap(args) -> int:
    cfg = _resolve_config(_BOOTSTRAP_KEYS, args)
    out = Path(cfg["out"])
    report_sections = []
    for name, size, symbols, cells in _bootstrap_sections(cfg):
        json_cells = {}
        for variant, by_threshold in sorted(cells.items()):
            json_cells[variant] = {}
            for key, pool_values in sorted(by_threshold.items()):
                report = bootstrap(
                    BootstrapConfig(
                        pool=pool_values,
                        portfolio_size=size,
                        n_resamples=cfg["n_resamples"],
                        seed=cfg["seed"],
                    ),
                    n_workers=cfg["workers"],
                )
                counts, edges = histogram(report, cfg["bins"])
                json_cells[variant][key] = {
                    "expected_x": report.expected_x,
                    "prob_non_negative": report.prob_non_negative,
                    "histogram": {"counts": counts, "edges": edges},
                }
                if cfg["charts"]:
                    chart_dir = out / "charts"
                    chart_dir.mkdir(parents=True, exist_ok=True)
                    charts.histogram_chart(
                        chart_dir / f"{name}_{variant}_{key}.svg",
                        counts,
                        edges,
                        f"{name} {variant} band {key}: portfolio margin",
                    )
        report_sections.append(
            {
                "name": name,
                "portfolio_size": size,
                "n_instruments": len(symbols),
                "symbols": symbols,
                "cells": json_cells,
            }
        )
        print(f"bootstrapped section {name} ({len(symbols)} instruments)")
    write_json(
        out / "portfolio.json",
        {
            "schema": PORTFOLIO_SCHEMA,
            "seed": cfg["seed"],
            "config": cfg,
            "sections": report_sections,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> _Parser:
    parser = _Parser(prog="pedbn", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, table, func, blurb in (
        ("generate", _GENERATE_KEYS, cmd_generate, "write a synthetic universe"),
        ("train", _TRAIN_KEYS, cmd_train, "fit models to instruments"),
        ("backtest", _BACKTEST_KEYS, cmd_backtest, "replay strategies on test windows"),
        ("bootstrap", _BOOTSTRAP_KEYS, cmd_bootstrap, "resample portfolio margins"),
    ):
        sub = subparsers.add_parser(name, help=blurb)
        sub.add_argument("--config", help="flat key = value config file")
        for key, (_kind, default, help_text) in table.items():
            sub.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                help=f"{help_text} (default {default})",
            )
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, InvalidModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, InferenceError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
