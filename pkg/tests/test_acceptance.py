"""Acceptance gate: one test per shipped guarantee.

Each test prints a single line, ACCEPTANCE <n> <name>: PASS or FAIL,
so `pytest tests/test_acceptance.py -v -s` doubles as a release
checklist. Tolerances and time budgets are pinned here on purpose;
loosening one is a contract change, not a test fix.
"""

import datetime as dt
import time
import warnings

import numpy as np

from pedbn.exceptions import ConvergenceWarning
from pedbn.inference import forward_filter, map_pe, pairwise_smooth, smooth
from pedbn.learning import EmConfig, em_fit, log_posterior, m_step, random_init
from pedbn.model import (
    ModelParams,
    ObservationSeries,
    PriorSpec,
    StateGrids,
    generate_series,
    validate_params,
)
from pedbn.trading import (
    StrategyConfig,
    baseline_series,
    buy_and_hold,
    compare,
    run_strategy,
)
from pedbn.portfolio import BootstrapConfig, bootstrap

from .oracles import (
    brute_filtered,
    brute_pairwise,
    brute_smoothed,
    numeric_m_step,
    random_instance,
)


def _verdict(number, name, ok, detail):
    print(f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


def _series(prices):
    dates = tuple(
        dt.date(2020, 1, 6) + dt.timedelta(days=i) for i in range(len(prices))
    )
    p = np.asarray(prices, dtype=float)
    return ObservationSeries.from_arrays(dates, p, np.ones(len(p)))


def test_01_exhaustive_path_oracle():
    # 50 random instances, all three posteriors against brute-force
    # enumeration of every latent path, < 1e-10 and < 10 s total
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        y, params, grids = random_instance(rng)
        bundle = smooth(y, params, grids)
        worst = max(worst, np.abs(bundle.filtered - brute_filtered(y, params, grids)).max())
        worst = max(worst, np.abs(bundle.smoothed - brute_smoothed(y, params, grids)).max())
        if len(y) > 1:
            xi = pairwise_smooth(y, params, grids)
            worst = max(worst, np.abs(xi - brute_pairwise(y, params, grids)).max())
    elapsed = time.perf_counter() - started
    ok = worst < 1e-10 and elapsed < 10.0
    _verdict(1, "exhaustive-path-oracle", ok, f"max err {worst:.2e}, {elapsed:.2f}s")


def test_02_static_node_consistency():
    # the PE marginal is a posterior over a static node, so it must not
    # depend on which date it is read from
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        y, params, grids = random_instance(rng)
        marginals = smooth(y, params, grids).smoothed.sum(axis=1)
        worst = max(worst, np.abs(marginals - marginals[0]).max())

    grids = StateGrids(
        z_values=np.array([-0.1, 0.1]),
        pe_values=np.array([8.0, 12.0, 18.0, 27.0, 40.0]),
    )
    params = ModelParams(
        transition=np.array([[0.9, 0.1], [0.1, 0.9]]),
        z_initial=np.array([0.5, 0.5]),
        pe_prior=np.full(5, 0.2),
        sigma=0.05,
    )
    series, _ = generate_series(params, grids, 1200, np.ones(1200), 202)
    marginals = smooth(series.y, params, grids).smoothed.sum(axis=1)
    worst = max(worst, np.abs(marginals - marginals[0]).max())
    _verdict(2, "static-node-consistency", worst < 1e-9, f"max drift {worst:.2e}")


def test_03_em_monotonicity():
    # 20 random instances: every EM iterate is a valid parameter set and
    # never lowers the log-posterior by more than 1e-9
    rng = np.random.default_rng(303)
    worst_drop = 0.0
    violations = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for case in range(20):
            y, _, grids = random_instance(rng, max_m=4, max_n=6, max_t=200, min_t=200)
            prior = PriorSpec.flat(len(grids.z_values), len(grids.pe_values))
            params = random_init(grids, prior, y, np.random.default_rng(case))
            previous = -np.inf
            for _ in range(25):
                violations.extend(validate_params(params, grids))
                current = log_posterior(y, params, grids, prior)
                worst_drop = max(worst_drop, previous - current)
                previous = current
                bundle = smooth(y, params, grids)
                xi = pairwise_smooth(y, params, grids)
                params = m_step(bundle.smoothed, xi, y, grids, prior)
    ok = worst_drop < 1e-9 and not violations
    _verdict(3, "em-monotonicity", ok, f"worst drop {worst_drop:.2e}, {len(violations)} invalid")


def test_04_m_step_oracle():
    # closed-form updates against numeric constrained maximization of the
    # EM objective, 1e-4 per parameter, two prior flavors
    rng = np.random.default_rng(404)
    informative = PriorSpec(
        w_counts=np.array([[3.0, 1.5], [1.2, 2.0]]),
        u_counts=np.array([2.0, 1.0]),
        v_counts=np.array([1.5, 3.0]),
    )
    worst = 0.0
    checked = 0
    while checked < 10:
        y, params, grids = random_instance(rng, max_m=2, max_n=2, max_t=3, min_t=3)
        if len(grids.z_values) != 2 or len(grids.pe_values) != 2:
            continue
        checked += 1
        prior = PriorSpec.flat(2, 2) if checked % 2 else informative
        gamma = smooth(y, params, grids).smoothed
        xi = pairwise_smooth(y, params, grids)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            updated = m_step(gamma, xi, y, grids, prior)
        reference = numeric_m_step(gamma, xi, y, grids, prior)
        worst = max(
            worst,
            np.abs(updated.transition - reference.transition).max(),
            np.abs(updated.z_initial - reference.z_initial).max(),
            np.abs(updated.pe_prior - reference.pe_prior).max(),
            abs(updated.sigma - reference.sigma),
        )
    _verdict(4, "m-step-oracle", worst < 1e-4, f"max param err {worst:.2e}")


def test_05_parameter_recovery():
    # 50 seeded three-year series: the fitted model must point at the
    # generating PE level at least 45 times and get sigma within 20%
    grids = StateGrids(
        z_values=np.array([-0.1, 0.1]),
        pe_values=np.array([8.0, 12.0, 18.0, 27.0, 40.0]),
    )
    true_params = ModelParams(
        transition=np.array([[0.9, 0.1], [0.1, 0.9]]),
        z_initial=np.array([0.5, 0.5]),
        pe_prior=np.full(5, 0.2),
        sigma=0.05,
    )
    started = time.perf_counter()
    hits = 0
    sigma_errors = []
    for run in range(50):
        series, truth = generate_series(true_params, grids, 750, np.ones(750), 1000 + run)
        trace = em_fit(
            series.y,
            grids,
            PriorSpec.flat(2, 5),
            config=EmConfig(max_iters=60, tol=1e-6, n_restarts=0, seed=run),
        )
        estimate = map_pe(smooth(series.y, trace.params, grids), grids)
        hits += int(estimate.index == truth.pe_index)
        sigma_errors.append(abs(trace.params.sigma - true_params.sigma) / true_params.sigma)
    elapsed = time.perf_counter() - started
    mae = float(np.mean(sigma_errors))
    ok = hits >= 45 and mae < 0.20 and elapsed < 120.0
    _verdict(5, "parameter-recovery", ok, f"{hits}/50 hits, sigma MAE {mae:.3f}, {elapsed:.1f}s")


def test_06_trading_replay():
    # commission-free band replay, the buy-and-hold formula, and the
    # draw mechanism for a strategy that ends up fully invested
    checks = []

    series = _series([16.0, 19.0, 23.9008, 20.0])
    config = StrategyConfig(variant="long_term", threshold=0.1, commission=1.0)
    result = run_strategy(series, baseline_series("long_term", 20.0, 4), config)
    checks.append([r.action for r in result.ledger.records] == ["buy", "hold", "sell", "hold"])
    checks.append(result.profit_pct == 49.38)
    checks.append(result.final_value == 149.38)

    benchmark = buy_and_hold(_series([10.0, 12.0, 15.0]), 0.9987, 100.0)
    checks.append(benchmark.shares == 9.987)
    checks.append(benchmark.final_value == 149.805)
    checks.append(benchmark.profit_pct == 49.80500000000001)

    series = _series([10.0, 12.0, 11.0, 15.0])
    config = StrategyConfig(variant="long_term", threshold=0.5, commission=0.9987)
    invested = run_strategy(series, baseline_series("long_term", 1000.0, 4), config)
    benchmark = buy_and_hold(series, 0.9987, 100.0)
    outcome = compare(invested.profit, benchmark.profit, 100.0)
    checks.append(invested.final_value == benchmark.final_value)
    checks.append(outcome.outcome == "draw")
    checks.append(outcome.x_percent == 0.0)

    _verdict(6, "trading-replay", all(checks), f"{sum(checks)}/{len(checks)} checks")


def test_07_bootstrap_correctness():
    checks = []

    constant = bootstrap(
        BootstrapConfig(pool=[2.5, 2.5, 2.5, 2.5], portfolio_size=2, n_resamples=300, seed=5)
    )
    checks.append(constant.expected_x == 2.5)
    checks.append(constant.prob_non_negative == 1.0)
    negative = bootstrap(
        BootstrapConfig(pool=[-1.5, -1.5, -1.5], portfolio_size=2, n_resamples=300, seed=5)
    )
    checks.append(negative.expected_x == -1.5)
    checks.append(negative.prob_non_negative == 0.0)

    config = BootstrapConfig(
        pool=[-1.0, 1.0, 1.0, 1.0], portfolio_size=1, n_resamples=100000, seed=77
    )
    report = bootstrap(config)
    checks.append(abs(report.prob_non_negative - 0.75) <= 0.01)

    baseline = bootstrap(config, n_workers=1).resample_means.tobytes()
    checks.append(bootstrap(config, n_workers=1).resample_means.tobytes() == baseline)
    checks.append(bootstrap(config, n_workers=2).resample_means.tobytes() == baseline)
    checks.append(bootstrap(config, n_workers=5).resample_means.tobytes() == baseline)

    _verdict(
        7,
        "bootstrap-correctness",
        all(checks),
        f"{sum(checks)}/{len(checks)} checks, prob {report.prob_non_negative:.4f}",
    )


def test_08_end_to_end_pipeline(tmp_path, monkeypatch):
    # full CLI chain on a 3-instrument universe, twice with the same seed
    # in sibling directories; reports must carry the full per-instrument
    # and portfolio table shapes and be byte-identical across runs
    from pedbn.cli import main, read_json

    def run_chain(workdir):
        monkeypatch.chdir(workdir)
        codes = [
            main(
                [
                    "generate", "--out", "data", "--seed", "11",
                    "--instruments", "3",
                ]
            ),
            main(
                [
                    "train", "--data", "data", "--out", "models", "--seed", "11",
                    "--z-grid=-0.12,0,0.12", "--pe-grid", "10,13,17,22,29",
                    "--max-iters", "300", "--tol", "1e-6", "--n-restarts", "1",
                ]
            ),
            main(
                [
                    "backtest", "--data", "data", "--models", "models",
                    "--out", "backtests", "--seed", "11", "--charts", "true",
                ]
            ),
            main(
                [
                    "bootstrap", "--summary", "backtests/summary.json",
                    "--out", "reports", "--seed", "11", "--charts", "true",
                    "--portfolio-size", "2", "--market-portfolio-size", "2",
                    "--n-resamples", "2000",
                ]
            ),
        ]
        return codes

    started = time.perf_counter()
    first = tmp_path / "first"
    first.mkdir()
    codes = run_chain(first)
    elapsed = time.perf_counter() - started
    second = tmp_path / "second"
    second.mkdir()
    assert run_chain(second) == codes

    checks = [all(code in (0, 3) for code in codes), elapsed < 300.0]

    # per-instrument report: one row per symbol, one column per band
    summary = read_json(first / "backtests" / "summary.json")
    rows = summary["rows"]
    checks.append(len(rows) == 3)
    checks.append(summary["columns"]["long_term"] == ["0.05", "0.1", "0.15", "0.2"])
    checks.append(summary["columns"]["medium_term"] == ["0.03", "0.05", "0.07", "0.1"])
    for row in rows:
        checks.append(np.isfinite(row["benchmark_pct"]))
        for variant, keys in summary["columns"].items():
            for key in keys:
                cell = row["cells"][variant][key]
                checks.append(cell["outcome"] in ("win", "draw", "lose"))
                checks.append(np.isfinite(cell["profit_pct"]))
                checks.append(np.isfinite(cell["x_percent"]))

    # portfolio report: pooled section plus one per market, each cell
    # carrying the bootstrap expectation, sign probability and histogram
    portfolio = read_json(first / "reports" / "portfolio.json")
    names = [section["name"] for section in portfolio["sections"]]
    checks.append(names == ["ALL", "SYN"])
    for section in portfolio["sections"]:
        for variant, keys in summary["columns"].items():
            for key in keys:
                cell = section["cells"][variant][key]
                checks.append(np.isfinite(cell["expected_x"]))
                checks.append(0.0 <= cell["prob_non_negative"] <= 1.0)
                checks.append(sum(cell["histogram"]["counts"]) == 2000)

    identical = []
    for name in (
        "data/universe.json",
        "data/SYN1/prices.csv",
        "models/SYN1/model.json",
        "models/training.json",
        "backtests/SYN1/backtest.json",
        "backtests/summary.json",
        "backtests/SYN1/charts/long_term_0.1.svg",
        "reports/portfolio.json",
        "reports/charts/ALL_medium_term_0.05.svg",
    ):
        identical.append((first / name).read_bytes() == (second / name).read_bytes())
    checks.append(all(identical))

    _verdict(
        8,
        "end-to-end-pipeline",
        all(checks),
        f"{elapsed:.1f}s, codes {codes}, {sum(identical)}/{len(identical)} files identical",
    )
