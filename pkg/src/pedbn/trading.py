"""PE-band trading rules and the buy-and-hold benchmark.

Both strategies trade a band around a per-date fundamental baseline A_t:
buy with all cash when the observed PE falls to A_t * (1 - Tr) or below,
sell every share when it rises to A_t * (1 + Tr) or above, hold otherwise.
The long-term variant keeps A_t pinned at the fitted fundamental PE; the
medium-term variant tilts it by the causal mispricing estimate,
A_t = PE* x (1 + z_t). A commission factor C multiplies the cash leg of
every executed trade; the final mark-to-market carries no commission.

All cash is committed on a buy and every share is sold on a sell, so at
any date the position is exactly one of flat (cash > 0) or invested
(shares > 0). Fractional shares are allowed.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .model import ObservationSeries

VARIANTS = ("long_term", "medium_term")

BUY, SELL, HOLD = "buy", "sell", "hold"


@dataclass(frozen=True)
class StrategyConfig:
    """One strategy cell: variant, band width, commission, starting cash."""

    variant: str
    threshold: float
    commission: float = 0.9987
    initial_cash: float = 100.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}"
            )
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold!r}")
        if not 0.0 < self.commission <= 1.0:
            raise ConfigError(
                f"commission must lie in (0, 1], got {self.commission!r}"
            )
        if not self.initial_cash > 0.0:
            raise ConfigError(
                f"initial_cash must be positive, got {self.initial_cash!r}"
            )


@dataclass(frozen=True)
class TradeRecord:
    """State after the decision at one date (cash and shares post-action)."""

    date: dt.date
    action: str
    price: float
    baseline: float
    cash: float
    shares: float


@dataclass(frozen=True)
class TradeLedger:
    records: tuple

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_trades(self) -> int:
        return sum(1 for r in self.records if r.action != HOLD)

    def to_rows(self) -> list:
        """JSON-ready rows, one per date."""
        return [
            {
                "date": r.date.isoformat(),
                "action": r.action,
                "price": r.price,
                "baseline": r.baseline,
                "cash": r.cash,
                "shares": r.shares,
            }
            for r in self.records
        ]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["date", "action", "price", "baseline", "cash", "shares"])
            for r in self.records:
                writer.writerow(
                    [
                        r.date.isoformat(),
                        r.action,
                        repr(r.price),
                        repr(r.baseline),
                        repr(r.cash),
                        repr(r.shares),
                    ]
                )


@dataclass(frozen=True)
class StrategyResult:
    ledger: TradeLedger
    final_value: float
    profit: float
    profit_pct: float


@dataclass(frozen=True)
class BenchmarkResult:
    shares: float
    final_value: float
    profit: float
    profit_pct: float


@dataclass(frozen=True)
class Comparison:
    outcome: str  # "win", "draw", or "lose"
    x_percent: float


def baseline_series(
    variant: str,
    pe_star: float,
    n_dates: int,
    z_values: np.ndarray | None = None,
) -> np.ndarray:
    """Per-date fundamental baseline A_t for one strategy variant.

    Parameters
    ----------
    variant : str
        "long_term" (constant PE*) or "medium_term" (PE* tilted by the
        causal mispricing estimate).
    pe_star : float
        Fitted fundamental PE level, positive.
    n_dates : int
    z_values : ndarray of shape (n_dates,), required for medium_term
        Causal mispricing estimates, each greater than -1.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not pe_star > 0.0:
        raise ConfigError(f"pe_star must be positive, got {pe_star!r}")
    if variant == "long_term":
        return np.full(n_dates, float(pe_star))
    if z_values is None:
        raise ConfigError("medium_term baseline needs the mispricing estimates")
    z_values = np.asarray(z_values, dtype=float)
    if z_values.shape != (n_dates,):
        raise ConfigError(
            f"z_values must have shape ({n_dates},), got {z_values.shape}"
        )
    if np.any(z_values <= -1.0):
        raise ConfigError("mispricing estimates must exceed -1")
    return pe_star * (1.0 + z_values)


def run_strategy(
    series: ObservationSeries, baseline: np.ndarray, config: StrategyConfig
) -> StrategyResult:
    """Replay the band rule over a test window.

    The decision at date t compares the observed PE P_t / E_t with the
    band around baseline[t] and executes at the same date's close P_t.
    Ledger rows record the post-action cash and share position. The final
    value marks any open position to the last close without commission.
    """
    baseline = np.asarray(baseline, dtype=float)
    if baseline.shape != (len(series),):
        raise ConfigError(
            f"baseline must have shape ({len(series)},), got {baseline.shape}"
        )
    cash = config.initial_cash
    shares = 0.0
    records = []
    for t, day in enumerate(series.dates):
        price = series.prices[t]
        observed = price / series.earnings[t]
        band = baseline[t]
        if observed <= band * (1.0 - config.threshold) and cash > 0.0:
            action = BUY
            shares = config.commission * cash / price
            cash = 0.0
        elif observed >= band * (1.0 + config.threshold) and shares > 0.0:
            action = SELL
            cash = config.commission * price * shares
            shares = 0.0
        else:
            action = HOLD
        records.append(
            TradeRecord(
                date=day,
                action=action,
                price=float(price),
                baseline=float(band),
                cash=float(cash),
                shares=float(shares),
            )
        )
    final_value = float(cash + series.prices[-1] * shares)
    profit = final_value - config.initial_cash
    return StrategyResult(
        ledger=TradeLedger(records=tuple(records)),
        final_value=final_value,
        profit=profit,
        profit_pct=100.0 * profit / config.initial_cash,
    )


def buy_and_hold(
    series: ObservationSeries, commission: float = 0.9987, initial_cash: float = 100.0
) -> BenchmarkResult:
    """Buy at the first close, hold to the last, mark to market.

    The share count commission * initial_cash / P_first is computed with
    the same expression the band rule uses for a first-date buy, so a
    strategy that buys once and never sells reproduces this result
    bit-for-bit.
    """
    if not 0.0 < commission <= 1.0:
        raise ConfigError(f"commission must lie in (0, 1], got {commission!r}")
    if not initial_cash > 0.0:
        raise ConfigError(f"initial_cash must be positive, got {initial_cash!r}")
    shares = commission * initial_cash / series.prices[0]
    final_value = float(series.prices[-1] * shares)
    profit = final_value - initial_cash
    return BenchmarkResult(
        shares=float(shares),
        final_value=final_value,
        profit=profit,
        profit_pct=100.0 * profit / initial_cash,
    )


def compare(strategy_profit: float, benchmark_profit: float, initial_cash: float) -> Comparison:
    """Win/draw/lose against the benchmark plus the margin in points.

    A strategy whose only action is buying at the first date holds the
    benchmark position exactly, so the comparison is an exact draw with
    a margin of zero.
    """
    if strategy_profit > benchmark_profit:
        outcome = "win"
    elif strategy_profit < benchmark_profit:
        outcome = "lose"
    else:
        outcome = "draw"
    return Comparison(
        outcome=outcome,
        x_percent=100.0 * (strategy_profit - benchmark_profit) / initial_cash,
    )
