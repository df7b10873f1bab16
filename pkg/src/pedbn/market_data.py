"""CSV ingestion and alignment of price and earnings data.

Two file formats are understood:

* prices: header ``date,close``; ISO dates, positive closes.
* quarterly earnings: header ``report_date,quarterly_earnings``; ISO
  dates and per-quarter earnings per share.

Trailing annual earnings at a trading date are the sum of the four most
recently reported quarters on or before that date, so the series is
piecewise constant between report dates and uses no information from the
future. Dates with fewer than four reported quarters are dropped with a
warning; an instrument whose trailing earnings are not strictly positive
somewhere is rejected outright.
"""

from __future__ import annotations

import csv
import datetime as dt
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .model import ObservationSeries


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    close: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "close", np.asarray(self.close, dtype=float))

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class QuarterlyEarnings:
    report_dates: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "report_dates", tuple(self.report_dates))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self) -> int:
        return len(self.report_dates)


@dataclass(frozen=True)
class EarningsSeries:
    """Trailing annual earnings aligned to trading dates."""

    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class SplitSpec:
    """Last trading date (inclusive) of the training window."""

    train_end: dt.date


def _parse_date(text: str, path, line_no: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"{path}:{line_no}: not an ISO date: {text!r}") from None


def _parse_float(text: str, path, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{line_no}: not a number: {text!r}") from None
    if not np.isfinite(value):
        raise DataError(f"{path}:{line_no}: value must be finite: {text!r}")
    return value


def _read_two_columns(path, expected_header):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [cell.strip().lower() for cell in header] != list(expected_header):
            raise DataError(
                f"{path}:1: expected header {','.join(expected_header)!r}, "
                f"got {','.join(header)!r}"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
            rows.append((line_no, row[0], row[1]))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _sort_unique(dates, values, path):
    order = sorted(range(len(dates)), key=lambda i: dates[i])
    dates = [dates[i] for i in order]
    values = [values[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DataError(f"{path}: duplicate date {a.isoformat()}")
    return dates, values


def load_price_csv(path) -> PriceSeries:
    """Read a ``date,close`` file; output is sorted and duplicate-free."""
    rows = _read_two_columns(path, ("date", "close"))
    dates, closes = [], []
    for line_no, date_text, close_text in rows:
        dates.append(_parse_date(date_text, path, line_no))
        close = _parse_float(close_text, path, line_no)
        if close <= 0.0:
            raise DataError(f"{path}:{line_no}: close must be positive, got {close!r}")
        closes.append(close)
    dates, closes = _sort_unique(dates, closes, path)
    return PriceSeries(dates=tuple(dates), close=np.array(closes))


def load_earnings_csv(path) -> QuarterlyEarnings:
    """Read a ``report_date,quarterly_earnings`` file, sorted by report date."""
    rows = _read_two_columns(path, ("report_date", "quarterly_earnings"))
    dates, values = [], []
    for line_no, date_text, value_text in rows:
        dates.append(_parse_date(date_text, path, line_no))
        values.append(_parse_float(value_text, path, line_no))
    dates, values = _sort_unique(dates, values, path)
    return QuarterlyEarnings(report_dates=tuple(dates), values=np.array(values))


def write_price_csv(path, prices: PriceSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "close"])
        for day, close in zip(prices.dates, prices.close):
            writer.writerow([day.isoformat(), repr(float(close))])


def write_earnings_csv(path, quarterly: QuarterlyEarnings) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["report_date", "quarterly_earnings"])
        for day, value in zip(quarterly.report_dates, quarterly.values):
            writer.writerow([day.isoformat(), repr(float(value))])


def ttm_earnings(quarterly: QuarterlyEarnings, trading_dates) -> EarningsSeries:
    """Trailing four-quarter earnings at each trading date.

    Dates preceding the fourth report are excluded (with a warning).
    Raises DataError when any included date has non-positive trailing
    earnings: such an instrument cannot be priced on a log-PE scale.
    """
    trading_dates = list(trading_dates)
    if len(quarterly) < 4:
        raise DataError(
            f"need at least 4 reported quarters, got {len(quarterly)}"
        )
    report_dates = np.array(quarterly.report_dates)
    window_sums = np.convolve(quarterly.values, np.ones(4), mode="valid")

    kept_dates, kept_values, dropped = [], [], 0
    for day in trading_dates:
        known = int(np.searchsorted(report_dates, day, side="right"))
        if known < 4:
            dropped += 1
            continue
        kept_dates.append(day)
        kept_values.append(window_sums[known - 4])
    if dropped:
        warnings.warn(
            f"dropped {dropped} trading dates before the fourth earnings report"
        )
    if not kept_dates:
        raise DataError("no trading date has four reported quarters behind it")
    values = np.array(kept_values)
    if np.any(values <= 0.0):
        first_bad = kept_dates[int(np.argmax(values <= 0.0))]
        raise DataError(
            "instrument rejected: trailing annual earnings non-positive at "
            f"{first_bad.isoformat()}"
        )
    return EarningsSeries(dates=tuple(kept_dates), values=values)


def build_observations(
    prices: PriceSeries, earnings: EarningsSeries, split: SplitSpec
):
    """Align prices with trailing earnings and split at the training end.

    Returns
    -------
    (ObservationSeries, ObservationSeries)
        Training window (dates <= split.train_end) and test window.
        Either window being empty is an error.
    """
    earnings_by_date = dict(zip(earnings.dates, earnings.values))
    dates, price_values, earning_values = [], [], []
    for day, close in zip(prices.dates, prices.close):
        value = earnings_by_date.get(day)
        if value is None:
            continue
        dates.append(day)
        price_values.append(close)
        earning_values.append(value)
    if not dates:
        raise DataError("price and earnings dates never overlap")

    series = ObservationSeries.from_arrays(dates, price_values, earning_values)
    n_train = sum(1 for day in dates if day <= split.train_end)
    if n_train == 0:
        raise DataError(f"no observations on or before {split.train_end.isoformat()}")
    if n_train == len(dates):
        raise DataError(f"no observations after {split.train_end.isoformat()}")
    return series.window(0, n_train), series.window(n_train, len(dates))
