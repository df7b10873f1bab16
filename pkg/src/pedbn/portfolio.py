"""Bootstrap evaluation of strategy-minus-benchmark margins.

The pool holds one margin X (strategy profit percent minus benchmark
profit percent) per instrument. Each resample draws a portfolio of
distinct instruments without replacement and averages their margins;
the report summarizes the resampled means.

Every resample i draws from its own generator seeded by (seed, i), so
the result is a pure function of the seed and the resample index: the
same seed gives bit-identical reports no matter how many workers run
the resamples or in what order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError


@dataclass(frozen=True)
class BootstrapConfig:
    """Pool of per-instrument margins plus resampling knobs.

    portfolio_size is the number of distinct instruments per resample
    and must not exceed the pool size.
    """

    pool: np.ndarray
    portfolio_size: int
    n_resamples: int = 10000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pool", np.asarray(self.pool, dtype=float))
        if self.pool.ndim != 1 or self.pool.size == 0:
            raise DataError("pool must be a non-empty one-dimensional array")
        if not np.all(np.isfinite(self.pool)):
            raise DataError("pool values must be finite")
        if self.portfolio_size < 1:
            raise ConfigError(
                f"portfolio_size must be positive, got {self.portfolio_size}"
            )
        if self.portfolio_size > self.pool.size:
            raise DataError(
                f"insufficient pool: {self.pool.size} instruments for "
                f"portfolios of {self.portfolio_size}"
            )
        if self.n_resamples < 1:
            raise ConfigError(
                f"n_resamples must be positive, got {self.n_resamples}"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(
                f"seed must be a non-negative integer, got {self.seed!r}"
            )


@dataclass(frozen=True)
class BootstrapReport:
    """Summary of the resampled portfolio means.

    resample_means is sorted ascending and has one entry per resample.
    """

    expected_x: float
    prob_non_negative: float
    resample_means: np.ndarray


def _resample_mean(pool: np.ndarray, size: int, seed: int, index: int) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    chosen = rng.choice(pool.size, size=size, replace=False)
    return float(pool[chosen].mean())


def bootstrap(config: BootstrapConfig, n_workers: int = 1) -> BootstrapReport:
    """Run the seeded bootstrap.

    Parameters
    ----------
    config : BootstrapConfig
    n_workers : int, default 1
        Thread count; any value yields the identical report.

    Returns
    -------
    BootstrapReport
    """
    if n_workers < 1:
        raise ConfigError(f"n_workers must be positive, got {n_workers}")
    pool = config.pool
    means = np.empty(config.n_resamples)

    def fill(span):
        start, stop = span
        for i in range(start, stop):
            means[i] = _resample_mean(pool, config.portfolio_size, config.seed, i)

    if n_workers == 1:
        fill((0, config.n_resamples))
    else:
        step = -(-config.n_resamples // n_workers)
        spans = [
            (lo, min(lo + step, config.n_resamples))
            for lo in range(0, config.n_resamples, step)
        ]
        with ThreadPoolExecutor(max_workers=n_workers) as pool_exec:
            list(pool_exec.map(fill, spans))

    return BootstrapReport(
        expected_x=float(means.mean()),
        prob_non_negative=float((means >= 0.0).mean()),
        resample_means=np.sort(means),
    )


def histogram(report: BootstrapReport, bins: int = 20):
    """Equal-width binning of the resample means.

    Returns
    -------
    (counts, edges)
        counts sums to the resample count; a degenerate distribution
        lands in a single occupied bin.
    """
    if bins < 1:
        raise ConfigError(f"bins must be positive, got {bins}")
    counts, edges = np.histogram(report.resample_means, bins=bins)
    return counts, edges


def load_pool_csv(path):
    """Read a ``symbol,x_percent`` file into (symbols, margins)."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [cell.strip().lower() for cell in header] != ["symbol", "x_percent"]:
            raise DataError(
                f"{path}:1: expected header 'symbol,x_percent', got {','.join(header)!r}"
            )
        symbols, values = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
            symbol = row[0].strip()
            if not symbol:
                raise DataError(f"{path}:{line_no}: empty symbol")
            if symbol in symbols:
                raise DataError(f"{path}:{line_no}: duplicate symbol {symbol!r}")
            try:
                value = float(row[1])
            except ValueError:
                raise DataError(f"{path}:{line_no}: not a number: {row[1]!r}") from None
            if not np.isfinite(value):
                raise DataError(f"{path}:{line_no}: margin must be finite")
            symbols.append(symbol)
            values.append(value)
    if not symbols:
        raise DataError(f"{path}: no data rows")
    return symbols, np.array(values)
