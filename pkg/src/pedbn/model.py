"""Generative model of an observed price-earnings series.

The observed quantity is y_t = ln(P_t / E_t), the log of the observed PE
ratio. It is explained by two latent variables:

* a static fundamental PE level, drawn once per series from a finite grid
  of candidate levels b_1 < ... < b_N with prior weights v, and
* a Markov mispricing state z_t on a finite grid a_1 < ... < a_M, started
  from weights u and advanced by a column-stochastic transition matrix W
  whose column m holds p(z_{t+1} = a_i | z_t = a_m).

Conditional on both, y_t is Gaussian with mean ln(b_n * (1 + a_m)) and
standard deviation sigma. This module holds the parameter containers,
their validation, the emission density, and a seeded sampler.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidModelError

_LOG_2PI = math.log(2.0 * math.pi)

# Chains with this many mispricing states or more are rejected: on series of
# a few years of daily data the extra states are unidentifiable.
MAX_Z_STATES = 10

#: Sums of probability vectors may drift from 1 by this much and still pass.
STOCHASTIC_ATOL = 1e-8


@dataclass(frozen=True)
class StateGrids:
    """Finite supports of the two latent variables.

    Parameters
    ----------
    z_values : ndarray of shape (M,)
        Mispricing fractions a_1 < ... < a_M, each greater than -1.
    pe_values : ndarray of shape (N,)
        Candidate fundamental PE levels b_1 < ... < b_N, all positive.
    """

    z_values: np.ndarray
    pe_values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z_values", np.asarray(self.z_values, dtype=float))
        object.__setattr__(self, "pe_values", np.asarray(self.pe_values, dtype=float))

    @property
    def n_z(self) -> int:
        return int(self.z_values.size)

    @property
    def n_pe(self) -> int:
        return int(self.pe_values.size)

    def log_means(self) -> np.ndarray:
        """Emission means ln(b_n * (1 + a_m)) as an (M, N) matrix."""
        return np.log1p(self.z_values)[:, None] + np.log(self.pe_values)[None, :]


@dataclass
class ModelParams:
    """Free parameters of the model.

    Attributes
    ----------
    transition : ndarray of shape (M, M)
        Column-stochastic matrix W; entry (i, m) is the probability of
        moving to mispricing state a_i from state a_m, so each column
        sums to 1.
    z_initial : ndarray of shape (M,)
        Distribution u of the first mispricing state.
    pe_prior : ndarray of shape (N,)
        Distribution v of the fundamental PE level.
    sigma : float
        Observation noise standard deviation, positive.
    """

    transition: np.ndarray
    z_initial: np.ndarray
    pe_prior: np.ndarray
    sigma: float

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.z_initial = np.asarray(self.z_initial, dtype=float)
        self.pe_prior = np.asarray(self.pe_prior, dtype=float)
        self.sigma = float(self.sigma)

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.transition.copy(),
            self.z_initial.copy(),
            self.pe_prior.copy(),
            self.sigma,
        )


@dataclass
class PriorSpec:
    """Dirichlet pseudo-counts for the probability parameters.

    All counts must be >= 1 so the MAP updates stay inside the simplex.
    The noise level sigma carries no prior (its update is the plain
    posterior-weighted maximum-likelihood value).

    Attributes
    ----------
    w_counts : ndarray of shape (M, M)
        Per-column Dirichlet counts for the transition matrix.
    u_counts : ndarray of shape (M,)
        Counts for the initial mispricing distribution.
    v_counts : ndarray of shape (N,)
        Counts for the fundamental PE distribution.
    """

    w_counts: np.ndarray
    u_counts: np.ndarray
    v_counts: np.ndarray

    def __post_init__(self):
        self.w_counts = np.asarray(self.w_counts, dtype=float)
        self.u_counts = np.asarray(self.u_counts, dtype=float)
        self.v_counts = np.asarray(self.v_counts, dtype=float)

    @classmethod
    def flat(cls, n_z: int, n_pe: int) -> "PriorSpec":
        """All-ones counts: MAP estimation collapses to maximum likelihood."""
        return cls(
            w_counts=np.ones((n_z, n_z)),
            u_counts=np.ones(n_z),
            v_counts=np.ones(n_pe),
        )

    @classmethod
    def persistent(
        cls,
        n_z: int,
        n_pe: int,
        self_weight: float = 0.95,
        strength: float = 20.0,
    ) -> "PriorSpec":
        """Flat prior except the transition counts favor staying put.

        Each transition column gets counts 1 + strength * f where f puts
        fraction ``self_weight`` on the diagonal and splits the rest
        evenly. The prior mode is then exactly f, so the default 0.95
        corresponds to a mean dwell time of 20 trading days.
        """
        if not 0.0 < self_weight < 1.0:
            raise InvalidModelError("self_weight must lie strictly between 0 and 1")
        if strength < 0.0:
            raise InvalidModelError("strength must be non-negative")
        if n_z == 1:
            shape = np.ones((1, 1))
        else:
            off = (1.0 - self_weight) / (n_z - 1)
            shape = np.full((n_z, n_z), off)
            np.fill_diagonal(shape, self_weight)
        return cls(
            w_counts=1.0 + strength * shape,
            u_counts=np.ones(n_z),
            v_counts=np.ones(n_pe),
        )


@dataclass(frozen=True)
class ObservationSeries:
    """A dated market series with pre-computed log observed PE.

    Attributes
    ----------
    dates : tuple of datetime.date
        Strictly increasing trading dates.
    prices : ndarray of shape (T,)
        Positive closing prices.
    earnings : ndarray of shape (T,)
        Positive trailing annual earnings per share, aligned to dates.
    y : ndarray of shape (T,)
        ln(prices / earnings).
    """

    dates: tuple
    prices: np.ndarray
    earnings: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", np.asarray(self.prices, dtype=float))
        object.__setattr__(self, "earnings", np.asarray(self.earnings, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @classmethod
    def from_arrays(cls, dates, prices, earnings) -> "ObservationSeries":
        prices = np.asarray(prices, dtype=float)
        earnings = np.asarray(earnings, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.log(prices / earnings)
        series = cls(tuple(dates), prices, earnings, y)
        errors = validate_series(series)
        if errors:
            raise InvalidModelError("; ".join(errors))
        return series

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def observed_pe(self) -> np.ndarray:
        return self.prices / self.earnings

    def window(self, start: int, stop: int) -> "ObservationSeries":
        """Sub-series over the half-open index range [start, stop)."""
        return ObservationSeries(
            self.dates[start:stop],
            self.prices[start:stop],
            self.earnings[start:stop],
            self.y[start:stop],
        )


def concat_series(first: ObservationSeries, second: ObservationSeries) -> ObservationSeries:
    """Join two series end to end; dates must stay strictly increasing."""
    if first.dates and second.dates and second.dates[0] <= first.dates[-1]:
        raise InvalidModelError(
            "second series must start after the first ends "
            f"({second.dates[0]} <= {first.dates[-1]})"
        )
    return ObservationSeries(
        first.dates + second.dates,
        np.concatenate([first.prices, second.prices]),
        np.concatenate([first.earnings, second.earnings]),
        np.concatenate([first.y, second.y]),
    )


# ---------------------------------------------------------------------------
# validation helpers: collect every violation, raise once


def validate_grids(grids: StateGrids) -> list:
    """Return a list of human-readable violations, empty when valid."""
    errors = []
    z, pe = grids.z_values, grids.pe_values
    if z.ndim != 1 or pe.ndim != 1:
        errors.append("grids must be one-dimensional")
        return errors
    if not (1 <= z.size < MAX_Z_STATES):
        errors.append(
            f"number of mispricing states must be in [1, {MAX_Z_STATES - 1}], got {z.size}"
        )
    if pe.size < 1:
        errors.append("PE grid must hold at least one level")
    if not np.all(np.isfinite(z)) or not np.all(np.isfinite(pe)):
        errors.append("grid values must be finite")
        return errors
    if np.any(z <= -1.0):
        errors.append("mispricing values must exceed -1 so prices stay positive")
    if np.any(pe <= 0.0):
        errors.append("PE grid values must be positive")
    if z.size > 1 and np.any(np.diff(z) <= 0.0):
        errors.append("mispricing grid must be strictly increasing")
    if pe.size > 1 and np.any(np.diff(pe) <= 0.0):
        errors.append("PE grid must be strictly increasing")
    return errors


def _check_stochastic(vec: np.ndarray, what: str, errors: list) -> None:
    if np.any(vec < 0.0) or not np.all(np.isfinite(vec)):
        errors.append(f"{what} must be finite and non-negative")
    elif abs(float(vec.sum()) - 1.0) > STOCHASTIC_ATOL:
        errors.append(f"{what} must sum to 1, got {float(vec.sum())!r}")


def validate_params(params: ModelParams, grids: StateGrids) -> list:
    """Check every ModelParams invariant against the grids.

    Returns
    -------
    list of str
        One entry per violation; empty when the parameters are valid.
    """
    errors = validate_grids(grids)
    m, n = grids.n_z, grids.n_pe
    w, u, v = params.transition, params.z_initial, params.pe_prior
    if w.shape != (m, m):
        errors.append(f"transition matrix must have shape ({m}, {m}), got {w.shape}")
    else:
        for col in range(m):
            _check_stochastic(w[:, col], f"transition column {col}", errors)
    if u.shape != (m,):
        errors.append(f"z_initial must have shape ({m},), got {u.shape}")
    else:
        _check_stochastic(u, "z_initial", errors)
    if v.shape != (n,):
        errors.append(f"pe_prior must have shape ({n},), got {v.shape}")
    else:
        _check_stochastic(v, "pe_prior", errors)
    if not (math.isfinite(params.sigma) and params.sigma > 0.0):
        errors.append(f"sigma must be a positive finite real, got {params.sigma!r}")
    return errors


def validate_prior(prior: PriorSpec, grids: StateGrids) -> list:
    errors = []
    m, n = grids.n_z, grids.n_pe
    for name, counts, shape in (
        ("w_counts", prior.w_counts, (m, m)),
        ("u_counts", prior.u_counts, (m,)),
        ("v_counts", prior.v_counts, (n,)),
    ):
        if counts.shape != shape:
            errors.append(f"{name} must have shape {shape}, got {counts.shape}")
        elif not np.all(np.isfinite(counts)) or np.any(counts < 1.0):
            errors.append(f"{name} must be finite and >= 1 everywhere")
    return errors


def validate_series(series: ObservationSeries) -> list:
    errors = []
    t = len(series.dates)
    if not (series.prices.shape == series.earnings.shape == series.y.shape == (t,)):
        errors.append("dates, prices, earnings, and y must share one length")
        return errors
    if t == 0:
        errors.append("series must hold at least one observation")
        return errors
    if any(b <= a for a, b in zip(series.dates, series.dates[1:])):
        errors.append("dates must be strictly increasing")
    clean = True
    if np.any(series.prices <= 0.0) or not np.all(np.isfinite(series.prices)):
        errors.append("prices must be positive and finite")
        clean = False
    if np.any(series.earnings <= 0.0) or not np.all(np.isfinite(series.earnings)):
        errors.append("earnings must be positive and finite")
        clean = False
    if clean and not np.allclose(
        series.y, np.log(series.prices / series.earnings), atol=1e-12
    ):
        errors.append("y must equal ln(prices / earnings)")
    return errors


def ensure_valid(params: ModelParams, grids: StateGrids) -> None:
    """Raise InvalidModelError listing all violations, or return silently."""
    errors = validate_params(params, grids)
    if errors:
        raise InvalidModelError("; ".join(errors))


# ---------------------------------------------------------------------------
# emission density


def log_emission_matrix(y: np.ndarray, grids: StateGrids, sigma: float) -> np.ndarray:
    """Log emission densities for every observation and grid cell.

    Parameters
    ----------
    y : ndarray of shape (T,)
        Log observed PE values.
    grids : StateGrids
    sigma : float
        Noise standard deviation.

    Returns
    -------
    ndarray of shape (T, M, N)
        Entry (t, m, n) is ln N(y_t; ln(b_n * (1 + a_m)), sigma^2).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    resid = (y[:, None, None] - grids.log_means()[None, :, :]) / sigma
    return -0.5 * resid * resid - math.log(sigma) - 0.5 * _LOG_2PI


def emission_matrix(y: float, grids: StateGrids, sigma: float) -> np.ndarray:
    """Emission densities phi_mn(y) as an (M, N) matrix."""
    return np.exp(log_emission_matrix(np.array([y]), grids, sigma)[0])


def emission_density(
    y: float, z_index: int, pe_index: int, grids: StateGrids, sigma: float
) -> float:
    """Density of y given z = a_{z_index} and PE level b_{pe_index}."""
    mean = math.log(grids.pe_values[pe_index] * (1.0 + grids.z_values[z_index]))
    resid = (y - mean) / sigma
    return math.exp(-0.5 * resid * resid) / (sigma * math.sqrt(2.0 * math.pi))


# ---------------------------------------------------------------------------
# seeded sampling


@dataclass(frozen=True)
class SeriesTruth:
    """Latent draw behind a synthetic series."""

    pe_index: int
    pe_value: float
    z_indices: np.ndarray
    z_values: np.ndarray


def weekday_dates(start: dt.date, count: int) -> tuple:
    """The first `count` Monday-to-Friday dates on or after `start`."""
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return tuple(out)


def _draw_index(cumulative: np.ndarray, r: float) -> int:
    # cumulative[-1] is forced to 1.0 so r in [0, 1) always lands in range
    return int(np.searchsorted(cumulative, r, side="right"))


def generate_series(
    params: ModelParams,
    grids: StateGrids,
    n_steps: int,
    earnings: np.ndarray,
    seed: int,
    start_date: dt.date = dt.date(2012, 1, 2),
):
    """Sample one synthetic series from the model.

    Parameters
    ----------
    params : ModelParams
    grids : StateGrids
    n_steps : int
        Series length T, at least 1.
    earnings : ndarray of shape (T,)
        Positive trailing annual earnings path E_t; prices are generated
        as E_t * exp(y_t).
    seed : int
        Non-negative seed. Identical inputs give bit-identical output.
    start_date : datetime.date
        First candidate calendar date; dates advance over weekdays.

    Returns
    -------
    (ObservationSeries, SeriesTruth)
    """
    ensure_valid(params, grids)
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InvalidModelError(f"seed must be a non-negative integer, got {seed!r}")
    n_steps = int(n_steps)
    if n_steps < 1:
        raise InvalidModelError("n_steps must be at least 1")
    earnings = np.asarray(earnings, dtype=float)
    if earnings.shape != (n_steps,) or np.any(earnings <= 0.0):
        raise InvalidModelError("earnings must be a positive vector of length n_steps")

    rng = np.random.default_rng(int(seed))
    r_pe = rng.random()
    r_z = rng.random(n_steps)
    eps = rng.standard_normal(n_steps)

    cum_v = np.cumsum(params.pe_prior)
    cum_v[-1] = 1.0
    cum_u = np.cumsum(params.z_initial)
    cum_u[-1] = 1.0
    cum_w = np.cumsum(params.transition, axis=0)
    cum_w[-1, :] = 1.0

    pe_index = _draw_index(cum_v, r_pe)
    z_indices = np.empty(n_steps, dtype=int)
    z_indices[0] = _draw_index(cum_u, r_z[0])
    for t in range(1, n_steps):
        z_indices[t] = _draw_index(cum_w[:, z_indices[t - 1]], r_z[t])

    log_means = grids.log_means()
    y = log_means[z_indices, pe_index] + params.sigma * eps
    prices = earnings * np.exp(y)

    series = ObservationSeries(weekday_dates(start_date, n_steps), prices, earnings, y)
    truth = SeriesTruth(
        pe_index=pe_index,
        pe_value=float(grids.pe_values[pe_index]),
        z_indices=z_indices,
        z_values=grids.z_values[z_indices],
    )
    return series, truth


# ---------------------------------------------------------------------------
# default grid placement


def default_z_grid(n_states: int = 7, span: float = 0.30) -> np.ndarray:
    """Equally spaced mispricing grid on [-span, +span]."""
    if n_states == 1:
        return np.zeros(1)
    return np.linspace(-span, span, n_states)


def default_pe_grid(observed_pe: np.ndarray, n_levels: int = 15) -> np.ndarray:
    """Equally spaced PE levels between the 5th and 95th percentile.

    A constant series collapses the percentile range; the grid then
    degenerates to that single level.
    """
    observed_pe = np.asarray(observed_pe, dtype=float)
    lo, hi = np.percentile(observed_pe, [5.0, 95.0])
    if not hi > lo:
        return np.array([float(lo)])
    if n_levels == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, n_levels)
