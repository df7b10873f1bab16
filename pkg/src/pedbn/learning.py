"""MAP parameter estimation by expectation-maximization.

The free parameters are the transition matrix W, the initial mispricing
distribution u, the PE-level prior v, and the noise level sigma. W, u, and
v carry Dirichlet priors given as pseudo-counts (>= 1); sigma carries none.
Each EM iteration maximizes the expected complete-data log density plus the
log prior in closed form, so the log posterior never decreases along the
trace.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import ConfigError, ConvergenceWarning, InvalidModelError
from .inference import (
    PosteriorBundle,
    _backward_core,
    _forward_core,
    _pairwise_from_bundle,
    _scaled_emissions,
)
from .model import (
    ModelParams,
    ObservationSeries,
    PriorSpec,
    StateGrids,
    ensure_valid,
    validate_grids,
    validate_prior,
)

# Posterior-weighted residual variance below this is treated as degenerate.
SIGMA2_FLOOR = 1e-12


def dirichlet_log_pdf(x: np.ndarray, counts: np.ndarray) -> float:
    """Log density of a Dirichlet with pseudo-counts >= 1 at point x.

    Boundary points are handled explicitly: a zero coordinate contributes
    nothing when its count is exactly 1 and sends the density to -inf when
    the count exceeds 1 (the point leaves the prior's support).
    """
    x = np.asarray(x, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if x.shape != counts.shape or np.any(x < 0.0) or abs(x.sum() - 1.0) > 1e-9:
        raise InvalidModelError("x must be a point on the probability simplex")
    if np.any((x == 0.0) & (counts > 1.0)):
        return -np.inf
    norm = gammaln(counts.sum()) - gammaln(counts).sum()
    safe = np.where(x > 0.0, x, 1.0)
    return float(norm + ((counts - 1.0) * np.log(safe)).sum())


def log_prior(params: ModelParams, prior: PriorSpec) -> float:
    """Joint log prior density of (W, u, v); -inf flags a support violation."""
    total = dirichlet_log_pdf(params.pe_prior, prior.v_counts)
    total += dirichlet_log_pdf(params.z_initial, prior.u_counts)
    for m in range(params.transition.shape[1]):
        total += dirichlet_log_pdf(params.transition[:, m], prior.w_counts[:, m])
    return total


def log_posterior(series, params: ModelParams, grids: StateGrids, prior: PriorSpec) -> float:
    """ln p(y | params) + ln p(params); -inf flags a support violation."""
    _ensure_valid_prior(prior, grids)
    prior_term = log_prior(params, prior)
    if prior_term == -np.inf:
        return -np.inf
    from .inference import forward_filter

    return forward_filter(series, params, grids).log_likelihood() + prior_term


def _ensure_valid_prior(prior: PriorSpec, grids: StateGrids) -> None:
    errors = validate_grids(grids) + validate_prior(prior, grids)
    if errors:
        raise InvalidModelError("; ".join(errors))


@dataclass(frozen=True)
class EmConfig:
    """Knobs of the EM loop.

    Attributes
    ----------
    max_iters : int
        Iteration cap; hitting it sets converged=False on the trace.
    tol : float
        Convergence threshold on |delta| <= tol * (1 + |previous|) for
        successive log-posterior values.
    n_restarts : int
        Extra runs from random starting points; 1 + n_restarts runs in
        total, the best final log posterior wins, ties go to the
        earliest run.
    seed : int
        Non-negative master seed for the random starting points.
    """

    max_iters: int = 500
    tol: float = 1e-8
    n_restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not self.tol > 0.0:
            raise ConfigError("tol must be positive")
        if self.n_restarts < 0:
            raise ConfigError("n_restarts must be non-negative")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass
class EmTrace:
    """Outcome of one em_fit call.

    log_posteriors holds the objective at every retained iterate of the
    winning run; params is the iterate the last entry was evaluated at.
    """

    log_posteriors: np.ndarray
    params: ModelParams
    converged: bool
    n_iter: int
    restart: int
    restart_log_posteriors: list = field(default_factory=list)


def random_init(grids: StateGrids, prior: PriorSpec, y: np.ndarray, rng) -> ModelParams:
    """Draw a starting point: probabilities from the prior, sigma from data.

    Sigma starts at the standard deviation of the first differences of y,
    floored at 1e-3 so a constant series still yields a usable start.
    """
    m = grids.n_z
    transition = np.column_stack([rng.dirichlet(prior.w_counts[:, col]) for col in range(m)])
    sigma = float(np.std(np.diff(y))) if y.size >= 2 else 0.0
    return ModelParams(
        transition=transition,
        z_initial=rng.dirichlet(prior.u_counts),
        pe_prior=rng.dirichlet(prior.v_counts),
        sigma=max(sigma, 1e-3),
    )


def _e_step(y, params, grids):
    """One forward-backward pass; returns the bundle and pairwise posteriors."""
    phi_s, shift = _scaled_emissions(y, grids, params.sigma)
    filtered, log_c, c_scaled = _forward_core(
        phi_s, shift, params.transition, params.z_initial, params.pe_prior
    )
    backward = _backward_core(phi_s, c_scaled, params.transition)
    smoothed = np.empty_like(filtered)
    if y.size > 1:
        smoothed[:-1] = filtered[:-1] * backward
    smoothed[-1] = filtered[-1]
    bundle = PosteriorBundle(
        filtered=filtered, backward=backward, smoothed=smoothed, log_c=log_c
    )
    xi = _pairwise_from_bundle(bundle, phi_s, c_scaled, params.transition)
    return bundle, xi


def m_step(
    smoothed: np.ndarray,
    xi: np.ndarray,
    y: np.ndarray,
    grids: StateGrids,
    prior: PriorSpec,
) -> ModelParams:
    """Closed-form MAP maximizer of the EM objective.

    Parameters
    ----------
    smoothed : ndarray of shape (T, M, N)
        Smoothed posteriors gamma_t.
    xi : ndarray of shape (T-1, M, M, N)
        Pairwise posteriors; sum over dates and PE levels gives the
        expected transition counts.
    y : ndarray of shape (T,)
    grids : StateGrids
    prior : PriorSpec

    Returns
    -------
    ModelParams
        u and v are posterior marginals plus excess counts, renormalized;
        each W column likewise over its expected transition counts; sigma
        is the posterior-weighted RMS residual. A residual variance below
        1e-12 is floored with a ConvergenceWarning.
    """
    n_steps = smoothed.shape[0]

    u = smoothed[0].sum(axis=1) + (prior.u_counts - 1.0)
    u /= u.sum()

    # PE* is static, so its smoothed marginal is date-invariant; the last
    # date's is the filtered one, exact by construction.
    v = smoothed[-1].sum(axis=0) + (prior.v_counts - 1.0)
    v /= v.sum()

    w = xi.sum(axis=(0, 3)) + (prior.w_counts - 1.0)
    col_totals = w.sum(axis=0)
    dead = col_totals == 0.0
    if np.any(dead):
        # no expected visits and a flat prior: the column is unconstrained
        w[:, dead] = 1.0
        col_totals = w.sum(axis=0)
    w /= col_totals[None, :]

    resid_sq = (y[:, None, None] - grids.log_means()[None, :, :]) ** 2
    sigma2 = float(np.einsum("tmn,tmn->", smoothed, resid_sq)) / n_steps
    if sigma2 < SIGMA2_FLOOR:
        warnings.warn(
            "posterior residual variance collapsed; sigma floored at "
            f"{np.sqrt(SIGMA2_FLOOR):g}",
            ConvergenceWarning,
        )
        sigma2 = SIGMA2_FLOOR

    return ModelParams(
        transition=w, z_initial=u, pe_prior=v, sigma=float(np.sqrt(sigma2))
    )


def _fit_once(y, grids, prior, start, config, restart_index):
    params = start.copy()
    trace = []
    converged = False
    for iteration in range(config.max_iters):
        bundle, xi = _e_step(y, params, grids)
        objective = bundle.log_likelihood() + log_prior(params, prior)
        trace.append(objective)
        if len(trace) > 1 and abs(objective - trace[-2]) <= config.tol * (
            1.0 + abs(trace[-2])
        ):
            converged = True
            break
        if iteration < config.max_iters - 1:
            params = m_step(bundle.smoothed, xi, y, grids, prior)
    return EmTrace(
        log_posteriors=np.asarray(trace),
        params=params,
        converged=converged,
        n_iter=len(trace),
        restart=restart_index,
    )


def em_fit(
    series,
    grids: StateGrids,
    prior: PriorSpec,
    init: ModelParams | None = None,
    config: EmConfig | None = None,
) -> EmTrace:
    """Fit the model by EM from one or more starting points.

    Parameters
    ----------
    series : ObservationSeries or array-like of shape (T,)
        Log observed PE values; at least two observations.
    grids : StateGrids
    prior : PriorSpec
    init : ModelParams, optional
        Starting point for the first run; validated if given. The
        remaining config.n_restarts runs always start from random draws.
    config : EmConfig, optional

    Returns
    -------
    EmTrace
        The run with the best final log posterior. Its converged flag is
        False when that run stopped at the iteration cap (a
        ConvergenceWarning is emitted; the best iterate is still
        returned). restart_log_posteriors lists every run's final value.
    """
    config = config or EmConfig()
    _ensure_valid_prior(prior, grids)
    y = series.y if isinstance(series, ObservationSeries) else np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise InvalidModelError("em_fit needs a one-dimensional series of length >= 2")
    if not np.all(np.isfinite(y)):
        raise InvalidModelError("series must be finite")
    if init is not None:
        ensure_valid(init, grids)

    children = np.random.SeedSequence(config.seed).spawn(config.n_restarts + 1)
    best = None
    finals = []
    for run_index in range(config.n_restarts + 1):
        if run_index == 0 and init is not None:
            start = init
        else:
            start = random_init(grids, prior, y, np.random.default_rng(children[run_index]))
        trace = _fit_once(y, grids, prior, start, config, run_index)
        finals.append(float(trace.log_posteriors[-1]))
        if best is None or trace.log_posteriors[-1] > best.log_posteriors[-1]:
            best = trace
    best.restart_log_posteriors = finals
    if not best.converged:
        warnings.warn(
            f"EM stopped at the iteration cap ({config.max_iters}) without "
            "meeting tol; returning the best iterate",
            ConvergenceWarning,
        )
    return best
