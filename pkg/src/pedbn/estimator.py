"""Scikit-learn style front end to the PE model.

The estimator takes a raw observed-PE series, places default grids over
it, fits the free parameters by MAP EM, and exposes the fitted fundamental
PE level and causal mispricing estimates. Hyperparameters are stored
verbatim in __init__ and validated in fit, so get_params, set_params, and
clone behave like any other scikit-learn estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigError, InvalidModelError
from .inference import filtered_z_path, forward_filter, map_pe, smooth
from .learning import EmConfig, em_fit
from .model import (
    ObservationSeries,
    PriorSpec,
    StateGrids,
    default_pe_grid,
    default_z_grid,
    validate_prior,
)


def _as_observed_pe(X) -> np.ndarray:
    """Validate an observed-PE input: positive, finite, one series."""
    if isinstance(X, ObservationSeries):
        return X.observed_pe
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidModelError(
            f"expected one observed-PE series as a (T,) or (T, 1) array, got shape {np.shape(X)}"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise InvalidModelError("observed PE values must be positive and finite")
    return arr


class FundamentalPEModel(BaseEstimator):
    """MAP-fitted latent-state model of an observed PE series.

    Parameters
    ----------
    z_grid : array-like, optional
        Explicit mispricing grid; overrides n_z_states and z_span.
    pe_grid : array-like, optional
        Explicit fundamental PE grid; overrides n_pe_levels.
    n_z_states : int, default 7
        Size of the default mispricing grid.
    z_span : float, default 0.30
        Half-width of the default mispricing grid.
    n_pe_levels : int, default 15
        Size of the default PE grid, spread between the 5th and 95th
        percentile of the training observed PE.
    w_self_weight : float, default 0.95
        Diagonal fraction of the persistence prior on the transition
        matrix (0.95 puts the prior mode at a 20-day mean dwell time).
    w_strength : float, default 20.0
        Pseudo-count budget of the persistence prior.
    prior : PriorSpec, optional
        Full prior override; replaces the persistence construction.
    max_iters : int, default 500
    tol : float, default 1e-8
    n_restarts : int, default 5
    random_state : int, default 0
        Non-negative seed for the EM starting points.

    Attributes
    ----------
    grids_ : StateGrids
    prior_ : PriorSpec
    params_ : ModelParams
    trace_ : EmTrace
    converged_ : bool
    n_iter_ : int
    log_posterior_ : float
    pe_index_, pe_value_ : int, float
        MAP fundamental PE level on the training window.
    pe_marginal_ : ndarray of shape (N,)
    """

    def __init__(
        self,
        z_grid=None,
        pe_grid=None,
        n_z_states=7,
        z_span=0.30,
        n_pe_levels=15,
        w_self_weight=0.95,
        w_strength=20.0,
        prior=None,
        max_iters=500,
        tol=1e-8,
        n_restarts=5,
        random_state=0,
    ):
        self.z_grid = z_grid
        self.pe_grid = pe_grid
        self.n_z_states = n_z_states
        self.z_span = z_span
        self.n_pe_levels = n_pe_levels
        self.w_self_weight = w_self_weight
        self.w_strength = w_strength
        self.prior = prior
        self.max_iters = max_iters
        self.tol = tol
        self.n_restarts = n_restarts
        self.random_state = random_state

    def _build_grids(self, observed_pe: np.ndarray) -> StateGrids:
        if self.z_grid is not None:
            z = np.asarray(self.z_grid, dtype=float)
        else:
            z = default_z_grid(int(self.n_z_states), float(self.z_span))
        if self.pe_grid is not None:
            pe = np.asarray(self.pe_grid, dtype=float)
        else:
            pe = default_pe_grid(observed_pe, int(self.n_pe_levels))
        return StateGrids(z_values=z, pe_values=pe)

    def _build_prior(self, grids: StateGrids) -> PriorSpec:
        if self.prior is not None:
            errors = validate_prior(self.prior, grids)
            if errors:
                raise InvalidModelError("; ".join(errors))
            return self.prior
        return PriorSpec.persistent(
            grids.n_z,
            grids.n_pe,
            self_weight=float(self.w_self_weight),
            strength=float(self.w_strength),
        )

    def fit(self, X, y=None):
        """Fit to one observed-PE series.

        Parameters
        ----------
        X : ObservationSeries or array-like of shape (T,) or (T, 1)
            Observed PE values P_t / E_t, strictly positive.
        y : ignored
        """
        observed_pe = _as_observed_pe(X)
        if observed_pe.size < 2:
            raise InvalidModelError("fit needs at least two observations")
        seed = self.random_state if self.random_state is not None else 0
        if not isinstance(seed, (int, np.integer)) or seed < 0:
            raise ConfigError(
                f"random_state must be a non-negative integer, got {self.random_state!r}"
            )
        grids = self._build_grids(observed_pe)
        prior = self._build_prior(grids)
        config = EmConfig(
            max_iters=int(self.max_iters),
            tol=float(self.tol),
            n_restarts=int(self.n_restarts),
            seed=int(seed),
        )
        log_pe = np.log(observed_pe)
        trace = em_fit(log_pe, grids, prior, init=None, config=config)

        self.grids_ = grids
        self.prior_ = prior
        self.params_ = trace.params
        self.trace_ = trace
        self.converged_ = trace.converged
        self.n_iter_ = trace.n_iter
        self.log_posterior_ = float(trace.log_posteriors[-1])
        estimate = map_pe(smooth(log_pe, trace.params, grids), grids)
        self.pe_index_ = estimate.index
        self.pe_value_ = estimate.value
        self.pe_marginal_ = estimate.marginal
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise InvalidModelError("this estimator is not fitted yet; call fit first")

    def score(self, X, y=None) -> float:
        """Log likelihood of an observed-PE series under the fitted model."""
        self._check_fitted()
        log_pe = np.log(_as_observed_pe(X))
        return forward_filter(log_pe, self.params_, self.grids_).log_likelihood()

    def predict(self, X) -> np.ndarray:
        """Causal mispricing estimates for each date of a series.

        Filtering restarts from the fitted initial distribution, so pass
        the training window concatenated with any later data to continue
        the training-time information set.
        """
        return self.predict_path(X).mode_values

    def predict_path(self, X):
        """Full causal estimate path (modes, indices, posterior means)."""
        self._check_fitted()
        log_pe = np.log(_as_observed_pe(X))
        return filtered_z_path(
            forward_filter(log_pe, self.params_, self.grids_), self.grids_
        )

    def smooth(self, X):
        """Posterior bundle of a series under the fitted parameters."""
        self._check_fitted()
        log_pe = np.log(_as_observed_pe(X))
        return smooth(log_pe, self.params_, self.grids_)
