"""Exact posterior inference over the latent mispricing path and PE level.

The joint latent state at date t is the pair (z_t, PE*), so every posterior
here is an (M, N) matrix over mispricing states (rows) and PE levels
(columns). All recursions run on rescaled quantities: each forward matrix is
normalized by its entry sum c_t = p(y_t | y_1..y_{t-1}), and emission
densities are exponentiated only after subtracting their per-date maximum.
Long series and small noise levels therefore never underflow, and the log
likelihood is recovered as the sum of the log scaling constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InferenceError
from .model import (
    ModelParams,
    ObservationSeries,
    StateGrids,
    ensure_valid,
    log_emission_matrix,
)


def _as_y(series) -> np.ndarray:
    if isinstance(series, ObservationSeries):
        return series.y
    y = np.atleast_1d(np.asarray(series, dtype=float))
    if y.ndim != 1 or y.size == 0:
        raise InferenceError("series must be a non-empty one-dimensional array")
    if not np.all(np.isfinite(y)):
        raise InferenceError("series must be finite")
    return y


def _scaled_emissions(y: np.ndarray, grids: StateGrids, sigma: float):
    log_phi = log_emission_matrix(y, grids, sigma)
    shift = log_phi.max(axis=(1, 2))
    return np.exp(log_phi - shift[:, None, None]), shift


def _forward_core(phi_s, shift, transition, z_initial, pe_prior):
    """Scaled forward recursion on max-shifted emissions.

    Returns the normalized forward matrices A (T, M, N), the log scaling
    constants (T,), and the scaled constants c_t / exp(shift_t) reused by
    the backward pass.
    """
    n_steps = phi_s.shape[0]
    filtered = np.empty_like(phi_s)
    log_c = np.empty(n_steps)
    c_scaled = np.empty(n_steps)

    current = phi_s[0] * (z_initial[:, None] * pe_prior[None, :])
    for t in range(n_steps):
        if t > 0:
            current = phi_s[t] * (transition @ filtered[t - 1])
        total = current.sum()
        if not total > 0.0:
            raise InferenceError(
                f"scaling constant underflowed to zero at step {t}; "
                "sigma is pathologically small for the data scale"
            )
        filtered[t] = current / total
        c_scaled[t] = total
        log_c[t] = np.log(total) + shift[t]
    return filtered, log_c, c_scaled


def _backward_core(phi_s, c_scaled, transition):
    """Rescaled backward matrices B_t for t = 0..T-2 (empty when T = 1).

    Each B_t divides the raw backward quantity by prod_{s>t} c_s, which
    makes A_t * B_t the smoothed posterior with no further normalization.
    The per-date max shifts cancel between phi and c, so the scaled
    inputs can be used directly.
    """
    n_steps = phi_s.shape[0]
    backward = np.empty((max(n_steps - 1, 0),) + phi_s.shape[1:])
    if n_steps < 2:
        return backward
    backward[-1] = transition.T @ phi_s[-1] / c_scaled[-1]
    for t in range(n_steps - 3, -1, -1):
        backward[t] = transition.T @ (phi_s[t + 1] * backward[t + 1]) / c_scaled[t + 1]
    return backward


@dataclass(frozen=True)
class FilterResult:
    """Causal posteriors p(z_t, PE* | y_1..y_t), one (M, N) matrix per date."""

    filtered: np.ndarray
    log_c: np.ndarray

    @property
    def scaling_constants(self) -> np.ndarray:
        """The constants c_t themselves; may overflow for tiny sigma."""
        return np.exp(self.log_c)

    def log_likelihood(self) -> float:
        return float(self.log_c.sum())


@dataclass(frozen=True)
class PosteriorBundle:
    """Forward, backward, and smoothed posteriors of one series.

    Attributes
    ----------
    filtered : ndarray of shape (T, M, N)
        A_t = p(z_t, PE* | y_1..y_t).
    backward : ndarray of shape (T-1, M, N)
        Rescaled backward matrices B_t; paired entrywise with A_t they
        give the smoothed posteriors directly.
    smoothed : ndarray of shape (T, M, N)
        gamma_t = p(z_t, PE* | y_1..y_T); the last equals filtered[-1].
    log_c : ndarray of shape (T,)
        Natural logs of the scaling constants.
    """

    filtered: np.ndarray
    backward: np.ndarray
    smoothed: np.ndarray
    log_c: np.ndarray

    @property
    def scaling_constants(self) -> np.ndarray:
        return np.exp(self.log_c)

    def log_likelihood(self) -> float:
        return float(self.log_c.sum())

    def pe_marginal(self) -> np.ndarray:
        """p(PE* = b_n | y_1..y_T); identical at every date, read off the last."""
        return self.smoothed[-1].sum(axis=0)


def forward_filter(series, params: ModelParams, grids: StateGrids) -> FilterResult:
    """Run the scaled forward recursion over a series.

    Parameters
    ----------
    series : ObservationSeries or array-like of shape (T,)
        Log observed PE values y_t.
    params : ModelParams
    grids : StateGrids

    Returns
    -------
    FilterResult
    """
    ensure_valid(params, grids)
    y = _as_y(series)
    phi_s, shift = _scaled_emissions(y, grids, params.sigma)
    filtered, log_c, _ = _forward_core(
        phi_s, shift, params.transition, params.z_initial, params.pe_prior
    )
    return FilterResult(filtered=filtered, log_c=log_c)


def log_likelihood(result) -> float:
    """ln p(y_1..y_T) from a filter pass (or its log scaling constants)."""
    if isinstance(result, (FilterResult, PosteriorBundle)):
        return result.log_likelihood()
    return float(np.asarray(result, dtype=float).sum())


def smooth(series, params: ModelParams, grids: StateGrids) -> PosteriorBundle:
    """Forward-backward smoothing over a series.

    Returns
    -------
    PosteriorBundle
        Smoothed matrices sum to 1 by construction; the PE marginal
        (column sums) is the same at every date because PE* is static.
    """
    ensure_valid(params, grids)
    y = _as_y(series)
    phi_s, shift = _scaled_emissions(y, grids, params.sigma)
    filtered, log_c, c_scaled = _forward_core(
        phi_s, shift, params.transition, params.z_initial, params.pe_prior
    )
    backward = _backward_core(phi_s, c_scaled, params.transition)
    smoothed = np.empty_like(filtered)
    if len(y) > 1:
        smoothed[:-1] = filtered[:-1] * backward
    smoothed[-1] = filtered[-1]
    return PosteriorBundle(
        filtered=filtered, backward=backward, smoothed=smoothed, log_c=log_c
    )


def _pairwise_from_bundle(bundle: PosteriorBundle, phi_s, c_scaled, transition):
    n_steps = phi_s.shape[0]
    m, n = phi_s.shape[1], phi_s.shape[2]
    if n_steps < 2:
        return np.empty((0, m, m, n))
    # B-tilde at date t+1: the stored backward matrix, or ones at the end
    b_tilde = np.concatenate([bundle.backward[1:], np.ones((1, m, n))], axis=0)
    gain = phi_s[1:] * b_tilde / c_scaled[1:, None, None]
    return np.einsum("im,tmn,tin->timn", transition, bundle.filtered[:-1], gain)


def pairwise_smooth(series, params: ModelParams, grids: StateGrids) -> np.ndarray:
    """Smoothed transition posteriors p(z_{t+1}, z_t, PE* | y_1..y_T).

    Returns
    -------
    ndarray of shape (T-1, M, M, N)
        Entry (t, i, m, n) is the posterior probability of moving from
        z_t = a_m to z_{t+1} = a_i with PE* = b_n. Marginalizing over i
        recovers the smoothed posterior at t; over m, the one at t+1.
    """
    ensure_valid(params, grids)
    y = _as_y(series)
    phi_s, shift = _scaled_emissions(y, grids, params.sigma)
    filtered, log_c, c_scaled = _forward_core(
        phi_s, shift, params.transition, params.z_initial, params.pe_prior
    )
    backward = _backward_core(phi_s, c_scaled, params.transition)
    smoothed = np.empty_like(filtered)
    if len(y) > 1:
        smoothed[:-1] = filtered[:-1] * backward
    smoothed[-1] = filtered[-1]
    bundle = PosteriorBundle(
        filtered=filtered, backward=backward, smoothed=smoothed, log_c=log_c
    )
    return _pairwise_from_bundle(bundle, phi_s, c_scaled, params.transition)


# ---------------------------------------------------------------------------
# point estimates


@dataclass(frozen=True)
class PEEstimate:
    """Mode of the smoothed PE-level posterior."""

    index: int
    value: float
    marginal: np.ndarray


@dataclass(frozen=True)
class ZPath:
    """Per-date point estimates of the mispricing state.

    mode_values holds the grid value with the highest filtered marginal
    at each date (ties resolve to the lower index); mean_values holds the
    posterior mean, kept as a diagnostic.
    """

    mode_indices: np.ndarray
    mode_values: np.ndarray
    mean_values: np.ndarray


def map_pe(bundle: PosteriorBundle, grids: StateGrids) -> PEEstimate:
    """Most probable fundamental PE level given the whole series."""
    marginal = bundle.pe_marginal()
    index = int(np.argmax(marginal))
    return PEEstimate(index=index, value=float(grids.pe_values[index]), marginal=marginal)


def filtered_z_estimate(filtered_t: np.ndarray, grids: StateGrids):
    """Mode index and value of one date's filtered mispricing marginal."""
    marginal = filtered_t.sum(axis=1)
    index = int(np.argmax(marginal))
    return index, float(grids.z_values[index])


def filtered_z_path(result: FilterResult, grids: StateGrids) -> ZPath:
    """Causal mispricing estimates for every date of a filter pass.

    The estimate at date t depends on y_1..y_t only, so the path can be
    consumed by trading rules without look-ahead.
    """
    marginals = result.filtered.sum(axis=2)
    indices = np.argmax(marginals, axis=1)
    return ZPath(
        mode_indices=indices,
        mode_values=grids.z_values[indices],
        mean_values=marginals @ grids.z_values,
    )
