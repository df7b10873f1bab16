import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pedbn import (
    InferenceError,
    InvalidModelError,
    ModelParams,
    ObservationSeries,
    StateGrids,
    filtered_z_path,
    forward_filter,
    log_likelihood,
    map_pe,
    pairwise_smooth,
    smooth,
)
from pedbn.inference import _backward_core, _forward_core, filtered_z_estimate
from pedbn.model import weekday_dates

from .oracles import (
    brute_filtered,
    brute_log_likelihood,
    brute_pairwise,
    brute_smoothed,
    random_instance,
)


def make_series(y):
    y = np.asarray(y, dtype=float)
    dates = weekday_dates(dt.date(2014, 3, 3), len(y))
    prices = np.exp(y)
    return ObservationSeries(dates, prices, np.ones(len(y)), y)


def random_case(seed):
    rng = np.random.default_rng(seed)
    y, params, grids = random_instance(rng)
    return make_series(y), params, grids


class TestAgainstEnumeration:
    """Cross-checks against a brute-force sum over all hidden paths."""

    @pytest.mark.parametrize("seed", range(20))
    def test_filtered_matches_oracle(self, seed):
        series, params, grids = random_case(seed)
        result = forward_filter(series, params, grids)
        expected = brute_filtered(series.y, params, grids)
        assert result.filtered == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_smoothed_matches_oracle(self, seed):
        series, params, grids = random_case(seed)
        bundle = smooth(series, params, grids)
        expected = brute_smoothed(series.y, params, grids)
        assert bundle.smoothed == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_pairwise_matches_oracle(self, seed):
        series, params, grids = random_case(seed)
        xi = pairwise_smooth(series, params, grids)
        expected = brute_pairwise(series.y, params, grids)
        assert xi.shape == expected.shape
        if xi.size:
            assert xi == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", range(20))
    def test_log_likelihood_matches_oracle(self, seed):
        series, params, grids = random_case(seed)
        result = forward_filter(series, params, grids)
        expected = brute_log_likelihood(series.y, params, grids)
        assert log_likelihood(result) == pytest.approx(expected, abs=1e-9)


class TestInvariants:
    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_posteriors_normalized(self, seed):
        series, params, grids = random_case(seed)
        bundle = smooth(series, params, grids)
        sums = bundle.smoothed.sum(axis=(1, 2))
        assert sums == pytest.approx(np.ones(len(series)), abs=1e-12)
        filt_sums = bundle.filtered.sum(axis=(1, 2))
        assert filt_sums == pytest.approx(np.ones(len(series)), abs=1e-12)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_pe_marginal_is_date_invariant(self, seed):
        series, params, grids = random_case(seed)
        bundle = smooth(series, params, grids)
        marginals = bundle.smoothed.sum(axis=1)
        for t in range(len(series)):
            assert marginals[t] == pytest.approx(marginals[0], abs=1e-9)
        assert bundle.pe_marginal() == pytest.approx(marginals[-1], abs=1e-15)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_pairwise_marginalizations(self, seed):
        series, params, grids = random_case(seed)
        bundle = smooth(series, params, grids)
        xi = pairwise_smooth(series, params, grids)
        # sum over the arrival state recovers gamma_t, over the departure
        # state gamma_{t+1}
        assert xi.sum(axis=1) == pytest.approx(bundle.smoothed[:-1], abs=1e-10)
        assert xi.sum(axis=2) == pytest.approx(bundle.smoothed[1:], abs=1e-10)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=40, deadline=None)
    def test_scaling_constants_positive(self, seed):
        series, params, grids = random_case(seed)
        result = forward_filter(series, params, grids)
        assert np.all(result.scaling_constants > 0)
        assert log_likelihood(result) == pytest.approx(result.log_c.sum(), abs=1e-15)

    def test_single_date_series(self):
        series, params, grids = random_case(123)
        one = make_series(series.y[:1])
        bundle = smooth(one, params, grids)
        assert bundle.smoothed.shape == (1, grids.n_z, grids.n_pe)
        assert bundle.smoothed.sum() == pytest.approx(1.0, abs=1e-12)
        assert pairwise_smooth(one, params, grids).shape == (0, grids.n_z, grids.n_z, grids.n_pe)


class TestNumericalRobustness:
    def test_extreme_observations_stay_finite(self):
        # raw emission densities underflow to exactly 0 here; the scaled
        # recursion must still produce a finite log likelihood
        grids = StateGrids(z_values=[-0.05, 0.0, 0.05], pe_values=[20.0])
        params = ModelParams(
            transition=np.full((3, 3), 1.0 / 3),
            z_initial=np.ones(3) / 3,
            pe_prior=np.ones(1),
            sigma=1e-3,
        )
        y = np.log(20.0) + np.array([50.0, -80.0, 120.0, 0.0])
        series = make_series(y)
        result = forward_filter(series, params, grids)
        assert np.isfinite(log_likelihood(result))
        assert log_likelihood(result) < -1e6
        bundle = smooth(series, params, grids)
        assert np.all(np.isfinite(bundle.smoothed))

    def test_impossible_series_raises(self):
        # the chain is forced into state 0 from date 1 on, but every
        # observation sits thousands of sigmas from that state's mean
        grids = StateGrids(z_values=[-0.9, 0.9], pe_values=[10.0])
        params = ModelParams(
            transition=np.array([[1.0, 1.0], [0.0, 0.0]]),
            z_initial=np.array([0.0, 1.0]),
            pe_prior=np.ones(1),
            sigma=1e-3,
        )
        y = np.full(4, math.log(10.0 * 1.9))
        with pytest.raises(InferenceError):
            forward_filter(make_series(y), params, grids)

    def test_invalid_params_rejected_before_filtering(self):
        series, params, grids = random_case(5)
        params.sigma = 0.0
        with pytest.raises(InvalidModelError):
            forward_filter(series, params, grids)


class TestSymmetries:
    def test_z_state_relabeling(self):
        # permuting hidden z labels permutes the posteriors the same way
        series, params, grids = random_case(13)
        m = grids.n_z
        assert m == 3
        perm = np.array([2, 0, 1])
        y = series.y
        from pedbn.inference import _scaled_emissions

        phi_s, shift = _scaled_emissions(y, grids, params.sigma)
        filt, log_c, c_scaled = _forward_core(
            phi_s, shift, params.transition, params.z_initial, params.pe_prior
        )
        filt_p, log_c_p, c_p = _forward_core(
            phi_s[:, perm, :],
            shift,
            params.transition[np.ix_(perm, perm)],
            params.z_initial[perm],
            params.pe_prior,
        )
        assert log_c_p == pytest.approx(log_c, abs=1e-12)
        assert filt_p == pytest.approx(filt[:, perm, :], abs=1e-13)
        back = _backward_core(phi_s, c_scaled, params.transition)
        back_p = _backward_core(
            phi_s[:, perm, :], c_p, params.transition[np.ix_(perm, perm)]
        )
        if back.size:
            assert back_p == pytest.approx(back[:, perm, :], abs=1e-13)

    def test_pe_level_relabeling(self):
        series, params, grids = random_case(21)
        n = grids.n_pe
        assert n == 3
        perm = np.array([1, 2, 0])
        from pedbn.inference import _scaled_emissions

        phi_s, shift = _scaled_emissions(series.y, grids, params.sigma)
        filt, log_c, _ = _forward_core(
            phi_s, shift, params.transition, params.z_initial, params.pe_prior
        )
        filt_p, log_c_p, _ = _forward_core(
            phi_s[:, :, perm],
            shift,
            params.transition,
            params.z_initial,
            params.pe_prior[perm],
        )
        assert log_c_p == pytest.approx(log_c, abs=1e-12)
        assert filt_p == pytest.approx(filt[:, :, perm], abs=1e-13)

    def test_price_scale_invariance(self):
        # scaling prices and the PE grid by the same factor shifts y and
        # the cell means identically, so posteriors are unchanged
        series, params, grids = random_case(13)
        scale = 7.5
        scaled_series = ObservationSeries(
            series.dates,
            np.asarray(series.prices) * scale,
            series.earnings,
            series.y + math.log(scale),
        )
        scaled_grids = StateGrids(
            z_values=grids.z_values, pe_values=grids.pe_values * scale
        )
        base = smooth(series, params, grids)
        scaled = smooth(scaled_series, params, scaled_grids)
        assert scaled.smoothed == pytest.approx(base.smoothed, abs=1e-12)
        assert scaled.log_c == pytest.approx(base.log_c, abs=1e-12)


class TestPointEstimates:
    def test_map_pe_picks_mode(self):
        series, params, grids = random_case(21)
        bundle = smooth(series, params, grids)
        estimate = map_pe(bundle, grids)
        marginal = bundle.pe_marginal()
        assert estimate.index == int(np.argmax(marginal))
        assert estimate.value == grids.pe_values[estimate.index]
        assert estimate.marginal == pytest.approx(marginal)

    def test_map_pe_tie_breaks_low(self):
        # an exact tie goes to the lower level
        from pedbn.inference import PosteriorBundle

        grids = StateGrids(z_values=[0.0], pe_values=[10.0, 40.0])
        flat = np.array([[[0.5, 0.5]]])
        bundle = PosteriorBundle(
            filtered=flat,
            backward=np.ones((0, 1, 2)),
            smoothed=flat,
            log_c=np.zeros(1),
        )
        estimate = map_pe(bundle, grids)
        assert estimate.index == 0
        assert estimate.value == 10.0

    def test_map_pe_near_tie_is_still_well_defined(self):
        # a midpoint observation leaves the two levels equal to rounding;
        # the estimate must be one of them with marginal about one half
        grids = StateGrids(z_values=[0.0], pe_values=[10.0, 40.0])
        params = ModelParams(
            transition=np.ones((1, 1)),
            z_initial=np.ones(1),
            pe_prior=np.array([0.5, 0.5]),
            sigma=0.3,
        )
        y = np.array([(math.log(10.0) + math.log(40.0)) / 2] * 3)
        bundle = smooth(make_series(y), params, grids)
        assert bundle.pe_marginal() == pytest.approx([0.5, 0.5], abs=1e-12)
        assert map_pe(bundle, grids).index in (0, 1)

    def test_filtered_z_path_tracks_mode(self):
        grids = StateGrids(z_values=[-0.2, 0.0, 0.2], pe_values=[15.0])
        params = ModelParams(
            transition=np.full((3, 3), 1.0 / 3),
            z_initial=np.ones(3) / 3,
            pe_prior=np.ones(1),
            sigma=0.05,
        )
        z_true = np.array([0, 2, 1, 1, 2])
        y = np.log(15.0 * (1.0 + grids.z_values[z_true]))
        result = forward_filter(make_series(y), params, grids)
        path = filtered_z_path(result, grids)
        assert np.array_equal(path.mode_indices, z_true)
        assert path.mode_values == pytest.approx(grids.z_values[z_true])
        # the posterior mean lies inside the grid span
        assert np.all(path.mean_values >= grids.z_values[0])
        assert np.all(path.mean_values <= grids.z_values[-1])

    def test_filtered_z_estimate_single_date(self):
        grids = StateGrids(z_values=[-0.2, 0.0, 0.2], pe_values=[15.0])
        filtered_t = np.array([[0.1], [0.2], [0.7]])
        index, value = filtered_z_estimate(filtered_t, grids)
        assert index == 2
        assert value == pytest.approx(0.2)

    def test_log_likelihood_accepts_raw_log_constants(self):
        series, params, grids = random_case(30)
        result = forward_filter(series, params, grids)
        assert log_likelihood(result.log_c) == pytest.approx(
            log_likelihood(result), abs=1e-15
        )
