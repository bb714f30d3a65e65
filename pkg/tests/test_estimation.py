import warnings

import numpy as np
import pytest

from segccr import (
    AllFitsFailed,
    CutoffGrid,
    DesignSet,
    DomainError,
    ScorePairs,
    SegmentedParams,
    default_tau_grid,
    fit_beta_given_tau,
    fit_homogeneous,
    fit_segmented,
    fitted_curve,
    log_likelihood,
    score_beta,
)

from conftest import gumbel_pairs


def test_default_tau_grid():
    grid = CutoffGrid.equally_spaced(100)
    taus = default_tau_grid(grid)
    assert taus[0] == pytest.approx(0.05) and taus[-1] == pytest.approx(0.95)
    assert default_tau_grid(grid, 0.1)[0] == pytest.approx(0.1)
    assert np.array_equal(default_tau_grid(CutoffGrid.equally_spaced(4), 0.4), [0.5])
    with pytest.raises(DomainError):
        default_tau_grid(CutoffGrid.equally_spaced(1))


def test_homogeneous_slope_gumbel():
    grid = CutoffGrid.equally_spaced(100)
    data = DesignSet.from_pairs([gumbel_pairs(20000, 2.0, 3)], grid, "high")
    slopes, ll = fit_homogeneous(data, grid)
    assert slopes[0] == pytest.approx(np.sqrt(2.0), abs=0.03)
    assert np.isfinite(ll)


def test_stationarity_at_optimum(small_data, grid10):
    pt = fit_beta_given_tau(small_data, grid10, 0.5)
    assert pt.converged
    g = score_beta(SegmentedParams(0.5, pt.beta_hat), small_data, grid10)
    assert np.max(np.abs(g)) / small_data.n_total < 1e-7


def test_warm_and_cold_start_agree(small_data, grid10):
    warm = fit_segmented(small_data, grid10, warm_start=True)
    cold = fit_segmented(small_data, grid10, warm_start=False)
    assert warm.tau == cold.tau
    assert np.allclose(warm.params.beta, cold.params.beta, atol=1e-6)
    assert np.allclose(warm.profile_loglik, cold.profile_loglik, rtol=1e-10)


def test_profile_argmax_is_exhaustive_max(small_data, grid10):
    fit = fit_segmented(small_data, grid10)
    lls = [fit_beta_given_tau(small_data, grid10, t).loglik for t in default_tau_grid(grid10)]
    assert fit.loglik == pytest.approx(max(lls), rel=1e-10)
    assert fit.tau == default_tau_grid(grid10)[int(np.argmax(lls))]


def test_segmented_not_worse_than_homogeneous(small_data, grid10):
    fit = fit_segmented(small_data, grid10)
    assert fit.loglik >= fit.homogeneous_loglik - 1e-8


def test_fitted_curve_endpoint_and_monotone(small_data, grid10):
    fit = fit_segmented(small_data, grid10)
    curve = fit.fitted_curve
    assert np.all(curve[:, -1] == 1.0)
    assert np.all(np.diff(curve, axis=1) > 0)
    assert np.all(fit.homogeneous_curve()[:, -1] == 1.0)


def test_recovers_change_point():
    from segccr import ScenarioSpec, SeededRng, generate

    spec = ScenarioSpec(n=10000, pi1=0.7, theta2=2.0)
    pairs = generate(spec, SeededRng(11))
    grid = CutoffGrid.equally_spaced(100)
    fit = fit_segmented(DesignSet.from_pairs(pairs, grid, "high"), grid)
    assert fit.tau == pytest.approx(0.7, abs=0.05)
    assert fit.params.beta[0, 0] > fit.params.beta[0, 1]


def test_independent_pairs_give_slope_two():
    grid = CutoffGrid.equally_spaced(50)
    data = DesignSet.from_pairs([gumbel_pairs(20000, 1.0, 5)], grid, "high")
    fit = fit_segmented(data, grid)
    assert fit.homogeneous_beta[0] == pytest.approx(2.0, abs=0.03)
    assert np.max(np.abs(fit.fitted_curve[0] - grid.t[1:] ** 2)) < 0.01


def test_all_points_failing_raises(monkeypatch, small_data, grid10):
    import segccr.estimation as est

    def boom(*a, **k):
        raise est.NonmonotoneModel("forced")

    monkeypatch.setattr(est, "fit_beta_given_tau", boom)
    with pytest.raises(AllFitsFailed):
        fit_segmented(small_data, grid10)


def test_tau_grid_validation(small_data, grid10):
    with pytest.raises(DomainError):
        fit_segmented(small_data, grid10, [0.0, 0.5])
    with pytest.raises(DomainError):
        fit_beta_given_tau(small_data, grid10, 1.0)


def test_perfect_agreement_fits_without_error():
    y = np.arange(50.0)
    grid = CutoffGrid.equally_spaced(10)
    data = DesignSet.from_pairs([ScorePairs("a", y, y)], grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_segmented(data, grid)
    assert np.allclose(fit.fitted_curve[0], grid.t[1:], atol=0.02)
