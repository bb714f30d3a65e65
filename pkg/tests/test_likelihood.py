import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segccr import (
    CutoffGrid,
    DesignSet,
    DomainError,
    NonmonotoneModel,
    SegmentedParams,
    basis_w,
    category_scores,
    homogeneous_log_likelihood,
    log_likelihood,
    model_log_psi,
    score_beta,
)
from segccr.likelihood import segmented_basis

from conftest import brute_loglik


def test_basis_values():
    w = basis_w(0.25, 0.5)
    assert np.allclose(w, [np.log(0.5), np.log(0.5)])
    w = basis_w(0.8, 0.5)
    assert np.allclose(w, [0.0, np.log(0.8)])
    assert basis_w(1.0, 0.3)[1] == 0.0


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.1])
def test_basis_rejects_bad_tau(tau):
    with pytest.raises(DomainError):
        basis_w(0.5, tau)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.001, 1.0))
def test_basis_components_sum_to_log_t(tau, t):
    w = basis_w(t, tau)
    assert w[0] + w[1] == pytest.approx(np.log(t), abs=1e-12)


def test_equal_slopes_reduce_to_homogeneous(small_data, grid10):
    slopes = np.array([1.7, 0.3])
    beta = np.column_stack([slopes, slopes])
    for tau in (0.2, 0.5, 0.8):
        seg = log_likelihood(SegmentedParams(tau, beta), small_data, grid10)
        hom = homogeneous_log_likelihood(slopes, small_data, grid10)
        assert seg == pytest.approx(hom, rel=1e-12)


def test_loglik_matches_direct_probabilities(small_data, grid10):
    params = SegmentedParams(0.45, [[1.4, 2.1], [0.2, 0.3]])
    got = log_likelihood(params, small_data, grid10)
    want = brute_loglik(params.beta, 0.45, small_data.designs, small_data.counts, grid10.t)
    assert got == pytest.approx(want, rel=1e-10)


def test_score_matches_central_differences(small_data, grid10):
    params = SegmentedParams(0.45, [[1.4, 2.1], [0.2, 0.3]])
    g = score_beta(params, small_data, grid10)
    h = 1e-5
    fd = np.empty_like(g)
    flat = params.beta.ravel()
    for k in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[k] += h
        dn[k] -= h
        lu = brute_loglik(up.reshape(2, 2), 0.45, small_data.designs, small_data.counts, grid10.t)
        ld = brute_loglik(dn.reshape(2, 2), 0.45, small_data.designs, small_data.counts, grid10.t)
        fd[k] = (lu - ld) / (2 * h)
    assert np.max(np.abs(g - fd)) / np.max(np.abs(g)) < 1e-6


def test_infeasible_slopes_raise(small_data, grid10):
    with pytest.raises(NonmonotoneModel):
        log_likelihood(SegmentedParams(0.5, [[1.0, 1.0], [-2.0, 0.0]]), small_data, grid10)


def test_category_scores_sum_to_gradient(grid10, small_data):
    params = SegmentedParams(0.35, [[1.3, 1.9], [0.1, -0.2]])
    basis = segmented_basis(grid10, params.tau)
    total = np.zeros(4)
    for x, counts in zip(small_data.designs, small_data.counts):
        total += counts @ category_scores(params.beta, x, basis)
    assert np.allclose(total, score_beta(params, small_data, grid10), rtol=1e-12)


def test_knot_continuity():
    params = SegmentedParams(0.37, [[2.2, 1.1], [0.3, -0.4]])
    x = [1.0, 1.0]
    d = 1e-12
    lo = model_log_psi(params, x, 0.37 * (1 - d))
    hi = model_log_psi(params, x, 0.37 * (1 + d))
    assert abs(lo - hi) < 1e-9


def test_curve_is_one_at_t_one():
    params = SegmentedParams(0.61, [[2.2, 1.1]])
    assert np.exp(model_log_psi(params, [1.0], 1.0)) == 1.0


def test_counts_grid_mismatch(small_data):
    from segccr import InputError

    with pytest.raises(InputError):
        log_likelihood(SegmentedParams(0.5, [[1.0, 1.0], [0.0, 0.0]]), small_data, CutoffGrid.equally_spaced(5))


def test_design_set_checks():
    from segccr import InputError

    with pytest.raises(InputError):
        DesignSet([[1.0], [1.0]], [[1, 2, 3]])
    with pytest.raises(InputError):
        DesignSet([[1.0]], [[1, -2, 3]])
