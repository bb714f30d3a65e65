"""scikit-learn style wrappers.

``X`` is an ``(n, 2)`` array of replicate scores.  ``groups`` (optional)
labels the workflow of each row; ``covariates`` maps each workflow label to
its covariate vector.  Without ``covariates``, several workflows are dummy
coded against the first label seen.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .empirical import category_index, empirical_curve, to_uniform_ranks
from .estimation import (
    default_tau_grid,
    fit_homogeneous,
    fit_segmented,
    fitted_curve,
    homogeneous_fitted_curve,
)
from .exceptions import InputError, UnknownWorkflow
from .likelihood import DesignSet
from .types import CutoffGrid, Orientation, ScorePairs, SegmentedParams, validate_score_pairs


def _check_scores(X):
    X = check_array(X, dtype=float, ensure_min_samples=2)
    if X.shape[1] != 2:
        raise InputError(f"X must have two columns (one per replicate), got {X.shape[1]}")
    return X


def _split(X, groups, covariates):
    """Per-workflow ScorePairs in first-appearance order."""
    if groups is None:
        groups = np.zeros(len(X), dtype=int)
    groups = np.asarray(groups)
    if groups.shape != (len(X),):
        raise InputError("groups must have one label per row of X")
    _, first = np.unique(groups, return_index=True)
    labels = [groups[i] for i in sorted(first)]
    W = len(labels)
    pairs = []
    for s, g in enumerate(labels):
        rows = X[groups == g]
        if covariates is not None:
            if g not in covariates:
                raise UnknownWorkflow(f"no covariates for workflow {g!r}")
            cov = np.ravel(covariates[g])
        else:
            cov = np.eye(W)[s, 1:]
        pairs.append(validate_score_pairs(ScorePairs(str(g), rows[:, 0], rows[:, 1], cov)))
    return labels, pairs


class UniformRankTransformer(TransformerMixin, BaseEstimator):
    """Map paired scores to ranks in {1/n, ..., 1}, strongest nearest 1."""

    def __init__(self, orientation="low"):
        self.orientation = orientation

    def fit(self, X, y=None):
        X = _check_scores(X)
        Orientation.parse(self.orientation)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _check_scores(X)
        r = to_uniform_ranks(ScorePairs("x", X[:, 0], X[:, 1]), self.orientation)
        return np.column_stack([r.u1, r.u2])


class _CCRBase(BaseEstimator):
    def _prepare(self, X, groups, covariates):
        X = _check_scores(X)
        labels, pairs = _split(X, groups, covariates)
        M = self.n_cutoffs or min(100, min(p.n for p in pairs))
        grid = CutoffGrid.equally_spaced(M)
        data = DesignSet.from_pairs(pairs, grid, self.orientation)
        return labels, pairs, grid, data

    def _design_for(self, groups, covariates):
        check_is_fitted(self, "grid_")
        if groups is None:
            return self.designs_
        rows = []
        for g in np.atleast_1d(groups):
            if covariates is not None and g in covariates:
                rows.append(np.concatenate(([1.0], np.ravel(covariates[g]))))
            elif g in self.labels_:
                rows.append(self.designs_[self.labels_.index(g)])
            else:
                raise UnknownWorkflow(f"unknown workflow {g!r}")
        return np.array(rows)

    def empirical_curves(self, X, groups=None):
        """Empirical curves on the fitted grid, shape (W, M)."""
        check_is_fitted(self, "grid_")
        X = _check_scores(X)
        _, pairs = _split(X, groups, None)
        return np.array(
            [empirical_curve(to_uniform_ranks(p, self.orientation), self.grid_).psi for p in pairs]
        )

    def score(self, X, groups=None, covariates=None):
        """Mean log-likelihood per candidate pair under the fitted model."""
        check_is_fitted(self, "grid_")
        X = _check_scores(X)
        _, pairs = _split(X, groups, covariates)
        total, n = 0.0, 0
        for p in pairs:
            idx = category_index(to_uniform_ranks(p, self.orientation), self.grid_)
            psi = self.correspondence_curve([p.workflow_id], {p.workflow_id: p.covariates})[0]
            prob = np.diff(np.concatenate(([0.0], psi)))
            total += float(np.sum(np.log(prob[idx])))
            n += p.n
        return total / n


class SegmentedCCR(_CCRBase):
    """Segmented correspondence curve regression.

    Fitted attributes: ``tau_``, ``coef_`` (shape (S+1, 2)),
    ``homogeneous_coef_``, ``loglik_``, ``profile_``, ``grid_``.
    """

    def __init__(self, orientation="low", n_cutoffs=None, tau_grid=None, trim=0.05, warm_start=True):
        self.orientation = orientation
        self.n_cutoffs = n_cutoffs
        self.tau_grid = tau_grid
        self.trim = trim
        self.warm_start = warm_start

    def fit(self, X, y=None, groups=None, covariates=None):
        labels, pairs, grid, data = self._prepare(X, groups, covariates)
        taus = default_tau_grid(grid, self.trim) if self.tau_grid is None else self.tau_grid
        fit = fit_segmented(data, grid, taus, warm_start=self.warm_start)
        self.result_ = fit
        self.tau_ = fit.tau
        self.coef_ = np.array(fit.params.beta)
        self.homogeneous_coef_ = fit.homogeneous_beta
        self.loglik_ = fit.loglik
        self.profile_ = np.column_stack([fit.profile_tau, fit.profile_loglik])
        self.grid_ = grid
        self.labels_ = list(labels)
        self.designs_ = np.array(data.designs)
        self.n_features_in_ = 2
        return self

    def correspondence_curve(self, groups=None, covariates=None):
        """Fitted Psi at the cutoffs for each requested workflow, shape (W, M)."""
        designs = self._design_for(groups, covariates)
        return fitted_curve(SegmentedParams(self.tau_, self.coef_), designs, self.grid_)

    predict = correspondence_curve


class HomogeneousCCR(_CCRBase):
    """One-slope model ``log Psi(t | x) = (x' coef) log t``."""

    def __init__(self, orientation="low", n_cutoffs=None):
        self.orientation = orientation
        self.n_cutoffs = n_cutoffs

    def fit(self, X, y=None, groups=None, covariates=None):
        labels, pairs, grid, data = self._prepare(X, groups, covariates)
        self.coef_, self.loglik_ = fit_homogeneous(data, grid)
        self.grid_ = grid
        self.labels_ = list(labels)
        self.designs_ = np.array(data.designs)
        self.n_features_in_ = 2
        return self

    def correspondence_curve(self, groups=None, covariates=None):
        designs = self._design_for(groups, covariates)
        return homogeneous_fitted_curve(self.coef_, designs, self.grid_)

    predict = correspondence_curve
