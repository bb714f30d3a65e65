"""Segmented model, multinomial log-likelihood and its analytic beta-gradient.

The curve is modeled on the log scale as ``log Psi(t | x) = sum_s x_s beta_s' B(t)``
where the basis ``B`` is the two-piece ``W(t, tau)`` for the segmented model
and the single column ``log t`` for the homogeneous model.  Both models share
the kernels below.

Category m has probability ``exp(eta_m) - exp(eta_{m-1})`` with
``exp(eta_0) = 0``.  It is evaluated in log form as
``eta_m + log(-expm1(eta_{m-1} - eta_m))`` so that tiny probabilities in the
lower tail keep full relative precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .empirical import category_counts, to_uniform_ranks
from .exceptions import DomainError, InputError, NonFinite, NonmonotoneModel
from .types import CutoffGrid, Orientation, ScorePairs, SegmentedParams


@dataclass(frozen=True, eq=False)
class DesignSet:
    """Per-workflow design vectors (intercept first) and category counts."""

    designs: np.ndarray
    counts: np.ndarray
    workflow_ids: tuple = ()

    def __post_init__(self):
        designs = np.atleast_2d(np.asarray(self.designs, dtype=float))
        counts = np.atleast_2d(np.asarray(self.counts))
        if designs.shape[0] != counts.shape[0]:
            raise InputError("one design vector is required per workflow")
        if not np.all(np.isfinite(designs)):
            raise NonFinite("covariate values must be finite")
        if np.any(counts < 0):
            raise InputError("category counts must be nonnegative")
        ids = tuple(self.workflow_ids) or tuple(str(i) for i in range(designs.shape[0]))
        designs.setflags(write=False)
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "workflow_ids", ids)

    @property
    def n_workflows(self) -> int:
        return self.designs.shape[0]

    @property
    def n_coef(self) -> int:
        """Number of design columns S + 1."""
        return self.designs.shape[1]

    @property
    def n_total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_pairs(
        cls,
        pairs: Sequence[ScorePairs],
        grid: CutoffGrid,
        orientation=Orientation.LOWER_IS_STRONGER,
    ) -> "DesignSet":
        pairs = list(pairs)
        widths = {len(p.covariates) for p in pairs}
        if len(widths) != 1:
            raise InputError("all workflows must have the same number of covariates")
        designs = np.array([p.design for p in pairs])
        counts = np.array(
            [category_counts(to_uniform_ranks(p, orientation), grid).counts for p in pairs]
        )
        return cls(designs, counts, tuple(p.workflow_id for p in pairs))


def basis_w(t, tau):
    """Two-piece basis ``([log t - log tau]_-, log tau + [log t - log tau]_+)``.

    Returns an array of shape ``(2,)`` for scalar ``t`` and ``(len(t), 2)``
    otherwise.
    """
    t_arr = np.asarray(t, dtype=float)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if np.any(~(t_arr > 0.0)) or np.any(t_arr > 1.0):
        raise DomainError("t must lie in (0, 1]")
    ltau = np.log(tau)
    d = np.log(t_arr) - ltau
    out = np.stack([np.minimum(d, 0.0), ltau + np.maximum(d, 0.0)], axis=-1)
    return out


def log_basis(t):
    """Homogeneous basis ``log t`` as a one-column matrix."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0.0)) or np.any(t_arr > 1.0):
        raise DomainError("t must lie in (0, 1]")
    return np.log(t_arr)[..., None]


def model_log_psi(params: SegmentedParams, x, t):
    x = np.asarray(x, dtype=float)
    return basis_w(t, params.tau) @ (x @ params.beta)


# ---------------------------------------------------------------------------
# batched kernels


def _eta(beta, designs, basis):
    """Linear predictor, shape (..., W, M); beta has shape (..., S+1, K)."""
    return np.einsum("ws,...sk,mk->...wm", designs, beta, basis)


def _category_logp(eta):
    """Log category probabilities and per-batch feasibility."""
    lead = np.full(eta.shape[:-1] + (1,), -np.inf)
    diff = np.concatenate([lead, eta[..., :-1]], axis=-1) - eta
    feasible = np.all(diff < 0, axis=(-2, -1))
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        one_minus_r = -np.expm1(diff)
        logp = eta + np.log(one_minus_r)
    return logp, diff, one_minus_r, feasible


def _category_basis_scores(basis, diff, one_minus_r):
    """Per-category derivative of log p_m w.r.t. the basis coefficients.

    Equals ``(B_m - r_m B_{m-1}) / (1 - r_m)`` with ``r_m = exp(eta_{m-1} - eta_m)``,
    shape (..., W, M, K).
    """
    prev = np.concatenate([np.zeros((1, basis.shape[1])), basis[:-1]], axis=0)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        r = np.exp(diff)
        return (basis - r[..., None] * prev) / one_minus_r[..., None]


def _loglik_batch(beta, designs, counts, basis):
    """Total log-likelihood for a batch of coefficient arrays (-inf if infeasible)."""
    logp, _, _, feasible = _category_logp(_eta(beta, designs, basis))
    with np.errstate(invalid="ignore"):
        ll = np.einsum("wm,...wm->...", counts, np.where(counts > 0, logp, 0.0))
    return np.where(feasible, ll, -np.inf)


def _loglik_grad_batch(beta, designs, counts, basis):
    logp, diff, omr, feasible = _category_logp(_eta(beta, designs, basis))
    with np.errstate(invalid="ignore"):
        ll = np.einsum("wm,...wm->...", counts, np.where(counts > 0, logp, 0.0))
        c = _category_basis_scores(basis, diff, omr)
        c = np.where((counts > 0)[..., None], c, 0.0)
        grad = np.einsum("wm,...wmk,ws->...sk", counts, c, designs)
    ll = np.where(feasible, ll, -np.inf)
    return ll, grad, feasible


def _require_feasible(beta, designs, basis):
    _, _, _, feasible = _category_logp(_eta(beta, designs, basis))
    if not feasible:
        raise NonmonotoneModel(
            "some category probability is not positive; effective slopes must be > 0"
        )


def segmented_basis(grid: CutoffGrid, tau: float) -> np.ndarray:
    return basis_w(grid.t[1:], tau)


def homogeneous_basis(grid: CutoffGrid) -> np.ndarray:
    return log_basis(grid.t[1:])


def _check_counts(data: DesignSet, grid: CutoffGrid):
    if data.counts.shape[1] != grid.M:
        raise InputError(
            f"counts have {data.counts.shape[1]} categories but the grid has {grid.M}"
        )


def log_likelihood(params: SegmentedParams, data: DesignSet, grid: CutoffGrid) -> float:
    """Total multinomial log-likelihood of the segmented model."""
    _check_counts(data, grid)
    basis = segmented_basis(grid, params.tau)
    _require_feasible(params.beta, data.designs, basis)
    return float(_loglik_batch(params.beta, data.designs, data.counts, basis))


def score_beta(params: SegmentedParams, data: DesignSet, grid: CutoffGrid) -> np.ndarray:
    """Analytic gradient of :func:`log_likelihood` w.r.t. ``beta.ravel()`` (tau fixed)."""
    _check_counts(data, grid)
    basis = segmented_basis(grid, params.tau)
    _require_feasible(params.beta, data.designs, basis)
    _, grad, _ = _loglik_grad_batch(params.beta, data.designs, data.counts, basis)
    return grad.ravel()


def homogeneous_log_likelihood(slopes, data: DesignSet, grid: CutoffGrid) -> float:
    """Log-likelihood of ``log Psi(t | x) = (x' slopes) log t``."""
    _check_counts(data, grid)
    beta = np.asarray(slopes, dtype=float).reshape(-1, 1)
    basis = homogeneous_basis(grid)
    _require_feasible(beta, data.designs, basis)
    return float(_loglik_batch(beta, data.designs, data.counts, basis))


def category_scores(beta, x, basis) -> np.ndarray:
    """Per-category score vectors ``x (kron) c_m`` for one design, shape (M, (S+1)K).

    A candidate in category m contributes exactly row m-1 to the beta-score.
    """
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    _, diff, omr, feasible = _category_logp(_eta(beta, x, basis))
    if not feasible:
        raise NonmonotoneModel("category probabilities must be positive")
    c = _category_basis_scores(basis, diff, omr)[0]
    return np.einsum("s,mk->msk", x[0], c).reshape(c.shape[0], -1)
