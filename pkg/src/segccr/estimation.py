"""Maximum likelihood fitting: inner beta ascent, tau profile, homogeneous fit."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import AllFitsFailed, DidNotConverge, DomainError, NonmonotoneModel
from .likelihood import (
    DesignSet,
    _check_counts,
    _loglik_batch,
    _loglik_grad_batch,
    homogeneous_basis,
    segmented_basis,
)
from .types import CutoffGrid, SegmentedParams

GRAD_TOL = 1e-8
LOGLIK_TOL = 1e-10
MAX_ITER = 200
_ARMIJO = 1e-4
_N_HALVINGS = 50
_HALVINGS = 0.5 ** np.arange(_N_HALVINGS)


@dataclass(frozen=True, eq=False)
class ProfilePoint:
    tau: float
    beta_hat: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    grad_norm: float = np.nan


@dataclass(frozen=True, eq=False)
class FitResult:
    params: SegmentedParams
    loglik: float
    profile: list
    fitted_curve: np.ndarray
    homogeneous_loglik: float
    homogeneous_beta: np.ndarray
    grid: CutoffGrid
    data: DesignSet = field(repr=False, default=None)

    @property
    def tau(self) -> float:
        return self.params.tau

    @property
    def profile_tau(self) -> np.ndarray:
        return np.array([p.tau for p in self.profile])

    @property
    def profile_loglik(self) -> np.ndarray:
        return np.array([p.loglik for p in self.profile])

    def homogeneous_curve(self) -> np.ndarray:
        return homogeneous_fitted_curve(self.homogeneous_beta, self.data.designs, self.grid)


@dataclass
class _Ascent:
    beta: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    grad_norm: float


def _maximize(designs, counts, basis, beta0, gtol=GRAD_TOL, ftol=LOGLIK_TOL, max_iter=MAX_ITER):
    """Damped Newton ascent on the per-candidate average log-likelihood.

    Curvature comes from central differences of the analytic gradient; the
    base point and its 2P perturbations are evaluated in one batched call.
    Steps are halved until they are feasible and satisfy the Armijo rule.
    """
    shape = beta0.shape
    P = beta0.size
    n_total = counts.sum()
    beta = beta0.ravel().astype(float)
    eye = np.eye(P)
    small_change = False
    grad_norm = np.inf
    loglik = -np.inf

    for it in range(max_iter + 1):
        h = 1e-6 * np.maximum(1.0, np.abs(beta))
        pts = np.concatenate([beta[None], beta + eye * h[:, None], beta - eye * h[:, None]])
        ll, grad, feasible = _loglik_grad_batch(pts.reshape((-1,) + shape), designs, counts, basis)
        if not feasible[0]:
            raise NonmonotoneModel("ascent reached an infeasible point")
        loglik = ll[0] / n_total
        g = grad[0].ravel() / n_total
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm < gtol or small_change:
            return _Ascent(beta.reshape(shape), float(ll[0]), True, it, grad_norm)
        if it == max_iter:
            break

        direction = g
        if np.all(feasible):
            gp = grad[1 : P + 1].reshape(P, P) / n_total
            gm = grad[P + 1 :].reshape(P, P) / n_total
            H = (gp - gm) / (2 * h[:, None])
            H = 0.5 * (H + H.T)
            try:
                L = np.linalg.cholesky(-H)
                direction = np.linalg.solve(L.T, np.linalg.solve(L, g))
            except np.linalg.LinAlgError:
                pass

        slope = float(g @ direction)
        trials = beta + _HALVINGS[:, None] * direction
        ll_trial = _loglik_batch(trials.reshape((-1,) + shape), designs, counts, basis) / n_total
        ok = ll_trial >= loglik + _ARMIJO * _HALVINGS * slope
        if not np.any(ok):
            # no ascent possible at working precision
            converged = grad_norm < 1e3 * gtol
            return _Ascent(beta.reshape(shape), float(ll[0]), converged, it, grad_norm)
        k = int(np.argmax(ok))
        small_change = abs(ll_trial[k] - loglik) < ftol
        beta = trials[k]

    return _Ascent(beta.reshape(shape), loglik * n_total, False, max_iter, grad_norm)


def _initial_slopes(data: DesignSet, grid: CutoffGrid) -> np.ndarray:
    """Least-squares slopes of log Psi_n on log t, regressed on the designs."""
    t = grid.t[1:-1]
    per_workflow = []
    for counts in data.counts:
        psi = np.cumsum(counts)[:-1] / counts.sum()
        keep = psi > 0
        if not np.any(keep):
            per_workflow.append(2.0)
            continue
        lt, lp = np.log(t[keep]), np.log(psi[keep])
        per_workflow.append(float(lp @ lt / (lt @ lt)))
    b = np.clip(np.array(per_workflow), 0.2, 20.0)
    slopes, *_ = np.linalg.lstsq(data.designs, b, rcond=None)
    if np.all(data.designs @ slopes > 0):
        return slopes
    fallback = np.zeros(data.n_coef)
    fallback[0] = float(np.median(b))
    return fallback


def _fit_homogeneous(data: DesignSet, grid: CutoffGrid) -> _Ascent:
    _check_counts(data, grid)
    basis = homogeneous_basis(grid)
    beta0 = _initial_slopes(data, grid).reshape(-1, 1)
    res = _maximize(data.designs, data.counts, basis, beta0)
    if not res.converged:
        warnings.warn("homogeneous fit did not converge", DidNotConverge, stacklevel=3)
    return res


def fit_homogeneous(data: DesignSet, grid: CutoffGrid):
    """Fit ``log Psi(t | x) = (x' slopes) log t``; returns ``(slopes, loglik)``."""
    res = _fit_homogeneous(data, grid)
    return res.beta.ravel().copy(), res.loglik


def _shrink_to_feasible(init, fallback, designs):
    lam = 1.0
    for _ in range(60):
        cand = lam * init + (1.0 - lam) * fallback
        if np.all(designs @ cand > 0):
            return cand
        lam *= 0.5
    return fallback


def fit_beta_given_tau(
    data: DesignSet, grid: CutoffGrid, tau: float, init=None, homogeneous_slopes=None
) -> ProfilePoint:
    """Maximize the log-likelihood over beta at a fixed change point."""
    _check_counts(data, grid)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if homogeneous_slopes is None:
        homogeneous_slopes = _fit_homogeneous(data, grid).beta.ravel()
    base = np.repeat(np.asarray(homogeneous_slopes, dtype=float).reshape(-1, 1), 2, axis=1)
    init = base if init is None else _shrink_to_feasible(np.asarray(init, float), base, data.designs)
    basis = segmented_basis(grid, tau)
    res = _maximize(data.designs, data.counts, basis, init)
    return ProfilePoint(
        tau=float(tau),
        beta_hat=res.beta,
        loglik=res.loglik,
        converged=res.converged,
        iterations=res.iterations,
        grad_norm=res.grad_norm,
    )


DEFAULT_TRIM = 0.05


def default_tau_grid(grid: CutoffGrid, trim: float = DEFAULT_TRIM) -> np.ndarray:
    """Interior cutoffs within ``[trim, 1 - trim]``."""
    if not 0.0 <= trim < 0.5:
        raise DomainError("trim must lie in [0, 0.5)")
    inner = grid.t[1:-1]
    eps = 1e-12
    taus = inner[(inner >= trim - eps) & (inner <= 1.0 - trim + eps)]
    if taus.size == 0:
        taus = inner
    if taus.size == 0:
        raise DomainError("the cutoff grid has no interior points to search over")
    return taus


def fit_segmented(
    data: DesignSet,
    grid: CutoffGrid,
    tau_grid=None,
    warm_start: bool = True,
) -> FitResult:
    """Profile-likelihood grid search over the change point.

    Each grid point is fit with :func:`fit_beta_given_tau`.  With
    ``warm_start`` the points are visited in ascending order, each starting
    from the previous solution; otherwise every point starts from the
    homogeneous slopes and points are independent.  Only converged points
    compete for the maximum; ties go to the smallest tau.
    """
    _check_counts(data, grid)
    taus = default_tau_grid(grid) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    taus = np.unique(taus)
    if taus.size == 0 or np.any((taus <= 0) | (taus >= 1)):
        raise DomainError("tau grid must be a nonempty set of values in (0, 1)")

    homog = _fit_homogeneous(data, grid)
    h_slopes = homog.beta.ravel()
    profile = []
    prev = None
    for tau in taus:
        init = prev if (warm_start and prev is not None) else None
        try:
            pt = fit_beta_given_tau(data, grid, tau, init=init, homogeneous_slopes=h_slopes)
        except NonmonotoneModel:
            pt = ProfilePoint(float(tau), np.full((data.n_coef, 2), np.nan), -np.inf, False, 0)
        profile.append(pt)
        prev = pt.beta_hat if pt.converged else None

    ok = [i for i, p in enumerate(profile) if p.converged]
    if not ok:
        raise AllFitsFailed("no change point on the grid produced a converged fit")
    best = max(ok, key=lambda i: (profile[i].loglik, -i))
    bp = profile[best]
    params = SegmentedParams(bp.tau, bp.beta_hat)
    return FitResult(
        params=params,
        loglik=bp.loglik,
        profile=profile,
        fitted_curve=fitted_curve(params, data.designs, grid),
        homogeneous_loglik=homog.loglik,
        homogeneous_beta=h_slopes.copy(),
        grid=grid,
        data=data,
    )


def fitted_curve(params: SegmentedParams, designs, grid: CutoffGrid) -> np.ndarray:
    """Modeled Psi at t_1..t_M for each design row, shape (W, M)."""
    designs = np.atleast_2d(np.asarray(designs, dtype=float))
    basis = segmented_basis(grid, params.tau)
    return np.exp(designs @ params.beta @ basis.T)


def homogeneous_fitted_curve(slopes, designs, grid: CutoffGrid) -> np.ndarray:
    designs = np.atleast_2d(np.asarray(designs, dtype=float))
    slopes = np.asarray(slopes, dtype=float)
    return np.exp(np.outer(designs @ slopes, np.log(grid.t[1:])))
