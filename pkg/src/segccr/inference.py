"""Bootstrap standard errors, Wald tests, and the change-point QLR test."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from ._parallel import pmap
from .empirical import category_counts, category_index, to_uniform_ranks
from .estimation import FitResult, default_tau_grid, fit_segmented
from .exceptions import DomainError, NumericalError, SingularInformation, TooManyFailures
from .likelihood import DesignSet, category_scores, homogeneous_basis, segmented_basis
from .types import CutoffGrid, Orientation, ScorePairs, SeededRng, validate_score_pairs

DEFAULT_B = 100
DEFAULT_NB = 1000
MAX_FAILURE_RATE = 0.2


def parameter_names(n_coef: int) -> list:
    return ["tau"] + [f"beta_{s}{j}" for s in range(n_coef) for j in (1, 2)]


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    B: int
    estimates: np.ndarray
    se: np.ndarray
    ci_percentile: np.ndarray
    failures: int
    names: tuple = ()

    def ci_symmetric(self, center, z: float = 1.959963984540054) -> np.ndarray:
        center = np.asarray(center, dtype=float)
        return np.stack([center - z * self.se, center + z * self.se], axis=1)


@dataclass(frozen=True)
class WaldTest:
    coefficient: str
    estimate: float
    se: float
    z: float
    p_value: float
    reject: bool


@dataclass(frozen=True, eq=False)
class QLRResult:
    qlr: float
    null_draws: Optional[np.ndarray] = None
    p_value: Optional[float] = None
    NB: int = 0
    fit: Optional[FitResult] = None


def _stream(seed, index) -> SeededRng:
    """Stream ``index`` under an integer seed or beneath an existing stream."""
    if isinstance(seed, SeededRng):
        return seed.child(index)
    return SeededRng(int(seed), index)


# ---------------------------------------------------------------------------
# bootstrap


def _resample_fit(job):
    b, pairs, seed, grid, orientation, tau_grid, warm_start = job
    rng = _stream(seed, b)
    resampled = []
    for s, p in enumerate(pairs):
        idx = rng.child(s).generator().integers(0, p.n, p.n)
        resampled.append(ScorePairs(p.workflow_id, p.y1[idx], p.y2[idx], p.covariates))
    try:
        data = DesignSet.from_pairs(resampled, grid, orientation)
        fit = fit_segmented(data, grid, tau_grid, warm_start=warm_start)
    except NumericalError:
        return None
    return fit.params.flat()


def bootstrap(
    pairs: Sequence[ScorePairs],
    B: int = DEFAULT_B,
    seed: int = 0,
    grid: Optional[CutoffGrid] = None,
    orientation=Orientation.LOWER_IS_STRONGER,
    tau_grid=None,
    warm_start: bool = True,
    n_jobs=None,
) -> BootstrapResult:
    """Nonparametric bootstrap of the segmented fit.

    Replicate b resamples candidate pairs with replacement within each
    workflow (workflow s uses sub-stream ``(seed, b, s)``), then re-ranks,
    re-bins and refits.
    """
    if isinstance(pairs, ScorePairs):
        pairs = [pairs]
    pairs = [validate_score_pairs(p) for p in pairs]
    if B < 2:
        raise DomainError("bootstrap needs B >= 2")
    orientation = Orientation.parse(orientation)
    if grid is None:
        grid = CutoffGrid.default_for(min(p.n for p in pairs))
    if tau_grid is None:
        tau_grid = default_tau_grid(grid)
    jobs = [(b, pairs, seed, grid, orientation, tau_grid, warm_start) for b in range(B)]
    rows = pmap(_resample_fit, jobs, n_jobs)

    P = 1 + 2 * (1 + len(pairs[0].covariates))
    estimates = np.full((B, P), np.nan)
    failures = 0
    for b, row in enumerate(rows):
        if row is None:
            failures += 1
        else:
            estimates[b] = row
    if failures > MAX_FAILURE_RATE * B:
        raise TooManyFailures(f"{failures} of {B} bootstrap replicates failed")
    good = estimates[~np.isnan(estimates[:, 0])]
    se = good.std(axis=0, ddof=1)
    ci = np.percentile(good, [2.5, 97.5], axis=0).T
    return BootstrapResult(
        B=B,
        estimates=estimates,
        se=se,
        ci_percentile=ci,
        failures=failures,
        names=tuple(parameter_names(P // 2)),
    )


def wald_tests(fit: FitResult, boot: BootstrapResult, level: float = 0.05) -> list:
    """Two-sided z tests of every non-baseline slope against zero."""
    beta = fit.params.beta
    if boot.se.shape[0] != 1 + beta.size:
        raise DomainError("bootstrap result does not match the fitted model")
    tests = []
    for s in range(1, beta.shape[0]):
        for j in range(2):
            est = float(beta[s, j])
            se = float(boot.se[1 + 2 * s + j])
            if est == 0.0:
                z = 0.0
            elif se > 0:
                z = est / se
            else:
                z = np.copysign(np.inf, est)
            p = float(2.0 * norm.sf(abs(z)))
            tests.append(WaldTest(f"beta_{s}{j + 1}", est, se, z, p, p < level))
    return tests


# ---------------------------------------------------------------------------
# change-point test


def _baseline_only(pairs: ScorePairs) -> ScorePairs:
    if isinstance(pairs, (list, tuple)):
        if len(pairs) != 1:
            raise DomainError("the change-point test applies to one workflow at a time")
        pairs = pairs[0]
    validate_score_pairs(pairs)
    return ScorePairs(pairs.workflow_id, pairs.y1, pairs.y2)


def qlr_statistic(
    pairs: ScorePairs,
    grid: Optional[CutoffGrid] = None,
    tau_grid=None,
    orientation=Orientation.LOWER_IS_STRONGER,
) -> QLRResult:
    """Difference of maximized total log-likelihoods, segmented minus homogeneous."""
    pairs = _baseline_only(pairs)
    grid = grid or CutoffGrid.default_for(pairs.n)
    data = DesignSet.from_pairs([pairs], grid, orientation)
    fit = fit_segmented(data, grid, tau_grid)
    return QLRResult(qlr=float(fit.loglik - fit.homogeneous_loglik), fit=fit)


def _inverse_information(info):
    """Inverse of a symmetric PSD matrix with one ridge retry; None if singular."""
    for ridge in (0.0, 1e-10 * np.trace(info)):
        mat = info + ridge * np.eye(info.shape[0])
        eig = np.linalg.eigvalsh(mat)
        if eig[0] > 1e-12 * max(eig[-1], np.finfo(float).tiny):
            return np.linalg.inv(mat)
    return None


@dataclass(frozen=True, eq=False)
class _ScoreProcess:
    """Per-category scores over the tau grid and their inverse information."""

    categories: np.ndarray  # (n,) zero-based category of each candidate
    unrestricted: np.ndarray  # (T, M, 2)
    inv_info: np.ndarray  # (T, 2, 2)
    restricted: np.ndarray  # (M,)
    inv_info1: float
    taus: np.ndarray


def _score_process(categories, counts, grid, taus, slope) -> _ScoreProcess:
    n = counts.sum()
    weight = counts / n
    restricted = category_scores([[slope]], [1.0], homogeneous_basis(grid))[:, 0]
    info1 = float(weight @ restricted**2)
    if not info1 > 0:
        raise SingularInformation("restricted information is zero")

    kept_tau, scores, inverses = [], [], []
    for tau in taus:
        c = category_scores([[slope, slope]], [1.0], segmented_basis(grid, tau))
        info = np.einsum("m,mk,ml->kl", weight, c, c)
        inv = _inverse_information(info)
        if inv is None:
            warnings.warn(f"information singular at tau={tau:.4g}; skipped", RuntimeWarning)
            continue
        kept_tau.append(tau)
        scores.append(c)
        inverses.append(inv)
    if not kept_tau:
        raise SingularInformation("information matrix singular at every grid point")
    return _ScoreProcess(
        categories=categories,
        unrestricted=np.array(scores),
        inv_info=np.array(inverses),
        restricted=restricted,
        inv_info1=1.0 / info1,
        taus=np.array(kept_tau),
    )


def multiplier_statistic(xi, process: _ScoreProcess) -> float:
    """One simulated sup-statistic for multipliers ``xi`` (one per candidate)."""
    n = len(xi)
    M = process.restricted.shape[0]
    zeta = np.bincount(process.categories, weights=xi, minlength=M) / np.sqrt(n)
    G = np.einsum("m,tmk->tk", zeta, process.unrestricted)
    G1 = zeta @ process.restricted
    quad = np.einsum("tk,tkl,tl->t", G, process.inv_info, G) - G1 * G1 * process.inv_info1
    return 0.5 * float(np.max(quad))


def _draw_chunk(job):
    seed, indices, n, process = job
    out = np.empty(len(indices))
    for k, j in enumerate(indices):
        xi = _stream(seed, j).generator().standard_normal(n)
        out[k] = multiplier_statistic(xi, process)
    return out


def qlr_null_pvalue(
    pairs: ScorePairs,
    grid: Optional[CutoffGrid] = None,
    tau_grid=None,
    NB: int = DEFAULT_NB,
    seed: int = 0,
    orientation=Orientation.LOWER_IS_STRONGER,
    n_jobs=None,
) -> QLRResult:
    """QLR statistic with a multiplier-simulated null distribution.

    Each draw j (stream ``(seed, j)``) perturbs the per-candidate scores,
    evaluated at the restricted slope across the whole tau grid, by iid
    standard normal multipliers.
    """
    if NB < 1:
        raise DomainError("NB must be positive")
    pairs = _baseline_only(pairs)
    grid = grid or CutoffGrid.default_for(pairs.n)
    taus = default_tau_grid(grid) if tau_grid is None else np.unique(np.asarray(tau_grid, float))
    ranks = to_uniform_ranks(pairs, orientation)
    data = DesignSet([[1.0]], [category_counts(ranks, grid).counts], (pairs.workflow_id,))
    fit = fit_segmented(data, grid, taus)
    qlr = float(fit.loglik - fit.homogeneous_loglik)

    process = _score_process(
        category_index(ranks, grid), data.counts[0], grid, taus, float(fit.homogeneous_beta[0])
    )
    n_chunks = min(NB, 16)
    chunks = np.array_split(np.arange(NB), n_chunks)
    parts = pmap(_draw_chunk, [(seed, c, pairs.n, process) for c in chunks], n_jobs)
    draws = np.concatenate(parts)
    p_value = float(np.mean(draws > qlr))
    return QLRResult(qlr=qlr, null_draws=draws, p_value=p_value, NB=NB, fit=fit)
