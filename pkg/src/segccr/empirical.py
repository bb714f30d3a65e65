"""Rank transforms, the empirical correspondence curve and category counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import CutoffGrid, Orientation, ScorePairs, UniformRanks, validate_score_pairs


@dataclass(frozen=True, eq=False)
class EmpiricalCurve:
    """Psi_n evaluated at the cutoffs t_1..t_M."""

    t: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True, eq=False)
class CategoryCounts:
    counts: np.ndarray
    n: int


def _strict_ranks(y: np.ndarray, orientation: Orientation) -> np.ndarray:
    key = y if orientation is Orientation.HIGHER_IS_STRONGER else -y
    # stable sort: among tied scores the earlier index gets the smaller rank
    order = np.argsort(key, kind="stable")
    ranks = np.empty(len(y), dtype=np.int64)
    ranks[order] = np.arange(1, len(y) + 1)
    return ranks


def to_uniform_ranks(pairs: ScorePairs, orientation=Orientation.LOWER_IS_STRONGER) -> UniformRanks:
    """Rank each replicate column to {1/n, ..., 1}, strongest candidates nearest 1."""
    validate_score_pairs(pairs)
    orientation = Orientation.parse(orientation)
    n = pairs.n
    u1 = _strict_ranks(pairs.y1, orientation) / n
    u2 = _strict_ranks(pairs.y2, orientation) / n
    return UniformRanks(u1, u2)


def category_index(ranks: UniformRanks, grid: CutoffGrid) -> np.ndarray:
    """Zero-based category m-1 of each candidate: t_{m-1} < max(u1, u2) <= t_m."""
    joint = np.maximum(ranks.u1, ranks.u2)
    return np.searchsorted(grid.t, joint, side="left") - 1


def category_counts(ranks: UniformRanks, grid: CutoffGrid) -> CategoryCounts:
    idx = category_index(ranks, grid)
    counts = np.bincount(idx, minlength=grid.M)
    return CategoryCounts(counts=counts, n=ranks.n)


def empirical_curve(ranks: UniformRanks, grid: CutoffGrid) -> EmpiricalCurve:
    cc = category_counts(ranks, grid)
    psi = np.cumsum(cc.counts) / cc.n
    return EmpiricalCurve(t=grid.t[1:].copy(), psi=psi)


def curve_from_counts(counts: np.ndarray, grid: CutoffGrid) -> EmpiricalCurve:
    counts = np.asarray(counts)
    return EmpiricalCurve(t=grid.t[1:].copy(), psi=np.cumsum(counts) / counts.sum())
