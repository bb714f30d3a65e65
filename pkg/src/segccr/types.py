"""Shared domain types, validation and seeded randomness."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, LengthMismatch, NonFinite, TooFew


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Orientation(enum.Enum):
    """Which end of the score scale carries the strong evidence."""

    LOWER_IS_STRONGER = "low"
    HIGHER_IS_STRONGER = "high"

    @classmethod
    def parse(cls, value) -> "Orientation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"orientation must be 'low' or 'high', got {value!r}") from None


@dataclass(frozen=True, eq=False)
class ScorePairs:
    """Paired replicate scores of one workflow and its covariates.

    The intercept is implicit; ``covariates`` holds x_1..x_S only.
    """

    workflow_id: str
    y1: np.ndarray
    y2: np.ndarray
    covariates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "y1", _frozen_array(np.ravel(self.y1)))
        object.__setattr__(self, "y2", _frozen_array(np.ravel(self.y2)))
        object.__setattr__(self, "covariates", _frozen_array(np.ravel(self.covariates)))

    @property
    def n(self) -> int:
        return len(self.y1)

    @property
    def design(self) -> np.ndarray:
        """Design vector with the intercept prepended."""
        return np.concatenate(([1.0], self.covariates))

    def __eq__(self, other):
        if not isinstance(other, ScorePairs):
            return NotImplemented
        return (
            self.workflow_id == other.workflow_id
            and np.array_equal(self.y1, other.y1)
            and np.array_equal(self.y2, other.y2)
            and np.array_equal(self.covariates, other.covariates)
        )

    __hash__ = None


def validate_score_pairs(pairs: ScorePairs) -> ScorePairs:
    """Check the ScorePairs invariants and return the input unchanged."""
    if len(pairs.y1) != len(pairs.y2):
        raise LengthMismatch(
            f"workflow {pairs.workflow_id!r}: y1 has {len(pairs.y1)} scores, y2 has {len(pairs.y2)}"
        )
    if not (np.all(np.isfinite(pairs.y1)) and np.all(np.isfinite(pairs.y2))):
        raise NonFinite(f"workflow {pairs.workflow_id!r}: scores must be finite")
    if not np.all(np.isfinite(pairs.covariates)):
        raise NonFinite(f"workflow {pairs.workflow_id!r}: covariates must be finite")
    if pairs.n < 2:
        raise TooFew(f"workflow {pairs.workflow_id!r}: need at least 2 candidates, got {pairs.n}")
    return pairs


@dataclass(frozen=True, eq=False)
class UniformRanks:
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u1", _frozen_array(self.u1))
        object.__setattr__(self, "u2", _frozen_array(self.u2))
        if self.u1.shape != self.u2.shape:
            raise LengthMismatch("rank columns differ in length")

    @property
    def n(self) -> int:
        return len(self.u1)


@dataclass(frozen=True, eq=False)
class CutoffGrid:
    """Cutoffs 0 = t_0 < t_1 < ... < t_M = 1."""

    t: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.t)
        if t.ndim != 1 or len(t) < 2:
            raise DomainError("a cutoff grid needs at least the two endpoints")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise DomainError("cutoff grid must start at exactly 0 and end at exactly 1")
        if not np.all(np.diff(t) > 0):
            raise DomainError("cutoffs must be strictly increasing")
        object.__setattr__(self, "t", t)

    @property
    def M(self) -> int:
        return len(self.t) - 1

    @classmethod
    def equally_spaced(cls, M: int) -> "CutoffGrid":
        if int(M) != M or M < 1:
            raise DomainError(f"number of cutoffs must be a positive integer, got {M!r}")
        M = int(M)
        # m / M keeps cutoffs bit-equal to rank fractions k / n when they coincide
        return cls(np.arange(M + 1) / M)

    @classmethod
    def default_for(cls, n: int) -> "CutoffGrid":
        return cls.equally_spaced(min(100, int(n)))

    def __eq__(self, other):
        if not isinstance(other, CutoffGrid):
            return NotImplemented
        return np.array_equal(self.t, other.t)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SegmentedParams:
    """Change point and per-covariate slope pairs; row s is (beta_s1, beta_s2)."""

    tau: float
    beta: np.ndarray

    def __post_init__(self):
        beta = _frozen_array(np.atleast_2d(self.beta))
        if beta.ndim != 2 or beta.shape[1] != 2:
            raise DomainError(f"beta must have shape (S+1, 2), got {beta.shape}")
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"change point must lie in (0, 1), got {self.tau}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "beta", beta)

    def effective_slopes(self, designs) -> np.ndarray:
        """Covariate-weighted slopes, shape (n_designs, 2)."""
        return np.atleast_2d(designs) @ self.beta

    def is_feasible(self, designs) -> bool:
        return bool(np.all(self.effective_slopes(designs) > 0))

    def flat(self) -> np.ndarray:
        return np.concatenate(([self.tau], self.beta.ravel()))

    def __eq__(self, other):
        if not isinstance(other, SegmentedParams):
            return NotImplemented
        return self.tau == other.tau and np.array_equal(self.beta, other.beta)

    __hash__ = None


@dataclass(frozen=True)
class SeededRng:
    """Counter-based random stream keyed by ``(seed, stream_index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys and
    drive a Philox generator, so the draws of a stream never depend on which
    other streams were used, or in what order.
    """

    seed: int
    stream_index: int = 0
    parent: tuple = ()

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise DomainError("stream_index must be nonnegative")

    @property
    def key(self) -> tuple:
        return self.parent + (int(self.stream_index),)

    def child(self, index: int) -> "SeededRng":
        """Sub-stream ``index`` of this stream."""
        return SeededRng(self.seed, index, self.key)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))
