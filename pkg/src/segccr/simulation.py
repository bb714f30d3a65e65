"""Synthetic replicate data: Gumbel and bivariate-normal mixtures, and MISE."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from .empirical import EmpiricalCurve
from .exceptions import DomainError, GridMismatch
from .types import ScorePairs, SeededRng


class Scenario(enum.Enum):
    GUMBEL_MIXTURE = "gumbel"
    BIVARIATE_NORMAL_MIXTURE = "normal"


@dataclass(frozen=True)
class ScenarioSpec:
    """Two-component mixture; component 1 is weak, component 2 strong.

    ``theta1``/``theta2`` are Gumbel parameters (>= 1) for
    ``GUMBEL_MIXTURE`` and correlations for ``BIVARIATE_NORMAL_MIXTURE``.
    ``workflows`` optionally lists per-workflow overrides, e.g.
    ``({}, {"theta2": 2.0})`` for a two-workflow comparison.
    """

    scenario: Scenario = Scenario.GUMBEL_MIXTURE
    n: int = 10000
    pi1: float = 0.8
    theta1: float = 1.0
    theta2: float = 1.2
    mu1: float = 0.0
    mu2: float = 3.0
    workflows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if not 0.0 <= self.pi1 <= 1.0:
            raise DomainError("pi1 must lie in [0, 1]")
        for over in self.workflows:
            self._check_thetas(over.get("theta1", self.theta1), over.get("theta2", self.theta2))
        self._check_thetas(self.theta1, self.theta2)

    def _check_thetas(self, t1, t2):
        if self.scenario is Scenario.GUMBEL_MIXTURE:
            if t1 < 1 or t2 < 1:
                raise DomainError("Gumbel parameters must be >= 1")
        elif abs(t1) >= 1 or abs(t2) >= 1:
            raise DomainError("normal-mixture correlations must lie in (-1, 1)")

    @classmethod
    def scenario2(cls, **kw) -> "ScenarioSpec":
        """Bivariate-normal mixture with its customary defaults."""
        base = dict(scenario=Scenario.BIVARIATE_NORMAL_MIXTURE, theta1=0.0, theta2=0.9, mu2=2.5)
        base.update(kw)
        return cls(**base)

    def for_workflow(self, index: int) -> "ScenarioSpec":
        if not self.workflows:
            return self
        return replace(self, workflows=(), **self.workflows[index])

    @property
    def n_workflows(self) -> int:
        return max(1, len(self.workflows))


def _positive_stable(alpha, size, gen):
    """Positive stable variates with Laplace transform exp(-s**alpha) (Kanter's method)."""
    theta = gen.uniform(0.0, np.pi, size)
    w = gen.exponential(1.0, size)
    return (np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)) * (
        np.sin((1.0 - alpha) * theta) / w
    ) ** ((1.0 - alpha) / alpha)


def _gumbel(n, theta, gen):
    if theta == 1.0:
        return gen.uniform(size=(n, 2))
    alpha = 1.0 / theta
    v = _positive_stable(alpha, n, gen)
    e = gen.exponential(1.0, size=(n, 2))
    return np.exp(-((e / v[:, None]) ** alpha))


def sample_gumbel_copula(n: int, theta: float, rng) -> np.ndarray:
    """Draw ``n`` pairs from the Gumbel-Hougaard copula via the frailty construction."""
    if theta < 1:
        raise DomainError(f"Gumbel parameter must be >= 1, got {theta}")
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    u = _gumbel(int(n), float(theta), gen)
    # guard the open interval; exp(-x) can round to exactly 0 or 1
    tiny = np.finfo(float).tiny
    return np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)


def _components(spec: ScenarioSpec, gen):
    return gen.uniform(size=spec.n) < spec.pi1


def generate_scenario1(spec: ScenarioSpec, rng, workflow_id="sim", covariates=()) -> ScorePairs:
    """Gumbel-copula components with N(mu, 1) margins, mixed with weight pi1."""
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    weak = _components(spec, gen)
    n1 = int(weak.sum())
    y = np.empty((spec.n, 2))
    y[weak] = ndtri(sample_gumbel_copula(n1, spec.theta1, gen)) + spec.mu1
    y[~weak] = ndtri(sample_gumbel_copula(spec.n - n1, spec.theta2, gen)) + spec.mu2
    return ScorePairs(workflow_id, y[:, 0], y[:, 1], covariates)


def _bivariate_normal(n, rho, mu, gen):
    z = gen.standard_normal((n, 2))
    z[:, 1] = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    return z + mu


def generate_scenario2(spec: ScenarioSpec, rng, workflow_id="sim", covariates=()) -> ScorePairs:
    """Mixture of unit-variance bivariate normals with correlations theta1, theta2."""
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    weak = _components(spec, gen)
    n1 = int(weak.sum())
    y = np.empty((spec.n, 2))
    y[weak] = _bivariate_normal(n1, spec.theta1, spec.mu1, gen)
    y[~weak] = _bivariate_normal(spec.n - n1, spec.theta2, spec.mu2, gen)
    return ScorePairs(workflow_id, y[:, 0], y[:, 1], covariates)


def generate(spec: ScenarioSpec, rng: SeededRng) -> list:
    """All workflows of ``spec``; workflow s draws from sub-stream s.

    With several workflows, workflow s > 0 gets the dummy covariate vector
    e_s, so workflow 0 is the baseline.
    """
    make = generate_scenario1 if spec.scenario is Scenario.GUMBEL_MIXTURE else generate_scenario2
    W = spec.n_workflows
    out = []
    for s in range(W):
        cov = np.eye(W)[s, 1:] if W > 1 else ()
        out.append(make(spec.for_workflow(s), rng.child(s), workflow_id=f"w{s}", covariates=cov))
    return out


def mise(fitted, empirical: EmpiricalCurve) -> float:
    """Riemann approximation of the integrated squared gap between two curves.

    ``sum_m (fitted_m - psi_m)^2 (t_m - t_{m-1})`` with ``t_0 = 0``.
    """
    if isinstance(fitted, EmpiricalCurve):
        if not np.array_equal(fitted.t, empirical.t):
            raise GridMismatch("curves are evaluated on different grids")
        fitted = fitted.psi
    fitted = np.asarray(fitted, dtype=float)
    if fitted.shape != empirical.psi.shape:
        raise GridMismatch(
            f"fitted curve has {fitted.shape} points, empirical has {empirical.psi.shape}"
        )
    widths = np.diff(np.concatenate(([0.0], empirical.t)))
    return float(np.sum((fitted - empirical.psi) ** 2 * widths))
