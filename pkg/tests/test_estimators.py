import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from segccr import HomogeneousCCR, InputError, ScenarioSpec, SeededRng, SegmentedCCR, UniformRankTransformer, generate


@pytest.fixture(scope="module")
def sim():
    spec = ScenarioSpec(n=3000, pi1=0.7, workflows=({}, {"theta2": 2.5}))
    pairs = generate(spec, SeededRng(0))
    X = np.vstack([np.column_stack([p.y1, p.y2]) for p in pairs])
    groups = np.repeat(["w0", "w1"], 3000)
    return X, groups


def test_params_and_clone():
    est = SegmentedCCR(orientation="high", n_cutoffs=50)
    assert est.get_params()["n_cutoffs"] == 50
    c = clone(est).set_params(trim=0.1)
    assert c.trim == 0.1 and est.trim == 0.05


def test_transformer():
    X = np.array([[3.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
    u = UniformRankTransformer("high").fit_transform(X)
    assert np.allclose(u[:, 0], [1.0, 1 / 3, 2 / 3])
    with pytest.raises(NotFittedError):
        UniformRankTransformer().transform(X)
    with pytest.raises(InputError):
        UniformRankTransformer().fit(np.ones((4, 3)))


def test_segmented_fit_predict(sim):
    X, groups = sim
    est = SegmentedCCR(orientation="high").fit(X, groups=groups)
    assert est.tau_ == pytest.approx(0.7, abs=0.05)
    assert est.coef_.shape == (2, 2)
    curves = est.predict()
    assert curves.shape == (2, 100)
    assert np.all(curves[:, -1] == 1.0)
    assert np.allclose(est.predict(["w1"]), curves[1:])
    emp = est.empirical_curves(X, groups)
    assert np.max(np.abs(emp - curves)) < 0.05


def test_score_prefers_segmented(sim):
    X, groups = sim
    seg = SegmentedCCR(orientation="high").fit(X, groups=groups)
    hom = HomogeneousCCR(orientation="high").fit(X, groups=groups)
    assert seg.score(X, groups) > hom.score(X, groups)
    assert seg.score(X, groups) == pytest.approx(seg.loglik_ / len(X))


def test_explicit_covariates(sim):
    X, groups = sim
    est = SegmentedCCR(orientation="high").fit(X, groups=groups, covariates={"w0": [0.0], "w1": [1.0]})
    dummy = SegmentedCCR(orientation="high").fit(X, groups=groups)
    assert np.array_equal(est.coef_, dummy.coef_)
    with pytest.raises(Exception):
        est.predict(["zz"])


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        SegmentedCCR().predict()
    with pytest.raises(ValueError):
        SegmentedCCR().fit(np.array([[1.0, np.nan], [2.0, 3.0]]))
