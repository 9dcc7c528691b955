import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_general_model
from confclust.conformal import (
    PredictionSet,
    ResidualFn,
    conformal_quantile,
    full_conformal_pvalue,
    k_ellipsoids,
    k_spheres,
    split_conformal,
)
from confclust.dataset import gen_blobs, split_half
from confclust.kmeans import GeneralModel, SphereModel, lloyd


def grid(lo, hi, m=100):
    xs = np.linspace(lo, hi, m)
    return np.array(np.meshgrid(xs, xs)).reshape(2, -1).T


def sphere_model(centers, sigmas=None, weights=None):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]
    sigmas = np.ones(k) if sigmas is None else np.asarray(sigmas, dtype=float)
    weights = np.full(k, 1 / k) if weights is None else np.asarray(weights, dtype=float)
    return SphereModel(centers, sigmas, weights, np.ones(k, dtype=int))


def test_quantile_order_statistic():
    assert conformal_quantile(np.arange(1, 11), 0.5) == 6


def test_quantile_constant():
    assert conformal_quantile([2.5] * 7, 0.2) == 2.5


def test_quantile_float_noise():
    # (9 + 1) * 0.9 is 9.000000000000002 in floating point; the rank is 9
    assert conformal_quantile(np.arange(1, 10), 0.1) == 9


def test_quantile_too_few_points():
    assert conformal_quantile([1.0, 2.0], 0.1) == math.inf


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_quantile_bad_alpha(alpha):
    with pytest.raises(ValueError):
        conformal_quantile([1.0], alpha)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(0.01, 0.99))
@settings(max_examples=200, deadline=None)
def test_quantile_is_a_residual_and_covers(values, alpha):
    q = conformal_quantile(values, alpha)
    if math.isinf(q):
        assert math.ceil((len(values) + 1) * (1 - alpha) - 1e-9) > len(values)
    else:
        assert q in values
        # at least ceil((m+1)(1-alpha)) of the residuals are <= q
        assert np.sum(np.asarray(values) <= q) >= math.ceil(round((len(values) + 1) * (1 - alpha), 9))


def test_single_ball_radius():
    calib = np.arange(1.0, 10.0)[:, None]
    pset = k_spheres(sphere_model([[0.0]]), calib, 0.1)
    assert pset.radii[0] == 9.0 and pset.threshold == 9.0


def test_weighted_plug_in():
    res = ResidualFn("weighted_sphere", {"centers": np.zeros((1, 2)), "sigmas": np.ones(1), "weights": np.ones(1)})
    assert res.radii(4.0)[0] == 2.0


@pytest.mark.parametrize("weighted", [False, True])
def test_ball_membership_matches_residual(weighted):
    X = gen_blobs(3, 60, [[0, 0], [5, 1], [2, 6]], 1.0, seed=2)
    split = split_half(X, 0)
    model = lloyd(split.fit_half, 3, seed=0)
    pset = k_spheres(model, split.calib_half, 0.1, weighted=weighted)
    Y = grid(-4, 10)
    assert np.array_equal(pset.contains(Y), pset.residual(Y) <= pset.threshold)


def test_weighted_drops_dominated_component():
    res = ResidualFn(
        "weighted_sphere",
        {"centers": np.zeros((2, 2)), "sigmas": np.array([1.0, 0.0]), "weights": np.array([0.5, 0.5])},
    )
    r = res.radii(3.0)
    assert r[1] == 0.0 and r[0] > 0


def test_log_form_unit_normal_is_a_ball():
    model = GeneralModel([1.0], np.zeros((1, 3)), np.eye(3)[None])
    res = ResidualFn("gmm_log_form", {"weights": model.weights, "means": model.means, "covs": model.covs})
    M = 1.7
    assert res.radii(M)[0] ** 2 == pytest.approx(2 * M, rel=1e-14)
    y = np.array([[np.sqrt(2 * M) * 0.999, 0, 0], [np.sqrt(2 * M) * 1.001, 0, 0]])
    assert list(res(y) <= M) == [True, False]


@pytest.mark.parametrize("k", [1, 3])
def test_inverse_density_and_log_form_agree(k):
    rng = np.random.default_rng(k)
    model = random_general_model(rng, k, 2)
    calib = rng.normal(scale=3, size=(99, 2))
    a = k_ellipsoids(model, calib, 0.1, "gmm_inverse_density")
    b = k_ellipsoids(model, calib, 0.1, "gmm_log_form")
    Y = grid(-9, 9)
    assert np.array_equal(a.contains(Y), b.contains(Y))
    assert np.allclose(a.radii, b.radii, rtol=1e-9)


@pytest.mark.parametrize("kind", ["gmm_inverse_density", "gmm_log_form", "maxmix_score"])
def test_ellipsoid_membership_matches_residual(kind):
    rng = np.random.default_rng(11)
    model = random_general_model(rng, 3, 2)
    calib = rng.normal(scale=3, size=(150, 2))
    pset = k_ellipsoids(model, calib, 0.2, kind)
    Y = grid(-9, 9)
    inside = pset.contains(Y)
    direct = pset.residual(Y) <= pset.threshold
    # only floating-point boundary ties may differ
    assert np.sum(inside != direct) == 0


def test_maxmix_score_is_twice_the_log_form(rng):
    model = random_general_model(rng, 2, 2)
    p = {"weights": model.weights, "means": model.means, "covs": model.covs}
    Y = rng.normal(size=(20, 2))
    assert np.allclose(ResidualFn("maxmix_score", p)(Y), 2 * ResidualFn("gmm_log_form", p)(Y))


def test_unknown_kinds():
    with pytest.raises(ValueError):
        ResidualFn("nope", {"centers": np.zeros((1, 1))})
    with pytest.raises(ValueError):
        k_ellipsoids(GeneralModel([1.0], [[0.0]], [[[1.0]]]), np.zeros((3, 1)), 0.1, "plain_distance")


def test_infinite_threshold_covers_everything():
    pset = split_conformal(ResidualFn("plain_distance", {"centers": np.zeros((1, 2))}), np.ones((3, 2)), 0.1)
    assert pset.threshold == math.inf and pset.contains(np.array([[1e9, 1e9]]))[0]


def test_split_coverage_simulation():
    # fixed centers so each trial is cheap; coverage is exact in expectation
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [4.0, 0.0]])
    res = ResidualFn("plain_distance", {"centers": centers})
    hits = 0
    T = 2000
    for _ in range(T):
        calib = centers[rng.integers(2, size=50)] + rng.normal(size=(50, 2))
        fresh = centers[rng.integers(2)] + rng.normal(size=(1, 2))
        hits += split_conformal(res, calib, 0.1).contains(fresh)[0]
    assert hits / T >= 0.9 - 0.02


@pytest.mark.parametrize("kind", ["plain_distance", "gmm_log_form"])
def test_prediction_set_round_trip(kind, rng):
    if kind == "plain_distance":
        res = ResidualFn(kind, {"centers": rng.normal(size=(3, 2))})
    else:
        m = random_general_model(rng, 2, 2)
        res = ResidualFn(kind, {"weights": m.weights, "means": m.means, "covs": m.covs})
    pset = split_conformal(res, rng.normal(size=(40, 2)), 0.1)
    back = PredictionSet.from_dict(pset.to_dict())
    Y = rng.normal(scale=3, size=(500, 2))
    assert np.array_equal(back.contains(Y), pset.contains(Y))
    assert back.threshold == pset.threshold and np.allclose(back.radii, pset.radii, rtol=1e-15)


def mean_residual(aug):
    return np.abs(aug[:, 0] - aug[:, 0].mean())


def test_full_conformal_n1():
    for y in (-3.0, 0.0, 0.5, 10.0):
        assert full_conformal_pvalue(np.array([[1.0]]), [y], mean_residual) in (0.5, 1.0)


def test_full_conformal_mean_example():
    assert full_conformal_pvalue(np.array([[-1.0], [1.0]]), [0.0], mean_residual) == 1.0


def test_full_conformal_shape_check():
    with pytest.raises(ValueError):
        full_conformal_pvalue(np.zeros((3, 1)), [0.0], lambda aug: np.zeros(2))
