"""EM for full-covariance Gaussian mixtures."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .dataset import as_points
from .kmeans import GeneralModel, _check_k, component_scores, lloyd, regularize_cov

__all__ = ["em_fit", "ell_gm", "responsibilities"]


def ell_gm(data, model: GeneralModel) -> float:
    """Mixture negative log-likelihood without the ``(d/2) log(2 pi)`` constant.

    ``-(1/n) sum_i log sum_j exp(-score_ij)`` with the same per-component
    score as :func:`confclust.kmeans.ell_km`, evaluated with a max-shifted
    log-sum-exp.
    """
    scores = component_scores(data, model)
    return float(-np.mean(logsumexp(-scores, axis=1)))


def responsibilities(data, model: GeneralModel) -> np.ndarray:
    """Row-stochastic ``(n, k)`` posterior component probabilities."""
    log_r = -component_scores(data, model)
    log_r -= logsumexp(log_r, axis=1, keepdims=True)
    return np.exp(log_r)


def _m_step(X, resp, prev: GeneralModel, fallback_scale):
    n, d = X.shape
    nk = resp.sum(axis=0)
    weights = nk / n
    means = prev.means.copy()
    covs = prev.covs.copy()
    for j in range(resp.shape[1]):
        if nk[j] <= 1e-300:
            weights[j] = 0.0
            continue
        means[j] = resp[:, j] @ X / nk[j]
        diff = X - means[j]
        cov = (resp[:, j, None] * diff).T @ diff / nk[j]
        covs[j] = regularize_cov(cov, fallback_scale)
    return GeneralModel(weights / weights.sum(), means, covs)


def _em_once(X, init: GeneralModel, max_iter, tol, fallback_scale):
    model = init
    trace = [ell_gm(X, model)]
    for _ in range(max_iter):
        model = _m_step(X, responsibilities(X, model), model, fallback_scale)
        obj = ell_gm(X, model)
        prev = trace[-1]
        trace.append(obj)
        if prev - obj <= tol * abs(prev):
            break
    return model, trace


def _init_from_lloyd(X, k, seed, fallback_scale):
    km = lloyd(X, k, restarts=1, seed=seed)
    d = X.shape[1]
    covs = np.empty((k, d, d))
    for j in range(k):
        members = X[km.labels == j]
        diff = members - km.centers[j]
        covs[j] = regularize_cov(diff.T @ diff / max(len(members), 1), fallback_scale)
    return GeneralModel(km.weights, km.centers, covs)


def em_fit(data, k, restarts=3, max_iter=200, tol=1e-8, seed=0) -> GeneralModel:
    """Fit a ``k``-component Gaussian mixture by EM; best of ``restarts`` runs.

    Every restart starts from a single Lloyd run (centers, within-cluster
    covariances and shares) seeded from ``seed``. The returned model's
    ``trace`` holds the objective of :func:`ell_gm` after each iteration and
    ``labels`` the maximum-responsibility component of every point.
    """
    X = as_points(data)
    n, d = X.shape
    _check_k(k, n)
    fallback_scale = float(np.trace(np.cov(X.T, bias=True).reshape(d, d)) / d)
    seeds = np.random.SeedSequence(seed).generate_state(max(1, restarts))
    best = None
    for s in seeds:
        init = _init_from_lloyd(X, k, int(s), fallback_scale)
        model, trace = _em_once(X, init, max_iter, tol, fallback_scale)
        if best is None or trace[-1] < best[1][-1]:
            best = (model, trace)
    model, trace = best
    labels = np.argmin(component_scores(X, model), axis=1)
    return GeneralModel(model.weights, model.means, model.covs, labels=labels, trace=tuple(trace))
