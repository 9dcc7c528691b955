"""The max-mixture density ``max_j w_j phi(y; mu_j, cov_j) / Z``.

Only evaluation lives here; parameters come from
:func:`confclust.kmeans.generalized_lloyd` or :func:`confclust.gmm.em_fit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dataset import as_points
from .kmeans import GeneralModel, component_scores, ell_km

__all__ = ["NormalizerEstimate", "MaxMixDensity", "maxmix_unnorm", "estimate_Z", "ell"]


@dataclass(frozen=True)
class NormalizerEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int

    @property
    def log_value(self) -> float:
        return math.log(self.value)

    @property
    def log_std_error(self) -> float:
        """Delta-method standard error of ``log value``."""
        return self.std_error / self.value


@dataclass(frozen=True)
class MaxMixDensity:
    model: GeneralModel
    Z: NormalizerEstimate

    def __call__(self, y) -> np.ndarray:
        return maxmix_unnorm(self.model, y) / self.Z.value

    @classmethod
    def fit(cls, model: GeneralModel, n_samples: int = 100_000, seed: int = 0) -> "MaxMixDensity":
        return cls(model, estimate_Z(model, n_samples, seed))


def _log_components(model, Y):
    # log(w_j phi_j(y)) including the (2 pi)^(-d/2) factor
    return -component_scores(Y, model) - 0.5 * model.d * math.log(2 * math.pi)


def maxmix_unnorm(model: GeneralModel, y) -> np.ndarray | float:
    """``max_j w_j phi(y; mu_j, cov_j)``, a float for a single point."""
    y_arr = np.asarray(y, dtype=float)
    single = y_arr.ndim <= 1
    Y = y_arr.reshape(1, -1) if single else as_points(y_arr)
    out = np.exp(_log_components(model, Y).max(axis=1))
    return float(out[0]) if single else out


def importance_weights(model: GeneralModel, Y) -> np.ndarray:
    """``max_j w_j phi_j / sum_j w_j phi_j`` at ``Y``; always within ``[1/k, 1]``."""
    logc = _log_components(model, Y)
    return np.exp(logc.max(axis=1) - logsumexp(logc, axis=1))


def sample_mixture(model: GeneralModel, n: int, rng: np.random.Generator) -> np.ndarray:
    comp = rng.choice(model.k, size=n, p=model.weights / model.weights.sum())
    chol = np.linalg.cholesky(model.covs)
    z = rng.standard_normal((n, model.d))
    return model.means[comp] + np.einsum("nij,nj->ni", chol[comp], z)


def estimate_Z(model: GeneralModel, n_samples: int = 100_000, seed: int = 0) -> NormalizerEstimate:
    """Importance-sampling estimate of ``Z = integral of max_j w_j phi_j``.

    The proposal is the sum mixture ``sum_j w_j phi_j`` (which integrates to
    one), so every weight lies in ``[1/k, 1]`` and the estimate has finite
    variance.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    w = importance_weights(model, sample_mixture(model, n_samples, rng))
    se = float(w.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return NormalizerEstimate(float(w.mean()), se, int(n_samples), int(seed))


def ell(data, model: GeneralModel, Z_samples: int = 100_000, seed: int = 0) -> float:
    """Max-mixture negative log-likelihood: ``ell_km(data, model) + log Z``."""
    return ell_km(data, model) + estimate_Z(model, Z_samples, seed).log_value
