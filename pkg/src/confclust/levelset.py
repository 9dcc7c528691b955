"""k-nearest-neighbour density level sets turned into conformal unions of balls.

Neighbour search is brute force, which is fine for a few thousand points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import PredictionSet, ResidualFn, split_conformal
from .dataset import SplitPair, as_points

__all__ = [
    "KnnDensity",
    "LevelSetModel",
    "knn_distance",
    "knn_density",
    "level_from_quantile",
    "level_set_spheres",
]


def _pairwise(A, B):
    return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2))


def knn_distance(reference, k_nn: int, query, exclude_self: bool = False) -> np.ndarray:
    """Distance from each query to its ``k_nn``-th nearest reference point.

    With ``exclude_self`` the query set must be the reference set and each
    point's zero distance to itself is skipped.
    """
    R = as_points(reference)
    Q = as_points(query)
    if R.shape[0] == 0:
        raise ValueError("reference set is empty")
    available = R.shape[0] - (1 if exclude_self else 0)
    if not 1 <= k_nn <= available:
        raise ValueError(f"k_nn must lie in [1, {available}], got {k_nn}")
    dist = _pairwise(Q, R)
    if exclude_self:
        np.fill_diagonal(dist, np.inf)
    return np.partition(dist, k_nn - 1, axis=1)[:, k_nn - 1]


def _density_from_distance(dk, k_nn, n):
    with np.errstate(divide="ignore"):
        return k_nn / (n * dk)


def knn_density(reference, k_nn: int, query) -> np.ndarray | float:
    """``k / (n d_k(x))`` with ``d_k`` the distance to the ``k``-th nearest reference point.

    A zero ``d_k`` gives ``+inf``.
    """
    q = np.asarray(query, dtype=float)
    single = q.ndim <= 1
    n = as_points(reference).shape[0]
    dk = knn_distance(reference, k_nn, q.reshape(1, -1) if single else q)
    out = _density_from_distance(dk, k_nn, n)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class KnnDensity:
    """kNN density values on the reference points themselves (self excluded)."""

    reference: np.ndarray
    k_nn: int
    values: np.ndarray

    @classmethod
    def fit(cls, reference, k_nn: int) -> "KnnDensity":
        R = as_points(reference)
        dk = knn_distance(R, k_nn, R, exclude_self=True)
        return cls(R, k_nn, _density_from_distance(dk, k_nn, R.shape[0]))

    def __call__(self, query) -> np.ndarray | float:
        return knn_density(self.reference, self.k_nn, query)


@dataclass(frozen=True)
class LevelSetModel:
    kept_points: np.ndarray
    kept_density: np.ndarray
    level: float
    k_nn: int
    adaptive: bool

    def to_dict(self) -> dict:
        return {
            "type": "levelset",
            "k_nn": self.k_nn,
            "level": self.level,
            "adaptive": self.adaptive,
            "kept_points": self.kept_points.tolist(),
            "kept_density": self.kept_density.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LevelSetModel":
        return cls(
            np.asarray(doc["kept_points"], dtype=float),
            np.asarray(doc["kept_density"], dtype=float),
            float(doc["level"]),
            int(doc["k_nn"]),
            bool(doc["adaptive"]),
        )

    def residual(self) -> ResidualFn:
        if self.adaptive:
            return ResidualFn(
                "levelset_adaptive", {"centers": self.kept_points, "density": self.kept_density}
            )
        return ResidualFn("levelset_distance", {"centers": self.kept_points})


def level_from_quantile(density, q: float) -> float:
    """Lower empirical ``q``-quantile of the density values: the ``ceil(q m)``-th smallest."""
    values = density.values if isinstance(density, KnnDensity) else np.asarray(density, dtype=float)
    values = np.sort(np.ravel(values))
    if values.size == 0:
        raise ValueError("no density values")
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    rank = min(max(1, math.ceil(round(q * values.size, 9))), values.size)
    return float(values[rank - 1])


def fit_level_set(fit_half, k_nn: int, level=None, level_quantile=None, adaptive=False) -> LevelSetModel:
    """Keep the fitting points whose density is at least the level.

    Give either ``level`` (``-inf`` keeps everything) or ``level_quantile``.
    """
    density = KnnDensity.fit(fit_half, k_nn)
    if level_quantile is not None:
        if level is not None:
            raise ValueError("give either level or level_quantile, not both")
        level = level_from_quantile(density, level_quantile)
    elif level is None:
        level = -math.inf
    keep = density.values >= level
    if not keep.any():
        raise ValueError(f"no reference point has density >= level t={level}")
    return LevelSetModel(density.reference[keep], density.values[keep], float(level), k_nn, adaptive)


def level_set_spheres(
    split: SplitPair, k_nn: int, alpha: float, level=None, level_quantile=None, adaptive=False
) -> PredictionSet:
    """Conformal union of balls around the high-density fitting points.

    The residual is the distance from ``y`` to the nearest kept point (scaled
    by ``sqrt(density)`` of that point when ``adaptive``), calibrated on the
    calibration half. Balls share the radius ``M`` or, adaptively, have
    radius ``M / sqrt(density)``.
    """
    model = fit_level_set(split.fit_half, k_nn, level, level_quantile, adaptive)
    return split_conformal(model.residual(), split.calib_half, alpha)
