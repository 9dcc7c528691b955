"""Named end-to-end pipelines: split, fit the base clustering, calibrate."""

from __future__ import annotations

from dataclasses import dataclass

from .conformal import PredictionSet, k_ellipsoids, k_spheres, split_conformal
from .dataset import SplitPair, split_half
from .gmm import em_fit
from .kmeans import generalized_lloyd, lloyd
from .levelset import fit_level_set

__all__ = ["METHODS", "Fitted", "fit_split", "fit_data"]

METHODS = ("kspheres", "kspheres-weighted", "gmm", "maxmix-klloyd", "maxmix-em", "levelset")


@dataclass(frozen=True)
class Fitted:
    method: str
    model: object
    pset: PredictionSet
    split: SplitPair


def fit_split(
    split: SplitPair,
    method: str,
    k: int,
    alpha: float,
    seed: int = 0,
    restarts: int = 5,
    level_quantile: float | None = None,
    adaptive: bool = False,
) -> Fitted:
    """Fit ``method`` with tuning parameter ``k`` on the fitting half and calibrate.

    For ``levelset`` the parameter ``k`` is the neighbour count and the level
    defaults to the ``1 - alpha`` quantile of the fitting-half densities.
    """
    fit, calib = split.fit_half, split.calib_half
    if method in ("kspheres", "kspheres-weighted"):
        model = lloyd(fit, k, restarts=restarts, seed=seed)
        pset = k_spheres(model, calib, alpha, weighted=method == "kspheres-weighted")
    elif method == "gmm":
        model = em_fit(fit, k, restarts=max(1, restarts // 2), seed=seed)
        pset = k_ellipsoids(model, calib, alpha, "gmm_inverse_density")
    elif method == "maxmix-em":
        model = em_fit(fit, k, restarts=max(1, restarts // 2), seed=seed)
        pset = k_ellipsoids(model, calib, alpha, "maxmix_score")
    elif method == "maxmix-klloyd":
        model = generalized_lloyd(fit, k, restarts=restarts, seed=seed)
        pset = k_ellipsoids(model, calib, alpha, "maxmix_score")
    elif method == "levelset":
        q = 1 - alpha if level_quantile is None else level_quantile
        model = fit_level_set(fit, k, level_quantile=q, adaptive=adaptive)
        pset = split_conformal(model.residual(), calib, alpha)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return Fitted(method, model, pset, split)


def fit_data(data, method: str, k: int, alpha: float, seed: int = 0, **options) -> Fitted:
    """:func:`fit_split` on a fresh seeded half split of ``data``."""
    return fit_split(split_half(data, seed), method, k, alpha, seed=seed, **options)
