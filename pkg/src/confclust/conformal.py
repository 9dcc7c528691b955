"""Conformal residuals and their sublevel sets as explicit unions of balls or ellipsoids.

A :class:`ResidualFn` is always a minimum over per-component terms, and each
term's sublevel set ``{term_j(y) <= T}`` is a ball or an ellipsoid whose
radius follows from ``T`` algebraically. :class:`PredictionSet` stores those
radii, so geometric membership and ``residual(y) <= T`` coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import as_points
from .kmeans import GeneralModel, SphereModel, log_dets, mahalanobis_sq

__all__ = [
    "RESIDUAL_KINDS",
    "ResidualFn",
    "PredictionSet",
    "conformal_quantile",
    "split_conformal",
    "k_spheres",
    "k_ellipsoids",
    "full_conformal_pvalue",
]

RESIDUAL_KINDS = (
    "plain_distance",
    "weighted_sphere",
    "gmm_inverse_density",
    "gmm_log_form",
    "maxmix_score",
    "levelset_distance",
    "levelset_adaptive",
)
ELLIPSOID_KINDS = ("gmm_inverse_density", "gmm_log_form", "maxmix_score")
LOG_2PI = math.log(2 * math.pi)
_CHUNK = 4096


def _sq_dist(Y, centers):
    out = np.empty((Y.shape[0], centers.shape[0]))
    for start in range(0, centers.shape[0], _CHUNK):
        c = centers[start : start + _CHUNK]
        out[:, start : start + _CHUNK] = ((Y[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    return out


@dataclass(frozen=True)
class ResidualFn:
    """A conformity score ``R(y) = min_j term_j(y)`` of one of :data:`RESIDUAL_KINDS`.

    ``params`` holds the arrays the kind needs:

    * ``plain_distance``: ``centers``
    * ``weighted_sphere``: ``centers, sigmas, weights``
    * ellipsoid kinds: ``weights, means, covs``
    * ``levelset_distance``: ``centers`` (the kept reference points)
    * ``levelset_adaptive``: ``centers, density``
    """

    kind: str
    params: dict = field(repr=False)

    def __post_init__(self):
        if self.kind not in RESIDUAL_KINDS:
            raise ValueError(f"unknown residual kind {self.kind!r}")
        params = {key: np.asarray(val, dtype=float) for key, val in self.params.items()}
        object.__setattr__(self, "params", params)

    @property
    def centers(self) -> np.ndarray:
        p = self.params
        return p["means"] if self.kind in ELLIPSOID_KINDS else p["centers"]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def model(self) -> GeneralModel:
        p = self.params
        return GeneralModel(p["weights"], p["means"], p["covs"])

    def terms(self, y) -> np.ndarray:
        """``(m, k)`` matrix of per-component terms at the query points."""
        Y = as_points(y)
        if Y.shape[1] != self.d:
            raise ValueError(f"query has dimension {Y.shape[1]}, residual expects {self.d}")
        p, kind = self.params, self.kind
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if kind in ("plain_distance", "levelset_distance"):
                return np.sqrt(_sq_dist(Y, p["centers"]))
            if kind == "levelset_adaptive":
                dens = p["density"]
                out = np.sqrt(_sq_dist(Y, p["centers"])) * np.sqrt(dens)
                out[:, ~np.isfinite(dens)] = np.inf
                return out
            if kind == "weighted_sphere":
                sig, w = p["sigmas"], p["weights"]
                d = Y.shape[1]
                out = _sq_dist(Y, p["centers"]) / sig**2 + 2 * d * np.log(sig) - 2 * np.log(w)
                out[:, (sig <= 0) | (w <= 0)] = np.inf
                return out
            model = self.model
            half = 0.5 * mahalanobis_sq(Y, model.means, model.covs) + 0.5 * log_dets(model.covs)
            half = half - np.log(model.weights)
            if kind == "gmm_log_form":
                return half
            if kind == "maxmix_score":
                return 2.0 * half
            # 1 / (weight * normal density)
            return np.exp(half + 0.5 * Y.shape[1] * LOG_2PI)

    def __call__(self, y) -> np.ndarray:
        return self.terms(y).min(axis=1)

    def radii(self, threshold: float) -> np.ndarray:
        """Per-component radius of ``{term_j <= threshold}``; 0 marks an empty component.

        Ball kinds return Euclidean radii. Ellipsoid kinds return ``b`` with the
        component equal to ``{(y - mu)^T cov^{-1} (y - mu) <= b^2}``.
        """
        p, kind, T = self.params, self.kind, float(threshold)
        k = self.centers.shape[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            if kind in ("plain_distance", "levelset_distance"):
                r = np.full(k, T)
            elif kind == "levelset_adaptive":
                r = T / np.sqrt(p["density"])
            elif kind == "weighted_sphere":
                sig, w = p["sigmas"], p["weights"]
                bracket = T + 2 * np.log(w) - 2 * self.d * np.log(sig)
                r = sig * np.sqrt(np.where(bracket > 0, bracket, 0.0))
                r[(sig <= 0) | (w <= 0)] = 0.0
            else:
                logdet = log_dets(p["covs"])
                logw = np.log(p["weights"])
                if kind == "gmm_log_form":
                    r2 = 2 * T - logdet + 2 * logw
                elif kind == "maxmix_score":
                    r2 = T - logdet + 2 * logw
                else:
                    r2 = 2 * (logw + np.log(T) - 0.5 * self.d * LOG_2PI - 0.5 * logdet)
                r = np.sqrt(np.where(r2 > 0, r2, 0.0))
        r = np.where(np.isnan(r), 0.0, r)
        return np.where(r > 0, r, 0.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {key: val.tolist() for key, val in self.params.items()}}

    @classmethod
    def from_dict(cls, doc: dict) -> "ResidualFn":
        return cls(doc["kind"], doc["params"])


@dataclass(frozen=True)
class PredictionSet:
    """Union of closed balls (``shapes is None``) or ellipsoids.

    Component ``j`` is ``{y : dist_j(y) <= radii[j]}`` where ``dist_j`` is the
    Euclidean distance to ``centers[j]`` for balls and the Mahalanobis
    distance under ``shapes[j]`` for ellipsoids. Components with radius 0 are
    empty.
    """

    centers: np.ndarray
    radii: np.ndarray
    threshold: float
    alpha: float
    residual: ResidualFn
    shapes: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def kind(self) -> str:
        return self.residual.kind

    @property
    def is_ball(self) -> bool:
        return self.shapes is None

    @property
    def nonempty(self) -> np.ndarray:
        return self.radii > 0

    def component_distances(self, y) -> np.ndarray:
        Y = as_points(y)
        if Y.shape[1] != self.d:
            raise ValueError(f"query has dimension {Y.shape[1]}, set has dimension {self.d}")
        if self.is_ball:
            return np.sqrt(_sq_dist(Y, self.centers))
        return np.sqrt(mahalanobis_sq(Y, self.centers, self.shapes))

    def component_membership(self, y) -> np.ndarray:
        """``(m, k)`` boolean matrix: query ``i`` lies in component ``j``."""
        inside = self.component_distances(y) <= self.radii
        inside[:, ~self.nonempty] = False
        return inside

    def contains(self, y) -> np.ndarray:
        return self.component_membership(y).any(axis=1)

    def bounding_box(self):
        """Axis-aligned box ``(low, high)`` around the nonempty components, or ``None``."""
        keep = self.nonempty
        if not keep.any():
            return None
        r = self.radii[keep, None]
        if self.is_ball:
            half = np.broadcast_to(r, (keep.sum(), self.d))
        else:
            half = r * np.sqrt(np.diagonal(self.shapes[keep], axis1=1, axis2=2))
        c = self.centers[keep]
        return (c - half).min(axis=0), (c + half).max(axis=0)

    def to_dict(self) -> dict:
        if self.is_ball:
            comps = [{"center": c.tolist(), "radius": float(r)} for c, r in zip(self.centers, self.radii)]
        else:
            comps = [
                {"mu": c.tolist(), "sigma": s.tolist(), "r2": float(r) ** 2}
                for c, s, r in zip(self.centers, self.shapes, self.radii)
            ]
        return {
            "alpha": self.alpha,
            "threshold": self.threshold,
            "kind": self.kind,
            "components": comps,
            "residual": self.residual.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PredictionSet":
        comps = doc["components"]
        residual = ResidualFn.from_dict(doc["residual"])
        if residual.kind in ELLIPSOID_KINDS:
            centers = np.array([c["mu"] for c in comps], dtype=float)
            shapes = np.array([c["sigma"] for c in comps], dtype=float)
            radii = np.sqrt([c["r2"] for c in comps])
        else:
            centers = np.array([c["center"] for c in comps], dtype=float)
            shapes = None
            radii = np.array([c["radius"] for c in comps], dtype=float)
        return cls(centers.reshape(len(comps), -1), radii, float(doc["threshold"]),
                   float(doc["alpha"]), residual, shapes)


def conformal_quantile(residuals, alpha: float) -> float:
    """The ``ceil((m + 1)(1 - alpha))``-th smallest of ``m`` residuals (``inf`` past ``m``)."""
    r = np.asarray(residuals, dtype=float).ravel()
    m = r.size
    if m == 0:
        raise ValueError("need at least one residual")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    # round away float noise such as 10 * 0.9 = 9.000000000000002
    rank = math.ceil(round((m + 1) * (1 - alpha), 9))
    if rank > m:
        return math.inf
    return float(np.partition(r, rank - 1)[rank - 1])


def split_conformal(residual: ResidualFn, calib, alpha: float) -> PredictionSet:
    """Threshold ``residual`` at the conformal quantile of its calibration values."""
    calib = as_points(calib)
    threshold = conformal_quantile(residual(calib), alpha)
    shapes = residual.params["covs"] if residual.kind in ELLIPSOID_KINDS else None
    return PredictionSet(
        centers=residual.centers,
        radii=residual.radii(threshold),
        threshold=threshold,
        alpha=alpha,
        residual=residual,
        shapes=shapes,
    )


def k_spheres(model: SphereModel, calib, alpha: float, weighted: bool = False) -> PredictionSet:
    """Conformal union of balls around k-means centers.

    Unweighted: every ball has the conformal quantile of nearest-center
    distances as radius. Weighted: the score
    ``||y - c_j||^2 / s_j^2 + 2 d log s_j - 2 log w_j`` gives ball ``j`` radius
    ``s_j * sqrt(max(T + 2 log w_j - 2 d log s_j, 0))``. A zero-spread
    cluster contributes nothing under the weighted score.
    """
    if weighted:
        residual = ResidualFn(
            "weighted_sphere",
            {"centers": model.centers, "sigmas": model.sigmas, "weights": model.weights},
        )
    else:
        residual = ResidualFn("plain_distance", {"centers": model.centers})
    return split_conformal(residual, calib, alpha)


def k_ellipsoids(model: GeneralModel, calib, alpha: float, residual_kind: str = "gmm_log_form") -> PredictionSet:
    """Conformal union of ellipsoids for a fitted mixture.

    ``residual_kind`` is one of ``gmm_inverse_density``
    (``min_j 1 / (w_j phi_j(y))``), ``gmm_log_form``
    (``min_j 0.5 maha + 0.5 log det - log w_j``) or ``maxmix_score``
    (twice the log form).
    """
    if residual_kind not in ELLIPSOID_KINDS:
        raise ValueError(f"residual_kind must be one of {ELLIPSOID_KINDS}, got {residual_kind!r}")
    log_dets(model.covs)  # raises on a singular covariance
    residual = ResidualFn(
        residual_kind, {"weights": model.weights, "means": model.means, "covs": model.covs}
    )
    return split_conformal(residual, calib, alpha)


def full_conformal_pvalue(data, y, residual_builder) -> float:
    """Full-conformal p-value of the candidate ``y``.

    ``residual_builder`` maps the augmented ``(n + 1, d)`` array (``y`` last)
    to its ``n + 1`` residuals and must treat the rows symmetrically. The
    p-value is the fraction of residuals at least as large as that of ``y``.
    """
    X = as_points(data)
    y = np.atleast_1d(np.asarray(y, dtype=float)).reshape(1, -1)
    aug = np.vstack([X, y])
    res = np.asarray(residual_builder(aug), dtype=float)
    if res.shape != (aug.shape[0],):
        raise ValueError(f"residual_builder returned shape {res.shape}, expected ({aug.shape[0]},)")
    return float(np.mean(res >= res[-1]))
