"""Lloyd's algorithm and the generalized (covariance-aware) Lloyd's algorithm.

Both fits canonicalize the row order of the input (lexicographic sort) before
seeding, so permuting the rows of a dataset only permutes the labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import as_points

__all__ = [
    "SphereModel",
    "GeneralModel",
    "lloyd",
    "within_ss",
    "nearest_center",
    "generalized_lloyd",
    "ell_km",
    "component_scores",
    "regularize_cov",
]

RIDGE = 1e-8


@dataclass(frozen=True)
class SphereModel:
    """Output of ordinary k-means.

    ``sigmas[j]`` is the RMS distance of cluster ``j``'s points to their mean,
    ``weights[j] = counts[j] / n``. ``labels`` are the assignments of the rows
    the model was fitted on, in the caller's order.
    """

    centers: np.ndarray
    sigmas: np.ndarray
    weights: np.ndarray
    counts: np.ndarray
    labels: np.ndarray | None = field(default=None, compare=False, repr=False)
    trace: tuple = field(default=(), compare=False, repr=False)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def to_dict(self) -> dict:
        return {
            "type": "sphere",
            "k": self.k,
            "centers": self.centers.tolist(),
            "sigmas": self.sigmas.tolist(),
            "weights": self.weights.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SphereModel":
        return cls(
            centers=np.asarray(doc["centers"], dtype=float),
            sigmas=np.asarray(doc["sigmas"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            counts=np.asarray(doc["counts"], dtype=int),
        )


@dataclass(frozen=True)
class GeneralModel:
    """Mixture parameters ``{weights, means, covs}`` shared by the max-mixture and GMM fits."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    labels: np.ndarray | None = field(default=None, compare=False, repr=False)
    trace: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov = np.asarray(self.covs, dtype=float)
        if cov.ndim == 2:
            cov = cov[None]
        if not (w.shape[0] == mu.shape[0] == cov.shape[0]):
            raise ValueError("weights, means and covs disagree on k")
        if cov.shape[1:] != (mu.shape[1], mu.shape[1]):
            raise ValueError("covariance shape does not match the dimension of the means")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covs", cov)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "type": "general",
            "k": self.k,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneralModel":
        return cls(doc["weights"], doc["means"], doc["covs"])


def regularize_cov(cov: np.ndarray, fallback_scale: float = 0.0) -> np.ndarray:
    """Add ``eps * I`` when the smallest eigenvalue falls below ``eps``.

    ``eps = 1e-8 * trace(cov) / d``; when the covariance is identically zero
    (a single-point cluster) ``fallback_scale`` takes the place of
    ``trace(cov) / d``.
    """
    d = cov.shape[0]
    cov = 0.5 * (cov + cov.T)
    scale = np.trace(cov) / d
    if not scale > 0:
        scale = fallback_scale
    eps = RIDGE * scale
    if eps > 0 and np.linalg.eigvalsh(cov)[0] < eps:
        cov = cov + eps * np.eye(d)
    return cov


def _cholesky_all(covs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        raise ValueError("a covariance matrix is singular or not positive definite") from None


def mahalanobis_sq(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """``(n, k)`` matrix of ``(x - mu_j)^T covs_j^{-1} (x - mu_j)``."""
    chol = _cholesky_all(covs)
    out = np.empty((X.shape[0], means.shape[0]))
    for j in range(means.shape[0]):
        z = np.linalg.solve(chol[j], (X - means[j]).T)
        out[:, j] = np.einsum("ij,ij->j", z, z)
    return out


def log_dets(covs: np.ndarray) -> np.ndarray:
    chol = _cholesky_all(covs)
    return 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)


def component_scores(X, model: GeneralModel) -> np.ndarray:
    """Per-point, per-component ``0.5 maha + 0.5 log det(cov) - log(weight)``.

    Components with zero weight score ``+inf``.
    """
    X = as_points(X)
    if X.shape[1] != model.d:
        raise ValueError(f"data has dimension {X.shape[1]}, model has {model.d}")
    maha = mahalanobis_sq(X, model.means, model.covs)
    with np.errstate(divide="ignore"):
        neg_log_w = -np.log(model.weights)
    return 0.5 * maha + 0.5 * log_dets(model.covs) + neg_log_w


def ell_km(data, model: GeneralModel) -> float:
    """Average over points of the smallest component score (the generalized k-means objective)."""
    return float(np.mean(np.min(component_scores(data, model), axis=1)))


def nearest_center(X: np.ndarray, centers: np.ndarray):
    """Return ``(labels, squared distances)``; ties go to the lowest index."""
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


def within_ss(data, model) -> float:
    """Average squared distance from each point to its nearest center."""
    X = as_points(data)
    centers = model.centers if hasattr(model, "centers") else np.atleast_2d(model)
    if X.shape[1] != centers.shape[1]:
        raise ValueError(f"data has dimension {X.shape[1]}, centers have {centers.shape[1]}")
    return float(np.mean(nearest_center(X, centers)[1]))


def _check_k(k, n):
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points n={n}")


def _canonical_order(X):
    return np.lexsort(X.T[::-1])


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = X[idx]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd_once(X, k, max_iter, tol, rng):
    centers = _kmeanspp(X, k, rng)
    labels, d2 = nearest_center(X, centers)
    trace = [float(d2.mean())]
    for _ in range(max_iter):
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # re-seed at the worst-served point
            far = int(np.argmax(d2))
            labels[far] = j
            d2[far] = 0.0
            counts = np.bincount(labels, minlength=k)
        for j in range(k):
            centers[j] = X[labels == j].mean(axis=0)
        new_labels, d2 = nearest_center(X, centers)
        obj = float(d2.mean())
        prev = trace[-1]
        trace.append(obj)
        unchanged = np.array_equal(new_labels, labels)
        labels = new_labels
        if unchanged or prev - obj <= tol * abs(prev):
            break
    # final centers are the means of the final assignment
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j]:
            centers[j] = X[labels == j].mean(axis=0)
    return centers, labels, trace


def _sphere_stats(X, labels, k):
    counts = np.bincount(labels, minlength=k)
    d = X.shape[1]
    means = np.zeros((k, d))
    sig2 = np.zeros(k)
    for j in range(k):
        members = X[labels == j]
        if len(members):
            means[j] = members.mean(axis=0)
            sig2[j] = ((members - means[j]) ** 2).sum(axis=1).mean()
    return means, np.sqrt(sig2), counts


def lloyd(data, k, restarts=10, max_iter=200, tol=1e-8, seed=0) -> SphereModel:
    """Ordinary k-means: the best of ``restarts`` k-means++ seeded Lloyd runs.

    Empty clusters are re-seeded at the point with the largest current
    squared distance. Iteration stops once assignments stop changing, the
    relative decrease of the within-cluster sum of squares drops below
    ``tol``, or after ``max_iter`` updates.
    """
    X = as_points(data)
    n = X.shape[0]
    _check_k(k, n)
    order = _canonical_order(X)
    Xc = X[order]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        centers, labels, trace = _lloyd_once(Xc, k, max_iter, tol, rng)
        if best is None or trace[-1] < best[2][-1]:
            best = (centers, labels, trace)
    centers, labels_c, trace = best
    means, sigmas, counts = _sphere_stats(Xc, labels_c, k)
    labels = np.empty(n, dtype=int)
    labels[order] = labels_c
    return SphereModel(
        centers=means,
        sigmas=sigmas,
        weights=counts / counts.sum(),
        counts=counts,
        labels=labels,
        trace=tuple(trace),
    )


def _fit_component(X, w, fallback_scale):
    nj = w.sum()
    mu = X[w].mean(axis=0)
    diff = X[w] - mu
    cov = diff.T @ diff / nj
    return mu, regularize_cov(cov, fallback_scale)


def _general_from_labels(X, labels, k, fallback_scale):
    n, d = X.shape
    weights = np.bincount(labels, minlength=k) / n
    means = np.zeros((k, d))
    covs = np.tile(np.eye(d) * fallback_scale, (k, 1, 1))
    for j in range(k):
        w = labels == j
        if w.any():
            means[j], covs[j] = _fit_component(X, w, fallback_scale)
    return GeneralModel(weights, means, covs)


def _isotropic_from_labels(X, labels, k):
    n, d = X.shape
    means = np.zeros((k, d))
    for j in range(k):
        w = labels == j
        if w.any():
            means[j] = X[w].mean(axis=0)
    s2 = ((X - means[labels]) ** 2).sum() / (n * d)
    s2 = max(s2, RIDGE * np.trace(np.cov(X.T, bias=True).reshape(d, d)) / d)
    return GeneralModel(np.full(k, 1.0 / k), means, np.tile(s2 * np.eye(d), (k, 1, 1)))


def _generalized_once(X, k, max_iter, tol, rng, isotropic, fallback_scale):
    centers = _kmeanspp(X, k, rng)
    labels, _ = nearest_center(X, centers)
    if isotropic:
        model = _isotropic_from_labels(X, labels, k)
    else:
        model = _general_from_labels(X, labels, k, fallback_scale)
    trace = [ell_km(X, model)]
    for _ in range(max_iter):
        scores = component_scores(X, model)
        new_labels = np.argmin(scores, axis=1)
        if isotropic:
            model = _isotropic_from_labels(X, new_labels, k)
        else:
            new_model = _general_from_labels(X, new_labels, k, fallback_scale)
            # components that lost every point keep their shape with zero weight
            dead = new_model.weights == 0
            if dead.any():
                means = np.where(dead[:, None], model.means, new_model.means)
                covs = np.where(dead[:, None, None], model.covs, new_model.covs)
                new_model = GeneralModel(new_model.weights, means, covs)
            model = new_model
        obj = ell_km(X, model)
        prev = trace[-1]
        trace.append(obj)
        unchanged = np.array_equal(new_labels, labels)
        labels = new_labels
        if unchanged or prev - obj <= tol * abs(prev):
            break
    return model, labels, trace


def generalized_lloyd(
    data, k, restarts=10, max_iter=200, tol=1e-8, seed=0, isotropic=False
) -> GeneralModel:
    """Hard-assignment coordinate descent on the generalized k-means objective.

    Each point goes to the component with the smallest
    ``0.5 maha + 0.5 log det - log weight`` (ties to the lowest index); then
    weights, means and covariances are refitted from the hard assignment.
    ``isotropic=True`` restricts every covariance to a shared ``s^2 I`` and
    fixes equal weights, which reproduces ordinary k-means assignments.

    The returned model carries ``trace``: the objective after initialization
    and after every update.
    """
    X = as_points(data)
    n, d = X.shape
    _check_k(k, n)
    order = _canonical_order(X)
    Xc = X[order]
    fallback_scale = float(np.trace(np.cov(Xc.T, bias=True).reshape(d, d)) / d)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        run = _generalized_once(Xc, k, max_iter, tol, rng, isotropic, fallback_scale)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    model, labels_c, trace = best
    labels = np.empty(n, dtype=int)
    labels[order] = labels_c
    return GeneralModel(model.weights, model.means, model.covs, labels=labels, trace=tuple(trace))
