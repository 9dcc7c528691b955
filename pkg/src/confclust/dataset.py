"""Data containers, CSV ingestion, the random half split and synthetic generators.

All randomness goes through :func:`numpy.random.default_rng`, i.e. the PCG64
bit generator seeded with a single integer, so results are reproducible
across platforms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Dataset",
    "SplitPair",
    "as_points",
    "load_csv",
    "write_csv",
    "split_half",
    "gen_blobs",
    "gen_crescents",
    "crescent_labels",
]


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` matrix of finite observations, one row per point."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"points must be a 2-D array with d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain NaN or infinite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def take(self, idx) -> "Dataset":
        return Dataset(self.points[np.asarray(idx)])


ArrayLike = Union[Dataset, np.ndarray, Sequence]


def as_points(data: ArrayLike) -> np.ndarray:
    """Return ``data`` as a float ``(n, d)`` array (1-D input is a single column)."""
    if isinstance(data, Dataset):
        return data.points
    pts = np.asarray(data, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-D array of points, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class SplitPair:
    fit_half: Dataset
    calib_half: Dataset
    seed: int
    fit_idx: np.ndarray
    calib_idx: np.ndarray


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read a comma-separated numeric matrix.

    Rows are points and columns coordinates. LF and CRLF line endings are both
    accepted. Blank lines are skipped.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: cannot parse {cell!r} as a number at row {lineno}, column {col}"
                    ) from None
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=float))


def write_csv(data: ArrayLike, path, header: Sequence[str] | None = None) -> None:
    pts = as_points(data)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def split_half(data: ArrayLike, seed: int) -> SplitPair:
    """Uniformly random split into a fitting half and a calibration half.

    For odd ``n`` the fitting half receives the extra point.
    """
    pts = as_points(data)
    n = pts.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 points to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_fit = math.ceil(n / 2)
    fit_idx, calib_idx = perm[:n_fit], perm[n_fit:]
    return SplitPair(Dataset(pts[fit_idx]), Dataset(pts[calib_idx]), seed, fit_idx, calib_idx)


def gen_blobs(k, per_blob, centers, sigma, noise_n=0, noise_box=None, seed=0) -> Dataset:
    """Isotropic Gaussian blobs plus optional uniform background noise.

    Parameters
    ----------
    k : int
        Number of blobs; must equal ``len(centers)``.
    per_blob : int
        Draws per blob.
    centers : array-like of shape (k, d)
    sigma : float
        Common standard deviation of every coordinate.
    noise_n : int
        Number of uniform background points.
    noise_box : pair of array-likes ``(low, high)``
        Axis-aligned box for the background noise.
    seed : int
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        raise ValueError("centers must be nonempty")
    if k != centers.shape[0]:
        raise ValueError(f"k={k} does not match {centers.shape[0]} centers")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d = centers.shape[1]
    rng = np.random.default_rng(seed)
    blobs = centers[:, None, :] + sigma * rng.standard_normal((k, per_blob, d))
    pts = blobs.reshape(-1, d)
    if noise_n > 0:
        if noise_box is None:
            raise ValueError("noise_box is required when noise_n > 0")
        low, high = (np.broadcast_to(np.asarray(b, dtype=float), (d,)) for b in noise_box)
        if np.any(high - low <= 0):
            raise ValueError("noise_box has a side of zero or negative length")
        pts = np.vstack([pts, rng.uniform(low, high, size=(noise_n, d))])
    return Dataset(pts)


def gen_crescents(arcs, per_arc, radius=1.0, thickness=0.1, seed=0) -> Dataset:
    """Points on noisy half-circle arcs laid out on a square grid.

    Arc ``j`` is centred at grid cell ``j`` (spacing ``4 * radius``) and its
    opening is rotated by ``j * pi / 2``. The angular position along the arc
    follows a Beta(2, 2) law, so points thin out towards the tips, and the
    radial offset is uniform on ``[-thickness, thickness]``.
    """
    if arcs < 1 or per_arc < 1:
        raise ValueError("arcs and per_arc must be >= 1")
    if not (radius > 0 and thickness > 0):
        raise ValueError("radius and thickness must be positive")
    rng = np.random.default_rng(seed)
    cols = math.ceil(math.sqrt(arcs))
    out = []
    for j in range(arcs):
        origin = 4.0 * radius * np.array([j % cols, j // cols], dtype=float)
        start = j * np.pi / 2
        theta = start + np.pi * rng.beta(2.0, 2.0, size=per_arc)
        rad = radius + rng.uniform(-thickness, thickness, size=per_arc)
        out.append(origin + rad[:, None] * np.column_stack([np.cos(theta), np.sin(theta)]))
    return Dataset(np.vstack(out))


def crescent_labels(arcs, per_arc) -> np.ndarray:
    """Generating-arc index of every row produced by :func:`gen_crescents`."""
    return np.repeat(np.arange(arcs), per_arc)
