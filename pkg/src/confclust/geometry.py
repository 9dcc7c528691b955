"""Membership, Monte Carlo volume and connected components of a :class:`PredictionSet`."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import PredictionSet
from .dataset import as_points

__all__ = [
    "OUTSIDE",
    "VolumeEstimate",
    "Clustering",
    "UnionFind",
    "membership",
    "estimate_volume",
    "proposal_box",
    "overlap_graph",
    "connected_components",
    "assign_points",
]

OUTSIDE = -1
BOX_INFLATION = 0.01
_BATCH = 1 << 15


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int
    proposal_box: tuple | None

    def to_dict(self) -> dict:
        box = None if self.proposal_box is None else [list(map(float, b)) for b in self.proposal_box]
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "proposal_box": box,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VolumeEstimate":
        box = doc.get("proposal_box")
        if box is not None:
            box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        return cls(float(doc["value"]), float(doc["std_error"]), int(doc["n_samples"]),
                   int(doc["seed"]), box)


@dataclass(frozen=True)
class Clustering:
    """Grouping of set components into clusters.

    ``component_of[j]`` is the cluster id of component ``j`` (``OUTSIDE`` for
    empty components); ids are the smallest component index in the cluster.
    ``point_labels`` holds one id (or ``OUTSIDE``) per labelled point.
    """

    component_of: np.ndarray
    r: int
    point_labels: np.ndarray | None = None

    def with_points(self, labels) -> "Clustering":
        return Clustering(self.component_of, self.r, np.asarray(labels, dtype=int))

    def to_dict(self) -> dict:
        labels = None
        if self.point_labels is not None:
            labels = ["outside" if v == OUTSIDE else int(v) for v in self.point_labels]
        return {
            "r": self.r,
            "component_of": [None if v == OUTSIDE else int(v) for v in self.component_of],
            "point_labels": labels,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Clustering":
        comp = np.array([OUTSIDE if v is None else v for v in doc["component_of"]], dtype=int)
        labels = doc.get("point_labels")
        if labels is not None:
            labels = np.array([OUTSIDE if v == "outside" else v for v in labels], dtype=int)
        return cls(comp, int(doc["r"]), labels)


class UnionFind:
    """Disjoint sets over ``0..n-1`` whose roots are always the smallest member."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo


def membership(pset: PredictionSet, y) -> np.ndarray | bool:
    """Whether ``y`` (one point or an ``(m, d)`` batch) lies in the set."""
    y_arr = np.asarray(y, dtype=float)
    if y_arr.ndim <= 1:
        return bool(pset.contains(y_arr.reshape(1, -1))[0])
    return pset.contains(y_arr)


def proposal_box(pset: PredictionSet):
    """Bounding box of the nonempty components widened by 1% per side, or ``None``."""
    box = pset.bounding_box()
    if box is None:
        return None
    low, high = box
    if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
        raise ValueError("prediction set is unbounded (infinite threshold); volume is infinite")
    mid, half = (low + high) / 2, (high - low) / 2 * (1 + BOX_INFLATION)
    return mid - half, mid + half


def estimate_volume(pset: PredictionSet, n_samples: int = 100_000, seed: int = 0, box=None) -> VolumeEstimate:
    """Hit-or-miss estimate of the Lebesgue measure of the set.

    Draws are uniform on ``box`` (default: :func:`proposal_box`), so the
    importance weight ``1/g`` is the box volume and the standard error is
    binomial. A caller-supplied box must contain the set; sharing one box and
    seed across several sets gives common random numbers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if not pset.nonempty.any():
        return VolumeEstimate(0.0, 0.0, int(n_samples), int(seed), None)
    if box is None:
        box = proposal_box(pset)
    low, high = (np.asarray(b, dtype=float) for b in box)
    box_volume = float(np.prod(high - low))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_samples:
        m = min(_BATCH, n_samples - done)
        z = low + (high - low) * rng.random((m, pset.d))
        hits += int(pset.contains(z).sum())
        done += m
    p = hits / n_samples
    return VolumeEstimate(
        value=box_volume * p,
        std_error=box_volume * float(np.sqrt(p * (1 - p) / n_samples)),
        n_samples=int(n_samples),
        seed=int(seed),
        proposal_box=(low, high),
    )


def _segment_overlap(pset: PredictionSet, i: int, j: int) -> bool:
    ci, cj = pset.centers[i], pset.centers[j]
    ri, rj = pset.radii[i], pset.radii[j]
    delta = cj - ci
    if pset.is_ball:
        return bool(np.sqrt(delta @ delta) <= ri + rj)
    si, sj = pset.shapes[i], pset.shapes[j]
    # bounding balls of radius r * sqrt(largest eigenvalue) must meet first
    bi = ri * np.sqrt(np.linalg.eigvalsh(si)[-1])
    bj = rj * np.sqrt(np.linalg.eigvalsh(sj)[-1])
    if np.sqrt(delta @ delta) > bi + bj:
        return False
    # on p(s) = ci + s delta the scaled distances are s * a_i and (1 - s) * a_j;
    # the segment meets both iff 1/a_i + 1/a_j >= 1
    ai = np.sqrt(delta @ np.linalg.solve(si, delta)) / ri
    aj = np.sqrt(delta @ np.linalg.solve(sj, delta)) / rj
    if ai == 0 or aj == 0:
        return True
    return bool(1 / ai + 1 / aj >= 1)


def overlap_graph(pset: PredictionSet, samples=None, rule: str | None = None) -> list[tuple[int, int]]:
    """Edges between components judged connected.

    ``geometric``: balls touch when the center distance is at most the sum of
    radii; ellipsoids are tested along the segment joining their centers.
    ``sample_based``: two components are connected when some sample lies in
    both.
    """
    rule = rule or ("sample_based" if samples is not None else "geometric")
    live = np.flatnonzero(pset.nonempty)
    if rule == "geometric":
        return [
            (int(i), int(j))
            for a, i in enumerate(live)
            for j in live[a + 1 :]
            if _segment_overlap(pset, i, j)
        ]
    if rule in ("sample_based", "sample"):
        if samples is None:
            raise ValueError("the sample_based rule needs samples")
        inside = pset.component_membership(as_points(samples))
        edges = set()
        for row in inside[inside.sum(axis=1) >= 2]:
            idx = np.flatnonzero(row)
            edges.update((int(idx[0]), int(b)) for b in idx[1:])
        return sorted(edges)
    raise ValueError(f"unknown rule {rule!r}")


def connected_components(pset: PredictionSet, samples=None, rule: str | None = None) -> Clustering:
    """Cluster the set's components by union-find over :func:`overlap_graph`.

    When ``samples`` are given the result also labels them with
    :func:`assign_points`.
    """
    uf = UnionFind(pset.k)
    for a, b in overlap_graph(pset, samples, rule):
        uf.union(a, b)
    comp = np.array([uf.find(j) for j in range(pset.k)], dtype=int)
    comp[~pset.nonempty] = OUTSIDE
    r = len(set(comp[comp != OUTSIDE].tolist()))
    clustering = Clustering(comp, r)
    if samples is not None:
        clustering = clustering.with_points(assign_points(pset, clustering, samples))
    return clustering


def assign_points(pset: PredictionSet, clustering: Clustering, data) -> np.ndarray:
    """Cluster id of each point's nearest containing component, or ``OUTSIDE``.

    Nearness is the component distance relative to the component radius, so
    a point inside several components goes to the one it is deepest in.
    """
    dist = pset.component_distances(as_points(data))
    inside = (dist <= pset.radii) & pset.nonempty
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(inside, dist / pset.radii, np.inf)
    best = np.argmin(rel, axis=1)
    return np.where(inside.any(axis=1), clustering.component_of[best], OUTSIDE)
