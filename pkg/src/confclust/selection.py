"""Choosing tuning parameters: minimum estimated volume and the bootstrap test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import as_points, split_half
from .geometry import estimate_volume, proposal_box
from .pipeline import fit_split

__all__ = [
    "VolumeCurve",
    "TestDecision",
    "volume_curve",
    "bootstrap_curves",
    "select_k_min_volume",
    "decide_from_curves",
    "bootstrap_test_k",
    "corrected_alpha",
]


@dataclass(frozen=True)
class VolumeCurve:
    ks: np.ndarray
    volumes: np.ndarray
    std_errors: np.ndarray
    bootstrap_curves: np.ndarray | None = None
    param: str = "k"

    def to_dict(self) -> dict:
        boot = None if self.bootstrap_curves is None else self.bootstrap_curves.tolist()
        return {
            "param": self.param,
            "ks": self.ks.tolist(),
            "volumes": self.volumes.tolist(),
            "std_errors": self.std_errors.tolist(),
            "bootstrap_curves": boot,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VolumeCurve":
        boot = doc.get("bootstrap_curves")
        return cls(
            np.asarray(doc["ks"]),
            np.asarray(doc["volumes"], dtype=float),
            np.asarray(doc["std_errors"], dtype=float),
            None if boot is None else np.asarray(boot, dtype=float),
            doc.get("param", "k"),
        )


@dataclass(frozen=True)
class TestDecision:
    """Outcome of the bootstrap test.

    ``intervals[(t, k)]`` is the confidence interval for the expected volume
    difference ``nu_t - nu_k``; ``rejected[k]`` says whether every such
    interval for ``t < k`` lies strictly above zero.
    """

    __test__ = False  # not a pytest class

    k_hat: int
    intervals: dict
    rejected: dict
    curve: VolumeCurve | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "k_hat": int(self.k_hat),
            "intervals": [
                {"t": int(t), "k": int(k), "lower": lo, "upper": hi}
                for (t, k), (lo, hi) in sorted(self.intervals.items())
            ],
            "rejected": {str(k): bool(v) for k, v in sorted(self.rejected.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TestDecision":
        intervals = {(e["t"], e["k"]): (e["lower"], e["upper"]) for e in doc["intervals"]}
        rejected = {int(k): v for k, v in doc["rejected"].items()}
        return cls(int(doc["k_hat"]), intervals, rejected)


def _curve_values(data, ks, alpha, method, mc_samples, seed, **options):
    split = split_half(data, seed)
    sets = [fit_split(split, method, int(k), alpha, seed=seed, **options).pset for k in ks]
    boxes = [b for b in map(proposal_box, sets) if b is not None]
    if not boxes:
        return np.zeros(len(ks)), np.zeros(len(ks))
    box = (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))
    est = [estimate_volume(s, mc_samples, seed, box=box) for s in sets]
    return np.array([e.value for e in est]), np.array([e.std_error for e in est])


def volume_curve(data, ks, alpha, method="kspheres", mc_samples=20_000, seed=0, **options) -> VolumeCurve:
    """Estimated set volume for every candidate tuning parameter in ``ks``.

    All candidates share one data split, one proposal box (the union of
    their bounding boxes) and one Monte Carlo stream, so differences between
    candidates are not swamped by sampling noise. ``options`` pass through to
    :func:`confclust.pipeline.fit_split`.
    """
    ks = np.asarray(list(ks))
    if ks.size == 0:
        raise ValueError("ks must be nonempty")
    vols, ses = _curve_values(data, ks, alpha, method, mc_samples, seed, **options)
    return VolumeCurve(ks, vols, ses, param="k_nn" if method == "levelset" else "k")


def bootstrap_curves(data, ks, alpha, B, method="kspheres", mc_samples=20_000, seed=0, **options) -> np.ndarray:
    """``(B, len(ks))`` volume curves on rows resampled with replacement.

    Each replicate draws ``n`` rows and its own split and Monte Carlo seed.
    """
    X = as_points(data)
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    seeds = np.random.SeedSequence(seed).generate_state(B)
    out = np.empty((B, len(ks)))
    for j in range(B):
        idx = rng.integers(n, size=n)
        out[j], _ = _curve_values(X[idx], ks, alpha, method, mc_samples, int(seeds[j]), **options)
    return out


def select_k_min_volume(curve: VolumeCurve):
    """Smallest candidate attaining the minimum volume."""
    if len(curve.ks) == 0:
        raise ValueError("empty curve")
    return curve.ks[int(np.argmin(curve.volumes))].item()


def _upper_order_stat(values, level):
    v = np.sort(values)
    rank = min(max(1, math.ceil(round(level * v.size, 9))), v.size)
    return float(v[rank - 1])


def decide_from_curves(ks, volumes, boot, n, alpha) -> TestDecision:
    """Downward scan over ``ks`` with Bonferroni-corrected bootstrap intervals.

    For candidate ``k`` with ``m`` smaller candidates ``t``, the interval for
    ``nu_t - nu_k`` is ``(S_t - S_k) +/- q / sqrt(n)`` where ``q`` is the
    ``1 - alpha / m`` quantile of ``sqrt(n) |S*_t - S*_k - (S_t - S_k)|``
    over the bootstrap curves ``S*``. The first ``k`` (from the largest
    down) whose intervals all sit strictly above zero is selected; if none
    does, the smallest candidate is.
    """
    ks = list(np.asarray(ks).tolist())
    S = np.asarray(volumes, dtype=float)
    boot = np.asarray(boot, dtype=float)
    root_n = math.sqrt(n)
    intervals, rejected = {}, {}
    k_hat = None
    for b in range(len(ks) - 1, 0, -1):
        level = 1 - alpha / b
        lows = []
        for a in range(b):
            diff = S[a] - S[b]
            stat = root_n * np.abs(boot[:, a] - boot[:, b] - diff)
            half = _upper_order_stat(stat, level) / root_n
            intervals[(ks[a], ks[b])] = (diff - half, diff + half)
            lows.append(diff - half)
        rejected[ks[b]] = bool(min(lows) > 0)
        if rejected[ks[b]] and k_hat is None:
            k_hat = ks[b]
    rejected[ks[0]] = False
    return TestDecision(ks[0] if k_hat is None else k_hat, intervals, rejected)


def bootstrap_test_k(
    data, ks, alpha=0.1, B=100, seed=0, method="kspheres", mc_samples=20_000, **options
) -> TestDecision:
    """Choose ``k`` by the bootstrap test on estimated volumes.

    ``ks`` must be strictly increasing (typically ``1..K``); ``B`` is the
    number of bootstrap replicates and must be at least 100.
    """
    if B < 100:
        raise ValueError(f"B must be at least 100, got {B}")
    ks = np.asarray(list(ks))
    if ks.size == 0 or np.any(np.diff(ks) <= 0):
        raise ValueError("ks must be nonempty and strictly increasing")
    curve = volume_curve(data, ks, alpha, method, mc_samples, seed, **options)
    boot = bootstrap_curves(data, ks, alpha, B, method, mc_samples, seed + 1, **options)
    curve = VolumeCurve(curve.ks, curve.volumes, curve.std_errors, boot, curve.param)
    decision = decide_from_curves(ks, curve.volumes, boot, as_points(data).shape[0], alpha)
    return TestDecision(decision.k_hat, decision.intervals, decision.rejected, curve)


def corrected_alpha(alpha: float, K_n: int) -> float:
    """Per-candidate level ``alpha / K_n`` that keeps coverage after selecting among ``K_n`` candidates."""
    if K_n < 1:
        raise ValueError("K_n must be >= 1")
    return alpha / K_n
