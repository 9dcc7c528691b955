"""The distribution-free guarantee, checked by simulation.

Whatever the clustering method, a fresh draw lands inside the split
conformal set with probability at least 1 - alpha. Here each method is
refitted on 300 independent datasets.
"""

import numpy as np

from confclust import fit_data
from confclust.pipeline import METHODS

centers = np.array([[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]])
T, n, alpha = 300, 200, 0.1
for method in METHODS:
    k = 10 if method == "levelset" else 3
    hits = 0
    for trial in range(T):
        rng = np.random.default_rng(trial)
        X = centers[rng.integers(3, size=n + 1)] + rng.normal(size=(n + 1, 2))
        hits += bool(fit_data(X[:n], method, k, alpha, seed=trial, restarts=2).pset.contains(X[n:])[0])
    print(f"{method:18s} coverage {hits / T:.3f} (target {1 - alpha})")
