"""Density level sets without the density: kNN balls around high-density points.

Points whose kNN density reaches the level t are kept; the conformal radius
is the calibration quantile of distances to the nearest kept point. The
union of balls follows the crescents' shape and its components are the
clusters.
"""

import numpy as np

from _common import save_svg
from confclust import connected_components, gen_crescents, split_half
from confclust.dataset import crescent_labels
from confclust.geometry import assign_points
from confclust.levelset import level_set_spheres
from confclust.plot import render_svg

data = gen_crescents(4, 1000, radius=1.0, thickness=0.15, seed=0)
fresh = gen_crescents(4, 1000, radius=1.0, thickness=0.15, seed=1)
split = split_half(data, seed=0)

for adaptive in (False, True):
    pset = level_set_spheres(split, k_nn=32, alpha=0.1, level_quantile=0.9, adaptive=adaptive)
    clustering = connected_components(pset, split.calib_half)
    labels = assign_points(pset, clustering, fresh)
    print(f"adaptive={adaptive}: {len(pset.centers)} balls, M={pset.threshold:.3f}, "
          f"{clustering.r} clusters, fresh coverage {np.mean(labels >= 0):.3f}")
    truth = crescent_labels(4, 1000)
    for c in np.unique(labels[labels >= 0]):
        arcs = np.bincount(truth[labels == c], minlength=4)
        print(f"  cluster {c:4d}: points per arc {arcs.tolist()}")
    save_svg(f"levelset_adaptive_{adaptive}.svg",
             render_svg(fresh.points, pset, clustering.with_points(labels)))
