"""Six k-means centers on two blobs: the conformal balls merge into two clusters.

Ordinary k-means with k=6 cuts each blob into Voronoi pieces. Growing a ball
of the conformal radius around every center and taking connected components
undoes the over-splitting.
"""

import numpy as np

from _common import save_svg
from confclust import connected_components, estimate_volume, gen_blobs, k_spheres, lloyd, split_half
from confclust.geometry import assign_points
from confclust.plot import render_svg

data = gen_blobs(2, 200, [[0, 0], [8, 0]], sigma=1.0, seed=1)
split = split_half(data, seed=0)

model = lloyd(split.fit_half, 6, seed=0)
pset = k_spheres(model, split.calib_half, alpha=0.1)
print("centers:\n", np.round(model.centers, 2))
print(f"common radius t_alpha = {pset.threshold:.3f}")

clustering = connected_components(pset, split.calib_half)
print(f"6 balls -> {clustering.r} clusters; component -> cluster {clustering.component_of.tolist()}")

labels = assign_points(pset, clustering, data)
print(f"fraction of all points inside the set: {np.mean(labels >= 0):.3f}")

vol = estimate_volume(pset, 100_000, seed=0)
print(f"set area {vol.value:.2f} +/- {vol.std_error:.2f}")
save_svg("kspheres_two_blobs.svg", render_svg(data.points, pset, clustering.with_points(labels), vol.value))
