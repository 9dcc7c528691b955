"""Choosing k by the smallest prediction set.

Too few balls must be wide to reach the calibration quantile, too many
balls each add area. The estimated area over k falls and then rises; its
minimum sits at the true number of blobs.
"""

from _common import save_svg
from confclust import connected_components, fit_data, gen_blobs, select_k_min_volume, volume_curve
from confclust.plot import render_svg

centers = [[0, 0], [8, 0], [0, 8], [8, 8]]
data = gen_blobs(4, 500, centers, 1.0, noise_n=80, noise_box=([-3, -3], [11, 11]), seed=0)

curve = volume_curve(data, range(1, 13), alpha=0.1, mc_samples=20_000, seed=0)
for k, v, se in zip(curve.ks, curve.volumes, curve.std_errors):
    print(f"k={k:2d}  area={v:8.2f}  (se {se:.2f})")
k_hat = select_k_min_volume(curve)
print(f"minimum-volume k: {k_hat}")

fitted = fit_data(data, "kspheres", k_hat, 0.1, seed=0)
clustering = connected_components(fitted.pset, fitted.split.calib_half)
save_svg("min_volume_k.svg", render_svg(data.points, fitted.pset, clustering,
                                        float(curve.volumes.min()), (curve.ks, curve.volumes)))
