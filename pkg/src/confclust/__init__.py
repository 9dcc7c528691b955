"""Conformal prediction sets from clusterings: unions of balls and ellipsoids."""

from .conformal import (
    PredictionSet,
    ResidualFn,
    conformal_quantile,
    full_conformal_pvalue,
    k_ellipsoids,
    k_spheres,
    split_conformal,
)
from .dataset import Dataset, SplitPair, gen_blobs, gen_crescents, load_csv, split_half, write_csv
from .geometry import (
    Clustering,
    VolumeEstimate,
    assign_points,
    connected_components,
    estimate_volume,
    membership,
)
from .gmm import ell_gm, em_fit
from .kmeans import GeneralModel, SphereModel, ell_km, generalized_lloyd, lloyd, within_ss
from .levelset import KnnDensity, knn_density, level_from_quantile, level_set_spheres
from .maxmix import ell, estimate_Z, maxmix_unnorm
from .pipeline import METHODS, fit_data, fit_split
from .selection import (
    TestDecision,
    VolumeCurve,
    bootstrap_test_k,
    corrected_alpha,
    select_k_min_volume,
    volume_curve,
)

__version__ = "0.1.0"
