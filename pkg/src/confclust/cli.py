"""Command-line entry point: ``confclust {fit,select,plot}``.

Exit codes: 0 success, 1 pipeline failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .dataset import load_csv, split_half, write_csv
from .geometry import assign_points, connected_components, estimate_volume
from .io import dump_json, load_artifact, read_json
from .pipeline import METHODS, fit_split
from .plot import render_svg
from .selection import bootstrap_test_k, corrected_alpha, select_k_min_volume, volume_curve


def _alpha(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {value}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _default_seed():
    env = os.environ.get("CONFCLUST_SEED")
    return int(env) if env else 0


def _common(p):
    p.add_argument("--input", required=True, type=Path, help="CSV file, one point per row")
    p.add_argument("--header", action="store_true", help="the CSV has a header row")
    p.add_argument("--method", choices=METHODS, default="kspheres")
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--knn", type=_positive_int, default=32, help="neighbour count for levelset")
    p.add_argument("--level-quantile", type=float, default=None,
                   help="levelset level as a quantile of fitting-half densities (default 1 - alpha)")
    p.add_argument("--adaptive", action="store_true", help="levelset: radius M / sqrt(density)")
    p.add_argument("--restarts", type=_positive_int, default=5)
    p.add_argument("--mc-samples", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out-dir", type=Path, default=Path("confclust-out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one model and write its artifacts")
    _common(fit)
    fit.add_argument("--k", type=_positive_int, default=None,
                     help="number of centers (for levelset: defaults to --knn)")
    fit.add_argument("--rule", choices=("geometric", "sample"), default="sample",
                     help="how components are connected into clusters")

    select = sub.add_parser("select", help="volume curve over a k range and the bootstrap test")
    _common(select)
    select.add_argument("--k-min", type=_positive_int, default=1)
    select.add_argument("--k-max", type=_positive_int, default=10)
    select.add_argument("--bootstrap", type=int, default=0, metavar="B",
                        help="bootstrap replicates for the test (0 skips it, else >= 100)")
    select.add_argument("--corrected", action="store_true",
                        help="use alpha / (number of candidates) to keep coverage after selection")

    plot = sub.add_parser("plot", help="render artifacts as SVG (2-D data only)")
    plot.add_argument("--artifacts", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)
    return parser


def _options(args):
    return {"restarts": args.restarts, "level_quantile": args.level_quantile, "adaptive": args.adaptive}


def _fit_and_write(data, k, alpha, args, rule="sample"):
    """Fit one model, cluster and measure it, and write the per-fit artifacts."""
    split = split_half(data, args.seed)
    fitted = fit_split(split, args.method, k, alpha, seed=args.seed, **_options(args))
    pset = fitted.pset
    if rule == "sample":
        clustering = connected_components(pset, split.calib_half, "sample_based")
    else:
        clustering = connected_components(pset, rule="geometric")
    clustering = clustering.with_points(assign_points(pset, clustering, data))
    volume = estimate_volume(pset, args.mc_samples, args.seed)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    meta = {"method": args.method, "alpha": alpha, "k": int(k), "seed": args.seed}
    dump_json({**fitted.model.to_dict(), **meta}, out / "model.json")
    dump_json(pset.to_dict(), out / "prediction_set.json")
    dump_json(clustering.to_dict(), out / "clustering.json")
    dump_json(volume.to_dict(), out / "volume.json")
    write_csv(data, out / "data.csv")  # header-free copy for the plot command
    return pset, clustering, volume


def cmd_fit(args) -> int:
    data = load_csv(args.input, has_header=args.header)
    k = args.k if args.k is not None else (args.knn if args.method == "levelset" else None)
    if k is None:
        raise ValueError("--k is required for this method")
    pset, clustering, volume = _fit_and_write(data, k, args.alpha, args, args.rule)
    print(f"{args.method}: k={k} clusters={clustering.r} volume={volume.value:.6g} "
          f"(se {volume.std_error:.2g}) threshold={pset.threshold:.6g}")
    return 0


def cmd_select(args) -> int:
    if args.k_max < args.k_min:
        raise _UsageError("--k-max must be >= --k-min")
    if 0 < args.bootstrap < 100:
        raise _UsageError("--bootstrap must be 0 or at least 100")
    data = load_csv(args.input, has_header=args.header)
    ks = list(range(args.k_min, args.k_max + 1))
    alpha = corrected_alpha(args.alpha, len(ks)) if args.corrected else args.alpha
    opts = _options(args)
    if args.bootstrap:
        decision = bootstrap_test_k(data, ks, alpha, args.bootstrap, args.seed, args.method,
                                    args.mc_samples, **opts)
        curve, test = decision.curve, decision
    else:
        curve = volume_curve(data, ks, alpha, args.method, args.mc_samples, args.seed, **opts)
        test = None
    k_min = select_k_min_volume(curve)

    # the minimum-volume fit, so that plot can draw the full triptych
    _fit_and_write(data, k_min, alpha, args)
    out = args.out_dir
    dump_json(curve.to_dict(), out / "curve.json")
    dump_json(
        {
            "method": args.method,
            "alpha": alpha,
            "k_min_volume": k_min,
            "test": None if test is None else test.to_dict(),
        },
        out / "decision.json",
    )
    print(f"{'k':>4} {'S_k':>12} {'stderr':>10} {'rejected':>9}")
    for k, v, se in zip(curve.ks, curve.volumes, curve.std_errors):
        rej = "-" if test is None else ("yes" if test.rejected.get(int(k)) else "no")
        mark = " <" if k == k_min else ""
        print(f"{int(k):>4} {v:>12.6g} {se:>10.3g} {rej:>9}{mark}")
    print(f"minimum-volume k: {k_min}")
    if test is not None:
        print(f"bootstrap test k: {test.k_hat}")
    return 0


def cmd_plot(args) -> int:
    art = args.artifacts
    points = load_csv(art / "data.csv").points
    if points.shape[1] != 2:
        raise ValueError(f"plots are 2-D only; the data has d={points.shape[1]}")
    pset = load_artifact(art / "prediction_set.json") if (art / "prediction_set.json").exists() else None
    clustering = load_artifact(art / "clustering.json") if (art / "clustering.json").exists() else None
    volume = read_json(art / "volume.json")["value"] if (art / "volume.json").exists() else None
    curve = None
    if (art / "curve.json").exists():
        c = load_artifact(art / "curve.json")
        curve = (c.ks, c.volumes)
    if pset is not None and not pset.nonempty.any():
        print("warning: the prediction set is empty; plotting the data only", file=sys.stderr)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(render_svg(points, pset, clustering, volume, curve))
    return 0


class _UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"fit": cmd_fit, "select": cmd_select, "plot": cmd_plot}[args.command]
    try:
        return handler(args)
    except _UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"confclust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
