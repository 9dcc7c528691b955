"""Hand-written SVG panels for 2-D results: data, set components, volume curve."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .conformal import PredictionSet
from .geometry import OUTSIDE, Clustering, assign_points

__all__ = ["render_svg"]

PANEL = 360
MARGIN = 30
PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
]


def _color(cluster_id):
    if cluster_id == OUTSIDE:
        return "#999999"
    return PALETTE[int(cluster_id) % len(PALETTE)]


def _fmt(x):
    return f"{float(x):.6g}"


def _extent(points, pset):
    lo, hi = points.min(axis=0), points.max(axis=0)
    if pset is not None:
        box = pset.bounding_box()
        if box is not None and np.all(np.isfinite(box[0])) and np.all(np.isfinite(box[1])):
            lo, hi = np.minimum(lo, box[0]), np.maximum(hi, box[1])
    span = float(max(hi - lo)) or 1.0
    mid = (lo + hi) / 2
    return mid - 0.55 * span, span * 1.1


def _data_group(x0, origin, span):
    """Open a group that maps data coordinates into a square panel (y up)."""
    s = (PANEL - 2 * MARGIN) / span
    tx = x0 + MARGIN - origin[0] * s
    ty = PANEL - MARGIN + origin[1] * s
    return f'<g transform="translate({_fmt(tx)},{_fmt(ty)}) scale({_fmt(s)},{_fmt(-s)})">'


def _scatter(points, labels, dot):
    out = []
    for i, (x, y) in enumerate(points):
        color = _color(labels[i]) if labels is not None else "#333333"
        out.append(f'<circle class="point" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(dot)}" fill="{color}"/>')
    return out


def _components(pset, clustering):
    out = []
    style = 'fill-opacity="0.15" stroke-width="1.5" vector-effect="non-scaling-stroke"'
    for j in np.flatnonzero(pset.nonempty):
        color = _color(clustering.component_of[j]) if clustering is not None else "#1f77b4"
        cx, cy = pset.centers[j]
        r = pset.radii[j]
        if pset.is_ball:
            out.append(
                f'<circle class="component" data-index="{j}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
                f'r="{float(r)!r}" fill="{color}" stroke="{color}" {style}/>'
            )
        else:
            evals, evecs = np.linalg.eigh(pset.shapes[j])
            angle = math.degrees(math.atan2(evecs[1, 1], evecs[0, 1]))
            rx, ry = r * math.sqrt(evals[1]), r * math.sqrt(evals[0])
            out.append(
                f'<ellipse class="component" data-index="{j}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
                f'rx="{float(rx)!r}" ry="{float(ry)!r}" transform="rotate({_fmt(angle)} {_fmt(cx)} {_fmt(cy)})" '
                f'fill="{color}" stroke="{color}" {style}/>'
            )
    return out


def _curve_panel(x0, ks, volumes, selected):
    ks = np.asarray(ks, dtype=float)
    vols = np.asarray(volumes, dtype=float)
    w = PANEL - 2 * MARGIN
    kx = (ks - ks.min()) / ((ks.max() - ks.min()) or 1.0)
    vy = (vols - vols.min()) / ((vols.max() - vols.min()) or 1.0)
    px = x0 + MARGIN + kx * w
    py = PANEL - MARGIN - vy * w
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    out = [
        f'<polyline class="volume-curve" points="{pts}" fill="none" stroke="#333" stroke-width="1.5"/>',
        f'<text x="{x0 + MARGIN}" y="{PANEL - 8}" font-size="11">k versus volume</text>',
    ]
    for a, b, k in zip(px, py, ks):
        fill = "#d62728" if selected is not None and k == selected else "#333"
        out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="3" fill="{fill}"/>')
    return out


def render_svg(
    points,
    pset: PredictionSet | None = None,
    clustering: Clustering | None = None,
    volume: float | None = None,
    curve=None,
) -> str:
    """Render the data panel, the set panel and (if ``curve`` is given) the volume curve.

    ``curve`` is a pair ``(ks, volumes)``. Points are coloured by the
    cluster of the component containing them. Set components are drawn in data
    coordinates, so a circle's ``r`` attribute is the ball radius itself.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("plots are 2-D only; the data must have exactly two columns")
    origin, span = _extent(points, pset)
    dot = span * 0.004
    labels = None
    if clustering is not None and pset is not None:
        # recompute so the colours fit whichever points are drawn
        labels = assign_points(pset, clustering, points)
    panels = []

    panels.append(_data_group(0, origin, span))
    panels += _scatter(points, None, dot)
    panels.append("</g>")
    panels.append(f'<text x="{MARGIN}" y="{PANEL - 8}" font-size="11">data (n={len(points)})</text>')

    x0 = PANEL
    if curve is not None:
        ks, vols = curve
        panels += _curve_panel(x0, ks, vols, ks[int(np.argmin(vols))])
        x0 += PANEL

    panels.append(_data_group(x0, origin, span))
    if pset is not None:
        panels += _components(pset, clustering)
    panels += _scatter(points, labels, dot)
    panels.append("</g>")
    if pset is not None:
        legend = f"alpha={pset.alpha:g}"
        if volume is not None:
            legend += f"  volume={volume:.4g}"
        if clustering is not None:
            legend += f"  clusters={clustering.r}"
        panels.append(f'<text x="{x0 + MARGIN}" y="{PANEL - 8}" font-size="11">{escape(legend)}</text>')
    width = x0 + PANEL
    body = "\n".join(panels)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL}" '
        f'viewBox="0 0 {width} {PANEL}">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
    )
