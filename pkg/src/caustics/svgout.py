"""Deterministic SVG emission for curves and their derived sets."""

from __future__ import annotations

import numpy as np

from .curves import SampledCurve
from .equidistants import EquidistantSet
from .errors import RenderError

PALETTE = ("#1a1a1a", "#b2222d", "#1f6fb2", "#2e8b57", "#7b4fb2", "#b28014")


def _f(v) -> str:
    return f"{float(v):.6f}"


def _layer_geometry(obj):
    """Normalize a layer into (list of (points, closed), marker points)."""
    if isinstance(obj, EquidistantSet):
        if obj.degenerate:
            return [], [tuple(obj.degenerate_point)]
        polys = [(br.points, br.cyclic) for br in obj.branches]
        marks = [tuple(ev.location) for ev in obj.events
                 if ev.kind == "cusp" and not np.any(np.isnan(ev.location))]
        return polys, marks
    if isinstance(obj, SampledCurve):
        return [(obj.points, True)], []
    pts = np.asarray(obj, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise RenderError("layer must be an EquidistantSet, a SampledCurve "
                          "or an (n, 2) point array")
    return [(pts, False)], []


def render_svg(layers, path, width=640) -> None:
    """Render layered point sets to an SVG file.

    Each layer is (object, style); style keys: ``stroke`` (color),
    ``width`` (stroke width in user units), ``dashed`` (bool),
    ``markers`` (bool, draw cusp markers).  Output bytes depend only on
    the inputs.
    """
    layers = list(layers)
    if not layers:
        raise RenderError("no layers to render")
    geoms = []
    allpts = []
    for i, (obj, style) in enumerate(layers):
        style = style or {}
        if style.get("markers_only"):
            polys, marks = [], [tuple(p) for p in np.asarray(obj, dtype=float)]
        else:
            polys, marks = _layer_geometry(obj)
        geoms.append((polys, marks, style))
        for p, _ in polys:
            allpts.append(p)
        if marks:
            allpts.append(np.array(marks))
    if not allpts:
        raise RenderError("layers contain no points")
    pts = np.vstack(allpts)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    span = max(x1 - x0, y1 - y0, 1e-9)
    margin = 0.05 * span
    x0, x1 = x0 - margin, x1 + margin
    y0, y1 = y0 - margin, y1 + margin
    w = x1 - x0
    h = y1 - y0
    height = int(round(width * h / w))
    sw_default = 0.004 * span
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="{_f(x0)} {_f(-y1)} {_f(w)} {_f(h)}">',
    ]
    for i, (polys, marks, style) in enumerate(geoms):
        stroke = style.get("stroke", PALETTE[i % len(PALETTE)])
        sw = style.get("width", sw_default)
        dash = f' stroke-dasharray="{_f(4 * sw)} {_f(3 * sw)}"' \
            if style.get("dashed") else ""
        for p, closed in polys:
            coords = p if not closed else np.vstack([p, p[:1]])
            point_str = " ".join(f"{_f(q[0])},{_f(-q[1])}" for q in coords)
            lines.append(f'<polyline fill="none" stroke="{stroke}" '
                         f'stroke-width="{_f(sw)}"{dash} points="{point_str}"/>')
        if style.get("markers", True):
            r = 1.6 * sw
            for mx, my in marks:
                lines.append(f'<circle cx="{_f(mx)}" cy="{_f(-my)}" r="{_f(r)}" '
                             f'fill="{stroke}" stroke="none"/>')
    lines.append("</svg>")
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")
