"""CSV emission and parsing for sampled sets.

Schema: ``branch,s_a,s_b,lambda,x,y,tangent_angle,kappa,event`` with 12
significant digits, newline-terminated rows, event one of
``-``, ``cusp``, ``inflexion``, ``endpoint``, ``degenerate``.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import SampledCurve
from .equidistants import EquidistantSet
from .errors import RenderError

HEADER = "branch,s_a,s_b,lambda,x,y,tangent_angle,kappa,event"


def _g(v) -> str:
    return f"{float(v):.12g}"


def _rows_for_set(eqset: EquidistantSet):
    rows = []
    if eqset.degenerate:
        c = eqset.degenerate_point
        rows.append((0, math.nan, math.nan, eqset.lam, c[0], c[1],
                     math.nan, math.nan, "degenerate"))
        return rows
    events = list(eqset.events)
    for bi, br in enumerate(eqset.branches):
        raw = np.arctan2(br.tangent_dir[:, 1], br.tangent_dir[:, 0])
        period = br.s_a[-1] - br.s_a[0]
        if eqset.source is not None:
            period = eqset.source.period
        branch_rows = []
        for i in range(len(br)):
            sa = br.s_a[i] % period if period > 0 else br.s_a[i]
            sb = br.s_b[i] % period if period > 0 else br.s_b[i]
            branch_rows.append((br.s_a[i], (bi, sa, sb, eqset.lam,
                                br.points[i][0], br.points[i][1], raw[i],
                                br.kappa[i], "-")))
        lo, hi = br.s_a[0], br.s_a[-1]
        for ev in events:
            if ev.family_index != br.family_index:
                continue
            if math.isnan(ev.s_a):
                continue
            rel = ev.s_a
            while rel < lo - 1e-9 and period > 0:
                rel += period
            while rel > hi + 1e-9 and period > 0:
                rel -= period
            if not (lo - 1e-9 <= rel <= hi + 1e-9):
                continue
            if eqset.source is not None:
                tan = eqset.source.jets_at(np.array([ev.s_a]))[1][0]
                ang = math.atan2(tan[1], tan[0])
            else:
                ang = math.nan
            kap = 0.0 if ev.kind == "inflexion" else math.nan
            branch_rows.append((rel, (bi, ev.s_a, ev.s_b, ev.lam,
                                ev.location[0], ev.location[1], ang, kap,
                                ev.kind)))
        branch_rows.sort(key=lambda r: r[0])
        rows.extend(r for _, r in branch_rows)
    return rows


def write_csv(eqset: EquidistantSet, path) -> None:
    """Write a computed set (with embedded singular events) as CSV."""
    rows = _rows_for_set(eqset)
    with open(path, "w", newline="") as f:
        f.write(HEADER + "\n")
        for b, sa, sb, lam, x, y, ang, kap, ev in rows:
            f.write(",".join([str(int(b)), _g(sa), _g(sb), _g(lam), _g(x),
                              _g(y), _g(ang), _g(kap), ev]) + "\n")


def write_curve_csv(sc: SampledCurve, path) -> None:
    """Write plain curve samples in the common schema."""
    raw = np.arctan2(sc.tangents[:, 1], sc.tangents[:, 0])
    with open(path, "w", newline="") as f:
        f.write(HEADER + "\n")
        for i in range(sc.n):
            f.write(",".join([
                "0", _g(sc.t[i]), _g(math.nan), _g(math.nan),
                _g(sc.points[i][0]), _g(sc.points[i][1]), _g(raw[i]),
                _g(sc.kappa[i]), "-",
            ]) + "\n")


def write_events_csv(events, lam, path, source=None) -> None:
    """Write refined singular events alone, one row each."""
    with open(path, "w", newline="") as f:
        f.write(HEADER + "\n")
        for ev in events:
            if source is not None and not math.isnan(ev.s_a):
                tan = source.jets_at(np.array([ev.s_a]))[1][0]
                ang = math.atan2(tan[1], tan[0])
            else:
                ang = math.nan
            kap = 0.0 if ev.kind == "inflexion" else math.nan
            f.write(",".join([
                str(max(ev.family_index, 0)), _g(ev.s_a), _g(ev.s_b),
                _g(ev.lam if not math.isnan(lam) else math.nan),
                _g(ev.location[0]), _g(ev.location[1]), _g(ang), _g(kap),
                ev.kind,
            ]) + "\n")


def read_csv(path):
    """Parse a CSV in the common schema.

    Returns (branches, events): branches maps branch index to an (m, 2)
    point array (sample rows only); events is a list of
    (x, y, kind) for rows with a non '-' event.
    """
    branches: dict[int, list] = {}
    events = []
    with open(path) as f:
        header = f.readline().strip()
        if header != HEADER:
            raise RenderError(f"unexpected CSV header in {path}")
        for line in f:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 9:
                raise RenderError(f"malformed CSV row in {path}: {line!r}")
            b = int(parts[0])
            x, y = float(parts[4]), float(parts[5])
            ev = parts[8]
            if ev == "-":
                branches.setdefault(b, []).append((x, y))
            else:
                events.append((x, y, ev))
    return {b: np.array(p) for b, p in branches.items()}, events
