"""Composition law for equidistants, curve reconstruction and
set-distance utilities.

Taking a delta-equidistant of a lam-equidistant lands on the
delta*(1-lam) + lam*(1-delta) equidistant of the original curve; solving
that for the ratio recovering the curve itself gives
delta = -lam / (1 - 2 lam).  The midpoint caustic (lam = 1/2) is the one
equidistant the curve cannot be recovered from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree, ConvexHull

from .curves import SampledCurve, sampled_from_points
from .equidistants import EquidistantSet, css, equidistant, wigner_caustic
from .pairing import pair_families
from .report import RunReport
from .singular import cusp_events

DEFAULT_REL_TOL = 5e-3  # of the curve diameter
EXCISE_STEPS = 2
GUARD_STEPS = 2  # stencil half-width: windows that span a seam are masked


def compose_lambda(lam: float, delta: float) -> float:
    """Ratio of the composed equidistant: delta*(1-lam) + lam*(1-delta)."""
    if lam == 0.5:
        raise ValueError("composition is undefined through the midpoint caustic")
    return delta * (1.0 - lam) + lam * (1.0 - delta)


# ---------------------------------------------------------------------------
# set distances


@dataclass(frozen=True)
class SetDistanceReport:
    hausdorff: float
    directed_ab: float
    directed_ba: float
    sample_counts: tuple

    def __float__(self):
        return self.hausdorff


def hausdorff(set_a, set_b) -> SetDistanceReport:
    """Symmetric Hausdorff distance between two sampled point sets."""
    a = np.atleast_2d(np.asarray(set_a, dtype=float))
    b = np.atleast_2d(np.asarray(set_b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff distance needs nonempty sets")
    d_ab = float(cKDTree(b).query(a)[0].max())
    d_ba = float(cKDTree(a).query(b)[0].max())
    return SetDistanceReport(hausdorff=max(d_ab, d_ba), directed_ab=d_ab,
                             directed_ba=d_ba, sample_counts=(len(a), len(b)))


def diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        d = 0.0
        for p in pts:
            d = max(d, float(np.linalg.norm(pts - p, axis=1).max()))
        return d
    hull = pts[ConvexHull(pts).vertices]
    d = 0.0
    for p in hull:
        d = max(d, float(np.linalg.norm(hull - p, axis=1).max()))
    return d


# ---------------------------------------------------------------------------
# re-ingestion of computed sets


def reingest(eqset: EquidistantSet, excise: int = EXCISE_STEPS,
             guard: int = GUARD_STEPS) -> SampledCurve:
    """Turn a computed set back into a curve of its sample points.

    Samples within `excise` steps of a cusp (finite differences break
    down there) are dropped, and the `guard` surviving neighbors of each
    seam are kept for positions but masked out of pair matching.
    """
    if eqset.degenerate:
        raise ValueError("a degenerate (single-point) set is not a curve")
    branch = max(eqset.branches, key=len)
    events = [e for e in eqset.events if e.kind in ("cusp", "degenerate")]
    if not events and eqset.source is not None and not math.isnan(eqset.lam):
        events = cusp_events(eqset.source, eqset.lam,
                             identify=(eqset.kind == "wigner"))
    m = len(branch)
    period_src = branch.s_a[-1] - branch.s_a[0] + (
        branch.s_a[1] - branch.s_a[0] if m > 1 else 0.0)
    drop = np.zeros(m, dtype=bool)
    drop |= ~branch.regular
    for ev in events:
        if ev.family_index not in (-1, branch.family_index):
            continue
        rel = (ev.s_a - branch.s_a[0]) % period_src + branch.s_a[0]
        i = int(np.argmin(np.abs(branch.s_a - rel)))
        for k in range(-excise, excise + 1):
            drop[(i + k) % m] = True
    keep_idx = np.nonzero(~drop)[0]
    if len(keep_idx) < 8:
        raise ValueError("cusp excision removed too many samples")
    pts = branch.points[keep_idx]
    valid = np.ones(len(keep_idx), dtype=bool)
    gaps = np.nonzero(np.diff(keep_idx) > 1)[0]
    seams = list(gaps) + ([len(keep_idx) - 1] if drop.any() and
                          (keep_idx[0] != 0 or keep_idx[-1] != m - 1) else [])
    if drop.any() and len(gaps) == 0:
        seams.append(len(keep_idx) - 1)
    for g in seams:
        for k in range(-guard + 1, guard + 1):
            valid[(g + k) % len(keep_idx)] = False
    return sampled_from_points(pts, valid=valid, allow_flips=True)


def _both_orders(sc, lam, families=None) -> EquidistantSet:
    """Equidistant assembled from both pair orderings.

    The two orderings give the same set (lam versus 1-lam); emitting both
    keeps full coverage when cusp excision has masked some rows of a
    re-ingested curve.
    """
    if families is None:
        families = pair_families(sc, through_masked=True)
    one = equidistant(sc, lam, families)
    if lam == 0.5:
        return one
    other = equidistant(sc, 1.0 - lam, families)
    return EquidistantSet(lam=lam, kind="equidistant",
                          branches=one.branches + other.branches, source=sc)


def reconstruct(eqset: EquidistantSet, lam: float, excise: int = EXCISE_STEPS):
    """Recover (approximately) the original curve from its lam-equidistant
    by taking the -lam/(1-2 lam) equidistant of the re-ingested set."""
    if lam == 0.5:
        raise ValueError("the curve cannot be reconstructed from the "
                         "midpoint caustic")
    delta = -lam / (1.0 - 2.0 * lam)
    sc2 = reingest(eqset, excise=excise)
    return _both_orders(sc2, delta)


# ---------------------------------------------------------------------------
# verification runs


def _set_for(sc, lam, families=None):
    if lam == 0.5:
        return wigner_caustic(sc, families)
    return equidistant(sc, lam, families)


def verify_composition(sc: SampledCurve, lam: float, delta: float,
                       tol: float | None = None) -> RunReport:
    """Check that the delta-equidistant of the re-ingested lam-equidistant
    matches the directly computed composed equidistant."""
    if lam == 0.5:
        raise ValueError("lam must differ from 1/2")
    families = pair_families(sc)
    diam = diameter(sc.points)
    if tol is None:
        tol = DEFAULT_REL_TOL * diam
    base = equidistant(sc, lam, families)
    sc2 = reingest(base)
    left = _both_orders(sc2, delta) if delta != 0.5 else _set_for(sc2, delta)
    big = compose_lambda(lam, delta)
    right = _set_for(sc, big, families)
    d = hausdorff(left.all_points(), right.all_points())
    rep = RunReport(command="compose-check",
                    inputs={"lam": lam, "delta": delta, "composed": big})
    rep.add("hausdorff_compose", "pass" if d.hausdorff < tol else "fail",
            d.hausdorff, tol=tol)
    return rep


def verify_css_invariance(sc: SampledCurve, lam: float, delta: float,
                          tol: float | None = None) -> RunReport:
    """Check that the CSS survives passing to any non-midpoint
    equidistant: CSS of E_lam equals CSS of E_delta."""
    if lam == 0.5 or delta == 0.5:
        raise ValueError("ratios must differ from 1/2")
    families = pair_families(sc)
    diam = diameter(sc.points)
    if tol is None:
        tol = 2.0 * DEFAULT_REL_TOL * diam
    sides = []
    for r in (lam, delta):
        if r == 0.0 or r == 1.0:
            sides.append(css(sc, families))
            continue
        sc2 = reingest(equidistant(sc, r, families))
        sides.append(css(sc2))
    d = hausdorff(sides[0].all_points(), sides[1].all_points())
    rep = RunReport(command="css-check", inputs={"lam": lam, "delta": delta})
    rep.add("hausdorff_css", "pass" if d.hausdorff < tol else "fail",
            d.hausdorff, tol=tol)
    return rep
