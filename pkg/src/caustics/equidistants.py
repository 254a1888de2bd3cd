"""Construction of equidistant sets, the midpoint caustic and the
centre symmetry set, with analytic jets at every sample.

For a ratio lam and every parallel pair (a, b), the equidistant set
collects lam*a + (1-lam)*b.  The midpoint case lam = 1/2 is the Wigner
caustic; the centre symmetry set (CSS) is the envelope of the chords,
computed pointwise as (kappa_a * a + kappa_b * b) / (kappa_a + kappa_b)
with the partner curvature re-signed for opposite traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import Jet2, SampledCurve
from .errors import SingularPairError
from .pairing import PairFamily, opposing_curvature, pair_families
from .util import TWO_PI, cross2, rot90, unit, wrap_half_pi

SINGULAR_DEN_EPS = 1e-12  # |lam*kb - (1-lam)*ka| below this marks a singular sample
CSS_SUM_EPS = 1e-10  # |ka + kb| below this is a CSS gap
CENTRAL_SYMMETRY_EPS = 1e-8


@dataclass
class EquidistantBranch:
    """One continuously assembled branch of a derived set."""

    family_index: int
    s_a: np.ndarray
    s_b: np.ndarray
    points: np.ndarray
    tangent_dir: np.ndarray  # parallel to the tangent of the curve at a
    kappa: np.ndarray  # nan where the defining formula is singular
    regular: np.ndarray
    relation: str
    cyclic: bool

    def __len__(self):
        return len(self.s_a)

    def line_angle_lift(self):
        """Lifted tangent-line angle along the branch (closing step
        included for cyclic branches)."""
        raw = np.arctan2(self.tangent_dir[:, 1], self.tangent_dir[:, 0])
        seq = np.concatenate([raw, raw[:1]]) if self.cyclic else raw
        d = wrap_half_pi(np.diff(seq))
        return np.concatenate([[raw[0]], raw[0] + np.cumsum(d)])

    def rotation_number(self):
        """Half-turns of the tangent line per circuit, in full turns."""
        if not self.cyclic:
            return math.nan
        psi = self.line_angle_lift()
        return (psi[-1] - psi[0]) / TWO_PI


@dataclass
class EquidistantSet:
    """Sampled branches of a derived set plus embedded singular events."""

    lam: float  # nan for the CSS
    kind: str  # "equidistant" | "wigner" | "css"
    branches: list
    events: list = field(default_factory=list)
    degenerate: bool = False
    degenerate_point: np.ndarray | None = None
    source: SampledCurve | None = None

    @property
    def rotation_number(self):
        if len(self.branches) == 1:
            return self.branches[0].rotation_number()
        return math.nan

    def all_points(self):
        if self.degenerate:
            return self.degenerate_point[None, :]
        if not self.branches:
            return np.empty((0, 2))
        return np.vstack([b.points for b in self.branches])


# ---------------------------------------------------------------------------
# pointwise formulas


def equidistant_curvature(a: Jet2, b: Jet2, lam: float) -> float:
    """Curvature of the equidistant at lam*a + (1-lam)*b.

    Uses kappa_a * |kappa_b| / |lam*kappa_b - (1-lam)*kappa_a| with the
    partner curvature taken in the opposite-traversal convention.
    """
    kb = opposing_curvature(a, b)
    den = lam * kb - (1.0 - lam) * a.kappa
    if abs(den) < SINGULAR_DEN_EPS:
        raise SingularPairError("singular point of the equidistant (cusp)")
    return a.kappa * abs(kb) / abs(den)


def css_curvature(a: Jet2, b: Jet2) -> float:
    """Curvature of the centre symmetry set at its chord point."""
    kb = opposing_curvature(a, b)
    ksum = a.kappa + kb
    if abs(ksum) < CSS_SUM_EPS:
        raise SingularPairError("chord point undefined: curvatures cancel")
    den = kb * kb * a.kappa_prime - a.kappa * a.kappa * b.kappa_prime
    chord = a.p - b.p
    dist = float(np.linalg.norm(chord))
    if abs(den) < 1e-14 * max(1.0, abs(a.kappa) ** 4):
        raise SingularPairError("CSS curvature blows up (cusp of the CSS)")
    return float(np.sign(kb) * ksum**3 / abs(den) * cross2(chord, a.tangent) / dist**3)


def equidistant_normal(a: Jet2, lam: float) -> np.ndarray:
    """Normal of the equidistant at lam*a + (1-lam)*b: the left normal of
    the base curve at a, transported to the equidistant point.  For
    lam = 1/2 this is the double-cover convention."""
    return rot90(a.tangent)


# ---------------------------------------------------------------------------
# batch construction


def _family_arrays(sc: SampledCurve, fam: PairFamily):
    return fam.jet_arrays()


def _split_runs(mask):
    """Contiguous index runs where mask holds."""
    runs = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def _make_branches(fam_idx, fam, s_a, s_b, points, tangent_dir, kappa,
                   regular, keep=None):
    """Assemble branches from one family, honoring point continuity."""
    n = len(s_a)
    if keep is None:
        keep = np.ones(n, dtype=bool)
    branches = []
    for lo, hi in _split_runs(keep):
        if hi - lo < 2:
            continue
        pts = points[lo:hi]
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        med = np.median(steps) if len(steps) else 0.0
        tol = 10.0 * max(med, 1e-12)
        jumps = np.nonzero(steps > tol)[0]
        cuts = [0] + [int(j) + 1 for j in jumps] + [hi - lo]
        whole = fam.cyclic and lo == 0 and hi == n and len(jumps) == 0
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            if c1 - c0 < 2:
                continue
            cyc = whole
            if not whole and c1 - c0 >= 3:
                closing = np.linalg.norm(pts[c1 - 1] - pts[c0])
                cyc = closing <= tol
            branches.append(EquidistantBranch(
                family_index=fam_idx,
                s_a=s_a[lo + c0:lo + c1],
                s_b=s_b[lo + c0:lo + c1],
                points=points[lo + c0:lo + c1],
                tangent_dir=tangent_dir[lo + c0:lo + c1],
                kappa=kappa[lo + c0:lo + c1],
                regular=regular[lo + c0:lo + c1],
                relation=fam.relation,
                cyclic=cyc,
            ))
    return branches


def equidistant(sc: SampledCurve, lam: float, families=None) -> EquidistantSet:
    """The set of points lam*a + (1-lam)*b over all parallel pairs."""
    if families is None:
        families = pair_families(sc)
    branches = []
    for idx, fam in enumerate(families):
        pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff = _family_arrays(sc, fam)
        points = lam * pa + (1.0 - lam) * pb
        den = lam * kb_eff - (1.0 - lam) * ka
        regular = np.abs(den) >= SINGULAR_DEN_EPS
        kappa = np.full(len(fam), np.nan)
        kappa[regular] = ka[regular] * np.abs(kb_eff[regular]) / np.abs(den[regular])
        branches.extend(_make_branches(idx, fam, fam.s_a, fam.s_b, points,
                                       ta, kappa, regular))
    return EquidistantSet(lam=lam, kind="equidistant", branches=branches,
                          source=sc)


def wigner_caustic(sc: SampledCurve, families=None) -> EquidistantSet:
    """Midpoint locus with the orderings (a, b) and (b, a) identified.

    A centrally symmetric curve collapses to its center; that case is
    returned as a degenerate single-point set.
    """
    if families is None:
        families = pair_families(sc)
    period = sc.period
    mids = []
    for fam in families:
        arrays = fam.jet_arrays()
        mids.append(0.5 * (arrays[0] + arrays[4]))
    if mids:
        allm = np.vstack(mids)
        center = allm.mean(axis=0)
        spread = np.linalg.norm(allm - center, axis=1).max()
        scale = max(1.0, float(np.abs(sc.points).max()))
        if spread < CENTRAL_SYMMETRY_EPS * scale:
            ev = _degenerate_event(center)
            return EquidistantSet(lam=0.5, kind="wigner", branches=[],
                                  events=[ev], degenerate=True,
                                  degenerate_point=center, source=sc)

    branches = []
    for idx, fam in enumerate(families):
        pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff = _family_arrays(sc, fam)
        points = 0.5 * (pa + pb)
        den = 0.5 * (kb_eff - ka)
        regular = np.abs(den) >= SINGULAR_DEN_EPS
        kappa = np.full(len(fam), np.nan)
        kappa[regular] = ka[regular] * np.abs(kb_eff[regular]) / np.abs(den[regular])
        sbm = sc.t[0] + (fam.s_b - sc.t[0]) % period
        keep = (fam.s_a % period) < sbm  # canonical ordering collapses the double cover
        branches.extend(_make_branches(idx, fam, fam.s_a, fam.s_b, points,
                                       ta, kappa, regular, keep=keep))
    return EquidistantSet(lam=0.5, kind="wigner", branches=branches, source=sc)


def css(sc: SampledCurve, families=None) -> EquidistantSet:
    """Centre symmetry set sampled from the chord-point formula.

    Every sample lies on the chord through its generating pair and the
    branch tangent is the chord direction.  Samples where the re-signed
    curvatures cancel are skipped and logged as gap events.
    """
    if families is None:
        families = pair_families(sc)
    period = sc.period
    branches = []
    events = []
    for idx, fam in enumerate(families):
        pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff = _family_arrays(sc, fam)
        ksum = ka + kb_eff
        ok = np.abs(ksum) >= CSS_SUM_EPS
        for s in fam.s_a[~ok]:
            events.append(_gap_event(float(s)))
        safe = np.where(ok, ksum, 1.0)
        points = (ka[:, None] * pa + kb_eff[:, None] * pb) / safe[:, None]
        chord = pb - pa
        dist = np.linalg.norm(chord, axis=1)
        good = ok & (dist > 1e-12)
        tangent_dir = np.where(good[:, None], chord / np.where(dist > 1e-12, dist, 1.0)[:, None], 0.0)
        den = kb_eff**2 * kpa - ka**2 * kpb
        regular = good & (np.abs(den) > 1e-14)
        kappa = np.full(len(fam), np.nan)
        idxs = regular
        kappa[idxs] = (np.sign(kb_eff[idxs]) * ksum[idxs] ** 3 / np.abs(den[idxs])
                       * cross2(pa[idxs] - pb[idxs], ta[idxs])
                       / np.where(dist[idxs] > 0, dist[idxs], 1.0) ** 3)
        sbm = sc.t[0] + (fam.s_b - sc.t[0]) % period
        keep = good & ((fam.s_a % period) < sbm)
        branches.extend(_make_branches(idx, fam, fam.s_a, fam.s_b, points,
                                       tangent_dir, kappa, regular, keep=keep))
    return EquidistantSet(lam=math.nan, kind="css", branches=branches,
                          events=events, source=sc)


def _degenerate_event(center):
    from .singular import SingularEvent

    return SingularEvent(kind="degenerate", lam=0.5, s_a=math.nan,
                         s_b=math.nan, location=center, residual=0.0)


def _gap_event(s):
    from .singular import SingularEvent

    return SingularEvent(kind="degenerate", lam=math.nan, s_a=s, s_b=math.nan,
                         location=np.array([math.nan, math.nan]), residual=0.0)


# ---------------------------------------------------------------------------
# tangent-line statistics


def tangent_parallel_count(eqset: EquidistantSet, direction) -> int:
    """Number of points on the set whose tangent line is parallel to the
    given direction, counted by level crossings of the lifted line angle.

    Raises ValueError for directions within 1e-6 rad of a sample tangent
    (perturb the direction and retry).
    """
    if eqset.degenerate:
        return 0
    d = np.asarray(direction, dtype=float)
    target = math.atan2(d[1], d[0])
    total = 0
    for br in eqset.branches:
        psi = br.line_angle_lift()
        near = np.abs(wrap_half_pi(psi - target))
        if near.min() < 1e-6:
            raise ValueError(
                "direction is too close to a sample tangent; perturb it")
        lv = np.floor((psi - target) / np.pi)
        total += int(np.sum(np.abs(np.diff(lv))))
    return total
