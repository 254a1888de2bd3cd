"""Parallel pairs of a curve and their continuous families.

Two points form a parallel pair when their tangent lines are parallel.
All matching is done on the lifted tangent-line angle psi (mod pi), so
same- and opposite-direction partners come out of one root scan and are
classified afterwards by the tangent dot product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import Jet2, SampledCurve, sample_curve
from .errors import SingularPairError
from .util import bisect_vec, mod_dist

PARTNER_TOL = 1e-10  # radians, on the angle residual
SELF_EXCLUSION = 1e-7  # relative to the period


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class ParallelPair:
    s_a: float
    s_b: float
    relation: str  # "same_direction" | "opposite_direction"
    chord: np.ndarray  # b - a


@dataclass
class PairFamily:
    """A continuous one-parameter family of parallel pairs.

    s_b is stored as a continuous lift of the partner parameter (it may
    leave the fundamental period); psi(s_b) - psi(s_a) = level * pi holds
    along the whole family.
    """

    sc: SampledCurve
    s_a: np.ndarray
    s_b: np.ndarray
    level: int
    relation: str
    cyclic: bool
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.s_a)

    def jet_arrays(self):
        """Cached jets of both pair legs plus the re-signed partner
        curvature: (pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff)."""
        if not hasattr(self, "_jets"):
            period = self.sc.period
            t0 = self.sc.t[0]
            sam = t0 + (self.s_a - t0) % period if self.cyclic else self.s_a
            sbm = t0 + (self.s_b - t0) % period
            pa, ta, ka, kpa = self.sc.jets_at(sam)
            pb, tb, kb, kpb = self.sc.jets_at(sbm)
            dots = np.einsum("ij,ij->i", ta, tb)
            kb_eff = -np.sign(dots) * kb
            self._jets = (pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff)
        return self._jets

    def partner_at(self, s: float) -> float:
        """Refined partner parameter for any s inside the family range."""
        spec = self.sc.spec
        if spec is not None and spec.kind == "support_fourier":
            # psi is exactly linear in the parameter for support curves
            sign = 1.0 if spec.orientation == "ccw" else -1.0
            return float(s + sign * self.level * np.pi)
        sa, sb = self.s_a, self.s_b
        if not (sa[0] - 1e-12 <= s <= sa[-1] + 1e-12) and self.cyclic:
            s = sa[0] + (s - sa[0]) % (self.sc.period)
        i = int(np.clip(np.searchsorted(sa, s) - 1, 0, len(sa) - 2))
        lo, hi = sorted((sb[i], sb[i + 1]))
        pad = max(hi - lo, self.sc.period / self.sc.n) * 0.75
        lo, hi = lo - pad, hi + pad
        target = float(self.sc.psi_at(np.array([s]))[0]) + self.level * np.pi

        def g(x):
            return self.sc.psi_at(x) - target

        glo, ghi = float(g(np.array([lo]))[0]), float(g(np.array([hi]))[0])
        grow = 0
        while glo * ghi > 0 and grow < 8:
            lo, hi = lo - pad, hi + pad
            glo, ghi = float(g(np.array([lo]))[0]), float(g(np.array([hi]))[0])
            grow += 1
        if glo * ghi > 0:
            raise SingularPairError(f"cannot bracket partner of s={s:.6g}")
        root = bisect_vec(g, np.array([lo]), np.array([hi]), iters=80,
                          ftol=PARTNER_TOL)
        return float(root[0])

    def pairs(self):
        pts_a = self.sc.jets_at(self.s_a)[0]
        pts_b = self.sc.jets_at(np.mod(self.s_b - self.sc.t[0], self.sc.period)
                                + self.sc.t[0])[0]
        return [
            ParallelPair(float(a), float(b), self.relation, pb - pa)
            for a, b, pa, pb in zip(self.s_a, self.s_b, pts_a, pts_b)
        ]


# ---------------------------------------------------------------------------
# partner search


def _partner_roots(sc: SampledCurve, targets, rows=None, through_masked=False):
    """Roots of psi(x) = target + k*pi over one period, for many targets.

    Returns per-target lists of (x, level k).  With through_masked the
    root brackets may touch masked samples: their positions are still
    trustworthy (masked clusters are spatially tiny), only their jets
    are not.
    """
    n = sc.n
    tg = sc._grid_ext()
    psi = sc.psi
    if through_masked:
        edge_ok = np.ones(n, dtype=bool)
    else:
        ok = np.concatenate([sc.valid, sc.valid[:1]])
        edge_ok = ok[:-1] & ok[1:]
    out = [[] for _ in targets]
    br_t, br_lo, br_hi, br_target = [], [], [], []
    for j, tau in enumerate(targets):
        c = np.floor((psi - tau) / np.pi)
        hit = np.nonzero((c[:-1] != c[1:]) & edge_ok)[0]
        for i in hit:
            m = max(c[i], c[i + 1])
            br_t.append(j)
            br_lo.append(tg[i])
            br_hi.append(tg[i + 1])
            br_target.append(tau + m * np.pi)
    if not br_t:
        return out
    br_target = np.array(br_target)

    def g(x):
        return sc.psi_at(x) - br_target

    roots = bisect_vec(g, np.array(br_lo), np.array(br_hi), iters=70,
                       ftol=PARTNER_TOL)
    levels = np.round((br_target - np.array([targets[j] for j in br_t])) / np.pi)
    for j, x, m in zip(br_t, roots, levels):
        out[j].append((float(x), int(m)))
    return out


def parallel_partners(sc: SampledCurve, s: float):
    """All parameters (other than s) whose tangent line is parallel to the
    tangent line at s, refined on the lifted-angle residual."""
    tau = float(sc.psi_at(np.array([s]))[0])
    roots = _partner_roots(sc, [tau])[0]
    period = sc.period
    out = []
    for x, _ in roots:
        xm = sc.t[0] + (x - sc.t[0]) % period
        if mod_dist(xm, s, period) < SELF_EXCLUSION * period:
            continue
        if any(mod_dist(xm, y, period) < 1e-8 * period for y in out):
            continue
        out.append(float(xm))
    return sorted(out)


def antipodal_pairs_convex(spec, n: int) -> PairFamily:
    """The single opposite-direction family (theta, theta + pi) of a
    convex support-function curve."""
    if spec.kind != "support_fourier":
        raise ValueError("antipodal fast path needs a support_fourier curve")
    sc = sample_curve(spec, n)
    s_a = sc.t.copy()
    s_b = s_a + np.pi
    return PairFamily(sc=sc, s_a=s_a, s_b=s_b, level=1,
                      relation="opposite_direction", cyclic=True)


# ---------------------------------------------------------------------------
# family tracing


class _Chain:
    __slots__ = ("rows", "xs", "alive")

    def __init__(self, row, x):
        self.rows = [row]
        self.xs = [x]
        self.alive = True


def pair_families(sc: SampledCurve, jump_tol=None, through_masked=False):
    """Group parallel partners into maximal continuous families.

    Ordered duplicates (a, b) / (b, a) are retained; families are ordered
    by their starting parameter.  Masked samples never act as the first
    leg; through_masked additionally lets partner roots fall inside
    masked clusters (used when only positions matter downstream).
    """
    n = sc.n
    period = sc.period
    if jump_tol is None:
        jump_tol = max(period / 16.0, 6.0 * period / n)
    row_idx = [i for i in range(n) if sc.valid[i]]
    targets = [float(sc.psi[i]) for i in row_idx]
    roots = _partner_roots(sc, targets, rows=row_idx,
                           through_masked=through_masked)

    partners = {}
    for i, rlist in zip(row_idx, roots):
        keep = []
        for x, _ in rlist:
            xm = sc.t[0] + (x - sc.t[0]) % period
            if mod_dist(xm, sc.t[i], period) < SELF_EXCLUSION * period:
                continue
            if any(mod_dist(xm, y, period) < 1e-8 * period for y in keep):
                continue
            keep.append(xm)
        partners[i] = sorted(keep)

    chains = []
    active = []
    prev_row = None
    for i in row_idx:
        cand = partners[i]
        if prev_row is None or i != prev_row + 1:
            for ch in active:
                ch.alive = False
            active = []
        # greedy nearest matching between active chains and new partners
        pairs = []
        for ci, ch in enumerate(active):
            x_prev = sc.t[0] + (ch.xs[-1] - sc.t[0]) % period
            for pi, x in enumerate(cand):
                d = mod_dist(x, x_prev, period)
                if d <= jump_tol:
                    pairs.append((d, ci, pi))
        pairs.sort()
        used_c, used_p = set(), set()
        assign = {}
        for d, ci, pi in pairs:
            if ci in used_c or pi in used_p:
                continue
            used_c.add(ci)
            used_p.add(pi)
            assign[pi] = ci
        next_active = []
        for pi, x in enumerate(cand):
            if pi in assign:
                ch = active[assign[pi]]
                prev = ch.xs[-1]
                ch.rows.append(i)
                ch.xs.append(x + period * np.round((prev - x) / period))
                next_active.append(ch)
            else:
                ch = _Chain(i, x)
                chains.append(ch)
                next_active.append(ch)
        for ci, ch in enumerate(active):
            if ci not in used_c:
                ch.alive = False
        active = next_active
        prev_row = i

    # close the period seam: a chain ending at the last row may continue
    # into a chain starting at the first row, with s_a shifted by a period
    first_row = row_idx[0] if row_idx else 0
    last_row = row_idx[-1] if row_idx else -1
    merged = True
    while merged:
        merged = False
        for ch in chains:
            if not ch.rows or ch.alive == "cyclic" or ch.rows[-1] % n != last_row:
                continue
            x_end = sc.t[0] + (ch.xs[-1] - sc.t[0]) % period
            for other in chains:
                if not other.rows or other.rows[0] % n != first_row:
                    continue
                if other is not ch and other.alive == "cyclic":
                    continue
                x_start = sc.t[0] + (other.xs[0] - sc.t[0]) % period
                if mod_dist(x_start, x_end, period) > jump_tol:
                    continue
                if other is ch:
                    ch.alive = "cyclic"
                    break
                row_shift = ch.rows[-1] + 1 - other.rows[0]
                shift_b = period * np.round((ch.xs[-1] - other.xs[0]) / period)
                ch.rows.extend(r + row_shift for r in other.rows)
                ch.xs.extend(x + shift_b for x in other.xs)
                other.rows = []
                merged = True
                break
            if merged:
                break
    chains = [ch for ch in chains if len(ch.rows) >= 3]

    families = []
    for ch in chains:
        rows = np.array(ch.rows)
        s_a = sc.t[rows % n] + period * (rows // n)
        s_b = np.array(ch.xs)
        fams = _split_by_relation(sc, s_a, s_b, cyclic=(ch.alive == "cyclic"))
        families.extend(fams)
    families.sort(key=lambda f: (f.s_a[0], f.s_b[0]))
    return families


def _split_by_relation(sc, s_a, s_b, cyclic):
    period = sc.period
    sbm = sc.t[0] + (s_b - sc.t[0]) % period
    ta = sc.jets_at(s_a)[1]
    tb = sc.jets_at(sbm)[1]
    dots = np.einsum("ij,ij->i", ta, tb)
    level = int(np.round((float(sc.psi_at(s_b[:1])[0])
                          - float(sc.psi_at(s_a[:1])[0])) / np.pi))
    sign = np.sign(dots)
    out = []
    start = 0
    for i in range(1, len(s_a) + 1):
        if i == len(s_a) or sign[i] != sign[start]:
            rel = "opposite_direction" if sign[start] < 0 else "same_direction"
            fam = PairFamily(sc=sc, s_a=s_a[start:i], s_b=s_b[start:i],
                             level=level, relation=rel,
                             cyclic=cyclic and start == 0 and i == len(s_a))
            if i - start >= 3:
                out.append(fam)
            if i < len(s_a):
                fam.events.append(("relation_change", float(s_a[i])))
            start = i
    return out


# ---------------------------------------------------------------------------
# pointwise quantities


def matching_derivative(fam: PairFamily, s: float) -> float:
    """Arc-length slope of the partner map at s: kappa(a) / kappa(b)."""
    sb = fam.partner_at(s)
    sbm = fam.sc.t[0] + (sb - fam.sc.t[0]) % fam.sc.period
    _, _, ka, _ = fam.sc.jets_at(np.array([s]))
    _, _, kb, _ = fam.sc.jets_at(np.array([sbm]))
    if abs(float(kb[0])) < 1e-12:
        raise SingularPairError("partner lies at an inflexion; slope undefined")
    return float(ka[0]) / float(kb[0])


def opposing_curvature(a: Jet2, b: Jet2) -> float:
    """Curvature of the partner re-signed as if the curve were traversed
    in the opposite direction at b (the convention the equidistant
    curvature formulas assume)."""
    d = float(np.dot(a.tangent, b.tangent))
    return -np.sign(d) * b.kappa


def curved_side(a: Jet2, b: Jet2) -> str:
    """Classify a parallel pair by its curvature centers.

    Translate the curve so b lands on a; the pair is curved on the same
    side when both centers of curvature fall on one side of the shared
    tangent line.
    """
    if abs(a.kappa) < 1e-12 or abs(b.kappa) < 1e-12:
        raise SingularPairError("curved-side test undefined at an inflexion")
    d = float(np.dot(a.tangent, b.tangent))
    same = a.kappa * b.kappa * d > 0.0
    return "same_side" if same else "different_side"
