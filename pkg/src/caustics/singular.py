"""Cusps and inflexions of derived sets, parity checks, the singular
ratio spectrum, and guaranteed existence windows for arc pairs.

A pair (a, b) generates a cusp of the lam-equidistant exactly when
kappa(a) / kappa(b) = lam / (1 - lam) in the opposite-traversal signing;
detection runs on the better-conditioned scalar
h(s) = (1-lam) * kappa(a) - lam * kappa(b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import LoopSegment, SampledCurve, inflexion_parameters
from .equidistants import wigner_caustic
from .pairing import curved_side, pair_families, parallel_partners
from .report import RunCheck
from .util import TWO_PI, angle_dist_mod_pi, bisect_vec, line_intersection, signed_ratio

CUSP_RESIDUAL_TOL = 1e-9
PARALLEL_TOL = 1e-6  # radians
ROTATION_SLACK = 1e-6
EVENT_MERGE_TOL = 1e-6  # relative to the period


@dataclass(frozen=True)
class SingularEvent:
    kind: str  # "cusp" | "inflexion" | "endpoint" | "degenerate"
    lam: float
    s_a: float
    s_b: float
    location: np.ndarray
    residual: float
    family_index: int = -1


# ---------------------------------------------------------------------------
# cusp detection


def _h_values(fam, lam):
    _, _, ka, _, _, _, _, _, kb_eff = fam.jet_arrays()
    return (1.0 - lam) * ka - lam * kb_eff


def _h_at(fam, s, lam):
    sc = fam.sc
    sb = fam.partner_at(s)
    t0 = sc.t[0]
    period = sc.period
    _, ta, ka, _ = sc.jets_at(np.array([t0 + (s - t0) % period]))
    pb, tb, kb, _ = sc.jets_at(np.array([t0 + (sb - t0) % period]))
    kb_eff = -np.sign(float(np.dot(ta[0], tb[0]))) * float(kb[0])
    return (1.0 - lam) * float(ka[0]) - lam * kb_eff, sb


def _event_at(fam, fam_idx, s, lam, residual):
    sc = fam.sc
    sb = fam.partner_at(s)
    t0 = sc.t[0]
    period = sc.period
    pa = sc.jets_at(np.array([t0 + (s - t0) % period]))[0][0]
    pb = sc.jets_at(np.array([t0 + (sb - t0) % period]))[0][0]
    loc = lam * pa + (1.0 - lam) * pb
    return SingularEvent(kind="cusp", lam=lam, s_a=float(t0 + (s - t0) % period),
                         s_b=float(t0 + (sb - t0) % period), location=loc,
                         residual=float(residual), family_index=fam_idx)


def _refine_cusp(fam, fam_idx, lo, hi, hlo, hhi, lam, max_iter=80):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        hm, _ = _h_at(fam, mid, lam)
        if abs(hm) < CUSP_RESIDUAL_TOL:
            return _event_at(fam, fam_idx, mid, lam, hm)
        if hlo * hm <= 0.0:
            hi, hhi = mid, hm
        else:
            lo, hlo = mid, hm
    mid = 0.5 * (lo + hi)
    hm, _ = _h_at(fam, mid, lam)
    return _event_at(fam, fam_idx, mid, lam, hm)


def cusp_events(sc: SampledCurve, lam: float, families=None, identify=None):
    """All cusps of the lam-equidistant, refined to |h| < 1e-9.

    For lam = 1/2 the orderings (a, b) and (b, a) produce the same
    midpoint, so events are identified (set identify=False to keep both).
    A zero of h that does not change sign is reported as a degenerate
    event (non-generic lam).
    """
    if lam in (0.0, 1.0):
        raise ValueError("the set equals the curve at lam in {0, 1}; no cusps")
    if families is None:
        families = pair_families(sc)
    if identify is None:
        identify = lam == 0.5
    events = []
    for idx, fam in enumerate(families):
        h = _h_values(fam, lam)
        deg_tol = CUSP_RESIDUAL_TOL * max(1.0, float(np.nanmax(np.abs(h))))
        m = len(h)
        if m < 3:
            continue
        last = m if fam.cyclic else m - 1
        for i in range(last):
            j = (i + 1) % m
            hi_, hj = h[i], h[j]
            si = fam.s_a[i]
            sj = fam.s_a[j] if j > i else fam.s_a[i] + (fam.s_a[1] - fam.s_a[0])
            if hi_ == 0.0 or abs(hi_) < deg_tol:
                prev = h[(i - 1) % m] if (fam.cyclic or i > 0) else None
                nxt = hj
                if prev is not None and prev * nxt > 0 and abs(hi_) <= min(abs(prev), abs(nxt)):
                    events.append(SingularEvent(
                        kind="degenerate", lam=lam, s_a=float(si % sc.period),
                        s_b=float(fam.s_b[i] % sc.period),
                        location=lam * fam.jet_arrays()[0][i] + (1 - lam) * fam.jet_arrays()[4][i],
                        residual=float(hi_), family_index=idx))
                    continue
            if hi_ * hj < 0.0:
                events.append(_refine_cusp(fam, idx, si, sj, hi_, hj, lam))
    if identify:
        events = _identify_events(events, sc.period)
    events.sort(key=lambda e: (e.family_index, e.s_a))
    return events


def _identify_events(events, period):
    out = []
    tol = EVENT_MERGE_TOL * period
    for ev in events:
        key = tuple(sorted((ev.s_a % period, ev.s_b % period)))
        dup = False
        for kept in out:
            k2 = tuple(sorted((kept.s_a % period, kept.s_b % period)))
            if (min(abs(key[0] - k2[0]), period - abs(key[0] - k2[0])) < tol
                    and min(abs(key[1] - k2[1]), period - abs(key[1] - k2[1])) < tol):
                dup = True
                break
        if not dup:
            out.append(ev)
    return out


def css_cusp_events(sc: SampledCurve, families=None):
    """Cusps of the centre symmetry set: sign changes of the curvature
    denominator kappa_b^2 kappa_a' - kappa_a^2 kappa_b' along families,
    identified over the (a, b) ~ (b, a) double cover."""
    if families is None:
        families = pair_families(sc)
    events = []
    for idx, fam in enumerate(families):
        pa, ta, ka, kpa, pb, tb, kb, kpb, kb_eff = fam.jet_arrays()
        den = kb_eff**2 * kpa - ka**2 * kpb
        m = len(den)
        if m < 3:
            continue
        last = m if fam.cyclic else m - 1
        sc_ = fam.sc

        def den_at(s):
            t0 = sc_.t[0]
            period = sc_.period
            sb = fam.partner_at(s)
            _, ta1, ka1, kpa1 = sc_.jets_at(np.array([t0 + (s - t0) % period]))
            _, tb1, kb1, kpb1 = sc_.jets_at(np.array([t0 + (sb - t0) % period]))
            kbe = -np.sign(float(np.dot(ta1[0], tb1[0]))) * float(kb1[0])
            kpbe = float(kpb1[0])
            return kbe**2 * float(kpa1[0]) - float(ka1[0]) ** 2 * kpbe, sb

        for i in range(last):
            j = (i + 1) % m
            if den[i] * den[j] < 0.0:
                lo = fam.s_a[i]
                hi = fam.s_a[j] if j > i else fam.s_a[i] + (fam.s_a[1] - fam.s_a[0])
                dlo = den[i]
                root = lo
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    dm, _ = den_at(mid)
                    if dlo * dm <= 0.0:
                        hi = mid
                    else:
                        lo, dlo = mid, dm
                    root = 0.5 * (lo + hi)
                dval, sb = den_at(root)
                t0 = sc_.t[0]
                period = sc_.period
                sam = t0 + (root - t0) % period
                sbm = t0 + (sb - t0) % period
                _, ta1, ka1, _ = sc_.jets_at(np.array([sam]))
                pb1, tb1, kb1, _ = sc_.jets_at(np.array([sbm]))
                pa1 = sc_.jets_at(np.array([sam]))[0]
                kbe = -np.sign(float(np.dot(ta1[0], tb1[0]))) * float(kb1[0])
                ksum = float(ka1[0]) + kbe
                if abs(ksum) < 1e-10:
                    continue
                q = (float(ka1[0]) * pa1[0] + kbe * pb1[0]) / ksum
                events.append(SingularEvent(kind="cusp", lam=math.nan,
                                            s_a=float(sam), s_b=float(sbm),
                                            location=q, residual=float(dval),
                                            family_index=idx))
    return _identify_events(events, sc.period)


# ---------------------------------------------------------------------------
# inflexions of derived sets


def inflexion_events(sc: SampledCurve, lam: float, families=None):
    """Inflexion markers of the lam-equidistant: for each inflexion point
    a of the curve and each partner b, the two points lam*a + (1-lam)*b
    and (1-lam)*a + lam*b."""
    if lam in (0.0, 1.0):
        raise ValueError("lam must differ from 0 and 1")
    if sc.spec is None:
        raise ValueError("inflexion events need an analytic curve")
    events = []
    for s in inflexion_parameters(sc.spec):
        try:
            partners = parallel_partners(sc, s)
        except Exception:
            continue
        ja = sc.jets_at(np.array([s]))
        pa = ja[0][0]
        for b in partners:
            jb = sc.jets_at(np.array([b]))
            pb = jb[0][0]
            for sa, sb_, loc in (
                (s, b, lam * pa + (1 - lam) * pb),
                (b, s, lam * pb + (1 - lam) * pa),
            ):
                events.append(SingularEvent(
                    kind="inflexion", lam=lam, s_a=float(sa), s_b=float(sb_),
                    location=loc, residual=float(ja[2][0])))
    events.sort(key=lambda e: (e.s_a, e.s_b))
    return events


# ---------------------------------------------------------------------------
# parity and counting report


@dataclass
class ParityReport:
    lam: float
    cusp_count: int
    css_cusp_count: int
    checks: list
    conclusive: bool
    events: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.conclusive and all(c.status == "pass" for c in self.checks)


def parity_report(sc: SampledCurve, lam: float, families=None) -> ParityReport:
    """Cusp counts plus the parity and minimum-count checks.

    For lam != 1/2 the count must be even; the midpoint caustic must have
    an odd count of at least 3; the CSS at least 3 cusps.  Degenerate
    events or a centrally symmetric input make the report inconclusive.
    """
    if families is None:
        families = pair_families(sc)
    checks = []
    wc = wigner_caustic(sc, families)
    if wc.degenerate:
        checks.append(RunCheck("central_symmetry", "inconclusive", 0.0,
                               note="input is centrally symmetric"))
        return ParityReport(lam=lam, cusp_count=0, css_cusp_count=0,
                            checks=checks, conclusive=False)
    events = cusp_events(sc, lam, families)
    degenerate = [e for e in events if e.kind == "degenerate"]
    cusps = [e for e in events if e.kind == "cusp"]
    count = len(cusps)
    conclusive = not degenerate
    if degenerate:
        checks.append(RunCheck("generic_lambda", "inconclusive", len(degenerate),
                               note="degenerate (double-zero) events present"))
    if lam == 0.5:
        checks.append(RunCheck("cusp_count_odd", "pass" if count % 2 == 1 else "fail",
                               count, note="midpoint caustic parity"))
        checks.append(RunCheck("cusp_count_min3", "pass" if count >= 3 else "fail",
                               count, tol=3))
    else:
        checks.append(RunCheck("cusp_count_even", "pass" if count % 2 == 0 else "fail",
                               count, note="generic-ratio parity"))
    css_cusps = css_cusp_events(sc, families)
    checks.append(RunCheck("css_cusp_count_min3",
                           "pass" if len(css_cusps) >= 3 else "fail",
                           len(css_cusps), tol=3))
    return ParityReport(lam=lam, cusp_count=count, css_cusp_count=len(css_cusps),
                        checks=checks, conclusive=conclusive, events=events)


# ---------------------------------------------------------------------------
# singular ratio spectrum


@dataclass
class SpectrumFamily:
    family_index: int
    relation: str
    s: np.ndarray
    lam_star: np.ndarray
    skipped: int

    @property
    def range(self):
        return float(np.min(self.lam_star)), float(np.max(self.lam_star))


def singular_lambda_spectrum(sc: SampledCurve, families=None):
    """Per family, the graph s -> kappa(a)/(kappa(a)+kappa(b)): the ratio
    at which the pair generates a cusp.  Different-side families span
    ratios inside (0, 1); same-side families fall outside [0, 1]."""
    if families is None:
        families = pair_families(sc)
    out = []
    for idx, fam in enumerate(families):
        _, _, ka, _, _, _, _, _, kb_eff = fam.jet_arrays()
        den = ka + kb_eff
        ok = np.abs(den) >= 1e-10
        lam_star = ka[ok] / den[ok]
        if len(lam_star) == 0:
            continue
        out.append(SpectrumFamily(family_index=idx, relation=fam.relation,
                                  s=fam.s_a[ok], lam_star=lam_star,
                                  skipped=int(np.sum(~ok))))
    return out


def spectrum_range(spectra):
    """Union range over different-side (interior) families."""
    los, his = [], []
    for sp in spectra:
        lo, hi = sp.range
        if 0.0 < lo < 1.0 or 0.0 < hi < 1.0:
            los.append(lo)
            his.append(hi)
    if not los:
        return math.nan, math.nan
    return min(los), max(his)


# ---------------------------------------------------------------------------
# arcs and existence windows


@dataclass
class CurveArc:
    """A parameter range [s0, s1] of a sampled curve, with an optional
    translation of the arc (positions only; tangents and curvatures are
    translation invariant)."""

    sc: SampledCurve
    s0: float
    s1: float
    shift: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def grid(self, m=129):
        return np.linspace(self.s0, self.s1, m)

    def jets(self, params):
        pts, tan, ka, kp = self.sc.jets_at(np.asarray(params, dtype=float))
        return pts + self.shift, tan, ka, kp

    def endpoints(self):
        pts, tan, ka, kp = self.jets(np.array([self.s0, self.s1]))
        return (pts[0], tan[0], ka[0], kp[0]), (pts[1], tan[1], ka[1], kp[1])

    def rotation(self) -> float:
        phi = self.sc.phi_at(np.array([self.s0, self.s1]))
        return float(phi[1] - phi[0]) / TWO_PI

    def psi_values(self, m=257):
        return self.sc.psi_at(self.grid(m))

    def kappa_values(self, m=257):
        return self.jets(self.grid(m))[2]

    def contains(self, s, tol=1e-9) -> bool:
        period = self.sc.period
        k = math.floor((self.s0 - s) / period)
        for kk in (k, k + 1, k + 2):
            if self.s0 - tol <= s + kk * period <= self.s1 + tol:
                return True
        return False


@dataclass
class ExistenceWindow:
    """Ratios guaranteed to produce a singular equidistant point.

    lambdas is a list of closed intervals (lo, hi); isolated ratios are
    zero-width intervals and rays carry infinite bounds.  The mirror
    image under lam <-> 1-lam is always included.
    """

    source: str
    rho_min: float
    rho_max: float
    lambdas: list
    assumptions_ok: bool
    diagnostics: list
    arc0: tuple
    arc1: tuple

    @property
    def rho(self):
        return self.rho_min


MODES = ("curvature_ratio_diff_side", "curvature_ratio_same_side",
         "limiting_diff_side", "limiting_same_side",
         "parallelogram", "tangent_cone", "halfturn_pair")


def _with_mirror(intervals):
    out = list(intervals)
    for lo, hi in intervals:
        out.append((1.0 - hi, 1.0 - lo))
    out = [(min(a, b), max(a, b)) for a, b in out]
    out.sort()
    merged = []
    for lo, hi in out:
        if merged and lo <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def _parallel_check(checks, name, e0, e1, scale):
    p0, t0 = e0[0], e0[1]
    p1, t1 = e1[0], e1[1]
    ang = float(angle_dist_mod_pi(math.atan2(t0[1], t0[0]),
                                  math.atan2(t1[1], t1[0])))
    if np.linalg.norm(p0 - p1) < 1e-8 * scale and ang >= PARALLEL_TOL:
        checks.append(RunCheck(name, "pass", ang, tol=PARALLEL_TOL,
                               note="endpoints coincide; treated as limiting"))
        return True
    ok = ang < PARALLEL_TOL
    checks.append(RunCheck(name, "pass" if ok else "fail", ang, tol=PARALLEL_TOL))
    return ok


def _level_crossings(values, level, boundary_pad=1e-9):
    """Transversal crossings of a level by a sampled function; a level
    attained exactly or grazing the range boundary counts once."""
    s = np.sign(values - level)
    nz = s[s != 0]
    c = int(np.sum(nz[:-1] * nz[1:] < 0)) if len(nz) > 1 else 0
    if c == 0 and np.any(s == 0):
        return 1
    if c == 0 and (abs(level - values.min()) < boundary_pad
                   or abs(level - values.max()) < boundary_pad):
        return 1
    return c


def _partner_counts(arcA, arcB, m=257):
    """Partner multiplicity on arcB for interior samples of arcA."""
    psiA = arcA.psi_values(m)[1:-1]
    psiB = arcB.psi_values(m)
    lo, hi = float(psiB.min()), float(psiB.max())
    counts = np.zeros(len(psiA), dtype=int)
    for i, pa in enumerate(psiA):
        k0 = math.ceil((lo - pa) / math.pi - 1e-9)
        k1 = math.floor((hi - pa) / math.pi + 1e-9)
        c = 0
        for k in range(k0, k1 + 1):
            c += _level_crossings(psiB, pa + k * math.pi)
        counts[i] = c
    return counts


def _matched_pairs(arcA, arcB, m=33):
    """Sample parallel pairs (one leg per arc) by solving the line-angle
    match; returns a list of (sA, sB)."""
    out = []
    gridB = arcB.grid(513)
    psiB = arcB.sc.psi_at(gridB)
    for sA in arcA.grid(m)[1:-1]:
        pa = float(arcA.sc.psi_at(np.array([sA]))[0])
        k0 = math.ceil((float(psiB.min()) - pa) / math.pi - 1e-9)
        k1 = math.floor((float(psiB.max()) - pa) / math.pi + 1e-9)
        for k in range(k0, k1 + 1):
            level = pa + k * math.pi
            sgn = np.sign(psiB - level)
            idx = np.nonzero(np.diff(sgn) != 0)[0]
            if len(idx) == 0:
                continue
            i = idx[0]
            root = bisect_vec(lambda x: arcB.sc.psi_at(x) - level,
                              gridB[i:i + 1], gridB[i + 1:i + 2], iters=60,
                              ftol=1e-11)
            out.append((float(sA), float(root[0])))
            break
    return out


def _side_check(checks, name, arcA, arcB, want, m=33):
    from .curves import Jet2

    pairs = _matched_pairs(arcA, arcB, m)
    if not pairs:
        checks.append(RunCheck(name, "fail", 0, note="no matched pairs found"))
        return False
    bad = 0
    for sA, sB in pairs:
        pa, ta, ka, kpa = arcA.jets(np.array([sA]))
        pb, tb, kb, kpb = arcB.jets(np.array([sB]))
        if abs(float(ka[0])) < 1e-12 or abs(float(kb[0])) < 1e-12:
            continue
        ja = Jet2(sA, pa[0], ta[0], float(ka[0]), float(kpa[0]))
        jb = Jet2(sB, pb[0], tb[0], float(kb[0]), float(kpb[0]))
        if curved_side(ja, jb) != want:
            bad += 1
    ok = bad == 0
    checks.append(RunCheck(name, "pass" if ok else "fail", bad,
                           note=f"pairs tested: {len(pairs)}"))
    return ok


def _scale_of(*arcs):
    return max(1.0, max(float(np.abs(a.jets(a.grid(17))[0]).max()) for a in arcs))


def existence_windows(arc0: CurveArc, arc1: CurveArc, mode: str,
                      translate=None) -> ExistenceWindow:
    """Certify a guaranteed singular-ratio window for a pair of arcs.

    Every hypothesis of the selected construction is verified numerically
    and reported; assumptions_ok turns false at the first violated
    condition, but the window data is still computed when possible.
    translate shifts arc1 before the endpoint geometry is evaluated
    (arcs of one curve may be translated into the matching position).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; pick one of {MODES}")
    if translate is not None:
        arc1 = CurveArc(arc1.sc, arc1.s0, arc1.s1,
                        shift=np.asarray(translate, dtype=float))
    checks: list[RunCheck] = []
    scale = _scale_of(arc0, arc1)
    if mode in ("curvature_ratio_diff_side", "curvature_ratio_same_side"):
        rho_min, rho_max, intervals = _window_curvature_ratio(
            arc0, arc1, mode, checks, scale)
    elif mode in ("limiting_diff_side", "limiting_same_side"):
        rho_min = rho_max = math.nan
        intervals = _window_limiting(arc0, arc1, mode, checks, scale)
    elif mode in ("parallelogram", "tangent_cone"):
        rho_min, rho_max, intervals = _window_parallelogram(
            arc0, arc1, mode, checks, scale)
    else:
        rho_min, rho_max, intervals = _window_halfturn(arc0, arc1, checks, scale)
    ok = all(c.status == "pass" for c in checks)
    return ExistenceWindow(
        source=mode, rho_min=rho_min, rho_max=rho_max,
        lambdas=_with_mirror(intervals), assumptions_ok=ok,
        diagnostics=[f"{c.name}: {c.status} ({c.value}) {c.note}".strip()
                     for c in checks],
        arc0=(arc0.s0, arc0.s1), arc1=(arc1.s0, arc1.s1))


def _window_curvature_ratio(arc0, arc1, mode, checks, scale):
    e0s, e0e = arc0.endpoints()
    e1s, e1e = arc1.endpoints()

    def mismatch(ea, eb):
        # endpoints meeting at one point pair up in the limiting sense
        if np.linalg.norm(ea[0] - eb[0]) < 1e-8 * scale:
            return 0.0
        return float(angle_dist_mod_pi(math.atan2(ea[1][1], ea[1][0]),
                                       math.atan2(eb[1][1], eb[1][0])))

    # endpoint pairing: starts together / ends together, or crossed
    straight = mismatch(e0s, e1s) + mismatch(e0e, e1e)
    crossed = mismatch(e0s, e1e) + mismatch(e0e, e1s)
    if crossed < straight:
        p_pair = (e0s, e1e)
        q_pair = (e0e, e1s)
    else:
        p_pair = (e0s, e1s)
        q_pair = (e0e, e1e)
    _parallel_check(checks, "endpoint_tangents_parallel_p", *p_pair, scale)
    _parallel_check(checks, "endpoint_tangents_parallel_q", *q_pair, scale)
    counts = _partner_counts(arc1, arc0)
    ok = bool(np.all(counts >= 1))
    checks.append(RunCheck("partner_exists_on_arc0", "pass" if ok else "fail",
                           int(np.sum(counts < 1)), note="arc1 samples lacking a partner"))
    k0 = arc0.kappa_values()
    sign0 = np.sign(k0[np.abs(k0).argmax()])
    ok = bool(np.all(sign0 * k0 > 0))
    checks.append(RunCheck("curvature_signed_arc0", "pass" if ok else "fail",
                           float(np.min(sign0 * k0)), tol=0.0,
                           note="one strict sign along arc0"))
    kp1 = p_pair[1][2]
    kq1 = q_pair[1][2]
    ok = sign0 * kp1 > 0 and sign0 * kq1 > 0
    checks.append(RunCheck("curvature_signed_arc1_endpoints",
                           "pass" if ok else "fail",
                           float(min(sign0 * kp1, sign0 * kq1)), tol=0.0))
    rot = abs(arc0.rotation())
    ok = rot <= 0.5 + ROTATION_SLACK
    checks.append(RunCheck("rotation_arc0_max_half", "pass" if ok else "fail",
                           rot, tol=0.5))
    want = ("different_side" if mode == "curvature_ratio_diff_side"
            else "same_side")
    _side_check(checks, f"curved_{want}", arc0, arc1, want)

    rho1 = kp1 / p_pair[0][2]
    rho2 = kq1 / q_pair[0][2]
    rho_min, rho_max = sorted((float(rho1), float(rho2)))
    if mode == "curvature_ratio_diff_side":
        intervals = [(rho_min / (1 + rho_min), rho_max / (1 + rho_max))]
    else:
        if rho_min > 1.0:
            a = rho_min / (rho_min - 1.0)
            b = rho_max / (rho_max - 1.0)
            intervals = [(min(a, b), max(a, b))]
        elif rho_min < 1.0 < rho_max:
            x = rho_max / (rho_max - 1.0)
            intervals = [(-math.inf, 1.0 - x), (x, math.inf)]
        else:
            checks.append(RunCheck("ratio_range_covered", "fail", rho_max,
                                   note="rho_max <= 1: configuration not covered"))
            intervals = []
    return rho_min, rho_max, intervals


def _window_limiting(arc0, arc1, mode, checks, scale):
    e0s, e0e = arc0.endpoints()
    e1s, e1e = arc1.endpoints()
    _parallel_check(checks, "endpoint_tangents_parallel_p", e0s, e1s, scale)
    _parallel_check(checks, "endpoint_tangents_parallel_q", e0e, e1e, scale)
    counts = _partner_counts(arc1, arc0)
    ok = bool(np.all(counts >= 1))
    checks.append(RunCheck("partner_exists_on_arc0", "pass" if ok else "fail",
                           int(np.sum(counts < 1))))
    k0 = arc0.kappa_values()
    k1 = arc1.kappa_values()
    ktol = 1e-6 * max(np.abs(k0).max(), np.abs(k1).max())
    ok = abs(e0s[2]) < ktol
    checks.append(RunCheck("arc0_start_inflexion", "pass" if ok else "fail",
                           float(abs(e0s[2])), tol=ktol))
    ok = abs(e1e[2]) < ktol
    checks.append(RunCheck("arc1_end_inflexion", "pass" if ok else "fail",
                           float(abs(e1e[2])), tol=ktol))
    interior0 = k0[2:]
    sign0 = np.sign(interior0[np.abs(interior0).argmax()])
    ok = bool(np.all(sign0 * interior0 > 0))
    checks.append(RunCheck("curvature_signed_arc0_interior",
                           "pass" if ok else "fail",
                           float(np.min(sign0 * interior0)), tol=0.0))
    ok = sign0 * e1s[2] > 0
    checks.append(RunCheck("curvature_arc1_start", "pass" if ok else "fail",
                           float(sign0 * e1s[2]), tol=0.0))
    rot = abs(arc0.rotation())
    ok = rot <= 0.5 + ROTATION_SLACK
    checks.append(RunCheck("rotation_arc0_max_half", "pass" if ok else "fail",
                           rot, tol=0.5))
    want = "different_side" if mode == "limiting_diff_side" else "same_side"
    span0 = arc0.s1 - arc0.s0
    span1 = arc1.s1 - arc1.s0
    inner0 = CurveArc(arc0.sc, arc0.s0 + 0.05 * span0, arc0.s1 - 0.05 * span0,
                      shift=arc0.shift)
    inner1 = CurveArc(arc1.sc, arc1.s0 + 0.05 * span1, arc1.s1 - 0.05 * span1,
                      shift=arc1.shift)
    _side_check(checks, f"curved_{want}_near_endpoints", inner0, inner1, want, m=17)
    if mode == "limiting_diff_side":
        return [(0.0, 1.0)]
    return [(-math.inf, 0.0), (1.0, math.inf)]


def _shared_endpoint(arc0, arc1, checks, scale):
    e0s, e0e = arc0.endpoints()
    e1s, e1e = arc1.endpoints()
    combos = [
        (np.linalg.norm(e0s[0] - e1s[0]), e0s, e0e, e1s, e1e),
        (np.linalg.norm(e0s[0] - e1e[0]), e0s, e0e, e1e, e1s),
        (np.linalg.norm(e0e[0] - e1s[0]), e0e, e0s, e1s, e1e),
        (np.linalg.norm(e0e[0] - e1e[0]), e0e, e0s, e1e, e1s),
    ]
    combos.sort(key=lambda c: c[0])
    d, p0, q0, p1, q1 = combos[0]
    ok = d < 1e-6 * scale
    checks.append(RunCheck("arcs_share_endpoint", "pass" if ok else "fail",
                           float(d), tol=1e-6 * scale))
    return p0, q0, p1, q1


def _window_parallelogram(arc0, arc1, mode, checks, scale):
    p0, q0, p1, q1 = _shared_endpoint(arc0, arc1, checks, scale)
    p = 0.5 * (p0[0] + p1[0])
    tp0, tp1 = p0[1], p1[1]
    if mode == "parallelogram":
        _parallel_check(checks, "tangent_p0_vs_q1", p0, q1, scale)
        _parallel_check(checks, "tangent_q0_vs_p1", q0, p1, scale)
    else:
        _parallel_check(checks, "tangent_p0_vs_p1", p0, p1, scale)
        _parallel_check(checks, "tangent_q0_vs_q1", q0, q1, scale)
    for name, arc in (("arc0", arc0), ("arc1", arc1)):
        k = arc.kappa_values()
        s = np.sign(k[np.abs(k).argmax()])
        ok = bool(np.all(s * k > 0))
        checks.append(RunCheck(f"curvature_nonvanishing_{name}",
                               "pass" if ok else "fail", float(np.min(s * k)),
                               tol=0.0))
    r0, r1 = abs(arc0.rotation()), abs(arc1.rotation())
    ok = abs(r0 - r1) <= ROTATION_SLACK and max(r0, r1) <= 0.5 + ROTATION_SLACK
    checks.append(RunCheck("rotations_equal_below_half", "pass" if ok else "fail",
                           float(max(r0, r1)), tol=0.5,
                           note=f"|r0-r1|={abs(r0-r1):.2e}"))
    c01 = _partner_counts(arc1, arc0)
    c10 = _partner_counts(arc0, arc1)
    ok = bool(np.all(c01 == 1) and np.all(c10 == 1))
    checks.append(RunCheck("partner_unique_both_ways", "pass" if ok else "fail",
                           int(np.sum(c01 != 1) + np.sum(c10 != 1))))
    want = "different_side" if mode == "parallelogram" else "same_side"
    _side_check(checks, f"curved_{want}_all_pairs", arc0, arc1, want)

    try:
        if mode == "parallelogram":
            l0_p, l0_d = q1[0], tp0  # line through q1 parallel to T_p(arc0)
            l1_p, l1_d = q0[0], tp1
            c = line_intersection(l0_p, l0_d, l1_p, l1_d)
            b0 = line_intersection(l0_p, l0_d, p, tp1)
            b1 = line_intersection(l1_p, l1_d, p, tp0)
            r1_ = signed_ratio(q1[0] - b0, c - b0, tol=1e-6)
            r2_ = signed_ratio(q0[0] - b1, c - b1, tol=1e-6)
        else:
            l0_p, l0_d = q0[0], tp0
            lp_p, lp_d = p, q0[1]  # through p parallel to the tangent at q0
            c = line_intersection(l0_p, l0_d, q1[0], q1[1])
            b0 = line_intersection(l0_p, l0_d, lp_p, lp_d)
            b1 = line_intersection(p, tp1, q1[0], q1[1])
            r1_ = signed_ratio(c - b1, q1[0] - b1, tol=1e-6)
            r2_ = signed_ratio(c - b0, q0[0] - b0, tol=1e-6)
    except ValueError as e:
        checks.append(RunCheck("ratio_geometry", "fail", 0.0, note=str(e)))
        return math.nan, math.nan, []
    rho_min, rho_max = sorted((float(r1_), float(r2_)))
    ok = rho_min > 0
    checks.append(RunCheck("ratios_positive", "pass" if ok else "fail", rho_min,
                           tol=0.0))
    if mode == "parallelogram":
        if rho_max < 1.0:
            x = rho_max / (1.0 + rho_max)
            intervals = [(x, 1.0 - x)]
        elif rho_min > 1.0:
            x = 1.0 / (1.0 + rho_min)
            intervals = [(x, 1.0 - x)]
        else:
            checks.append(RunCheck("ratio_range_covered", "fail", rho_max,
                                   note="ratio range straddles 1"))
            intervals = []
    else:
        if rho_max < 1.0:
            intervals = [(-math.inf, -rho_max / (1.0 - rho_max)),
                         (1.0 / (1.0 - rho_max), math.inf)]
        elif rho_min > 1.0:
            intervals = [(-math.inf, 1.0 / (1.0 - rho_min)),
                         (rho_min / (rho_min - 1.0), math.inf)]
        else:
            checks.append(RunCheck("ratio_range_covered", "fail", rho_max,
                                   note="ratio range straddles 1"))
            intervals = []
    return rho_min, rho_max, intervals


def _halfturn_rho(arc0, arc1, checks=None, scale=1.0):
    ch = [] if checks is None else checks
    p0, q0, p1, q1 = _shared_endpoint(arc0, arc1, ch, scale)
    p = 0.5 * (p0[0] + p1[0])
    if np.linalg.norm(q1[0] - p) < 1e-9 * scale:
        if checks is not None:
            checks.append(RunCheck("halfturn_geometry", "fail", 0.0,
                                   note="q1 coincides with p"))
        return math.nan, None
    try:
        c = line_intersection(p, q1[0] - p, q0[0], q0[1])
    except ValueError:
        if checks is not None:
            checks.append(RunCheck("halfturn_geometry", "fail", 0.0,
                                   note="chord parallel to the tangent at q0"))
        return math.nan, None
    rho = float(np.linalg.norm(q1[0] - p) / np.linalg.norm(c - p))
    return rho, (p0, q0, p1, q1)


def _window_halfturn(arc0, arc1, checks, scale):
    rho, ends = _halfturn_rho(arc0, arc1, checks, scale)
    if ends is None:
        return math.nan, math.nan, []
    p0, q0, p1, q1 = ends
    for name, ea, eb in (("tangents_p0_q0", p0, q0), ("tangents_p0_p1", p0, p1),
                         ("tangents_p0_q1", p0, q1)):
        _parallel_check(checks, name, ea, eb, scale)
    for name, arc in (("arc0", arc0), ("arc1", arc1)):
        k = arc.kappa_values()
        s = np.sign(k[np.abs(k).argmax()])
        ok = bool(np.all(s * k > 0))
        checks.append(RunCheck(f"curvature_nonvanishing_{name}",
                               "pass" if ok else "fail", float(np.min(s * k)),
                               tol=0.0))
        rot = abs(arc.rotation())
        ok = abs(rot - 0.5) <= ROTATION_SLACK
        checks.append(RunCheck(f"rotation_half_{name}", "pass" if ok else "fail",
                               rot, tol=0.5))
    pairs = _matched_pairs(arc0, arc1)
    sides = set()
    from .curves import Jet2

    for sA, sB in pairs:
        pa, ta, ka, kpa = arc0.jets(np.array([sA]))
        pb, tb, kb, kpb = arc1.jets(np.array([sB]))
        if abs(float(ka[0])) < 1e-12 or abs(float(kb[0])) < 1e-12:
            continue
        sides.add(curved_side(Jet2(sA, pa[0], ta[0], float(ka[0]), float(kpa[0])),
                              Jet2(sB, pb[0], tb[0], float(kb[0]), float(kpb[0]))))
    if len(sides) != 1:
        checks.append(RunCheck("curved_side_constant", "fail", len(sides),
                               note="mixed or undetermined curving"))
        return rho, rho, []
    side = sides.pop()
    checks.append(RunCheck("curved_side_constant", "pass", side))
    if side == "different_side":
        pts = sorted((1.0 / (1.0 + rho), rho / (1.0 + rho)))
        intervals = [(pts[0], pts[0]), (pts[1], pts[1])]
    else:
        if abs(rho - 1.0) < 1e-9:
            checks.append(RunCheck("halfturn_ratio_not_one", "fail", rho,
                                   note="formula undefined at ratio 1"))
            return rho, rho, []
        pts = sorted((-1.0 / (rho - 1.0), rho / (rho - 1.0)))
        intervals = [(pts[0], pts[0]), (pts[1], pts[1])]
    return rho, rho, intervals


# ---------------------------------------------------------------------------
# loop-driven windows


def _psi_inverse(sc: SampledCurve, level: float, lo: float, hi: float) -> float:
    f = lambda x: sc.psi_at(x) - level
    flo = float(f(np.array([lo]))[0])
    fhi = float(f(np.array([hi]))[0])
    if flo * fhi > 0:
        raise ValueError("tangent-angle level not attained on the arc")
    root = bisect_vec(f, np.array([lo]), np.array([hi]), iters=80, ftol=1e-12)
    return float(root[0])


def loop_existence_window(loop: LoopSegment):
    """Build the certified window for a loop.

    Convex loops split into the maximal matched sub-arcs emanating from
    the crossing (parallelogram construction); non-convex loops split
    into consecutive half-turn sub-arcs with the split location balanced
    so the half-turn ratio is as close to 1 as possible.
    Returns (arc0, arc1, window).
    """
    sc = loop.parent
    u, v = loop.s_start, loop.s_end
    psi_u = float(sc.psi_at(np.array([u]))[0])
    psi_v = float(sc.psi_at(np.array([v]))[0])
    span = psi_v - psi_u
    sigma = 1.0 if span >= 0 else -1.0
    if abs(span) <= math.pi + 1e-9:
        raise ValueError("loop tangent line turns by half a turn or less; "
                         "it has no parallel pairs")
    if loop.convexity == "convex_loop":
        s_e = _psi_inverse(sc, psi_v - sigma * math.pi, u, v)
        s_b = _psi_inverse(sc, psi_u + sigma * math.pi, u, v)
        arc0 = CurveArc(sc, u, s_e)
        arc1 = CurveArc(sc, s_b, v)
        return arc0, arc1, existence_windows(arc0, arc1, "parallelogram")
    # non-convex: scan the start of the double half-turn split for a
    # balanced ratio (rho = 1 pins the midpoint ratio)
    latest = _psi_inverse(sc, psi_v - 2 * sigma * math.pi, u, v)

    def arcs_at(s):
        s1 = _psi_inverse(sc, float(sc.psi_at(np.array([s]))[0]) + sigma * math.pi, s, v)
        s2 = _psi_inverse(sc, float(sc.psi_at(np.array([s]))[0]) + 2 * sigma * math.pi, s1, v)
        return CurveArc(sc, s, s1), CurveArc(sc, s1, s2)

    grid = np.linspace(u, latest, 33)
    vals = []
    for s in grid:
        try:
            a0, a1 = arcs_at(float(s))
            rho, _ = _halfturn_rho(a0, a1)
        except ValueError:
            rho = math.nan
        vals.append(rho - 1.0)
    vals = np.array(vals)
    best = None
    for i in range(len(grid) - 1):
        if np.isnan(vals[i]) or np.isnan(vals[i + 1]):
            continue
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0:
            lo, hi, flo = float(grid[i]), float(grid[i + 1]), vals[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                a0, a1 = arcs_at(mid)
                fm, _ = _halfturn_rho(a0, a1)
                fm -= 1.0
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            best = 0.5 * (lo + hi)
            break
    if best is None:
        k = int(np.nanargmin(np.abs(vals)))
        best = float(grid[k])
    arc0, arc1 = arcs_at(best)
    return arc0, arc1, existence_windows(arc0, arc1, "halfturn_pair")


# ---------------------------------------------------------------------------
# verification


@dataclass
class ExistenceReport:
    window: ExistenceWindow
    probes: list  # (lam, events_found)
    passed: bool
    note: str = ""


def _probe_ratios(window: ExistenceWindow, per_interval=5):
    probes = []
    for lo, hi in window.lambdas:
        if lo == hi:
            probes.append(lo)
            continue
        flo = max(lo, -2.0)
        fhi = min(hi, 3.0)
        if fhi <= flo:
            continue
        width = fhi - flo
        eps = min(1e-3, 0.1 * width)
        probes.extend(np.linspace(flo + eps, fhi - eps, per_interval))
    out = []
    for p in probes:
        if all(abs(p - q) > 1e-9 for q in out) and abs(p) > 1e-9 and abs(p - 1) > 1e-9:
            out.append(float(p))
    return sorted(out)


def verify_existence(sc: SampledCurve, window: ExistenceWindow, families=None,
                     per_interval=5) -> ExistenceReport:
    """Probe ratios inside the guaranteed set and demand at least one
    cusp event from pairs joining the two source arcs at each of them."""
    if families is None:
        families = pair_families(sc)
    a0 = CurveArc(sc, *window.arc0)
    a1 = CurveArc(sc, *window.arc1)
    probes = []
    ok_all = True
    for lam in _probe_ratios(window, per_interval):
        events = cusp_events(sc, lam, families, identify=(lam == 0.5))
        hits = [e for e in events if e.kind == "cusp" and (
            (a0.contains(e.s_a) and a1.contains(e.s_b))
            or (a0.contains(e.s_b) and a1.contains(e.s_a)))]
        probes.append((lam, len(hits)))
        ok_all = ok_all and len(hits) >= 1
    note = "" if window.assumptions_ok else \
        "window assumptions not fully satisfied; result is empirical only"
    return ExistenceReport(window=window, probes=probes, passed=ok_all, note=note)
