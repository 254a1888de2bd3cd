"""Curve descriptions, analytic jets, dense sampling and loop extraction.

Three curve kinds are supported:

* ``support_fourier`` -- a convex curve given by a trigonometric support
  function h(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta).
  The curve point is h*u + h'*u_perp with u = (cos theta, sin theta),
  and the radius of curvature is h + h''.
* ``param_fourier`` -- x(t), y(t) each a trigonometric polynomial.
* ``polyline`` -- a closed vertex list; derivatives come from local
  least-squares cubic fits (accuracy O(h^2), documented).

All jets carry the convention: curvature is positive where the curve
turns left relative to its travel direction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CurveSpecError, LiftError, RegularityError
from .util import TWO_PI, cross2, rot90, wrap_half_pi, wrap_pi

VALIDATE_SAMPLES = 4096
SPEED_EPS = 1e-12

KINDS = ("support_fourier", "param_fourier", "polyline")


# ---------------------------------------------------------------------------
# trigonometric series


@dataclass
class TrigSeries:
    """c0 + sum over (k, a, b) of a*cos(k t) + b*sin(k t)."""

    c0: float = 0.0
    harmonics: tuple = ()  # tuple of (k, a, b)

    def eval(self, t, deriv=0):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.c0 if deriv == 0 else 0.0)
        for k, a, b in self.harmonics:
            kt = k * t
            p = k**deriv
            # derivative cycle of (a cos, b sin)
            r = deriv % 4
            if r == 0:
                out = out + p * (a * np.cos(kt) + b * np.sin(kt))
            elif r == 1:
                out = out + p * (-a * np.sin(kt) + b * np.cos(kt))
            elif r == 2:
                out = out + p * (-a * np.cos(kt) - b * np.sin(kt))
            else:
                out = out + p * (a * np.sin(kt) - b * np.cos(kt))
        return out

    @staticmethod
    def from_dict(d):
        c0 = float(d.get("c0", 0.0))
        harm = []
        for h in d.get("harmonics", []):
            k = int(h["k"])
            if k < 1:
                raise CurveSpecError("harmonic index k must be >= 1")
            harm.append((k, float(h.get("a", 0.0)), float(h.get("b", 0.0))))
        return TrigSeries(c0, tuple(harm))

    def to_dict(self):
        return {
            "c0": self.c0,
            "harmonics": [{"k": k, "a": a, "b": b} for k, a, b in self.harmonics],
        }


# ---------------------------------------------------------------------------
# curve specification


@dataclass
class CurveSpec:
    """Validated description of a closed planar curve."""

    kind: str
    orientation: str = "ccw"
    support: TrigSeries | None = None
    x: TrigSeries | None = None
    y: TrigSeries | None = None
    points: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def period(self) -> float:
        if self.kind == "polyline":
            return float(self._vertex_arclen()[-1])
        return TWO_PI

    # -- polyline helpers ---------------------------------------------------

    def _vertex_arclen(self):
        """Cumulative chord length over vertices, closing edge included."""
        if "varc" not in self._cache:
            pts = self.points
            seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
            self._cache["varc"] = np.concatenate([[0.0], np.cumsum(seg)])
        return self._cache["varc"]

    def _vertex_fits(self):
        """Per-vertex least-squares cubics x(s), y(s) on 5-point windows."""
        if "fits" not in self._cache:
            pts = self.points
            m = len(pts)
            cum = self._vertex_arclen()
            total = cum[-1]
            cx = np.empty((m, 4))
            cy = np.empty((m, 4))
            for j in range(m):
                idx = (np.arange(j - 2, j + 3)) % m
                s = cum[idx % m].copy()
                # unwrap parameters so the window is monotone around vertex j
                offs = np.zeros(5)
                offs[np.arange(j - 2, j + 3) < 0] = -total
                offs[np.arange(j - 2, j + 3) >= m] = total
                s = s + offs - cum[j]
                w = pts[idx]
                cx[j] = np.polyfit(s, w[:, 0], 3)
                cy[j] = np.polyfit(s, w[:, 1], 3)
            self._cache["fits"] = (cx, cy)
        return self._cache["fits"]


def support_curve(c0, harmonics=(), orientation="ccw") -> CurveSpec:
    """Convex curve from a trigonometric support function."""
    series = TrigSeries(float(c0), tuple((int(k), float(a), float(b)) for k, a, b in harmonics))
    spec = CurveSpec(kind="support_fourier", orientation=orientation, support=series)
    _validate(spec)
    return spec


def param_curve(x, y, orientation="ccw") -> CurveSpec:
    """Regular closed curve from trigonometric coordinate functions.

    x and y are TrigSeries or (c0, harmonics) tuples.
    """
    def coerce(s):
        if isinstance(s, TrigSeries):
            return s
        c0, harm = s
        return TrigSeries(float(c0), tuple((int(k), float(a), float(b)) for k, a, b in harm))

    spec = CurveSpec(kind="param_fourier", orientation=orientation, x=coerce(x), y=coerce(y))
    _validate(spec)
    return spec


def polyline_curve(points, orientation=None) -> CurveSpec:
    """Closed curve through an ordered vertex list (first = last identified)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise CurveSpecError("polyline points must be an (n, 2) array")
    if len(pts) >= 2 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    spec = CurveSpec(kind="polyline", orientation=orientation or "ccw", points=pts)
    _validate(spec, check_orientation=orientation is not None)
    return spec


def _validate(spec: CurveSpec, check_orientation=False) -> None:
    if spec.orientation not in ("ccw", "cw"):
        raise CurveSpecError(f"unknown orientation {spec.orientation!r}")
    if spec.kind == "support_fourier":
        t = np.linspace(0.0, TWO_PI, VALIDATE_SAMPLES, endpoint=False)
        radius = spec.support.eval(t) + spec.support.eval(t, 2)
        if radius.min() <= 0.0:
            raise CurveSpecError(
                "support function violates convexity: h + h'' reaches "
                f"{radius.min():.6g} (must stay positive)"
            )
    elif spec.kind == "param_fourier":
        t = np.linspace(0.0, TWO_PI, VALIDATE_SAMPLES, endpoint=False)
        dx = spec.x.eval(t, 1)
        dy = spec.y.eval(t, 1)
        speed = np.hypot(dx, dy)
        if speed.min() <= SPEED_EPS:
            raise CurveSpecError(
                f"curve is irregular: |velocity| reaches {speed.min():.3g}"
            )
    elif spec.kind == "polyline":
        pts = spec.points
        if len(np.unique(np.round(pts, 12), axis=0)) < 8:
            raise CurveSpecError("polyline needs at least 8 distinct vertices")
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if seg.min() <= 0.0:
            raise CurveSpecError("polyline has a zero-length edge")
        if check_orientation:
            area = 0.5 * np.sum(cross2(pts, np.roll(pts, -1, axis=0)))
            if (area > 0) != (spec.orientation == "ccw"):
                raise CurveSpecError(
                    "declared orientation disagrees with vertex order "
                    f"(signed area {area:.6g})"
                )
    else:
        raise CurveSpecError(f"unknown curve kind {spec.kind!r}")


def parse_curve_spec(text) -> CurveSpec:
    """Parse the JSON curve format (document string or parsed dict)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise CurveSpecError(f"malformed curve document: {e}") from None
    else:
        doc = text
    if not isinstance(doc, dict) or "kind" not in doc:
        raise CurveSpecError("curve document must be an object with a 'kind'")
    kind = doc["kind"]
    orientation = doc.get("orientation", "ccw")
    if kind == "support_fourier":
        series = TrigSeries.from_dict(doc)
        spec = CurveSpec(kind=kind, orientation=orientation, support=series)
        _validate(spec)
        return spec
    if kind == "param_fourier":
        if "x" not in doc or "y" not in doc:
            raise CurveSpecError("param_fourier needs 'x' and 'y' coefficient objects")
        spec = CurveSpec(
            kind=kind,
            orientation=orientation,
            x=TrigSeries.from_dict(doc["x"]),
            y=TrigSeries.from_dict(doc["y"]),
        )
        _validate(spec)
        return spec
    if kind == "polyline":
        if "points" not in doc:
            raise CurveSpecError("polyline needs a 'points' list")
        return polyline_curve(doc["points"], orientation=doc.get("orientation"))
    raise CurveSpecError(f"unknown curve kind {kind!r}")


def curve_spec_to_json(spec: CurveSpec) -> str:
    doc = {"kind": spec.kind, "orientation": spec.orientation}
    if spec.kind == "support_fourier":
        doc.update(spec.support.to_dict())
    elif spec.kind == "param_fourier":
        doc["x"] = spec.x.to_dict()
        doc["y"] = spec.y.to_dict()
    else:
        doc["points"] = spec.points.tolist()
    return json.dumps(doc, sort_keys=True)


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet2:
    """Pointwise 2-jet: position, unit tangent, curvature and its
    arc-length derivative."""

    t_param: float
    p: np.ndarray
    tangent: np.ndarray
    kappa: float
    kappa_prime: float

    @property
    def normal(self):
        """Left normal (rotate tangent by +90 degrees)."""
        return rot90(self.tangent)

    @property
    def center_of_curvature(self):
        if self.kappa == 0.0:
            raise SingularJetError("curvature vanishes; no center of curvature")
        return self.p + self.normal / self.kappa


class SingularJetError(RegularityError):
    pass


def _jets_batch(spec: CurveSpec, t):
    """Vectorized jet evaluation: returns (points, tangents, kappa, kappa')."""
    t = np.asarray(t, dtype=float)
    sign = 1.0 if spec.orientation == "ccw" else -1.0
    if spec.kind == "support_fourier":
        theta = sign * t
        h = spec.support.eval(theta)
        h1 = spec.support.eval(theta, 1)
        h2 = spec.support.eval(theta, 2)
        h3 = spec.support.eval(theta, 3)
        radius = h + h2
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        uperp = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        pts = h[..., None] * u + h1[..., None] * uperp
        tangents = sign * uperp
        kappa = sign / radius
        kappa_prime = -(h1 + h3) / radius**3
        return pts, tangents, kappa, kappa_prime
    if spec.kind == "param_fourier":
        u = sign * t
        x = spec.x.eval(u)
        y = spec.y.eval(u)
        d1 = np.stack([sign * spec.x.eval(u, 1), sign * spec.y.eval(u, 1)], axis=-1)
        d2 = np.stack([spec.x.eval(u, 2), spec.y.eval(u, 2)], axis=-1)
        d3 = np.stack([sign * spec.x.eval(u, 3), sign * spec.y.eval(u, 3)], axis=-1)
        return _param_jets(np.stack([x, y], axis=-1), d1, d2, d3)
    if spec.kind == "polyline":
        return _polyline_jets(spec, t)
    raise CurveSpecError(f"unknown curve kind {spec.kind!r}")


def _param_jets(pts, d1, d2, d3):
    speed = np.linalg.norm(d1, axis=-1)
    if np.any(speed <= SPEED_EPS):
        raise RegularityError("velocity vanishes at an evaluation point")
    tangents = d1 / speed[..., None]
    num = cross2(d1, d2)
    kappa = num / speed**3
    dn = cross2(d1, d3)
    dot12 = np.einsum("...i,...i->...", d1, d2)
    dkappa_dt = (dn - 3.0 * num * dot12 / speed**2) / speed**3
    kappa_prime = dkappa_dt / speed
    return pts, tangents, kappa, kappa_prime


def _polyline_jets(spec: CurveSpec, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    cum = spec._vertex_arclen()
    total = cum[-1]
    cx, cy = spec._vertex_fits()
    tm = np.mod(t, total)
    j = np.searchsorted(cum, tm, side="right") - 1
    j = np.clip(j, 0, len(spec.points) - 1)
    # snap to the nearest vertex so the local fit is well centered
    nxt = (j + 1) % len(spec.points)
    right_end = cum[j + 1]
    use_next = (right_end - tm) < (tm - cum[j])
    center = np.where(use_next, nxt, j)
    base = np.where(use_next, right_end, cum[j])
    d = tm - base  # signed offset from the window center
    ax, bx, cxx, dx = (cx[center, k] for k in range(4))
    ay, by, cyy, dy = (cy[center, k] for k in range(4))
    px = ((ax * d + bx) * d + cxx) * d + dx
    py = ((ay * d + by) * d + cyy) * d + dy
    vx = (3 * ax * d + 2 * bx) * d + cxx
    vy = (3 * ay * d + 2 * by) * d + cyy
    axx = 6 * ax * d + 2 * bx
    ayy = 6 * ay * d + 2 * by
    jx = 6 * ax
    jy = 6 * ay
    pts = np.stack([px, py], axis=-1)
    d1 = np.stack([vx, vy], axis=-1)
    d2 = np.stack([axx, ayy], axis=-1)
    d3 = np.stack([jx, jy], axis=-1)
    out = _param_jets(pts, d1, d2, d3)
    if np.isscalar(t) or t.shape == ():
        return tuple(a[0] for a in out)
    return out


def evaluate_jet(spec: CurveSpec, t: float) -> Jet2:
    """Full 2-jet of the curve at parameter t."""
    pts, tangents, kappa, kappa_prime = _jets_batch(spec, np.array([float(t)]))
    return Jet2(
        t_param=float(t),
        p=pts[0],
        tangent=tangents[0],
        kappa=float(kappa[0]),
        kappa_prime=float(kappa_prime[0]),
    )


# ---------------------------------------------------------------------------
# sampled curves


@dataclass
class SampledCurve:
    """Dense samples of a closed curve with lifted tangent angles.

    phi is the lifted angle of the unit tangent (vector field); psi is the
    lifted angle of the tangent line (mod-pi field).  Both have one more
    entry than there are samples: the last entry closes the loop.  For
    smooth curves the two lifts agree; psi stays continuous across cusp
    points of re-ingested singular curves, where phi is undefined.
    """

    spec: CurveSpec | None
    t: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    kappa: np.ndarray
    kappa_prime: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    arclen: np.ndarray
    period: float
    rotation_number: float
    valid: np.ndarray

    @property
    def n(self) -> int:
        return len(self.t)

    def jet_at(self, t: float) -> Jet2:
        if self.spec is not None:
            return evaluate_jet(self.spec, t)
        return _stencil_jet(self, t)

    def jets_at(self, t):
        if self.spec is not None:
            return _jets_batch(self.spec, t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        jets = [_stencil_jet(self, float(x)) for x in t]
        return (
            np.array([j.p for j in jets]),
            np.array([j.tangent for j in jets]),
            np.array([j.kappa for j in jets]),
            np.array([j.kappa_prime for j in jets]),
        )

    def _grid_ext(self):
        return np.concatenate([self.t, [self.t[0] + self.period]])

    def psi_at(self, t):
        """Lifted tangent-line angle at arbitrary parameters."""
        t = np.asarray(t, dtype=float)
        t0 = self.t[0]
        winds = np.floor((t - t0) / self.period)
        tm = t - winds * self.period
        span = self.psi[-1] - self.psi[0]
        lin = np.interp(tm, self._grid_ext(), self.psi) + winds * span
        if self.spec is None:
            return lin
        _, tangents, _, _ = _jets_batch(self.spec, t)
        raw = np.arctan2(tangents[..., 1], tangents[..., 0])
        return raw + np.pi * np.round((lin - raw) / np.pi)

    def phi_at(self, t):
        """Lifted tangent-vector angle at arbitrary parameters."""
        t = np.asarray(t, dtype=float)
        t0 = self.t[0]
        winds = np.floor((t - t0) / self.period)
        tm = t - winds * self.period
        span = self.phi[-1] - self.phi[0]
        lin = np.interp(tm, self._grid_ext(), self.phi) + winds * span
        if self.spec is None:
            return lin
        _, tangents, _, _ = _jets_batch(self.spec, t)
        raw = np.arctan2(tangents[..., 1], tangents[..., 0])
        return raw + TWO_PI * np.round((lin - raw) / TWO_PI)


def _stencil_jet(sc: SampledCurve, t: float) -> Jet2:
    """Jet from a local cubic fit on the stored samples (no spec)."""
    tm = (t - sc.t[0]) % sc.period + sc.t[0]
    j = int(np.argmin(np.abs(((sc.t - tm) + sc.period / 2) % sc.period - sc.period / 2)))
    idx = np.arange(j - 2, j + 3) % sc.n
    s = sc.t[idx].copy()
    s += sc.period * (np.arange(j - 2, j + 3) // sc.n)
    shift = s - tm
    shift -= sc.period * np.round(shift / sc.period)
    w = sc.points[idx]
    cx = np.polyfit(shift, w[:, 0], 3)
    cy = np.polyfit(shift, w[:, 1], 3)
    p = np.array([cx[3], cy[3]])
    d1 = np.array([cx[2], cy[2]])
    d2 = np.array([2 * cx[1], 2 * cy[1]])
    d3 = np.array([6 * cx[0], 6 * cy[0]])
    pts, tangents, kappa, kp = _param_jets(p, d1, d2, d3)
    return Jet2(t_param=float(t), p=pts, tangent=tangents, kappa=float(kappa), kappa_prime=float(kp))


def _lift_with_mask(raw, t, period, valid):
    """Lift the tangent-line angle chaining only clean samples; masked
    samples get monotone interpolation between their clean neighbors, so
    masked clusters expose exactly the levels that truly cross them."""
    vidx = np.nonzero(valid)[0]
    lift_v = np.empty(len(vidx))
    lift_v[0] = raw[vidx[0]]
    for k in range(1, len(vidx)):
        lift_v[k] = lift_v[k - 1] + float(wrap_half_pi(raw[vidx[k]] - raw[vidx[k - 1]]))
    span = float(lift_v[-1] - lift_v[0]
                 + wrap_half_pi(raw[vidx[0]] - raw[vidx[-1]]))
    tv = t[vidx]
    te = np.concatenate([[tv[-1] - period], tv, [tv[0] + period]])
    pe = np.concatenate([[lift_v[-1] - span], lift_v, [lift_v[0] + span]])
    psi_full = np.interp(t, te, pe)
    psi_full[vidx] = lift_v
    return np.concatenate([psi_full, [psi_full[0] + span]])


def _build_sampled(spec, t, pts, tangents, kappa, kappa_prime, period,
                   allow_flips=False, valid=None):
    n = len(t)
    if valid is None:
        valid = np.ones(n, dtype=bool)
    raw = np.arctan2(tangents[:, 1], tangents[:, 0])
    diffs = wrap_pi(np.diff(np.concatenate([raw, raw[:1]])))
    dpsi = wrap_half_pi(diffs)
    edge_clean = valid & np.roll(valid, -1)
    if np.any(edge_clean & (np.abs(dpsi) >= np.pi / 2 - 1e-9)):
        raise LiftError("tangent line turns too fast between samples; increase n")
    flips = np.abs(diffs - dpsi) > 1e-9
    if np.any(flips & edge_clean) and not allow_flips:
        raise LiftError("tangent direction jumps by ~pi between samples; increase n")
    if valid.all():
        psi = np.concatenate([[raw[0]], raw[0] + np.cumsum(dpsi)])
    else:
        psi = _lift_with_mask(raw, t, period, valid)
    if np.any(flips):
        phi = psi.copy()
        rotation = math.nan
    else:
        phi = np.concatenate([[raw[0]], raw[0] + np.cumsum(diffs)])
        rotation = math.fsum(diffs) / TWO_PI
    chord = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    arclen = np.concatenate([[0.0], np.cumsum(chord)])
    return SampledCurve(
        spec=spec, t=t, points=pts, tangents=tangents, kappa=kappa,
        kappa_prime=kappa_prime, phi=phi, psi=psi, arclen=arclen,
        period=period, rotation_number=rotation, valid=valid,
    )


def sample_curve(spec: CurveSpec, n: int) -> SampledCurve:
    """Sample the curve at n uniform parameter steps with lifted angles."""
    if n < 64:
        raise ValueError("need at least 64 samples")
    period = spec.period
    t = np.arange(n) * (period / n)
    pts, tangents, kappa, kappa_prime = _jets_batch(spec, t)
    return _build_sampled(spec, t, pts, tangents, kappa, kappa_prime, period)


def sampled_from_points(points, valid=None, allow_flips=True) -> SampledCurve:
    """Re-ingest a closed point chain (e.g. a computed equidistant branch).

    The parameter is cumulative chord length; jets come from 5-point
    stencil fits.  Samples marked invalid are kept for positions but are
    skipped by downstream pair matching.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) >= 2 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
        if valid is not None:
            valid = np.asarray(valid, dtype=bool)[: len(pts)]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    keep = seg > 1e-14
    if not np.all(keep):
        pts = pts[keep]
        if valid is not None:
            valid = np.asarray(valid, dtype=bool)[keep]
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    period = float(cum[-1])
    t = cum[:-1]
    n = len(pts)
    tangents = np.empty((n, 2))
    kappa = np.empty(n)
    kappa_prime = np.empty(n)
    tmp = SampledCurve(
        spec=None, t=t, points=pts, tangents=np.zeros((n, 2)), kappa=kappa,
        kappa_prime=kappa_prime, phi=np.zeros(n + 1), psi=np.zeros(n + 1),
        arclen=cum, period=period, rotation_number=math.nan,
        valid=np.ones(n, dtype=bool),
    )
    for i in range(n):
        jet = _stencil_jet(tmp, t[i])
        tangents[i] = jet.tangent
        kappa[i] = jet.kappa
        kappa_prime[i] = jet.kappa_prime
    return _build_sampled(None, t, pts, tangents, kappa, kappa_prime, period,
                          allow_flips=allow_flips, valid=valid)


def rotation_number(sc: SampledCurve) -> float:
    """Winding of the tangent field, in full turns."""
    return sc.rotation_number


# ---------------------------------------------------------------------------
# inflexions


def inflexion_parameters(spec: CurveSpec, n_scan: int = 4096,
                         tol: float = 1e-10, max_iter: int = 80):
    """Parameters where the signed curvature crosses zero.

    Fourier kinds are refined by bisection on the analytic curvature;
    polylines use linear interpolation between vertices (lower accuracy).
    """
    period = spec.period
    t = np.arange(n_scan) * (period / n_scan)
    _, _, kappa, _ = _jets_batch(spec, t)
    k_ext = np.concatenate([kappa, kappa[:1]])
    t_ext = np.concatenate([t, [period]])
    roots = []
    for i in range(n_scan):
        k0, k1 = k_ext[i], k_ext[i + 1]
        if k0 == 0.0:
            roots.append(t_ext[i])
            continue
        if k0 * k1 < 0.0:
            lo, hi = t_ext[i], t_ext[i + 1]
            if spec.kind == "polyline":
                roots.append(lo + (hi - lo) * k0 / (k0 - k1))
                continue
            flo = k0
            for _ in range(max_iter):
                mid = 0.5 * (lo + hi)
                fm = float(_jets_batch(spec, np.array([mid]))[2][0])
                if abs(fm) < tol:
                    lo = hi = mid
                    break
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    return sorted(float(r) % period for r in roots)


# ---------------------------------------------------------------------------
# loops


@dataclass
class LoopSegment:
    """A simple sub-arc whose endpoints meet at a self-intersection."""

    parent: SampledCurve
    s_start: float
    s_end: float
    rotation: float
    convexity: str  # "convex_loop" | "nonconvex_loop"
    point: np.ndarray  # the self-intersection location


def _segment_crossings(pts):
    """Indices (i, j) of properly crossing closed-polygon segments."""
    n = len(pts)
    b = np.roll(pts, -1, axis=0)
    found = []
    chunk = 256
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        pi = pts[i0:i1, None, :]
        qi = b[i0:i1, None, :]
        d1 = cross2(b - pts, pi - pts)  # (chunk, n) via broadcasting
        d2 = cross2(b - pts, qi - pts)
        d3 = cross2(qi - pi, pts - pi)
        d4 = cross2(qi - pi, b - pi)
        mask = (d1 * d2 < 0) & (d3 * d4 < 0)
        ii, jj = np.nonzero(mask)
        for a, j in zip(ii, jj):
            i = i0 + a
            if i >= j:
                continue
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            found.append((i, j))
    return found


def _refine_crossing(sc: SampledCurve, i, j, rounds=50):
    """Bisect the two parameter intervals onto the true intersection."""
    tg = sc._grid_ext()

    def pos(x):
        if sc.spec is not None:
            return _jets_batch(sc.spec, np.atleast_1d(x))[0][0]
        xm = (x - sc.t[0]) % sc.period
        px = np.interp(xm, tg - sc.t[0], np.concatenate([sc.points[:, 0], sc.points[:1, 0]]))
        py = np.interp(xm, tg - sc.t[0], np.concatenate([sc.points[:, 1], sc.points[:1, 1]]))
        return np.array([px, py])

    u0, u1 = tg[i], tg[i + 1]
    v0, v1 = tg[j], tg[j + 1]
    for _ in range(rounds):
        a0, a1 = pos(v0), pos(v1)
        f = lambda x: cross2(a1 - a0, pos(x) - a0)
        fu0, fu1 = f(u0), f(u1)
        if fu0 * fu1 > 0:
            return None  # tangential or lost bracket: unresolved
        um = 0.5 * (u0 + u1)
        if fu0 * f(um) <= 0:
            u1 = um
        else:
            u0 = um
        b0, b1 = pos(u0), pos(u1)
        g = lambda x: cross2(b1 - b0, pos(x) - b0)
        gv0, gv1 = g(v0), g(v1)
        if gv0 * gv1 > 0:
            return None
        vm = 0.5 * (v0 + v1)
        if gv0 * g(vm) <= 0:
            v1 = vm
        else:
            v0 = vm
        if (u1 - u0) < 1e-10 and (v1 - v0) < 1e-10:
            break
    u = 0.5 * (u0 + u1)
    v = 0.5 * (v0 + v1)
    return u, v, pos(u)


def detect_loops(sc: SampledCurve):
    """Extract loops: simple sub-arcs with non-vanishing curvature whose
    endpoints coincide at a transversal self-intersection.

    One loop is reported per crossing: the arc between the two crossing
    parameters (the complementary arc is the caller's to build).
    """
    crossings = []
    for i, j in _segment_crossings(sc.points):
        ref = _refine_crossing(sc, i, j)
        if ref is not None:
            crossings.append(ref)
    crossings.sort(key=lambda c: (c[0], c[1]))
    # merge near-duplicates from adjacent segment pairs
    merged = []
    tol = 2.0 * sc.period / sc.n
    for u, v, p in crossings:
        if any(abs(u - mu) < tol and abs(v - mv) < tol for mu, mv, _ in merged):
            continue
        merged.append((u, v, p))

    loops = []
    eps = 1e-6 * sc.period
    for u, v, p in merged:
        # simplicity: no other crossing may have exactly one endpoint inside
        simple = True
        for u2, v2, _ in merged:
            if (u2, v2) == (u, v):
                continue
            in_u = u + eps < u2 < v - eps
            in_v = u + eps < v2 < v - eps
            if in_u != in_v:
                simple = False
                break
        if not simple:
            continue
        inside = (sc.t > u + eps) & (sc.t < v - eps)
        if inside.sum() >= 2:
            k = sc.kappa[inside]
            if np.min(np.abs(k)) < 1e-12 or np.min(k) * np.max(k) < 0:
                continue  # curvature vanishes on the arc
        rot = float(sc.phi_at(np.array([v]))[0] - sc.phi_at(np.array([u]))[0]) / TWO_PI
        conv = "convex_loop" if abs(rot) <= 1.0 + 1e-9 else "nonconvex_loop"
        loops.append(LoopSegment(parent=sc, s_start=float(u), s_end=float(v),
                                 rotation=rot, convexity=conv, point=p))
    return loops
