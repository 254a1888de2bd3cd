"""Small planar-geometry helpers used throughout the package."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def rot90(v):
    """Rotate vector(s) by +90 degrees: (x, y) -> (-y, x)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def cross2(u, v):
    """Scalar cross product u_x v_y - u_y v_x (broadcasts)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def wrap_pi(a):
    """Wrap angle(s) to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, TWO_PI) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def wrap_half_pi(a):
    """Wrap angle(s) to (-pi/2, pi/2]; removes sign flips of a direction."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi / 2, np.pi) - np.pi / 2
    return np.where(w == -np.pi / 2, np.pi / 2, w)


def angle_dist_mod_pi(a, b):
    """Distance between two tangent-line angles, in [0, pi/2]."""
    return np.abs(wrap_half_pi(np.asarray(a) - np.asarray(b)))


def mod_dist(a, b, period):
    """Shortest distance between parameters a, b on a circle of given period."""
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


def signed_ratio(u, v, tol=1e-9):
    """Signed scalar r with u = r * v for collinear vectors u, v.

    Raises ValueError when u is not parallel to v within tol (relative
    to the vector magnitudes).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("ratio against a zero vector")
    scale = max(np.linalg.norm(u), nv)
    if abs(cross2(u, v)) > tol * scale * nv:
        raise ValueError("vectors are not collinear")
    return float(np.dot(u, v) / (nv * nv))


def line_intersection(p0, d0, p1, d1, tol=1e-12):
    """Intersection of lines p0 + t*d0 and p1 + s*d1.

    Raises ValueError for (near-)parallel lines.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    denom = cross2(d0, d1)
    if abs(denom) < tol * np.linalg.norm(d0) * np.linalg.norm(d1):
        raise ValueError("lines are parallel")
    t = cross2(p1 - p0, d1) / denom
    return p0 + t * d0


def bisect_vec(f, lo, hi, iters=80, ftol=0.0):
    """Vectorized bisection on brackets [lo, hi] with sign(f(lo)) != sign(f(hi)).

    f maps an array of parameters to an array of residuals.  Returns the
    midpoints after refinement.  ftol > 0 allows early exit once all
    residuals are below it.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if ftol > 0.0 and np.all(np.abs(fm) < ftol):
            return mid
        take_hi = (flo * fm) <= 0.0
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
        flo = np.where(take_hi, flo, fm)
    return 0.5 * (lo + hi)


def polyline_min_distances(points, polygon, closed=True):
    """Distance from each point to a polyline (vertices + segments)."""
    points = np.asarray(points, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0) if closed else poly[1:]
    if not closed:
        a = poly[:-1]
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2 = np.where(ab2 == 0.0, 1.0, ab2)
    out = np.empty(len(points))
    for i, p in enumerate(points):
        ap = p - a
        t = np.clip(np.einsum("ij,ij->i", ap, ab) / ab2, 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.linalg.norm(proj - p, axis=1)
        out[i] = d.min()
    return out
