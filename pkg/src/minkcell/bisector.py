"""Equidistance sets, midpoint bisectors and their piecewise-linear structure.

For distinct points p, q and x in the hyperplane H through the origin
orthogonal to d = q - p, the equidistant set on the line x + t d is an
interval [t_lo, t_hi] in t.  Its midpoint gives the bisector point over x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    EPS,
    Body,
    GeometryError,
    SymmetricPolytope,
    as_point,
    cross2,
    rot90,
)

MERGE_ANGLE = 1e-7


@dataclass(frozen=True)
class SInterval:
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not (math.isfinite(self.t_lo) and math.isfinite(self.t_hi)):
            raise ValueError("interval endpoints must be finite")
        if self.t_lo > self.t_hi:
            raise ValueError(f"empty interval [{self.t_lo}, {self.t_hi}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.t_lo + self.t_hi)

    @property
    def is_point(self) -> bool:
        return self.t_hi - self.t_lo <= EPS


def _direction(p, q):
    p = as_point(p)
    q = as_point(q, len(p))
    d = q - p
    if not np.any(d):
        raise GeometryError("p and q coincide")
    return p, q, d


class _LineSolver:
    """Vectorised solver for the equidistant parameter range on lines x + t d.

    phi(t) = |x - p + t d| - |x - p + (t - 1) d| is nondecreasing in t; its
    zero set is an interval.  Polytope gauges are handled as maxima of the
    linear forms c_k + t b_k so that interval endpoints are solved exactly.
    """

    def __init__(self, body: Body, p, q):
        self.body = body
        self.p, self.q, self.d = _direction(p, q)
        if body.dim != len(self.p):
            raise GeometryError(f"dimension mismatch: body {body.dim} vs points {len(self.p)}")
        self.poly = isinstance(body, SymmetricPolytope)
        if self.poly:
            a = body.normals
            b = a @ self.d
            scale = np.linalg.norm(a, axis=1) * np.linalg.norm(self.d)
            b[np.abs(b) <= 1e-12 * scale] = 0.0
            self.b = b
        self.gd = float(body.gauge(self.d))

    def _phi(self, z0, t, c=None):
        if self.poly:
            g1 = np.max(c + t[:, None] * self.b, axis=1)
            g0 = np.max(c + (t - 1)[:, None] * self.b, axis=1)
            return g1 - g0
        return self.body.gauge(z0 + t[:, None] * self.d) - self.body.gauge(z0 + (t - 1)[:, None] * self.d)

    def solve(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z0 = X - self.p
        c = z0 @ self.body.normals.T if self.poly else None
        k = len(X)
        g0 = np.asarray(self.body.gauge(z0), dtype=float)
        T = g0 / self.gd + 2.0
        for _ in range(200):
            bad = (self._phi(z0, -T, c) >= 0) | (self._phi(z0, T, c) <= 0)
            if not bad.any():
                break
            T = np.where(bad, 2 * T, T)
        else:
            raise GeometryError("could not bracket the equidistant set")
        tau = 1e-13 * (g0 + self.gd) if not self.poly else np.zeros(k)
        lo_a, hi_a = -T.copy(), T.copy()
        lo_b, hi_b = -T.copy(), T.copy()
        for _ in range(200):
            mid = 0.5 * (lo_a + hi_a)
            neg = self._phi(z0, mid, c) < -tau
            lo_a = np.where(neg, mid, lo_a)
            hi_a = np.where(neg, hi_a, mid)
            mid = 0.5 * (lo_b + hi_b)
            pos = self._phi(z0, mid, c) > tau
            hi_b = np.where(pos, mid, hi_b)
            lo_b = np.where(pos, lo_b, mid)
            if np.all(hi_a - lo_a <= 1e-14 * (1 + np.abs(hi_a))) and \
                    np.all(hi_b - lo_b <= 1e-14 * (1 + np.abs(hi_b))):
                break
        t_lo = 0.5 * (lo_a + hi_a)
        t_hi = 0.5 * (lo_b + hi_b)
        if self.poly:
            t_lo = self._refine(c, lo_a, hi_a, t_lo)
            t_hi = self._refine(c, lo_b, hi_b, t_hi)
        t_hi = np.maximum(t_hi, t_lo)
        return t_lo, t_hi

    def _refine(self, c, lo, hi, guess):
        """Exact root of the linear piece of phi active at either bracket end."""
        b = self.b
        out = guess.copy()
        rows = np.arange(len(c))
        best = np.full(len(c), np.inf)
        for t in (lo, hi):
            i = np.argmax(c + t[:, None] * b, axis=1)
            j = np.argmax(c + (t - 1)[:, None] * b, axis=1)
            den = b[i] - b[j]
            ok = den > 0
            root = np.where(ok, (c[rows, j] - b[j] - c[rows, i]) / np.where(ok, den, 1.0), guess)
            err = np.abs(root - guess)
            take = ok & (err <= 1e-9 * (1 + np.abs(guess))) & (err < best)
            out = np.where(take, root, out)
            best = np.where(take, err, best)
        return out


def _check_in_h(d, x):
    if abs(float(x @ d)) > EPS * (1 + np.linalg.norm(x)) * np.linalg.norm(d):
        raise GeometryError("x is not in the hyperplane orthogonal to q - p")


def s_interval(body: Body, p, q, x) -> SInterval:
    """Parameter range [t_lo, t_hi] of points x + t (q - p) equidistant from p and q."""
    p, q, d = _direction(p, q)
    x = as_point(x, body.dim)
    _check_in_h(d, x)
    lo, hi = _LineSolver(body, p, q).solve(x[None, :])
    return SInterval(float(lo[0]), float(hi[0]))


def midpoint_map(body: Body, p, q, x) -> np.ndarray:
    """The bisector point over x: the middle of the equidistant segment."""
    p, q, d = _direction(p, q)
    x = as_point(x, body.dim)
    _check_in_h(d, x)
    return midpoint_map_batch(body, p, q, x[None, :])[0]


def midpoint_map_batch(body: Body, p, q, X) -> np.ndarray:
    solver = _LineSolver(body, p, q)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lo, hi = solver.solve(X)
    return X + (0.5 * (lo + hi))[:, None] * solver.d


def midpoint_params(body: Body, p, q, X) -> np.ndarray:
    """Midpoint parameters t for a batch of points X already in H."""
    lo, hi = _LineSolver(body, p, q).solve(X)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Planar chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PLChain:
    """Piecewise-linear curve: two infinite rays joined by bounded segments.

    Breakpoints are ordered by increasing coordinate along ``e``, the unit
    vector spanning H (e is q - p rotated a quarter turn counterclockwise).
    """

    breakpoints: np.ndarray
    head_ray: tuple[np.ndarray, np.ndarray]
    tail_ray: tuple[np.ndarray, np.ndarray]
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    @property
    def d(self) -> np.ndarray:
        return self.q - self.p

    @property
    def e(self) -> np.ndarray:
        d = self.d
        return rot90(d) / np.linalg.norm(d)

    def vertices_s(self) -> np.ndarray:
        return self.breakpoints @ self.e

    def evaluate(self, s) -> np.ndarray:
        """Chain points over H-coordinates ``s`` (scalar or array)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        e = self.e
        bp = self.breakpoints
        s_bp = bp @ e
        out = np.empty((len(s), 2))
        (ha, hd), (ta, td) = self.head_ray, self.tail_ray
        lo = s < s_bp[0]
        hi = s > s_bp[-1]
        out[lo] = ha + ((s[lo] - ha @ e) / (hd @ e))[:, None] * hd
        out[hi] = ta + ((s[hi] - ta @ e) / (td @ e))[:, None] * td
        mid = ~(lo | hi)
        if mid.any():
            k = np.clip(np.searchsorted(s_bp, s[mid], side="right") - 1, 0, len(bp) - 1)
            k2 = np.minimum(k + 1, len(bp) - 1)
            span = s_bp[k2] - s_bp[k]
            w = np.where(span > 0, (s[mid] - s_bp[k]) / np.where(span > 0, span, 1.0), 0.0)
            out[mid] = bp[k] + w[:, None] * (bp[k2] - bp[k])
        return out

    def polyline(self, reach: float) -> np.ndarray:
        """Finite polyline with both rays cut at length ``reach``."""
        (ha, hd), (ta, td) = self.head_ray, self.tail_ray
        head = ha + reach * hd / np.linalg.norm(hd)
        tail = ta + reach * td / np.linalg.norm(td)
        return np.vstack([head, self.breakpoints, tail])

    def directions(self) -> np.ndarray:
        """Unit directions of all pieces from head ray to tail ray."""
        (ha, hd), (ta, td) = self.head_ray, self.tail_ray
        segs = np.diff(self.breakpoints, axis=0)
        dirs = np.vstack([-hd[None, :], segs, td[None, :]])
        return dirs / np.linalg.norm(dirs, axis=1)[:, None]

    def to_json(self) -> dict:
        (ha, hd), (ta, td) = self.head_ray, self.tail_ray
        return {
            "breakpoints": self.breakpoints.tolist(),
            "rays": [
                {"anchor": ha.tolist(), "direction": (hd / np.linalg.norm(hd)).tolist()},
                {"anchor": ta.tolist(), "direction": (td / np.linalg.norm(td)).tolist()},
            ],
            "piece_count": piece_count(self),
        }


def _merged_vertices(chain: PLChain, tol: float = MERGE_ANGLE) -> list[int]:
    """Indices of breakpoints where the direction actually turns."""
    dirs = np.asarray(chain.directions())
    a, b = dirs[:-1], dirs[1:]
    ang = np.arctan2(np.abs(cross2(a, b)), np.einsum("ij,ij->i", a, b))
    return np.flatnonzero(ang > tol).tolist()


def piece_count(chain: PLChain, tol: float = MERGE_ANGLE) -> int:
    """Number of maximal straight pieces (collinear neighbours merged)."""
    return len(_merged_vertices(chain, tol)) + 1


def simplify(chain: PLChain, tol: float = MERGE_ANGLE) -> PLChain:
    keep = _merged_vertices(chain, tol)
    (ha, hd), (ta, td) = chain.head_ray, chain.tail_ray
    if not keep:
        anchor = chain.breakpoints[0]
        return PLChain(anchor[None, :].copy(), (anchor, hd), (anchor, td), chain.p, chain.q)
    bp = chain.breakpoints[keep]
    return PLChain(bp, (bp[0], hd), (bp[-1], td), chain.p, chain.q)


def bisector_2d_exact(poly: SymmetricPolytope, p, q, tol: float = EPS) -> PLChain:
    """Exact bisector of p, q under a planar polygonal gauge.

    Starting from (p + q) / 2, the tracer walks both ways along the line
    <a_i, w - p> = <a_j, w - q> of the current cone pair (i, j), switching
    cones whenever w - p or w - q crosses a vertex ray of the polygon.  Once
    both differences fall in the cone of an edge parallel to q - p the
    equidistant set is a segment and the remaining bisector is a half-line.
    """
    if not isinstance(poly, SymmetricPolytope) or poly.dim != 2:
        raise GeometryError("bisector_2d_exact needs a planar polygon")
    p, q, d = _direction(p, q)
    if len(p) != 2:
        raise GeometryError("points must be planar")
    e = rot90(d) / np.linalg.norm(d)
    solver = _LineSolver(poly, p, q)
    w0 = 0.5 * (p + q)
    fwd, tail = _trace(poly, solver, p, q, d, e, w0, tol)
    bwd, head = _trace(poly, solver, p, q, d, -e, w0, tol)
    pts = [w0] + fwd
    pts = bwd[::-1] + pts
    bp = _dedupe(np.array(pts))
    return PLChain(bp, (bp[0], head), (bp[-1], tail), p, q)


def _dedupe(pts: np.ndarray) -> np.ndarray:
    scale = 1.0 + np.abs(pts).max()
    step = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], step > 1e-12 * scale])
    return pts[keep]


def _pick_facet(a: np.ndarray, z: np.ndarray, u: np.ndarray) -> int:
    g = a @ z
    cand = np.flatnonzero(g >= g.max() - 1e-12 * (1 + abs(g.max())))
    return int(cand[np.argmax(a[cand] @ u)])


def _trace(poly, solver, p, q, d, u, w0, tol):
    a = poly.normals
    V = poly.vertex_tuples
    m = len(V)
    b = solver.b
    i = _pick_facet(a, w0 - p, u)
    j = _pick_facet(a, w0 - q, u)
    # plain floats from here: the loop is hot in the cell construction
    au = (a @ u).tolist()
    bl = b.tolist()
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    ux, uy = float(u[0]), float(u[1])
    dx, dy = float(d[0]), float(d[1])
    wx, wy = float(w0[0]), float(w0[1])
    out = []
    scale = 1.0 + math.hypot(dx, dy)
    flat = 1e-12 * scale * max(float(np.abs(b).max()), 1e-300)
    for _ in range(4 * m + 8):
        den = bl[i] - bl[j]
        if i == j or den <= flat:
            # equidistant set is a segment from here on: a half-line of midpoints
            w = np.array([wx, wy])
            x = w - (w @ d) / (d @ d) * d
            step = scale * max(1.0, math.hypot(wx, wy))
            nxt = midpoint_map_batch(poly, p, q, (x + step * u)[None, :])[0]
            return out, nxt - w
        c = -(au[i] - au[j]) / den
        gx, gy = ux + c * dx, uy + c * dy
        sig_p, ni = _cone_exit(V, i, (wx - px, wy - py), (gx, gy), m)
        sig_q, nj = _cone_exit(V, j, (wx - qx, wy - qy), (gx, gy), m)
        sig = min(sig_p, sig_q)
        if not math.isfinite(sig):
            return out, np.array([gx, gy])
        wx += sig * gx
        wy += sig * gy
        out.append(np.array([wx, wy]))
        # exits this close count as simultaneous; near-parallel steps put ~1e-10 error on w
        close = 1e-9 * (1 + sig)
        if sig_p <= sig + close:
            i = ni
        if sig_q <= sig + close:
            j = nj
    raise GeometryError("bisector tracing did not terminate")


def _cone_exit(V, i, z, g, m):
    """First sigma > 0 where z + sigma g leaves the cone spanned by V[i], V[i+1]."""
    best, nxt = math.inf, i
    zx, zy = z
    gx, gy = g
    zn = math.hypot(zx, zy)
    gn = math.hypot(gx, gy)
    for k, new in ((i + 1) % m, (i + 1) % m), (i, (i - 1) % m):
        rx, ry = V[k]
        den = rx * gy - ry * gx
        # the far rays run parallel to a vertex direction; rounding must not turn that into a crossing
        if abs(den) <= 1e-9 * gn * math.hypot(rx, ry):
            continue
        # leaving through ray k: CCW end needs positive turn, CW end negative
        if (k == (i + 1) % m) != (den > 0):
            continue
        sig = -(rx * zy - ry * zx) / den
        if sig <= 1e-12 * (zn / gn + 1e-300):
            continue
        if (zx + sig * gx) * rx + (zy + sig * gy) * ry <= 0:
            continue
        if sig < best:
            best, nxt = sig, new
    return best, nxt


# ---------------------------------------------------------------------------
# Facet combinatorics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FacetClassification:
    minus: tuple[int, ...]
    zero: tuple[int, ...]
    plus: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.minus) + len(self.zero) + len(self.plus)


def classify_facets(poly: SymmetricPolytope, p, q, tol: float = EPS) -> FacetClassification:
    """Split facets by the sign of <n(F), q - p>; near-zero products go to ``zero``."""
    p, q, d = _direction(p, q)
    if poly.dim != len(d):
        raise GeometryError("dimension mismatch")
    a = poly.normals
    s = a @ d
    thr = tol * np.linalg.norm(a, axis=1) * np.linalg.norm(d)
    minus = tuple(int(k) for k in np.flatnonzero(s < -thr))
    plus = tuple(int(k) for k in np.flatnonzero(s > thr))
    zero = tuple(int(k) for k in np.flatnonzero(np.abs(s) <= thr))
    return FacetClassification(minus, zero, plus)


def piece_bound(m: int, cls: FacetClassification) -> tuple[int, Fraction]:
    """(generic bound |F-|*|F+|, worst-case bound m^2/4 + m^3/27)."""
    if m != cls.m:
        raise GeometryError(f"inconsistent facet count: m={m} but classification has {cls.m}")
    return len(cls.minus) * len(cls.plus), Fraction(m * m, 4) + Fraction(m ** 3, 27)


# ---------------------------------------------------------------------------
# Chords and the closed-form midpoint beyond the single-point regime
# ---------------------------------------------------------------------------

def _chord(poly: SymmetricPolytope, d, v, tol: float = EPS):
    a = poly.normals
    b = a @ d
    r = 1.0 - a @ v
    scale = np.linalg.norm(a, axis=1) * np.linalg.norm(d)
    flat = np.abs(b) <= 1e-12 * scale
    if np.any(r[flat] < -tol):
        return None
    up = b > 0
    dn = (b < 0) & ~flat
    mu_max = np.min(r[up & ~flat] / b[up & ~flat])
    mu_min = np.max(r[dn] / b[dn])
    if mu_min > mu_max + tol:
        return None
    return mu_min, max(mu_max, mu_min)


def height_profile(poly: SymmetricPolytope, p, q, v):
    """Chord of the polytope over v in direction q - p and its normalised height."""
    p, q, d = _direction(p, q)
    v = as_point(v, poly.dim)
    _check_in_h(d, v)
    ch = _chord(poly, d, v)
    if ch is None:
        raise GeometryError("v lies outside the projection of the polytope")
    if _chord(poly, d, v * (1 + 1e-7)) is not None:
        raise GeometryError("v is not on the boundary of the projection")
    mu_min, mu_max = ch
    return v + mu_max * d, v + mu_min * d, float(mu_max - mu_min)


def projection_boundary_point(poly: SymmetricPolytope, p, q, u) -> np.ndarray:
    """Point of the projection boundary of the polytope onto H in direction u."""
    p, q, d = _direction(p, q)
    u = as_point(u, poly.dim)
    u = u - (u @ d) / (d @ d) * d
    # strict test: any slack here is multiplied by alpha in the closed form
    lo, hi = 0.0, 1.0
    while _chord(poly, d, hi * u, tol=0.0) is not None:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _chord(poly, d, mid * u, tol=0.0) is not None:
            lo = mid
        else:
            hi = mid
    return lo * u


def midpoint_closed_form(poly: SymmetricPolytope, p, q, alpha: float, v) -> np.ndarray:
    """Bisector point over proj_H(p) + alpha v from the chord through v.

    With v* the top of the chord and h its normalised height, the point is
    p + alpha v* - (alpha h - 1) (q - p) / 2, valid for alpha >= 1/h.
    """
    p, q, d = _direction(p, q)
    v_star, _, h = height_profile(poly, p, q, v)
    if h <= 0 or alpha * h < 1 - 1e-12:
        raise GeometryError("closed form needs alpha >= 1/h(v) (the set is a single point otherwise)")
    return p + alpha * v_star - 0.5 * (alpha * h - 1) * d


def closed_form_argument(p, q, alpha: float, v) -> np.ndarray:
    """The point of H at which :func:`midpoint_closed_form` evaluates the bisector."""
    p, q, d = _direction(p, q)
    p_h = p - (p @ d) / (d @ d) * d
    return p_h + alpha * np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def continuity_probe(body: Body, p, q, path: Callable[[np.ndarray], np.ndarray], samples: int,
                     factor: float = 10.0, window: int = 10):
    """Jumps of the midpoint map along a path in H.

    ``path`` maps parameters in [0, 1] to points of H.  A step is flagged when
    its image moves more than ``factor`` times the largest image speed seen in
    the preceding ``window`` steps.  Adjacent flagged steps are one event,
    reported at the shared sample with the largest step as magnitude.
    """
    p, q, d = _direction(p, q)
    ts = np.linspace(0.0, 1.0, samples)
    X = np.asarray(path(ts), dtype=float)
    img = midpoint_map_batch(body, p, q, X)
    step = np.linalg.norm(np.diff(X, axis=0), axis=1)
    jump = np.linalg.norm(np.diff(img, axis=0), axis=1)
    rate = jump / np.where(step > 0, step, 1.0)
    flags = np.zeros(len(jump), dtype=bool)
    for k in range(1, len(jump)):
        lip = rate[max(0, k - window):k].max()
        lip = max(lip, 1.0)
        flags[k] = jump[k] > factor * step[k] * lip
        if flags[k]:
            rate[k] = rate[k - 1]  # keep the jump out of later estimates
    events = []
    k = 0
    while k < len(jump):
        if not flags[k]:
            k += 1
            continue
        start = k
        while k + 1 < len(jump) and flags[k + 1]:
            k += 1
        # a point discontinuity flags the steps on both sides of the sample
        loc = X[start + 1] if k > start else 0.5 * (X[start] + X[start + 1])
        events.append((loc, float(jump[start:k + 1].max())))
        k += 1
    return events


def segment_path(a, b):
    """Straight path from a to b, as used by :func:`continuity_probe`."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return lambda t: a + np.asarray(t)[:, None] * (b - a)


def convergence_deviation(family: Sequence[SymmetricPolytope], limit_body: SymmetricPolytope,
                          p, q, window: float) -> list[float]:
    """Largest deviation along q - p between each family bisector and the limit
    bisector over H-coordinates |s - s_c| <= window, s_c the centre of pq."""
    p, q, d = _direction(p, q)
    dn = d / np.linalg.norm(d)
    base = bisector_2d_exact(limit_body, p, q)
    e = base.e
    s_c = float(0.5 * (p + q) @ e)
    out = []
    for body in family:
        ch = bisector_2d_exact(body, p, q)
        s = np.concatenate([[s_c - window, s_c + window], ch.vertices_s(), base.vertices_s()])
        s = s[np.abs(s - s_c) <= window + 1e-12]
        diff = (ch.evaluate(s) - base.evaluate(s)) @ dn
        out.append(float(np.max(np.abs(diff))))
    return out
