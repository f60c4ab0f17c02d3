"""Star regions, covering radii, Minkowski cells and tiling checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bisector import (
    PLChain,
    _LineSolver,
    bisector_2d_exact,
    simplify,
)
from .geometry import (
    EPS,
    Body,
    EuclideanBall,
    GeometryError,
    Lattice,
    SymmetricPolytope,
    as_point,
    cross2,
    lattice_points_array,
    rot90,
)

TWO_PI = 2 * math.pi


# ---------------------------------------------------------------------------
# Membership in the region closer to p
# ---------------------------------------------------------------------------

def in_D_batch(body: Body, p, q, Y, tol: float = EPS) -> np.ndarray:
    """Vectorised closed membership in D(body, p, q).

    Points strictly closer to p (or to q) are decided by comparing distances;
    only ties need the midpoint of the equidistant segment.
    """
    solver = _LineSolver(body, p, q)
    p, d = solver.p, solver.d
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    g_p = body.gauge(Y - p)
    g_q = body.gauge(Y - solver.q)
    scale = tol * (1.0 + g_p)
    out = g_p < g_q - scale
    tie = np.abs(g_p - g_q) <= scale
    if tie.any():
        Yt = Y[tie]
        t = Yt @ d / (d @ d)
        X = Yt - t[:, None] * d
        lo, hi = solver.solve(X)
        out[tie] = t <= 0.5 * (lo + hi) + tol
    return out


def in_D(body: Body, p, q, y, tol: float = EPS) -> bool:
    """Is y on or below the bisector of p, q (seen from p along q - p)?"""
    y = as_point(y, body.dim)
    return bool(in_D_batch(body, p, q, y[None, :], tol)[0])


# ---------------------------------------------------------------------------
# Star polygons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarPolygon:
    """Polygon star-shaped about the origin, vertices CCW by polar angle."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("star polygon needs at least three planar vertices")
        ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), TWO_PI)
        order = np.argsort(ang, kind="stable")
        v = v[order]
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_angles", ang[order])
        if self.area <= 0:
            raise GeometryError("degenerate cell (non-positive area)")

    @property
    def area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.sum(cross2(v, np.roll(v, -1, axis=0))))

    def radial(self, U) -> np.ndarray:
        """Boundary distance along directions U (need not be unit)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        ang = np.mod(np.arctan2(U[:, 1], U[:, 0]), TWO_PI)
        k = np.searchsorted(self._angles, ang, side="right") - 1
        a = self.vertices[k % len(self.vertices)]
        b = self.vertices[(k + 1) % len(self.vertices)]
        un = U / np.linalg.norm(U, axis=1)[:, None]
        return cross2(a, b - a) / cross2(un, b - a)

    def contains(self, Y, tol: float = EPS) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        r = np.linalg.norm(Y, axis=1)
        out = r <= tol
        nz = ~out
        if nz.any():
            out[nz] = r[nz] <= self.radial(Y[nz]) * (1 + tol)
        return out

    def is_centrally_symmetric(self, tol: float = 1e-9) -> bool:
        v = self.vertices
        scale = tol * (1 + np.abs(v).max())
        return all(np.min(np.abs(v + w).max(axis=1)) <= scale for w in v)

    def transformed(self, tau) -> "StarPolygon":
        tau = np.asarray(tau, dtype=float)
        v = self.vertices @ tau.T
        return StarPolygon(v if np.linalg.det(tau) > 0 else v[::-1])


def _merge_collinear(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Drop vertices lying within ``tol`` (relative) of the chord joining
    their current neighbours, one at a time so near-duplicates lose only
    one copy."""
    scale = 1 + np.abs(v).max()
    pts = [np.asarray(x, dtype=float) for x in v]

    def dev(k):
        a, b, c = pts[k - 1], pts[k], pts[(k + 1) % len(pts)]
        ac = c - a
        n = math.hypot(*ac)
        if n <= tol * scale:
            return math.hypot(*(b - a))
        return abs(float(cross2(ac, b - a))) / n

    a, c = np.roll(v, 1, axis=0), np.roll(v, -1, axis=0)
    ac = c - a
    n = np.hypot(ac[:, 0], ac[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        devs = np.abs(cross2(ac, v - a)) / n
    short = n <= tol * scale
    devs[short] = np.hypot(*(v - a)[short].T)
    devs = devs.tolist()
    while len(pts) > 3:
        k = int(np.argmin(devs))
        if devs[k] > tol * scale:
            break
        del pts[k]
        del devs[k]
        n = len(pts)
        for j in ((k - 1) % n, k % n):
            devs[j] = dev(j)
    return np.array(pts)


# ---------------------------------------------------------------------------
# Covering radius
# ---------------------------------------------------------------------------

def _corner_radius(body: Body, lat: Lattice) -> float:
    """Gauge circumradius of the centred fundamental parallelepiped: an upper
    bound for the covering radius."""
    signs = np.array(list(itertools.product([-0.5, 0.5], repeat=lat.dim)))
    return float(np.max(body.gauge(signs @ lat.basis.T)))


def covering_radius_bounds(body: Body, lat: Lattice, rtol: float = 1e-6,
                           max_boxes: int = 400_000) -> tuple[float, float]:
    """Certified bracket for the covering radius by branch and bound.

    Boxes of the fundamental parallelepiped are discarded once their centre
    distance plus their gauge circumradius cannot beat the best centre
    distance found; surviving boxes are halved along every axis.
    """
    if body.dim != lat.dim:
        raise GeometryError("dimension mismatch between body and lattice")
    lat = lat.reduced()
    n = lat.dim
    B = lat.basis
    gamma0 = _corner_radius(body, lat)
    corners = np.array(list(itertools.product([0.0, 1.0], repeat=n))) @ B.T
    reach = gamma0 + float(np.max(body.gauge(corners)))
    W = np.vstack([np.zeros(n), lattice_points_array(lat, body, reach, tol=1e-9)])
    box_corners = np.array(list(itertools.product([-0.5, 0.5], repeat=n)))

    def dist(Y, W):
        best = np.full(len(Y), np.inf)
        for w in W:
            best = np.minimum(best, body.gauge(Y - w))
        return best

    k = 8
    grid = (np.arange(k) + 0.5) / k
    centres = np.array(list(itertools.product(grid, repeat=n)))
    size = 1.0 / k
    lower = 0.0
    upper = gamma0
    while True:
        Y = centres @ B.T
        rad = float(np.max(body.gauge((size * box_corners) @ B.T)))
        # a lattice point farther than upper + rad from every box is never the nearest one
        near = np.array([float(np.min(body.gauge(Y - w))) <= upper + rad for w in W])
        W = W[near]
        f = dist(Y, W)
        # box corners often hit the maximiser exactly (dyadic points); try the best boxes
        top = centres[np.argsort(f)[-256:]]
        fc = dist(((top[:, None, :] + size * box_corners[None]) @ B.T).reshape(-1, n), W)
        lower = max(lower, float(f.max()), float(fc.max()))
        ub = f + rad
        upper = min(upper, float(ub.max())) if len(ub) else upper
        alive = ub > lower * (1 + rtol)
        if not alive.any():
            return lower, max(lower, float(ub.max()))
        centres = centres[alive]
        if len(centres) * 2 ** n > max_boxes:
            return lower, float(ub[alive].max())
        size /= 2
        offs = box_corners * size
        centres = (centres[:, None, :] + offs[None, :, :]).reshape(-1, n)


# ---------------------------------------------------------------------------
# Planar Minkowski cells
# ---------------------------------------------------------------------------

def _chain(body: Body, v: np.ndarray) -> PLChain:
    o = np.zeros(2)
    if isinstance(body, SymmetricPolytope):
        return simplify(bisector_2d_exact(body, o, v))
    if isinstance(body, EuclideanBall):
        e = rot90(v) / np.linalg.norm(v)
        mid = 0.5 * v
        return PLChain(mid[None, :], (mid, -e), (mid, e), o, v)
    raise GeometryError(f"planar cells need a polygon or a disc, got {body.kind}")


class _PolarChain:
    """A bisector chain of (o, v) as a polar piecewise-linear curve."""

    def __init__(self, v: np.ndarray, pts: np.ndarray):
        self.base = math.atan2(v[1], v[0])
        rel = np.arctan2(cross2(v, pts), pts @ v)
        if np.any(np.diff(rel) <= 0):
            raise GeometryError("bisector chain is not star-shaped about the origin")
        self.v = v
        self.pts = pts
        self.ang = rel

    @classmethod
    def from_chain(cls, chain: PLChain, reach: float) -> "_PolarChain":
        return cls(chain.q, chain.polyline(reach))

    def reflected(self) -> "_PolarChain":
        # the bisector of (o, -v) is minus the bisector of (o, v)
        return _PolarChain(-self.v, -self.pts)

    def segments(self, theta: np.ndarray):
        """Endpoints of the piece hit by each ray, and a validity mask."""
        rel = np.mod(theta - self.base + math.pi, TWO_PI) - math.pi
        k = np.searchsorted(self.ang, rel, side="right") - 1
        ok = (k >= 0) & (k < len(self.pts) - 1)
        kk = np.clip(k, 0, len(self.pts) - 2)
        return self.pts[kk], self.pts[kk + 1], ok

    def radial(self, theta: np.ndarray) -> np.ndarray:
        a, b, ok = self.segments(theta)
        return np.where(ok, _line_radial(a, b, theta), np.inf)

    def segment_at(self, theta: float):
        a, b, ok = self.segments(np.array([theta]))
        return (a[0], b[0]) if ok[0] else None

    def abs_angles(self) -> np.ndarray:
        return np.mod(self.base + self.ang, TWO_PI)


def _line_radial(a, b, theta):
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return cross2(a, b - a) / cross2(u, b - a)


def _line_meet(a1, b1, a2, b2):
    d1 = b1 - a1
    d2 = b2 - a2
    den = float(cross2(d1, d2))
    if abs(den) <= 1e-300:
        return None
    s = float(cross2(a2 - a1, d2)) / den
    return a1 + s * d1


def _envelope(chains: list[_PolarChain]) -> np.ndarray:
    """Vertices of the radial lower envelope of star-shaped chains.

    Between consecutive breakpoint angles every chain is a single line, and
    two lines cross at most once there, so each interval contributes its
    lower-end point plus any crossings between the owners at its two ends.
    """
    angles = np.unique(np.concatenate([c.abs_angles() for c in chains] + [np.array([0.0])]))
    lo = angles
    hi = np.concatenate([angles[1:], [angles[0] + TWO_PI]])
    keep = hi - lo > 1e-15
    lo, hi = lo[keep], hi[keep]
    mid = 0.5 * (lo + hi)
    n, k = len(mid), len(chains)
    A = np.empty((n, k, 2))
    B = np.empty((n, k, 2))
    ok = np.empty((n, k), dtype=bool)
    for j, c in enumerate(chains):
        A[:, j], B[:, j], ok[:, j] = c.segments(mid)
    if not ok.any(axis=1).all():
        raise GeometryError("cell is unbounded in this direction; lattice too sparse for the candidates")
    r_lo = np.where(ok, _line_radial(A, B, lo[:, None]), np.inf)
    r_hi = np.where(ok, _line_radial(A, B, hi[:, None]), np.inf)
    own_lo = np.argmin(r_lo, axis=1)
    own_hi = np.argmin(r_hi, axis=1)
    r0 = r_lo[np.arange(n), own_lo]
    start = r0[:, None] * np.stack([np.cos(lo), np.sin(lo)], axis=1)

    verts: list[np.ndarray] = []
    for i in range(n):
        verts.append(start[i])
        if own_lo[i] != own_hi[i]:
            segs = [(A[i, j], B[i, j]) if ok[i, j] else None for j in range(k)]
            _solve_interval(segs, lo[i], hi[i], verts)
    return np.array(verts)


def _solve_interval(segs, lo, hi, verts, depth=0):
    r_lo = [_seg_radial(s, lo) for s in segs]
    r_hi = [_seg_radial(s, hi) for s in segs]
    k_lo = int(np.argmin(r_lo))
    k_hi = int(np.argmin(r_hi))
    if k_lo == k_hi or depth > 40:
        return
    x = _line_meet(*segs[k_lo], *segs[k_hi])
    if x is None:
        return
    th = math.atan2(x[1], x[0])
    th = lo + ((th - lo) % TWO_PI)
    if not (lo < th < hi):
        return
    r_x = float(np.hypot(*x))
    r_all = [_seg_radial(s, th) for s in segs]
    if min(r_all) < r_x * (1 - 1e-12):
        _solve_interval(segs, lo, th, verts, depth + 1)
        verts.append(_radial_point(segs, th))
        _solve_interval(segs, th, hi, verts, depth + 1)
    else:
        verts.append(x)


def _seg_radial(seg, th):
    if seg is None:
        return math.inf
    a, b = seg
    u = np.array([math.cos(th), math.sin(th)])
    return float(cross2(a, b - a) / cross2(u, b - a))


def _radial_point(segs, th):
    r = min(_seg_radial(s, th) for s in segs)
    return r * np.array([math.cos(th), math.sin(th)])


@dataclass
class CellReport:
    gamma: float
    relevant: list
    cell: object
    volume: float
    tiling_ok: bool | None = None
    volume_stderr: float = 0.0


def _envelope_2d(body: Body, lat: Lattice):
    if body.dim != 2 or lat.dim != 2:
        raise GeometryError("planar cell construction needs dimension 2")
    lat = lat.reduced()
    gamma0 = _corner_radius(body, lat)
    cand = lattice_points_array(lat, body, 2 * gamma0, tol=1e-9)
    rad = math.sqrt(2) * max(body.support(e) for e in np.eye(2))
    reach = 8.0 * (1.0 + gamma0 * rad + float(np.abs(cand).max()))
    chains = {}
    for v in cand:
        key = tuple(np.round(-v, 9))
        if key in chains:
            chains[tuple(np.round(v, 9))] = chains[key].reflected()
        else:
            chains[tuple(np.round(v, 9))] = _PolarChain.from_chain(_chain(body, v), reach)
    return _envelope(list(chains.values())), cand


def _gamma_2d(body: Body, lat: Lattice) -> float:
    # the farthest point from the lattice is a cell vertex
    verts, _ = _envelope_2d(body, lat)
    return float(np.max(body.gauge(verts)))


def _cell_2d(body: Body, lat: Lattice):
    verts, cand = _envelope_2d(body, lat)
    cell = StarPolygon(_merge_collinear(verts))
    gamma = float(np.max(body.gauge(cell.vertices)))
    return cell, gamma, cand


def minkowski_cell_2d(poly: Body, lat: Lattice) -> StarPolygon:
    """Exact planar Minkowski cell: intersection of the regions D(o, v)."""
    return _cell_2d(poly, lat)[0]


def covering_radius(body: Body, lat: Lattice, rtol: float = 1e-6) -> float:
    """Smallest gamma with gamma * body + lattice covering space.

    Planar polygons and discs use the exact cell (the farthest point from the
    lattice is a cell vertex); other bodies use branch and bound.
    """
    if body.dim != lat.dim:
        raise GeometryError("dimension mismatch between body and lattice")
    if body.dim == 2 and isinstance(body, (SymmetricPolytope, EuclideanBall)):
        return _gamma_2d(body, lat)
    return covering_radius_bounds(body, lat, rtol=rtol)[0]


def _relevant_radius(body: Body, lat: Lattice) -> float:
    # an upper bound is what matters here: too small a radius drops neighbours
    if body.dim == 2 and isinstance(body, (SymmetricPolytope, EuclideanBall)):
        return _gamma_2d(body, lat)
    return covering_radius_bounds(body, lat)[1]


def relevant_vectors(body: Body, lat: Lattice, gamma: float | None = None) -> list[np.ndarray]:
    """Lattice vectors within gauge 2 gamma; all others leave gamma * body inside D(o, v)."""
    if gamma is None:
        gamma = _relevant_radius(body, lat)
    return list(lattice_points_array(lat.reduced(), body, 2 * gamma * (1 + 1e-6)))


# ---------------------------------------------------------------------------
# Cells in any dimension via membership
# ---------------------------------------------------------------------------

@dataclass
class CellOracle:
    """Membership oracle for a Minkowski cell in any dimension."""

    body: Body
    lat: Lattice
    gamma: float
    relevant: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, body: Body, lat: Lattice, gamma: float | None = None) -> "CellOracle":
        if gamma is None:
            gamma = _relevant_radius(body, lat)
        rel = np.array(relevant_vectors(body, lat, gamma)).reshape(-1, body.dim)
        return cls(body, lat, gamma, rel)

    def contains(self, Y, tol: float = EPS) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        out = np.ones(len(Y), dtype=bool)
        o = np.zeros(self.body.dim)
        for v in self.relevant:
            idx = np.flatnonzero(out)
            if not len(idx):
                break
            out[idx] = in_D_batch(self.body, o, v, Y[idx], tol)
        return out


def cell_membership(body: Body, lat: Lattice, y, tol: float = EPS) -> bool:
    y = as_point(y, body.dim)
    return bool(CellOracle.build(body, lat).contains(y[None, :], tol)[0])


def cell_volume(cell, samples: int = 1_000_000, seed: int = 0, batch: int = 100_000):
    """``(volume, stderr)``: the exact shoelace area of a star polygon with
    zero error, or a Monte Carlo estimate for a :class:`CellOracle` sampled
    inside the bounding box of its gamma-scaled body."""
    if isinstance(cell, StarPolygon):
        return cell.area, 0.0
    if not isinstance(cell, CellOracle):
        raise TypeError("expected a StarPolygon or CellOracle")
    n = cell.body.dim
    # the cell lies in gamma * body; a margin keeps the hit fraction below one
    half = np.array([cell.gamma * cell.body.support(e) for e in np.eye(n)]) * 1.1
    box = float(np.prod(2 * half))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        Y = rng.uniform(-half, half, size=(k, n))
        hits += int(cell.contains(Y).sum())
        done += k
    frac = hits / samples
    if frac == 0:
        raise GeometryError("degenerate cell (no Monte Carlo hits)")
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def cell_report(body: Body, lat: Lattice, samples: int = 0, seed: int = 0,
                mc_samples: int = 1_000_000) -> CellReport:
    if body.dim == 2 and isinstance(body, (SymmetricPolytope, EuclideanBall)):
        cell, gamma, _ = _cell_2d(body, lat)
        rel = relevant_vectors(body, lat, gamma)
        rep = CellReport(gamma, rel, cell, cell.area)
    else:
        oracle = CellOracle.build(body, lat)
        vol, err = cell_volume(oracle, mc_samples, seed)
        rep = CellReport(oracle.gamma, list(oracle.relevant), oracle, vol, volume_stderr=err)
    if samples:
        rep.tiling_ok = verify_tiling(body, lat, samples, seed=seed, report=rep).ok
    return rep


# ---------------------------------------------------------------------------
# Tiling verification
# ---------------------------------------------------------------------------

@dataclass
class TilingVerdict:
    ok: bool
    volume: float
    det: float
    volume_error: float
    volume_tolerance: float
    samples: int
    gaps: int = 0
    overlap_count: int = 0
    uncovered: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)


def verify_tiling(body: Body, lat: Lattice, samples: int = 10_000, seed: int = 0,
                  shrink: float = 1e-6, report: CellReport | None = None) -> TilingVerdict:
    """Check that the cell has volume det(lattice) and that random points of a
    fundamental domain lie in at least one translate and in the interior of
    at most one.  Points within ``shrink`` (relative) of a cell boundary are
    not counted as interior."""
    if report is None:
        report = cell_report(body, lat, mc_samples=200_000, seed=seed)
    cell = report.cell
    if isinstance(cell, StarPolygon):
        vol_tol = 1e-9 * lat.det
        contains = cell.contains
    else:
        vol_tol = max(4 * report.volume_stderr, 1e-9 * lat.det)
        contains = cell.contains
    vol_err = abs(report.volume - lat.det)

    red = lat.reduced()
    n = lat.dim
    corners = np.array(list(itertools.product([0.0, 1.0], repeat=n))) @ red.basis.T
    reach = report.gamma * (1 + 1e-6) + float(np.max(body.gauge(corners)))
    W = np.vstack([np.zeros(n), lattice_points_array(red, body, reach, tol=1e-9)])
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0.0, 1.0, size=(samples, n)) @ red.basis.T
    covered = np.zeros(samples, dtype=int)
    inside = np.zeros(samples, dtype=int)
    for w in W:
        Z = Y - w
        near = body.gauge(Z) <= report.gamma * (1 + 1e-6) + 1e-12
        if not near.any():
            continue
        idx = np.flatnonzero(near)
        covered[idx] += contains(Z[idx])
        inside[idx] += contains(Z[idx] * (1 + shrink), tol=0.0)
    uncovered = Y[covered == 0]
    overlaps = Y[inside > 1]
    ok = vol_err <= vol_tol and len(uncovered) == 0 and len(overlaps) == 0
    return TilingVerdict(bool(ok), float(report.volume), float(lat.det), float(vol_err), float(vol_tol),
                         samples, len(uncovered), len(overlaps),
                         [u.tolist() for u in uncovered[:20]], [o.tolist() for o in overlaps[:20]])


def segment_direction_check(poly: SymmetricPolytope, dirs, tol: float = EPS) -> bool:
    """True iff no boundary segment of the polytope is parallel to any direction.

    A facet (an edge in the plane) carries a segment parallel to d exactly
    when its normal is orthogonal to d.
    """
    a = poly.normals
    an = np.linalg.norm(a, axis=1)
    for d in dirs:
        d = as_point(d, poly.dim)
        if np.any(np.abs(a @ d) <= tol * an * np.linalg.norm(d)):
            return False
    return True
