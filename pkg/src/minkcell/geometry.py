"""Gauges of centrally symmetric bodies, lattices and small vector helpers.

Points are plain ``numpy`` float arrays of shape ``(n,)``; batches are
``(k, n)``.  Every body exposes a vectorised :meth:`gauge` so that the
bisector and cell code can evaluate many points at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, HalfspaceIntersection

EPS = 1e-9


class GeometryError(ValueError):
    """A geometric precondition does not hold (asymmetric body, p == q, ...)."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise GeometryError(f"expected a point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


def _check_batch(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[-1]}")
    return arr


def cross2(u, v):
    """z-component of the planar cross product (broadcasts)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def rot90(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.stack([-u[..., 1], u[..., 0]], axis=-1)


# ---------------------------------------------------------------------------
# Bodies
# ---------------------------------------------------------------------------

class Body:
    """Centrally symmetric convex body with the origin in its interior."""

    dim: int
    kind: str = "custom"

    def gauge(self, x) -> np.ndarray | float:
        raise NotImplementedError

    def support(self, w) -> float:
        """Support function h(w) = max over the body of <w, y>."""
        raise NotImplementedError

    def contains(self, x, tol: float = EPS):
        return self.gauge(x) <= 1.0 + tol

    def scaled(self, lam: float) -> "Body":
        raise NotImplementedError

    def linear_image(self, tau) -> "Body":
        raise NotImplementedError

    @property
    def is_polytope(self) -> bool:
        return False


class SymmetricPolytope(Body):
    """Centrally symmetric polytope {x : <a_k, x> <= 1 for all k}.

    In the plane the polytope also carries its CCW vertex list; in higher
    dimensions vertices are recovered lazily with scipy.
    """

    kind = "polytope"

    def __init__(self, normals, vertices=None, tol: float = EPS):
        normals = np.asarray(normals, dtype=float)
        if normals.ndim != 2 or normals.shape[1] < 2:
            raise GeometryError("facet normals must be an (m, n) array with n >= 2")
        self.dim = normals.shape[1]
        self.normals = normals
        self._vertices = None if vertices is None else np.asarray(vertices, dtype=float)
        self.tol = tol
        _check_symmetric_rows(normals, tol, what="facet normal")

    # -- construction ------------------------------------------------------
    @classmethod
    def from_vertices(cls, vertices, tol: float = EPS) -> "SymmetricPolytope":
        """Planar polygon from its vertices (any order, must be strictly convex)."""
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryError("vertex form is only supported in the plane")
        if len(v) < 4 or len(v) % 2:
            raise GeometryError(
                f"central symmetry violated: a symmetric polygon needs an even "
                f"number (>= 4) of vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("vertex has non-finite coordinates")
        _check_symmetric_rows(v, tol * max(1.0, np.abs(v).max()), what="vertex")
        v = _canonical_ccw(v)
        m = len(v)
        nxt = np.roll(v, -1, axis=0)
        turn = cross2(nxt - v, np.roll(v, -2, axis=0) - nxt)
        if np.any(turn <= tol * np.abs(v).max() ** 2):
            raise GeometryError("polygon is not strictly convex")
        edge = nxt - v
        n = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
        off = np.einsum("ij,ij->i", n, v)
        if np.any(off <= tol):
            raise GeometryError("origin is not strictly interior")
        normals = n / off[:, None]
        poly = cls(normals, vertices=v, tol=tol)
        assert len(poly.normals) == m
        return poly

    @classmethod
    def from_facets(cls, normals, offsets=None, tol: float = EPS) -> "SymmetricPolytope":
        """Polytope {x : <n_k, x> <= b_k}; offsets are normalised to one."""
        normals = np.asarray(normals, dtype=float)
        if offsets is not None:
            offsets = np.asarray(offsets, dtype=float)
            if np.any(offsets <= 0):
                raise GeometryError("origin is not strictly interior (non-positive offset)")
            normals = normals / offsets[:, None]
        if normals.ndim != 2:
            raise GeometryError("facet normals must be a 2-D array")
        if normals.shape[1] == 2:
            poly = cls(normals, tol=tol)
            return cls.from_vertices(poly.vertices, tol=tol)
        poly = cls(normals, tol=tol)
        _ = poly.vertices  # validates boundedness
        return poly

    # -- derived data ------------------------------------------------------
    @property
    def m(self) -> int:
        """Vertex count in the plane, facet count otherwise."""
        return len(self.normals)

    @cached_property
    def vertices(self) -> np.ndarray:
        if self._vertices is not None:
            return self._vertices
        try:
            hs = HalfspaceIntersection(
                np.hstack([self.normals, -np.ones((self.m, 1))]), np.zeros(self.dim))
        except Exception as exc:  # qhull raises its own error type
            raise GeometryError(f"facets do not bound a polytope: {exc}") from exc
        pts = hs.intersections
        if not np.all(np.isfinite(pts)):
            raise GeometryError("facets do not bound a polytope")
        pts = np.unique(np.round(pts, 12), axis=0)
        if self.dim == 2:
            return _canonical_ccw(pts)
        return pts

    @cached_property
    def vertex_tuples(self) -> list[tuple[float, ...]]:
        return [tuple(map(float, r)) for r in self.vertices]

    @cached_property
    def volume(self) -> float:
        if self.dim == 2:
            v = self.vertices
            return 0.5 * float(np.sum(cross2(v, np.roll(v, -1, axis=0))))
        return float(ConvexHull(self.vertices).volume)

    @property
    def is_polytope(self) -> bool:
        return True

    # -- metric ------------------------------------------------------------
    def gauge(self, x):
        x = _check_batch(x, self.dim)
        g = x @ self.normals.T
        return np.max(g, axis=-1)

    def support(self, w) -> float:
        return float(np.max(self.vertices @ np.asarray(w, dtype=float)))

    def scaled(self, lam: float) -> "SymmetricPolytope":
        v = None if self._vertices is None else lam * self._vertices
        return SymmetricPolytope(self.normals / lam, vertices=v, tol=self.tol)

    def linear_image(self, tau) -> "SymmetricPolytope":
        tau = np.asarray(tau, dtype=float)
        if abs(np.linalg.det(tau)) < 1e-14:
            raise GeometryError("linear map is singular")
        if self.dim == 2:
            return SymmetricPolytope.from_vertices(self.vertices @ tau.T, tol=self.tol)
        # <a, x> <= 1 on P  <=>  <tau^-T a, tau x> <= 1 on tau P
        return SymmetricPolytope(self.normals @ np.linalg.inv(tau), tol=self.tol)

    def edges_2d(self):
        v = self.vertices
        return v, np.roll(v, -1, axis=0)

    def __repr__(self):
        return f"SymmetricPolytope(dim={self.dim}, m={self.m})"


class EuclideanBall(Body):
    kind = "ball"

    def __init__(self, dim: int = 2, radius: float = 1.0):
        if dim < 2 or radius <= 0:
            raise GeometryError("ball needs dim >= 2 and a positive radius")
        self.dim = dim
        self.radius = float(radius)

    def gauge(self, x):
        x = _check_batch(x, self.dim)
        return np.linalg.norm(x, axis=-1) / self.radius

    def support(self, w) -> float:
        return self.radius * float(np.linalg.norm(w))

    @property
    def volume(self) -> float:
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius ** n

    def scaled(self, lam: float) -> "EuclideanBall":
        return EuclideanBall(self.dim, self.radius * lam)

    def __repr__(self):
        return f"EuclideanBall(dim={self.dim}, radius={self.radius})"


class DiscBicone(Body):
    """conv{v, S, -v} with S the unit disc in the plane z = 0 of E^3.

    The hull is the union of the two cones over S with apexes +-v, so the
    gauge has a closed form: for z >= 0, with w = x_xy - (z / v_z) v_xy,
    gauge(x) = |w| + z / v_z.
    """

    kind = "disc_bicone"

    def __init__(self, apex=(1.0, 0.0, 1.0)):
        apex = as_point(apex, 3)
        if apex[2] == 0:
            raise GeometryError("bicone apex must lie off the disc plane")
        if apex[2] < 0:
            apex = -apex
        self.apex = apex
        self.dim = 3

    def gauge(self, x):
        x = _check_batch(x, 3)
        sign = np.where(x[..., 2] < 0, -1.0, 1.0)[..., None]
        y = x * sign
        h = y[..., 2] / self.apex[2]
        w = y[..., :2] - h[..., None] * self.apex[:2]
        return np.linalg.norm(w, axis=-1) + h

    def contains_exact(self, x) -> bool:
        """Closed-form membership in the union of the two cones."""
        y = as_point(x, 3)
        if y[2] < 0:
            y = -y
        lam = y[2] / self.apex[2]
        if lam > 1:
            return False
        return bool(np.hypot(*(y[:2] - lam * self.apex[:2])) <= 1 - lam + EPS)

    def support(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(max(abs(w @ self.apex), np.hypot(w[0], w[1])))

    def __repr__(self):
        return f"DiscBicone(apex={self.apex.tolist()})"


class CustomBody(Body):
    """Body given by its boundary radial function r(u) for unit vectors u."""

    kind = "custom"

    def __init__(self, dim: int, radial: Callable[[np.ndarray], np.ndarray]):
        self.dim = dim
        self.radial = radial

    def gauge(self, x):
        x = _check_batch(x, self.dim)
        norm = np.linalg.norm(x, axis=-1)
        safe = np.where(norm > 0, norm, 1.0)
        u = x / np.asarray(safe)[..., None]
        return np.where(norm > 0, norm / self.radial(u), 0.0)

    def support(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if self.dim != 2:
            raise NotImplementedError("custom support is planar only")
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        pts = u * self.radial(u)[:, None]
        return float(np.max(pts @ w)) * (1 + 1e-3)


def _check_symmetric_rows(rows: np.ndarray, tol: float, what: str):
    for r in rows:
        if np.min(np.abs(rows + r).max(axis=1)) > max(tol, 1e-12) * max(1.0, np.abs(r).max()):
            raise GeometryError(f"central symmetry violated: -{what} {(-r).tolist()} is missing")


def _canonical_ccw(v: np.ndarray) -> np.ndarray:
    ang = np.arctan2(v[:, 1], v[:, 0])
    order = np.argsort(ang, kind="stable")
    v = v[order]
    ang = ang[order]
    # start at the vertex of maximal polar angle; ties broken lexicographically
    start = max(range(len(v)), key=lambda i: (ang[i], -v[i, 0], -v[i, 1]))
    return np.roll(v, -start, axis=0)


# ---------------------------------------------------------------------------
# Standard bodies
# ---------------------------------------------------------------------------

def square(half: float = 1.0) -> SymmetricPolytope:
    return SymmetricPolytope.from_vertices([[half, half], [-half, half], [-half, -half], [half, -half]])


def regular_polygon(m: int, circumradius: float = 1.0, phase: float = 0.0) -> SymmetricPolytope:
    if m < 4 or m % 2:
        raise GeometryError("a centrally symmetric regular polygon needs an even m >= 4")
    th = phase + 2 * np.pi * np.arange(m) / m
    return SymmetricPolytope.from_vertices(circumradius * np.stack([np.cos(th), np.sin(th)], axis=1))


def skew_hexagon(i: int) -> SymmetricPolytope:
    """conv{+-(1, 1), +-(1, 0), +-(1 - 1/i, -1)}; tends to the square as i grows."""
    if i < 1:
        raise GeometryError("family index starts at 1")
    pts = np.array([[1.0, 1.0], [1.0, 0.0], [1.0 - 1.0 / i, -1.0]])
    return SymmetricPolytope.from_vertices(np.vstack([pts, -pts]))


def cube(dim: int = 3, half: float = 1.0) -> SymmetricPolytope:
    eye = np.eye(dim) / half
    return SymmetricPolytope(np.vstack([eye, -eye]))


def cross_polytope(dim: int = 3) -> SymmetricPolytope:
    signs = np.array(np.meshgrid(*[[1.0, -1.0]] * dim, indexing="ij")).reshape(dim, -1).T
    return SymmetricPolytope(signs)


def octahedron() -> SymmetricPolytope:
    return cross_polytope(3)


def bicone_surrogate(apex=(1.0, 0.0, 1.0), sides: int = 32) -> SymmetricPolytope:
    """Polytope approximation of :class:`DiscBicone` (disc replaced by a polygon
    whose vertex set contains e_1)."""
    apex = np.asarray(apex, dtype=float)
    th = 2 * np.pi * np.arange(sides) / sides
    ring = np.stack([np.cos(th), np.sin(th), np.zeros(sides)], axis=1)
    pts = np.vstack([ring, apex, -apex])
    hull = ConvexHull(pts)
    eq = hull.equations  # n.x + c <= 0
    normals = eq[:, :3] / (-eq[:, 3])[:, None]
    normals = np.unique(np.round(normals, 12), axis=0)
    return SymmetricPolytope(normals)


# ---------------------------------------------------------------------------
# Metric operations
# ---------------------------------------------------------------------------

def gauge(body: Body, x) -> float:
    """Minkowski gauge: the lambda with x on the boundary of lambda * body."""
    x = as_point(x, body.dim)
    return float(body.gauge(x))


def minkowski_distance(body: Body, x, y) -> float:
    x = as_point(x, body.dim)
    y = as_point(y, body.dim)
    return float(body.gauge(y - x))


def radial_gauge(body: Body, x, tol: float = 1e-13) -> float:
    """Gauge by bisection on boundary crossing along the ray through x.

    Independent of the closed forms; used as a cross-check oracle.
    """
    x = as_point(x, body.dim)
    if not np.any(x):
        return 0.0
    # invariant: x / hi lies in the body, x / lo does not (lo = 0 means infinitely far)
    lo, hi = 0.0, 1.0
    while not body.contains(x / hi, tol=0.0):
        lo, hi = hi, 2 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid > 0 and body.contains(x / mid, tol=0.0):
            hi = mid
        else:
            lo = mid
    return hi


def _point_to_polytope_distance(y: np.ndarray, poly: SymmetricPolytope) -> float:
    if poly.gauge(y) <= 1.0:
        return 0.0
    if poly.dim == 2:
        a, b = poly.edges_2d()
        ab = b - a
        s = np.clip(np.einsum("ij,ij->i", y - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
        return float(np.min(np.linalg.norm(a + s[:, None] * ab - y, axis=1)))
    res = minimize(lambda z: 0.5 * np.sum((z - y) ** 2), np.zeros(poly.dim), jac=lambda z: z - y,
                   constraints=[{"type": "ineq", "fun": lambda z: 1.0 - poly.normals @ z,
                                 "jac": lambda z: -poly.normals}],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return float(np.linalg.norm(res.x - y))


def _directed_hausdorff(b1: Body, b2: Body) -> float:
    if isinstance(b1, SymmetricPolytope):
        if isinstance(b2, SymmetricPolytope):
            return max(_point_to_polytope_distance(v, b2) for v in b1.vertices)
        if isinstance(b2, EuclideanBall):
            return max(0.0, float(np.max(np.linalg.norm(b1.vertices, axis=1))) - b2.radius)
    if isinstance(b1, EuclideanBall):
        if isinstance(b2, EuclideanBall):
            return max(0.0, b1.radius - b2.radius)
        if isinstance(b2, SymmetricPolytope):
            return _ball_to_polytope(b1.radius, b2)
    raise NotImplementedError(f"Hausdorff distance between {b1.kind} and {b2.kind}")


def _ball_to_polytope(r: float, poly: SymmetricPolytope) -> float:
    # the farthest point lies on the sphere: dense angular sweep, then ternary refinement
    if poly.dim != 2:
        raise NotImplementedError("ball/polytope Hausdorff distance is planar only")
    th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    pts = r * np.stack([np.cos(th), np.sin(th)], axis=1)
    d = np.array([_point_to_polytope_distance(p, poly) for p in pts])
    k = int(np.argmax(d))
    lo, hi = th[k] - 2 * np.pi / 4096, th[k] + 2 * np.pi / 4096
    for _ in range(80):
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        fa = _point_to_polytope_distance(r * np.array([np.cos(a), np.sin(a)]), poly)
        fb = _point_to_polytope_distance(r * np.array([np.cos(b), np.sin(b)]), poly)
        if fa < fb:
            lo = a
        else:
            hi = b
    return max(float(d[k]), _point_to_polytope_distance(r * np.array([np.cos(lo), np.sin(lo)]), poly))


def hausdorff_distance(body1: Body, body2: Body) -> float:
    """Smallest gamma with each body inside the other inflated by gamma * B_n."""
    if body1.dim != body2.dim:
        raise GeometryError(f"dimension mismatch: {body1.dim} vs {body2.dim}")
    return max(_directed_hausdorff(body1, body2), _directed_hausdorff(body2, body1))


def decompose(p, q, y):
    """Split y = x + t (q - p) with x in the hyperplane through o orthogonal to q - p."""
    p = as_point(p)
    q = as_point(q, len(p))
    y = as_point(y, len(p))
    d = q - p
    dd = float(d @ d)
    if dd == 0.0:
        raise GeometryError("p and q coincide")
    t = float(y @ d) / dd
    return y - t * d, t


# ---------------------------------------------------------------------------
# Lattices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """Lattice spanned by the columns of ``basis``."""

    basis: np.ndarray
    det: float = field(init=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise GeometryError("lattice basis must be a square matrix")
        if not np.all(np.isfinite(b)):
            raise GeometryError("lattice basis has non-finite entries")
        det = float(np.linalg.det(b))
        if abs(det) <= 1e-12 * max(1.0, np.abs(b).max()) ** b.shape[0]:
            raise GeometryError("degenerate lattice (zero determinant)")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "det", abs(det))

    @classmethod
    def from_vectors(cls, *vectors) -> "Lattice":
        return cls(np.column_stack([np.asarray(v, dtype=float) for v in vectors]))

    @classmethod
    def integer(cls, dim: int = 2, scale: float = 1.0) -> "Lattice":
        return cls(scale * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def point(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs, dtype=float)

    def scaled(self, lam: float) -> "Lattice":
        return Lattice(lam * self.basis)

    def linear_image(self, tau) -> "Lattice":
        return Lattice(np.asarray(tau, dtype=float) @ self.basis)

    def reduced(self) -> "Lattice":
        """Lagrange-Gauss reduced basis in the plane; identity operation otherwise."""
        if self.dim != 2:
            return self
        u, v = self.basis[:, 0].copy(), self.basis[:, 1].copy()
        if u @ u > v @ v:
            u, v = v, u
        for _ in range(200):
            mu = round(float(u @ v) / float(u @ u))
            v = v - mu * u
            if v @ v >= u @ u:
                break
            u, v = v, u
        return Lattice(np.column_stack([u, v]))


def lattice_points_in_ball(lat: Lattice, body: Body, r: float, tol: float = 0.0) -> list[np.ndarray]:
    """Nonzero lattice vectors v with gauge(v) <= r, found by box enumeration.

    The integer box comes from the support function of r * body against the
    rows of the inverse basis.
    """
    if r <= 0:
        raise GeometryError("radius must be positive")
    if lat.dim != body.dim:
        raise GeometryError(f"dimension mismatch: lattice {lat.dim} vs body {body.dim}")
    return list(lattice_points_array(lat, body, r, tol))


def lattice_points_array(lat: Lattice, body: Body, r: float, tol: float = 0.0) -> np.ndarray:
    inv = np.linalg.inv(lat.basis)
    bounds = [int(math.floor(r * body.support(row) * (1 + 1e-9) + 1e-9)) for row in inv]
    axes = [np.arange(-k, k + 1) for k in bounds]
    z = np.array(np.meshgrid(*axes, indexing="ij")).reshape(lat.dim, -1).T
    z = z[np.any(z != 0, axis=1)]
    pts = z @ lat.basis.T
    keep = body.gauge(pts) <= r * (1 + tol) + tol
    pts = pts[keep]
    # deterministic order: by gauge, then lexicographic
    g = body.gauge(pts)
    order = np.lexsort(tuple(np.round(pts[:, ::-1].T, 12)) + (np.round(g, 12),))
    return pts[order]
