import math

import numpy as np
import pytest
from hypothesis import given

from conftest import random_lattice, random_polygon, seeds
from minkcell.cell import (
    CellOracle,
    StarPolygon,
    cell_membership,
    cell_report,
    cell_volume,
    covering_radius,
    covering_radius_bounds,
    in_D,
    in_D_batch,
    minkowski_cell_2d,
    relevant_vectors,
    segment_direction_check,
    verify_tiling,
)
from minkcell.geometry import (
    DiscBicone,
    EuclideanBall,
    GeometryError,
    Lattice,
    bicone_surrogate,
    cube,
    gauge,
    octahedron,
    regular_polygon,
    square,
)

HEX = regular_polygon(6)
HEX_LATTICE = Lattice.from_vectors([1.5, math.sqrt(3) / 2], [0.0, math.sqrt(3)])


def as_set(vectors):
    return {tuple(np.round(v, 9) + 0.0) for v in vectors}


# ---------------------------------------------------------------------------
# the region D

def test_in_D_examples():
    p, q = [0, 0], [0, 2]
    assert in_D(square(), p, q, p)
    assert not in_D(square(), p, q, q)
    assert in_D(square(), p, q, [5, 0.9])
    assert not in_D(square(), p, q, [5, 1.1])
    # inside the equidistant segment only the part up to its midpoint belongs to D
    assert in_D(square(), p, q, [5, 1.0])
    for body in (HEX, EuclideanBall(2)):
        assert in_D(body, p, q, p) and not in_D(body, p, q, q)
    with pytest.raises(GeometryError):
        in_D(square(), p, p, [1, 1])


@given(seeds)
def test_D_is_star_about_p(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    body = random_polygon(rng) if n == 2 else DiscBicone(np.append(rng.normal(size=2), 1.0))
    p, q = rng.normal(size=(2, n))
    Y = p + rng.normal(size=(200, n)) * 3
    inside = in_D_batch(body, p, q, Y)
    for alpha in np.arange(1, 10) / 10:
        assert np.all(in_D_batch(body, p, q, p + alpha * (Y[inside] - p)))


# ---------------------------------------------------------------------------
# covering radius and relevant vectors

def test_covering_radius_examples():
    assert covering_radius(square(), Lattice.integer(2, 2.0)) == pytest.approx(1.0, abs=1e-12)
    assert covering_radius(square(), Lattice.integer(2, 3.0)) == pytest.approx(1.5, abs=1e-12)
    assert covering_radius(EuclideanBall(2), Lattice.integer(2)) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    assert covering_radius(HEX, HEX_LATTICE) == pytest.approx(1.0, abs=1e-12)


def test_covering_radius_nd():
    assert covering_radius(cube(), Lattice.integer(3, 2.0)) == pytest.approx(1.0, rel=1e-6)
    assert covering_radius(EuclideanBall(3), Lattice.integer(3)) == pytest.approx(math.sqrt(3) / 2, rel=1e-6)
    assert covering_radius(octahedron(), Lattice.integer(3)) == pytest.approx(1.5, rel=1e-6)
    lo, hi = covering_radius_bounds(cube(), Lattice.integer(3, 3.0))
    assert lo <= 1.5 * (1 + 1e-9) and hi >= 1.5 * (1 - 1e-9) and hi - lo <= 1e-6 * hi


def _farthest_by_sampling(body, lat, n=200_000, seed=0):
    # max over random points of the distance to the nearest lattice point
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0, 1, size=(n, 2)) @ lat.basis.T
    k = np.arange(-4, 5)
    Z = np.array(np.meshgrid(k, k)).reshape(2, -1).T @ lat.basis.T
    best = np.full(n, np.inf)
    for z in Z:
        best = np.minimum(best, body.gauge(Y - z))
    return best.max()


def test_covering_radius_against_sampling():
    rng = np.random.default_rng(2)
    for _ in range(5):
        P = random_polygon(rng)
        lat = random_lattice(rng, scale=1.0)
        g = covering_radius(P, lat)
        s = _farthest_by_sampling(P, lat)
        assert s <= g * (1 + 1e-9)
        assert s >= g * 0.98


def test_relevant_vectors_examples():
    rel = relevant_vectors(square(), Lattice.integer(2, 2.0))
    assert as_set(rel) == {(x, y) for x in (-2.0, 0.0, 2.0) for y in (-2.0, 0.0, 2.0)} - {(0.0, 0.0)}
    assert len(relevant_vectors(EuclideanBall(2), Lattice.integer(2))) == 8
    rel = relevant_vectors(HEX, Lattice.integer(2, 100.0))
    assert as_set(rel) == as_set(-np.array(rel))


@given(seeds)
def test_relevant_vectors_symmetric(seed):
    rng = np.random.default_rng(seed)
    rel = relevant_vectors(random_polygon(rng), random_lattice(rng))
    assert as_set(rel) == as_set(-np.array(rel))


def test_omitted_vectors_do_not_cut_gamma_body():
    # beyond gauge 2 gamma the region D(o, v) contains gamma * P
    rng = np.random.default_rng(4)
    P = random_polygon(rng)
    lat = random_lattice(rng)
    g = covering_radius(P, lat)
    rel = as_set(relevant_vectors(P, lat))
    k = np.arange(-6, 7)
    Z = np.array(np.meshgrid(k, k)).reshape(2, -1).T @ lat.basis.T
    th = np.linspace(0, 2 * np.pi, 721)
    ring = g * np.column_stack([np.cos(th), np.sin(th)])
    ring = ring / P.gauge(ring)[:, None] * g
    for v in Z:
        if np.any(v) and tuple(np.round(v, 9) + 0.0) not in rel:
            assert np.all(in_D_batch(P, np.zeros(2), v, ring))


# ---------------------------------------------------------------------------
# planar cells

def test_square_cell():
    cell = minkowski_cell_2d(square(), Lattice.integer(2, 2.0))
    assert as_set(cell.vertices) == {(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)}
    assert cell.area == pytest.approx(4.0, abs=1e-12)


def test_square_cell_by_membership_grid():
    # brute force: a grid of in_D tests over the 8 neighbours
    lat = Lattice.integer(2, 2.0)
    g = np.linspace(-1.5, 1.5, 301)
    Y = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    ok = np.ones(len(Y), dtype=bool)
    for v in relevant_vectors(square(), lat):
        ok &= in_D_batch(square(), np.zeros(2), v, Y)
    assert np.array_equal(ok, np.all(np.abs(Y) <= 1 + 1e-12, axis=1))


def test_hexagon_cell_is_hexagon():
    cell = minkowski_cell_2d(HEX, HEX_LATTICE)
    assert len(cell.vertices) == 6
    assert as_set(np.round(cell.vertices, 9)) == as_set(np.round(HEX.vertices, 9))
    assert cell.area == pytest.approx(HEX_LATTICE.det, rel=1e-9)


def test_disc_cell_is_square():
    cell = minkowski_cell_2d(EuclideanBall(2), Lattice.integer(2))
    assert as_set(cell.vertices) == {(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)}
    assert cell.area == pytest.approx(1.0, abs=1e-12)


@given(seeds)
def test_cell_area_equals_det(seed):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    cell = minkowski_cell_2d(P, lat)
    assert abs(cell.area - lat.det) <= 1e-9 * lat.det
    assert cell.is_centrally_symmetric()


@given(seeds)
def test_cell_inside_gamma_body(seed):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    rep = cell_report(P, lat)
    assert np.all(P.gauge(rep.cell.vertices) <= rep.gamma * (1 + 1e-6))
    assert rep.volume <= rep.gamma ** 2 * P.volume * (1 + 1e-9)


def test_exact_cell_agrees_with_oracle():
    rng = np.random.default_rng(9)
    for _ in range(5):
        P, lat = random_polygon(rng), random_lattice(rng)
        cell = minkowski_cell_2d(P, lat)
        oracle = CellOracle.build(P, lat)
        r = 1.2 * np.abs(cell.vertices).max()
        g = np.linspace(-r, r, 100)
        Y = np.array(np.meshgrid(g, g)).reshape(2, -1).T
        a = cell.contains(Y, tol=0.0)
        b = oracle.contains(Y, tol=0.0)
        # disagreement is allowed only next to the boundary
        rad = cell.radial(Y[a != b])
        dist = np.abs(np.linalg.norm(Y[a != b], axis=1) - rad)
        assert np.all(dist <= 1e-7 * r)


@given(seeds)
def test_cell_star_and_symmetric_membership(seed):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    cell = minkowski_cell_2d(P, lat)
    Y = rng.normal(size=(500, 2)) * np.abs(cell.vertices).max()
    inside = cell.contains(Y, tol=0.0)
    assert np.array_equal(inside, cell.contains(-Y, tol=0.0)) or \
        np.all(np.abs(np.linalg.norm(Y, axis=1) - cell.radial(Y))[inside != cell.contains(-Y, tol=0.0)] < 1e-9)
    for alpha in (0.1, 0.5, 0.9):
        assert np.all(cell.contains(alpha * Y[inside], tol=0.0))


@given(seeds)
def test_cell_linear_equivariance(seed):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    tau = rng.normal(size=(2, 2))
    if abs(np.linalg.det(tau)) < 0.2:
        tau += np.eye(2)
    a = minkowski_cell_2d(P, lat).transformed(tau)
    b = minkowski_cell_2d(P.linear_image(tau), lat.linear_image(tau))
    assert b.area == pytest.approx(a.area, rel=1e-9)
    Y = rng.normal(size=(1000, 2)) * np.abs(a.vertices).max()
    ia, ib = a.contains(Y, tol=0.0), b.contains(Y, tol=0.0)
    diff = Y[ia != ib]
    assert np.all(np.abs(np.linalg.norm(diff, axis=1) - a.radial(diff)) <= 1e-8 * np.abs(a.vertices).max())


def test_star_polygon_validation():
    with pytest.raises(GeometryError):
        StarPolygon(np.array([[1.0, 0.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# cells in three dimensions

def test_cube_membership():
    lat = Lattice.integer(3, 2.0)
    assert cell_membership(cube(), lat, [0, 0, 0])
    assert cell_membership(cube(), lat, [0.9, 0.9, 0.9])
    assert not cell_membership(cube(), lat, [1.1, 0, 0])
    oracle = CellOracle.build(cube(), lat)
    assert len(oracle.relevant) == 26
    y = np.array([1.2, 0.3, -0.2])
    assert gauge(cube(), y) > oracle.gamma and not cell_membership(cube(), lat, y)


def test_nd_membership_symmetric_and_bounded():
    rng = np.random.default_rng(1)
    body = octahedron()
    lat = Lattice(rng.normal(size=(3, 3)) + 2 * np.eye(3))
    oracle = CellOracle.build(body, lat)
    Y = rng.normal(size=(2000, 3)) * oracle.gamma
    a = oracle.contains(Y)
    assert np.array_equal(a, oracle.contains(-Y))
    assert np.all(body.gauge(Y[a]) <= oracle.gamma * (1 + 1e-6))


def test_cell_volume_values():
    vol, err = cell_volume(minkowski_cell_2d(square(), Lattice.integer(2, 2.0)))
    assert vol == pytest.approx(4.0, abs=1e-12) and err == 0.0
    assert cell_volume(minkowski_cell_2d(EuclideanBall(2), Lattice.integer(2)))[0] == pytest.approx(1.0)
    hx = cell_volume(minkowski_cell_2d(HEX, HEX_LATTICE))[0]
    assert abs(hx - HEX_LATTICE.det) <= 1e-9 * HEX_LATTICE.det
    vol, err = cell_volume(CellOracle.build(cube(), Lattice.integer(3, 2.0)), samples=200_000, seed=3)
    assert err > 0 and abs(vol - 8.0) <= 4 * err


def test_cell_volume_is_seeded():
    oracle = CellOracle.build(cube(), Lattice.integer(3, 2.0))
    assert cell_volume(oracle, 50_000, seed=5) == cell_volume(oracle, 50_000, seed=5)


# ---------------------------------------------------------------------------
# tilings

def test_tiling_planar_random():
    rng = np.random.default_rng(21)
    for _ in range(10):
        v = verify_tiling(random_polygon(rng), random_lattice(rng), samples=2000, seed=1)
        assert v.ok, (v.volume_error, v.uncovered, v.overlaps)


def test_tiling_disc_and_hexagon():
    assert verify_tiling(EuclideanBall(2), Lattice.integer(2), samples=2000).ok
    assert verify_tiling(HEX, HEX_LATTICE, samples=2000).ok


def test_tiling_detects_wrong_cell():
    # a cell that is too small leaves gaps
    lat = Lattice.integer(2, 2.0)
    rep = cell_report(square(), lat)
    rep.cell = StarPolygon(0.9 * rep.cell.vertices)
    rep.volume = rep.cell.area
    v = verify_tiling(square(), lat, samples=2000, report=rep)
    assert not v.ok and v.gaps > 0 and v.volume_error > 0.1


def test_tiling_cube():
    v = verify_tiling(cube(), Lattice.integer(3, 2.0), samples=5000, seed=2)
    assert v.ok, v


def test_tiling_octahedron_generic_lattice():
    lat = Lattice(np.array([[2.1, 0.3, -0.4], [0.2, 1.9, 0.5], [-0.3, 0.4, 2.2]]))
    rel = relevant_vectors(octahedron(), lat)
    assert segment_direction_check(octahedron(), rel)
    v = verify_tiling(octahedron(), lat, samples=100_000, seed=0)
    assert v.ok, (v.volume, v.det, v.volume_tolerance, v.gaps, v.overlap_count)


def test_segment_direction_check_examples():
    assert not segment_direction_check(cube(), [[1, 0, 0]])
    rng = np.random.default_rng(8)
    assert segment_direction_check(regular_polygon(1000), rng.normal(size=(20, 2)))
    assert not segment_direction_check(bicone_surrogate((1.0, 0.0, 1.0)), [[0, 0, 1]])
