import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_lattice, random_polygon, seeds
from minkcell.cell import covering_radius, verify_tiling
from minkcell.covering import (
    DISC_DENSITY,
    InfeasibleError,
    LatticeParam2D,
    OptimizeConfig,
    benchmark_suite,
    density,
    feasibility,
    hexagon_reference,
    optimize,
)
from minkcell.geometry import (
    DiscBicone,
    EuclideanBall,
    GeometryError,
    Lattice,
    cube,
    regular_polygon,
    square,
)

HEX = regular_polygon(6)
HEX_LATTICE = Lattice.from_vectors([1.5, math.sqrt(3) / 2], [0.0, math.sqrt(3)])
OCTAGON_DENSITY = 4 - 2 * math.sqrt(2)


def test_density_examples():
    assert density(square(), Lattice.integer(2, 2.0)) == pytest.approx(1.0, abs=1e-12)
    assert density(square(), Lattice.integer(2, 1.9)) == pytest.approx(4 / 3.61, abs=1e-12)
    assert density(HEX, HEX_LATTICE) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InfeasibleError):
        density(square(), Lattice.integer(2, 2.1))


def test_feasibility_examples():
    assert feasibility(square(), Lattice.integer(2, 2.0))
    assert not feasibility(square(), Lattice.integer(2, 2.1))
    hexagonal = Lattice.from_vectors([math.sqrt(3), 0.0], [math.sqrt(3) / 2, 1.5])
    assert covering_radius(EuclideanBall(2), hexagonal) == pytest.approx(1.0, abs=1e-12)
    assert feasibility(EuclideanBall(2), hexagonal)
    assert density(EuclideanBall(2), hexagonal) == pytest.approx(DISC_DENSITY, abs=1e-9)


def test_nd_density_and_feasibility():
    assert density(cube(), Lattice.integer(3, 2.0)) == pytest.approx(1.0, rel=1e-6)
    assert not feasibility(cube(), Lattice.integer(3, 2.2))


@given(seeds, st.floats(1.01, 3.0))
def test_monotone_in_scale(seed, lam):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    g1 = covering_radius(P, lat)
    g2 = covering_radius(P, lat.scaled(lam))
    assert g2 >= g1
    assert g2 == pytest.approx(lam * g1, rel=1e-9)
    unit = lat.scaled(1 / g1)
    assert feasibility(P, unit.scaled(0.99)) and not feasibility(P, unit.scaled(lam))


@given(seeds)
def test_lattice_param_canonical_form(seed):
    rng = np.random.default_rng(seed)
    lat = random_lattice(rng)
    p = LatticeParam2D.from_lattice(lat)
    assert p.a > 0 and p.c > 0 and abs(p.b) <= p.a / 2 + 1e-12 and 0 <= p.theta < math.pi
    assert p.det == pytest.approx(lat.det, rel=1e-12)
    # same lattice: each basis has integer coordinates in the other
    M = np.linalg.solve(lat.basis, p.basis)
    assert np.allclose(M, np.round(M), atol=1e-9)
    assert LatticeParam2D.from_lattice(p.lattice).as_tuple() == pytest.approx(p.as_tuple(), abs=1e-12)


def test_lattice_param_validation():
    with pytest.raises(GeometryError):
        LatticeParam2D(0.0, 0.0, 1.0)


def test_hexagon_reference_values():
    assert hexagon_reference(square()) == pytest.approx(1.0, abs=1e-12)
    assert hexagon_reference(HEX) == pytest.approx(1.0, abs=1e-12)
    assert hexagon_reference(regular_polygon(8)) == pytest.approx(OCTAGON_DENSITY, abs=1e-12)
    assert hexagon_reference(EuclideanBall(2)) == pytest.approx(DISC_DENSITY, abs=1e-10)


def _recheck(poly, rep):
    lat = rep.best.lattice
    assert rep.feasible and feasibility(poly, lat)
    assert rep.density >= 1 - 1e-6
    assert rep.density == pytest.approx(poly.volume / lat.det, rel=1e-12)
    assert verify_tiling(poly, lat, samples=2000).ok


def test_optimize_square():
    rep = optimize(square(), OptimizeConfig(starts=6, seed=0))
    assert rep.density == pytest.approx(1.0, abs=1e-3)
    # any row-shifted copy of 2Z^2 also tiles; the side lengths are what is fixed
    assert rep.best.a == pytest.approx(2.0, abs=1e-3) and rep.best.c == pytest.approx(2.0, abs=1e-3)
    assert min(rep.best.theta % (math.pi / 2), math.pi / 2 - rep.best.theta % (math.pi / 2)) < 1e-3
    _recheck(square(), rep)


def test_optimize_hexagon():
    rep = optimize(HEX, OptimizeConfig(starts=6, seed=1))
    assert rep.density == pytest.approx(1.0, abs=1e-3)
    _recheck(HEX, rep)


def test_optimize_octagon_matches_reference():
    rep = optimize(regular_polygon(8), OptimizeConfig(starts=8, seed=0))
    assert rep.density == pytest.approx(OCTAGON_DENSITY, rel=1e-6)
    _recheck(regular_polygon(8), rep)


def test_optimize_disc():
    rep = optimize(EuclideanBall(2), OptimizeConfig(starts=4, seed=0))
    assert rep.density == pytest.approx(DISC_DENSITY, rel=1e-6)


def test_optimize_trace_and_determinism():
    cfg = OptimizeConfig(starts=3, seed=7)
    a = optimize(regular_polygon(8), cfg)
    b = optimize(regular_polygon(8), cfg)
    assert a.to_json() == b.to_json()
    vals = [v for _, v in a.trace]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert [k for k, _ in a.trace] == sorted(k for k, _ in a.trace)


def test_optimize_rejects_other_bodies():
    with pytest.raises(InfeasibleError):
        optimize(cube())
    with pytest.raises(InfeasibleError):
        optimize(DiscBicone())
    with pytest.raises(InfeasibleError):
        optimize(square(), OptimizeConfig(starts=0))


@pytest.mark.slow
def test_optimize_affine_invariance():
    rng = np.random.default_rng(3)
    base = optimize(regular_polygon(8), OptimizeConfig(starts=8, seed=0)).density
    for _ in range(2):
        tau = rng.normal(size=(2, 2))
        if abs(np.linalg.det(tau)) < 0.3:
            tau += np.eye(2)
        rep = optimize(regular_polygon(8).linear_image(tau), OptimizeConfig(starts=8, seed=0))
        assert rep.density == pytest.approx(base, rel=5e-3)


@settings(max_examples=10)
@given(seeds)
def test_feasible_density_at_least_one(seed):
    rng = np.random.default_rng(seed)
    P, lat = random_polygon(rng), random_lattice(rng)
    unit = lat.scaled(1 / covering_radius(P, lat))
    assert density(P, unit) >= 1 - 1e-6


def test_benchmark_rows():
    rows = benchmark_suite(starts=2, seed=0, bodies={"square", "octagon"})
    assert [r.body for r in rows] == ["square", "octagon"]
    for r in rows:
        assert r.gap == pytest.approx(r.density - r.reference)
        assert r.feasible and r.starts == 2 and r.seed == 0
