import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from minkcell import io
from minkcell.cell import cell_report
from minkcell.geometry import (
    DiscBicone,
    EuclideanBall,
    GeometryError,
    Lattice,
    cube,
    gauge,
    regular_polygon,
    square,
)
from minkcell.svg import Scene, count_elements, emit_svg

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def body(**kw):
    return {"schema": io.SCHEMA_TAG, **kw}


def test_fixtures_load():
    for name in ("square", "hexagon", "disc", "cube", "bicone"):
        io.body_from_json(io.load_json(FIXTURES / f"{name}.json"))
    for name in ("lattice_2z2", "lattice_2z3", "lattice_hex_tiling"):
        io.lattice_from_json(io.load_json(FIXTURES / f"{name}.json"))


def test_body_round_trip():
    for b in (square(), regular_polygon(8), EuclideanBall(2, 1.5), DiscBicone((0.5, 0.2, 2.0)), cube()):
        doc = io.body_to_json(b)
        again = io.body_from_json(json.loads(io.dumps(doc)))
        x = np.linspace(-1, 1, b.dim * 7).reshape(7, b.dim) + 0.1
        assert np.allclose(again.gauge(x), b.gauge(x), atol=1e-12)


def test_lattice_round_trip():
    lat = Lattice.from_vectors([1.0, 0.2], [0.3, 2.0])
    again = io.lattice_from_json(io.lattice_to_json(lat))
    assert np.array_equal(again.basis, lat.basis)


def test_facets_with_offsets():
    b = io.body_from_json(body(dim=2, kind="polytope", facets=[[1, 0, 2], [-1, 0, 2], [0, 1, 1], [0, -1, 1]]))
    assert gauge(b, [2, 0]) == pytest.approx(1.0) and gauge(b, [0, 1]) == pytest.approx(1.0)


def test_nd_vertices():
    V = [[s1, s2, s3] for s1 in (-1, 1) for s2 in (-1, 1) for s3 in (-1, 1)]
    b = io.body_from_json(body(dim=3, kind="polytope", vertices=V))
    assert gauge(b, [2, 0, 0]) == pytest.approx(2.0)


@pytest.mark.parametrize("doc", [
    {"dim": 2, "kind": "polytope", "vertices": [[1, 0], [0, 1], [-1, 0], [0, -1]]},
    body(dim=2, kind="polytope", vertices=[[1, 0], [0, 1], [-1, 0], [0, -1]], colour="red"),
    body(dim=2, kind="sphere", radius=1.0),
    body(dim=2, kind="ball", radius=-1.0),
    body(dim=2, kind="polytope"),
    body(dim=2, kind="polytope", vertices=[[1, 0, 0], [0, 1, 0]]),
    body(dim=2, kind="disc_bicone", apex=[1, 0, 1]),
    body(dim=2, kind="polytope", facets=[[1, 0, 1, 1], [-1, 0, 1, 1]]),
    {"schema": "minkcell/2", "dim": 2, "kind": "ball", "radius": 1.0},
])
def test_body_schema_errors(doc):
    with pytest.raises(io.SchemaError):
        io.body_from_json(doc)


def test_body_geometry_errors():
    with pytest.raises(GeometryError, match="symmetr"):
        io.body_from_json(io.load_json(FIXTURES / "odd_polygon.json"))


@pytest.mark.parametrize("doc", [
    {"schema": io.SCHEMA_TAG, "basis": [[1, 0], [0, 1, 2]]},
    {"schema": io.SCHEMA_TAG, "basis": [[1, 0, 0], [0, 1, 0]]},
    {"schema": io.SCHEMA_TAG},
    {"schema": io.SCHEMA_TAG, "basis": [[1, 0], [0, 1]], "origin": [0, 0]},
])
def test_lattice_schema_errors(doc):
    with pytest.raises(io.SchemaError):
        io.lattice_from_json(doc)


def test_invalid_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json", encoding="utf-8")
    with pytest.raises(io.SchemaError):
        io.load_json(f)


def test_validate_result():
    io.validate_result({"schema": io.SCHEMA_TAG, "command": "cell", "gamma": 1.0,
                        "relevant": [[2, 0]], "volume": 4.0})
    with pytest.raises(io.SchemaError):
        io.validate_result({"schema": io.SCHEMA_TAG, "command": "cell", "gamma": 1.0})
    with pytest.raises(io.SchemaError):
        io.validate_result({"command": "nothing"})


def test_dumps_is_stable():
    a = io.dumps({"b": 1, "a": [1.5, 2]})
    assert a == io.dumps({"a": [1.5, 2], "b": 1}) and a.endswith("\n")


# ---------------------------------------------------------------------------
# SVG

def test_empty_scene_has_only_frame():
    svg = emit_svg(Scene())
    root = ET.fromstring(svg)
    assert [c.tag.split("}")[1] for c in root] == ["rect"]
    assert count_elements(svg) == (0, 0)


def test_square_cell_scene_counts():
    lat = Lattice.integer(2, 2.0)
    rep = cell_report(square(), lat)
    scene = Scene(polygons=[square().vertices], points=[np.array(rep.relevant)], cells=[rep.cell.vertices])
    assert len(rep.relevant) == 8
    assert count_elements(emit_svg(scene)) == (3, 13)


def test_svg_is_deterministic_and_layered():
    ch = np.array([[-2.0, 1.0], [0.0, 1.0], [2.0, 1.5]])
    scene = Scene(polygons=[square().vertices], chains=[ch], points=[ch],
                  cells=[0.5 * square().vertices], title="a < b & c")
    a, b = emit_svg(scene), emit_svg(scene)
    assert a == b
    root = ET.fromstring(a)
    ids = [g.get("id") for g in root if g.tag.endswith("g")]
    assert ids == ["polygon", "chain", "lattice-points", "cell"]
    assert "-0.000000" not in a


def test_svg_fixed_precision_and_viewbox():
    svg = emit_svg(Scene(polygons=[np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0 / 3.0]])]))
    root = ET.fromstring(svg)
    x0, y0, w, h = map(float, root.get("viewBox").split())
    assert w == h == pytest.approx(1.1, abs=1e-6)
    assert "0.333333" in svg and "0.3333333" not in svg


def test_svg_projects_higher_dimensions():
    svg = emit_svg(Scene(points=[np.array([[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]])]))
    assert 'id="projection"' in svg
    assert count_elements(svg) == (1, 3)
