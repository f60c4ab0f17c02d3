"""JSON formats for bodies, lattices and command results (schema "minkcell/1").

Bodies::

    {"schema": "minkcell/1", "dim": 2, "kind": "polytope", "vertices": [[1, 0], ...]}
    {"schema": "minkcell/1", "dim": 3, "kind": "polytope", "facets": [[1, 0, 0], ...]}
    {"schema": "minkcell/1", "dim": 2, "kind": "ball", "radius": 1.0}
    {"schema": "minkcell/1", "dim": 3, "kind": "disc_bicone", "apex": [1, 0, 1]}

A facet row is either a normal ``a`` (meaning <a, x> <= 1) or ``a`` followed
by an offset.  Lattices list basis vectors as rows::

    {"schema": "minkcell/1", "basis": [[2, 0], [0, 2]]}

Unknown fields are rejected.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .geometry import (
    Body,
    DiscBicone,
    EuclideanBall,
    GeometryError,
    Lattice,
    SymmetricPolytope,
)

SCHEMA_TAG = "minkcell/1"


class SchemaError(ValueError):
    """Input or output JSON does not match its schema."""


_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 1}
_mat = {"type": "array", "items": _vec, "minItems": 1}
_tag = {"const": SCHEMA_TAG}

BODY_SCHEMA = {
    "type": "object",
    "required": ["schema", "dim", "kind"],
    "additionalProperties": False,
    "properties": {
        "schema": _tag,
        "dim": {"type": "integer", "minimum": 2},
        "kind": {"enum": ["polytope", "ball", "disc_bicone"]},
        "vertices": _mat,
        "facets": _mat,
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "apex": _vec,
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "polytope"}}},
         "then": {"oneOf": [{"required": ["vertices"]}, {"required": ["facets"]}],
                  "not": {"anyOf": [{"required": ["radius"]}, {"required": ["apex"]}]}}},
        {"if": {"properties": {"kind": {"const": "ball"}}},
         "then": {"not": {"anyOf": [{"required": ["vertices"]}, {"required": ["facets"]},
                                    {"required": ["apex"]}]}}},
        {"if": {"properties": {"kind": {"const": "disc_bicone"}}},
         "then": {"required": ["apex"],
                  "properties": {"dim": {"const": 3}},
                  "not": {"anyOf": [{"required": ["vertices"]}, {"required": ["facets"]},
                                    {"required": ["radius"]}]}}},
    ],
}

LATTICE_SCHEMA = {
    "type": "object",
    "required": ["schema", "basis"],
    "additionalProperties": False,
    "properties": {"schema": _tag, "basis": _mat},
}

_ray = {
    "type": "object",
    "required": ["anchor", "direction"],
    "additionalProperties": False,
    "properties": {"anchor": _vec, "direction": _vec},
}

RESULT_SCHEMAS = {
    "bisector": {
        "type": "object",
        "required": ["schema", "command", "p", "q"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "bisector"},
            "p": _vec,
            "q": _vec,
            "breakpoints": {"type": "array", "items": _vec},
            "rays": {"type": "array", "items": _ray, "minItems": 2, "maxItems": 2},
            "piece_count": {"type": "integer", "minimum": 1},
            "samples": {"type": "array", "items": _vec},
        },
    },
    "cell": {
        "type": "object",
        "required": ["schema", "command", "gamma", "relevant", "volume"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "cell"},
            "gamma": _num,
            "relevant": {"type": "array", "items": _vec},
            "relevant_count": {"type": "integer", "minimum": 0},
            "tiling_ok": {"type": "boolean"},
            "vertices": {"type": "array", "items": _vec},
            "volume": _num,
            "volume_stderr": _num,
        },
    },
    "tile": {
        "type": "object",
        "required": ["schema", "command", "pass", "volume", "det", "coverage_gaps",
                     "interior_overlaps", "samples", "seed"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "tile"},
            "pass": {"type": "boolean"},
            "volume": _num,
            "det": _num,
            "volume_ok": {"type": "boolean"},
            "coverage_gaps": {"type": "integer"},
            "interior_overlaps": {"type": "integer"},
            "samples": {"type": "integer"},
            "seed": {"type": "integer"},
        },
    },
    "optimize": {
        "type": "object",
        "required": ["schema", "command", "best", "density", "gamma", "feasible", "trace"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "optimize"},
            "best": {
                "type": "object",
                "required": ["a", "b", "c", "theta", "basis"],
                "additionalProperties": False,
                "properties": {"a": _num, "b": _num, "c": _num, "theta": _num, "basis": _mat},
            },
            "density": _num,
            "gamma": _num,
            "feasible": {"type": "boolean"},
            "trace": {"type": "array", "items": {"type": "array", "items": _num,
                                                 "minItems": 2, "maxItems": 2}},
            "notes": {"type": "array", "items": {"type": "string"}},
            "seed": {"type": "integer"},
            "starts": {"type": "integer"},
        },
    },
    "benchmark": {
        "type": "object",
        "required": ["schema", "command", "seed", "starts", "rows"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "benchmark"},
            "seed": {"type": "integer"},
            "starts": {"type": "integer"},
            "rows": {"type": "array", "items": {
                "type": "object",
                "required": ["body", "density", "reference", "gap", "gamma", "feasible", "best"],
                "additionalProperties": False,
                "properties": {
                    "body": {"type": "string"},
                    "density": _num,
                    "reference": _num,
                    "gap": _num,
                    "gamma": _num,
                    "feasible": {"type": "boolean"},
                    "best": _vec,
                    "runtime_s": _num,
                },
            }},
        },
    },
    "examples": {
        "type": "object",
        "required": ["schema", "command", "which"],
        "additionalProperties": False,
        "properties": {
            "schema": _tag,
            "command": {"const": "examples"},
            "which": {"enum": [1, 2]},
            "i": {"type": "integer"},
            "chain": {"type": "object"},
            "formula": {"type": "array", "items": {"type": "object"}},
            "paths": {"type": "array", "items": {"type": "object"}},
        },
    },
}


def _validate(doc, schema, what: str):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{what}: {exc.message} (at {where})") from None


def validate_result(doc: dict):
    """Check a command result against the schema of its ``command`` field."""
    cmd = doc.get("command") if isinstance(doc, dict) else None
    if cmd not in RESULT_SCHEMAS:
        raise SchemaError(f"unknown result command {cmd!r}")
    _validate(doc, RESULT_SCHEMAS[cmd], f"{cmd} result")


def body_from_json(doc) -> Body:
    """Build a body; schema problems raise SchemaError, geometric ones GeometryError."""
    _validate(doc, BODY_SCHEMA, "body")
    n = doc["dim"]
    kind = doc["kind"]
    if kind == "ball":
        return EuclideanBall(n, doc.get("radius", 1.0))
    if kind == "disc_bicone":
        return DiscBicone(_rows(doc["apex"], None, "apex"))
    if "vertices" in doc:
        V = _rows(doc["vertices"], n, "vertices")
        if n == 2:
            return SymmetricPolytope.from_vertices(V)
        return _from_vertices_nd(V)
    F = np.asarray(doc["facets"], dtype=float) if _ragged_ok(doc["facets"]) else None
    if F is None or F.ndim != 2 or F.shape[1] not in (n, n + 1):
        raise SchemaError(f"body: facet rows need {n} or {n + 1} entries")
    if F.shape[1] == n:
        return SymmetricPolytope.from_facets(F)
    return SymmetricPolytope.from_facets(F[:, :n], F[:, n])


def _ragged_ok(rows) -> bool:
    return len({len(r) for r in rows}) == 1


def _rows(data, n, what) -> np.ndarray:
    if isinstance(data[0], list):
        if not _ragged_ok(data):
            raise SchemaError(f"body: {what} rows have different lengths")
    a = np.asarray(data, dtype=float)
    if n is not None and (a.ndim != 2 or a.shape[1] != n):
        raise SchemaError(f"body: {what} must have {n} coordinates per row")
    return a


def _from_vertices_nd(V: np.ndarray) -> SymmetricPolytope:
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(V)
    except QhullError as exc:
        raise GeometryError(f"vertices do not span a full-dimensional body: {exc}") from None
    eq = hull.equations
    off = -eq[:, -1]
    if np.any(off <= 0):
        raise GeometryError("origin must be an interior point")
    normals = np.unique(np.round(eq[:, :-1] / off[:, None], 12), axis=0)
    return SymmetricPolytope.from_facets(normals)


def lattice_from_json(doc) -> Lattice:
    _validate(doc, LATTICE_SCHEMA, "lattice")
    rows = doc["basis"]
    if not _ragged_ok(rows) or len(rows) != len(rows[0]):
        raise SchemaError("lattice: basis must be a square list of rows")
    return Lattice.from_vectors(*rows)


def body_to_json(body: Body) -> dict:
    if isinstance(body, EuclideanBall):
        return {"schema": SCHEMA_TAG, "dim": body.dim, "kind": "ball", "radius": body.radius}
    if isinstance(body, DiscBicone):
        return {"schema": SCHEMA_TAG, "dim": 3, "kind": "disc_bicone", "apex": body.apex.tolist()}
    if isinstance(body, SymmetricPolytope):
        if body.dim == 2:
            return {"schema": SCHEMA_TAG, "dim": 2, "kind": "polytope",
                    "vertices": body.vertices.tolist()}
        return {"schema": SCHEMA_TAG, "dim": body.dim, "kind": "polytope",
                "facets": body.normals.tolist()}
    raise GeometryError(f"no JSON form for {body.kind}")


def lattice_to_json(lat: Lattice) -> dict:
    return {"schema": SCHEMA_TAG, "basis": lat.basis.T.tolist()}


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None


def dumps(doc) -> str:
    """Stable JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
