"""Deterministic SVG output for planar scenes.

Layers are written in a fixed order (polygon, chain, lattice-points, cell)
and only when non-empty.  Coordinates are printed with six decimals and the
viewBox is the scene bounding box enlarged by 10%.  Points with more than two
coordinates are projected by dropping the extra ones, and the figure says so.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LAYERS = ("polygon", "chain", "lattice-points", "cell")
STYLE = {
    "polygon": 'fill="none" stroke="#1f4e99" stroke-width="{w}"',
    "chain": 'fill="none" stroke="#b03a2e" stroke-width="{w}"',
    "lattice-points": 'fill="#222222"',
    "cell": 'fill="#f5b041" fill-opacity="0.35" stroke="#9c640c" stroke-width="{w}"',
}


@dataclass
class Scene:
    polygons: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    points: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    title: str = ""


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _planar(a) -> tuple[np.ndarray, bool]:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return a[:, :2], a.shape[1] > 2


def _path(pts: np.ndarray, closed: bool) -> str:
    # y is flipped so the figure reads with y up
    cmds = [f"{'M' if k == 0 else 'L'}{_fmt(x)},{_fmt(-y)}" for k, (x, y) in enumerate(pts)]
    return " ".join(cmds) + (" Z" if closed else "")


def emit_svg(scene: Scene, size: int = 480) -> str:
    """Render a scene; identical scenes give byte-identical documents."""
    layers = {
        "polygon": [_planar(p) for p in scene.polygons],
        "chain": [_planar(c) for c in scene.chains],
        "lattice-points": [_planar(p) for p in scene.points],
        "cell": [_planar(c) for c in scene.cells],
    }
    projected = any(flag for items in layers.values() for _, flag in items)
    pts = [a for items in layers.values() for a, _ in items if len(a)]
    if pts:
        allp = np.vstack(pts)
        lo, hi = allp.min(axis=0), allp.max(axis=0)
    else:
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    centre = 0.5 * (lo + hi)
    half = 0.55 * max(float((hi - lo).max()), 1e-9)
    x0, y0 = centre[0] - half, -centre[1] - half
    w = 2 * half
    stroke = _fmt(w / 400)
    radius = _fmt(w / 160)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(w)}">',
        f'<rect id="frame" x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(w)}" height="{_fmt(w)}" '
        f'fill="white" stroke="#999999" stroke-width="{stroke}"/>',
    ]
    if scene.title:
        out.append(f"<title>{_escape(scene.title)}</title>")
    for name in LAYERS:
        items = layers[name]
        if not items:
            continue
        style = STYLE[name].format(w=stroke)
        out.append(f'<g id="{name}" {style}>')
        for a, _ in items:
            if name == "lattice-points":
                for x, y in a:
                    out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(-y)}" r="{radius}"/>')
            else:
                out.append(f'<path d="{_path(a, name != "chain")}"/>')
        out.append("</g>")
    if projected:
        out.append(f'<text id="projection" x="{_fmt(x0 + w / 50)}" y="{_fmt(y0 + w / 25)}" '
                   f'font-size="{_fmt(w / 30)}">projected to (x1, x2)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def count_elements(svg: str) -> tuple[int, int]:
    """(layer count, elements inside the layers including the layer groups)."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    groups = [g for g in root.findall(f"{ns}g") if g.get("id") in LAYERS]
    inner = sum(len(list(g)) for g in groups)
    return len(groups), len(groups) + inner
