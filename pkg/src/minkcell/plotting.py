"""Matplotlib figures for the report paths of the command line tool.

Figures are written with the Agg backend and without the software/date
metadata so repeated runs give identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _closed(v):
    v = np.asarray(v, dtype=float)
    return np.vstack([v, v[:1]])


def _save(fig, path):
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_cell_in_body(poly_vertices, cell_vertices, translates, path, title=""):
    """Body outline, its Minkowski cell, and neighbouring cell translates."""
    fig, ax = plt.subplots(figsize=(5, 5))
    cell = np.asarray(cell_vertices, dtype=float)
    for t in translates:
        c = _closed(cell + np.asarray(t))
        ax.plot(c[:, 0], c[:, 1], color="0.7", lw=0.8)
    c = _closed(cell)
    ax.fill(c[:, 0], c[:, 1], color="#f5b041", alpha=0.5, lw=0)
    ax.plot(c[:, 0], c[:, 1], color="#9c640c", lw=1.2, label="cell")
    p = _closed(poly_vertices)
    ax.plot(p[:, 0], p[:, 1], color="#1f4e99", lw=1.5, label="body")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    _save(fig, path)


def plot_bisector_family(chains, path, reach=4.0, title=""):
    """Overlay of planar bisector chains given as (label, polyline) pairs."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in chains:
        pts = np.asarray(pts, dtype=float)
        ax.plot(pts[:, 0], pts[:, 1], lw=1.2, label=label)
    ax.set_xlim(-reach, reach)
    ax.set_aspect("equal", adjustable="datalim")
    ax.axhline(1.0, color="0.6", lw=0.6, ls="--")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    _save(fig, path)


def plot_probe(paths, path, title=""):
    """Height of the midpoint image along each probe path.

    ``paths`` holds (label, parameter values, heights) triples.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, s, z in paths:
        ax.plot(s, z, lw=1.0, marker=".", ms=2, label=label)
    ax.set_xlabel("offset along path")
    ax.set_ylabel("height of midpoint")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    _save(fig, path)
