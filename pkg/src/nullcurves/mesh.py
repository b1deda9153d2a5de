"""Wavefront OBJ export of surface grids."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import NonFiniteVertex


def _fmt(x: float) -> str:
    s = repr(float(x))
    return "0.0" if s == "-0.0" else s


def export_mesh(grid, path=None, periodic=None) -> str:
    """OBJ text for a grid of points in R^3, optionally written to ``path``.

    Vertices are listed row by row (radial index outer, angular inner).  Each
    grid quad becomes two counterclockwise triangles; on a periodic grid the
    last angular column is joined to the first so the seam is closed.
    """
    values = np.asarray(getattr(grid, "values", grid))
    if np.iscomplexobj(values):
        raise ValueError("mesh export needs real vertex coordinates")
    if values.ndim != 3 or values.shape[-1] != 3:
        raise ValueError(f"expected an (rows, cols, 3) grid, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values).all(axis=-1))[0]
        raise NonFiniteVertex(f"non-finite vertex at grid index {tuple(int(i) for i in bad)}")
    if periodic is None:
        periodic = bool(getattr(grid, "periodic", False))
    nr, na, _ = values.shape
    lines = ["# nullcurves surface grid", f"# rows {nr} cols {na} periodic {int(periodic)}"]
    for v in values.reshape(-1, 3):
        lines.append("v " + " ".join(_fmt(c) for c in v))
    cols = na if periodic and na > 2 else na - 1
    for i in range(nr - 1):
        for j in range(cols):
            j1 = (j + 1) % na
            a = i * na + j + 1
            b = (i + 1) * na + j + 1
            c = (i + 1) * na + j1 + 1
            d = i * na + j1 + 1
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_obj(text: str):
    """(vertices (V, 3), faces (F, 3) zero-based) from OBJ text."""
    verts, faces = [], []
    for line in text.splitlines():
        if line.startswith("v "):
            verts.append([float(x) for x in line.split()[1:4]])
        elif line.startswith("f "):
            faces.append([int(x.split("/")[0]) - 1 for x in line.split()[1:4]])
    return np.array(verts).reshape(-1, 3), np.array(faces, dtype=int).reshape(-1, 3)


def edge_counts(faces) -> dict:
    """How many faces use each undirected edge."""
    counts = {}
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    return counts
