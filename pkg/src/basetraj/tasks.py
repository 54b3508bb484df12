"""Printing task geometry: lines, layered outlines, and path files.

Paths are ``(n, 3)`` float arrays of vertices in metres.
"""

from __future__ import annotations

import numpy as np

PATH_HEADER = "# path v1"
U_SHAPE_SIZE = (0.9, 0.675)
U_SHAPE_LENGTH = 3.97
NTU_LAYER_LENGTH = 11.29


def path_length(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    return float(np.linalg.norm(np.diff(v, axis=0), axis=1).sum())


def planar_length(vertices) -> float:
    """Length ignoring vertical motion; seams between layers contribute nothing."""
    v = np.asarray(vertices, dtype=float)
    return float(np.linalg.norm(np.diff(v[:, :2], axis=0), axis=1).sum())


def is_closed(vertices, tol: float = 1e-12) -> bool:
    v = np.asarray(vertices, dtype=float)
    return len(v) >= 4 and bool(np.all(np.abs(v[0] - v[-1]) <= tol))


def gen_line(length: float, height: float) -> np.ndarray:
    if not length > 0:
        raise ValueError(f"line length must be positive, got {length}")
    return np.array([[0.0, 0.0, height], [length, 0.0, height]])


def gen_layers(outline, layers: int, layer_height: float) -> np.ndarray:
    """Stack a closed outline ``layers`` times, joined by vertical seams at its start."""
    o = np.asarray(outline, dtype=float)
    if not is_closed(o):
        raise ValueError("outline must be closed (first vertex == last vertex)")
    if layers < 1:
        raise ValueError("need at least one layer")
    if not layer_height > 0:
        raise ValueError("layer height must be positive")
    parts = []
    for k in range(layers):
        lay = o.copy()
        lay[:, 2] = o[:, 2] + k * layer_height
        # the first vertex of each later layer closes the vertical seam
        parts.append(lay)
    return np.concatenate(parts)


def u_shape_outline(z: float = 0.05, width: float = U_SHAPE_SIZE[0],
                     depth: float = U_SHAPE_SIZE[1], length: float = U_SHAPE_LENGTH) -> np.ndarray:
    """Closed U outline; the wall thickness is set so the perimeter equals ``length``.

    Perimeter of the U polygon is ``2*width + 4*depth - 2*wall``.
    """
    wall = (2 * width + 4 * depth - length) / 2
    if not 0 < wall < width / 2:
        raise ValueError("no U outline with that perimeter fits the bounding box")
    W, H, a = width, depth, wall
    xy = [(0, 0), (W, 0), (W, H), (W - a, H), (W - a, a), (a, a), (a, H), (0, H), (0, 0)]
    return np.array([(x, y, z) for x, y in xy], dtype=float)


def ntu_outline(z: float = 0.05, width: float = 3.5, depth: float = 0.75,
                length: float = NTU_LAYER_LENGTH, notches: int = 4) -> np.ndarray:
    """Rectilinear stand-in for the three-letter outline: a rectangle with notches.

    ``notches`` equal slots are cut from the top edge; their depth is chosen so
    the closed perimeter equals ``length``.  The default width keeps the notch
    bottoms within reach of a base parked outside the closed outline, which a
    multi-layer print requires.
    """
    extra = length - 2 * (width + depth)
    nd = extra / (2 * notches)
    if not 0 < nd < depth:
        raise ValueError("requested length cannot be met with this many notches")
    slot = width / (2 * notches + 1)
    xy = [(0.0, 0.0), (width, 0.0), (width, depth)]
    for k in range(notches, 0, -1):
        x_hi = (2 * k) * slot
        x_lo = (2 * k - 1) * slot
        xy += [(x_hi, depth), (x_hi, depth - nd), (x_lo, depth - nd), (x_lo, depth)]
    xy += [(0.0, depth), (0.0, 0.0)]
    return np.array([(x, y, z) for x, y in xy], dtype=float)


def save_path_file(path, vertices) -> None:
    v = np.asarray(vertices, dtype=float)
    with open(path, "w") as fh:
        fh.write(PATH_HEADER + "\n")
        for x, y, z in v.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")


def load_path_file(path) -> np.ndarray:
    """Read ``x y z`` vertices; '#' starts a comment."""
    verts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'x y z', got {line.strip()!r}")
            try:
                verts.append([float(p) for p in parts])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vertex {line.strip()!r}") from None
    if len(verts) < 2:
        raise ValueError(f"{path}: a path needs at least 2 vertices, found {len(verts)}")
    return np.array(verts)
