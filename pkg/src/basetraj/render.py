"""Deterministic SVG figures: spacetime projection and plan view.

Output is plain text built from fixed-precision numbers, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .reachability import ReachableRegionParams
from .world import ConvexPolygon, Disc

W, H, PAD = 640, 400, 50
COLORS = {"x": "#1f77b4", "y": "#d62728", "phi": "#2ca02c", "ee": "#7f7f7f",
          "base": "#1f77b4", "obstacle": "#bbbbbb", "region": "#ff7f0e"}


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


class _Frame:
    """Affine map from data coordinates to the drawing box."""

    def __init__(self, xlim, ylim, equal=False):
        (x0, x1), (y0, y1) = xlim, ylim
        if x1 - x0 <= 0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 <= 0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        sx = (W - 2 * PAD) / (x1 - x0)
        sy = (H - 2 * PAD) / (y1 - y0)
        if equal:
            sx = sy = min(sx, sy)
        self.x0, self.y0, self.sx, self.sy = x0, y0, sx, sy
        self.xlim, self.ylim = (x0, x1), (y0, y1)

    def pt(self, x, y) -> str:
        return f"{_f(PAD + (x - self.x0) * self.sx)},{_f(H - PAD - (y - self.y0) * self.sy)}"

    def polyline(self, xs, ys, color, width=1.5, dash=None) -> str:
        pts = " ".join(self.pt(x, y) for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{d} points="{pts}"/>'

    def polygon(self, xs, ys, fill, opacity=1.0, stroke="none") -> str:
        pts = " ".join(self.pt(x, y) for x, y in zip(xs, ys))
        return f'<polygon fill="{fill}" fill-opacity="{_f(opacity)}" stroke="{stroke}" points="{pts}"/>'


def _limits(*arrays, pad=0.05) -> tuple[float, float]:
    v = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    lo, hi = float(v.min()), float(v.max())
    m = pad * max(hi - lo, 1e-9)
    return lo - m, hi + m


def _axes(fr: _Frame, xlabel: str, ylabel: str, title: str) -> list[str]:
    (x0, x1), (y0, y1) = fr.xlim, fr.ylim
    out = [f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
           f'fill="none" stroke="#000" stroke-width="1"/>',
           f'<text x="{W // 2}" y="{PAD - 20}" text-anchor="middle" font-size="14">{title}</text>',
           f'<text x="{W // 2}" y="{H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="15" y="{H // 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {H // 2})">{ylabel}</text>']
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        px, _ = fr.pt(xv, y0).split(",")
        _, py = fr.pt(x0, yv).split(",")
        out.append(f'<text x="{px}" y="{H - PAD + 15}" text-anchor="middle" font-size="10">{_f(xv)}</text>')
        out.append(f'<text x="{PAD - 5}" y="{py}" text-anchor="end" font-size="10">{_f(yv)}</text>')
    return out


def _doc(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">')
    return "\n".join([head, f'<rect width="{W}" height="{H}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def spacetime_svg(t, x, y=None, ee=None) -> str:
    """Base position against time; ``ee`` adds the nozzle's (x, y) as dashed lines."""
    t = np.asarray(t, dtype=float)
    if len(t) == 0:
        raise ValueError("empty trajectory")
    series = [("x", np.asarray(x, dtype=float))]
    if y is not None:
        series.append(("y", np.asarray(y, dtype=float)))
    arrays = [s for _, s in series]
    if ee is not None:
        ee = np.asarray(ee, dtype=float)
        arrays += [ee[:, 0]] + ([ee[:, 1]] if y is not None else [])
    fr = _Frame(_limits(t, pad=0), _limits(*arrays))
    body = _axes(fr, "t [s]", "position [m]", "spacetime projection")
    for name, s in series:
        body.append(fr.polyline(t, s, COLORS[name]))
    if ee is not None:
        te = np.linspace(t[0], t[-1], len(ee))
        body.append(fr.polyline(te, ee[:, 0], COLORS["x"], 1.0, "4,3"))
        if y is not None:
            body.append(fr.polyline(te, ee[:, 1], COLORS["y"], 1.0, "4,3"))
    return _doc(body)


def _region_outline(region: ReachableRegionParams, base, n: int = 96):
    """World-frame outline of the region's horizontal cross-section at ``h``."""
    x_j2, z_j2 = region.joint2_offset
    dz = region.h - z_j2
    ro = math.sqrt(max(region.r_max ** 2 - dz * dz, 0.0))
    ri = math.sqrt(max(region.r_min ** 2 - dz * dz, 0.0))
    bx, by, phi = base
    c, s = math.cos(phi), math.sin(phi)
    pts = []
    for r, rng in ((ro, range(n + 1)), (ri, range(n, -1, -1))):
        for k in rng:
            a = -math.pi + 2 * math.pi * k / n
            fx = x_j2 + r * math.cos(a)
            fy = r * math.sin(a)
            fx = max(fx, region.x_min)
            pts.append((bx + c * fx - s * fy, by + s * fx + c * fy))
    return [p[0] for p in pts], [p[1] for p in pts]


def plan_view_svg(base_xy, print_path, obstacles: Sequence = (), region=None,
                  region_base=None) -> str:
    """Top view of obstacles, print path, base path and one region slice."""
    bxy = np.asarray(base_xy, dtype=float)
    if len(bxy) == 0:
        raise ValueError("empty trajectory")
    pp = np.asarray(print_path, dtype=float)
    xs, ys = [bxy[:, 0], pp[:, 0]], [bxy[:, 1], pp[:, 1]]
    shapes = []
    for ob in obstacles:
        if isinstance(ob, Disc):
            a = np.linspace(0, 2 * math.pi, 49)
            ox = ob.center[0] + ob.radius * np.cos(a)
            oy = ob.center[1] + ob.radius * np.sin(a)
        elif isinstance(ob, ConvexPolygon):
            v = np.asarray(ob.vertices, dtype=float)
            ox, oy = v[:, 0], v[:, 1]
        else:
            continue
        shapes.append((ox, oy))
        xs.append(ox)
        ys.append(oy)
    reg = None
    if region is not None:
        reg = _region_outline(region, region_base if region_base is not None else (*bxy[0], 0.0))
        xs.append(np.array(reg[0]))
        ys.append(np.array(reg[1]))
    fr = _Frame(_limits(*xs), _limits(*ys), equal=True)
    body = _axes(fr, "x [m]", "y [m]", "plan view")
    for ox, oy in shapes:
        body.append(fr.polygon(ox, oy, COLORS["obstacle"], 1.0, "#555"))
    if reg is not None:
        body.append(fr.polygon(reg[0], reg[1], COLORS["region"], 0.25))
    body.append(fr.polyline(pp[:, 0], pp[:, 1], COLORS["ee"], 1.0))
    body.append(fr.polyline(bxy[:, 0], bxy[:, 1], COLORS["base"], 2.0))
    return _doc(body)


def read_trajectory_csv(path) -> np.ndarray:
    """Rows of (t, x, y, phi) from a trajectory CSV."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,x,y,phi":
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    return np.array(rows)
