"""Kinematic reachability of a yaw-revolved two-link arm.

The arm's yaw axis is vertical through the second joint, which sits at
``(x_j2, 0, z_j2)`` in the base frame.  Links ``L1``/``L2`` move in the vertical
plane selected by the yaw angle and a wrist pitch joint orients the nozzle.
Joint vectors are ``(yaw, shoulder, elbow, wrist)``; the shoulder is the
elevation of link 1 above horizontal, the elbow is relative to link 1 and the
wrist is relative to link 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DOWN = np.array([0.0, 0.0, -1.0])
_ANGLE_EPS = 1e-12
# below this the two elbow branches differ by < 1e-12 m at the nozzle
_STRAIGHT_ELBOW = 1e-6


class NoReach(ValueError):
    """No voxel of the workspace is reachable."""


class NoValidRegion(ValueError):
    """No annular region containing only valid voxels exists for a slice."""


@dataclass(frozen=True)
class ArmModel:
    L1: float = 0.42
    L2: float = 0.42
    joint2_offset: tuple[float, float] = (0.10, 0.40)
    yaw_limits: tuple[float, float] = (-math.pi, math.pi)
    shoulder_limits: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    elbow_limits: tuple[float, float] = (-2.6, 2.6)
    wrist_limits: tuple[float, float] = (-2.6, 2.6)
    alpha_max: float = 0.1

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValueError("link lengths must be positive")
        if not (0 <= self.alpha_max < math.pi / 2):
            raise ValueError("alpha_max must lie in [0, pi/2)")
        for lo, hi in self.limits:
            if not lo <= hi:
                raise ValueError(f"joint limits not ordered: ({lo}, {hi})")

    @property
    def limits(self) -> tuple[tuple[float, float], ...]:
        return (self.yaw_limits, self.shoulder_limits, self.elbow_limits, self.wrist_limits)

    @property
    def x_j2(self) -> float:
        return self.joint2_offset[0]

    @property
    def z_j2(self) -> float:
        return self.joint2_offset[1]


def _within(q: float, lim: tuple[float, float]) -> bool:
    return lim[0] - _ANGLE_EPS <= q <= lim[1] + _ANGLE_EPS


def forward_kinematics(arm: ArmModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Nozzle position and unit tool axis in the base frame."""
    yaw, sh, el, wr = q
    r = arm.L1 * math.cos(sh) + arm.L2 * math.cos(sh + el)
    z = arm.L1 * math.sin(sh) + arm.L2 * math.sin(sh + el)
    pos = np.array([arm.x_j2 + r * math.cos(yaw), r * math.sin(yaw), arm.z_j2 + z])
    th = sh + el + wr
    axis = np.array([math.cos(th) * math.cos(yaw), math.cos(th) * math.sin(yaw), math.sin(th)])
    return pos, axis


def _tool_angle_target(axis: np.ndarray, yaw: float) -> tuple[float, float]:
    """In-plane tool angle closest to ``axis`` and the unavoidable deviation."""
    a_par = axis[0] * math.cos(yaw) + axis[1] * math.sin(yaw)
    a_perp = -axis[0] * math.sin(yaw) + axis[1] * math.cos(yaw)
    theta = math.atan2(axis[2], a_par)
    return theta, math.asin(min(1.0, abs(a_perp)))


def arm_ik(arm: ArmModel, p_base, axis=DOWN) -> list[tuple[float, float, float, float]]:
    """All in-limit joint solutions reaching base-frame point ``p_base``.

    The wrist is set as close as its limits allow to the angle pointing the
    nozzle along ``axis``; a solution is kept when the remaining deviation is
    within ``alpha_max``.  Order: forward yaw branch first, then elbow sign
    (negative elbow, i.e. elbow up, first).
    """
    axis = np.asarray(axis, dtype=float)
    dx = p_base[0] - arm.x_j2
    dy = p_base[1]
    dz = p_base[2] - arm.z_j2
    r = math.hypot(dx, dy)
    D2 = r * r + dz * dz
    c = (D2 - arm.L1 ** 2 - arm.L2 ** 2) / (2 * arm.L1 * arm.L2)
    if c > 1 + 1e-12 or c < -1 - 1e-12:
        return []
    c = max(-1.0, min(1.0, c))
    el = math.acos(c)
    # acos amplifies rounding near full extension; a straight arm is one solution
    elbows = (-el, el) if el > _STRAIGHT_ELBOW else (0.0,)
    yaw0 = math.atan2(dy, dx) if r > 0 else 0.0
    branches = [(yaw0, r)]
    if r > 0:
        # reach over the top with the yaw turned half a revolution
        branches.append((yaw0 - math.pi if yaw0 > 0 else yaw0 + math.pi, -r))
    sols = []
    for yaw, rr in branches:
        for e in elbows:
            sh = math.atan2(dz, rr) - math.atan2(arm.L2 * math.sin(e), arm.L1 + arm.L2 * math.cos(e))
            sh = math.remainder(sh, 2 * math.pi)
            theta, dev = _tool_angle_target(axis, yaw)
            wr0 = math.remainder(theta - sh - e, 2 * math.pi)
            lo, hi = arm.wrist_limits
            wr = min(max(wr0, lo), hi)
            tilt = math.hypot(wr - wr0, dev)
            if tilt > arm.alpha_max + _ANGLE_EPS:
                continue
            q = (yaw, sh, e, wr)
            if all(_within(qi, lim) for qi, lim in zip(q, arm.limits)):
                sols.append(q)
    return sols


def ik_reachable(arm: ArmModel, p_base, axis=DOWN) -> bool:
    return bool(arm_ik(arm, p_base, axis))


def _ik_valid_mask(arm: ArmModel, pts: np.ndarray) -> np.ndarray:
    """Vectorized straight-down validity test, equivalent to ``ik_reachable``."""
    dx = pts[:, 0] - arm.x_j2
    dy = pts[:, 1]
    dz = pts[:, 2] - arm.z_j2
    r = np.hypot(dx, dy)
    c = (r * r + dz * dz - arm.L1 ** 2 - arm.L2 ** 2) / (2 * arm.L1 * arm.L2)
    inside = (c <= 1 + 1e-12) & (c >= -1 - 1e-12)
    el = np.arccos(np.clip(c, -1.0, 1.0))
    yaw0 = np.where(r > 0, np.arctan2(dy, dx), 0.0)
    ok = np.zeros(len(pts), dtype=bool)

    def within(q, lim):
        return (q >= lim[0] - _ANGLE_EPS) & (q <= lim[1] + _ANGLE_EPS)

    for flip in (False, True):
        if flip:
            yaw = np.where(yaw0 > 0, yaw0 - np.pi, yaw0 + np.pi)
            rr = -r
            valid_branch = r > 0
        else:
            yaw, rr, valid_branch = yaw0, r, np.ones(len(pts), dtype=bool)
        for sgn in (-1.0, 1.0):
            e = sgn * el
            sh = np.arctan2(dz, rr) - np.arctan2(arm.L2 * np.sin(e), arm.L1 + arm.L2 * np.cos(e))
            sh = np.remainder(sh + np.pi, 2 * np.pi) - np.pi
            wr0 = np.remainder(-np.pi / 2 - sh - e + np.pi, 2 * np.pi) - np.pi
            wr = np.clip(wr0, *arm.wrist_limits)
            good = (np.abs(wr - wr0) <= arm.alpha_max + _ANGLE_EPS)
            good &= within(yaw, arm.yaw_limits) & within(sh, arm.shoulder_limits)
            good &= within(e, arm.elbow_limits) & valid_branch
            ok |= good
    return ok & inside


@dataclass(frozen=True)
class VoxelCloud:
    """Valid voxels ``(ix, iy, iz)`` with centers at ``index * delta`` (base frame)."""

    delta: float
    voxels: frozenset
    _array: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        arr = np.array(sorted(self.voxels), dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "_array", arr)

    @property
    def indices(self) -> np.ndarray:
        return self._array

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self._array.min(axis=0), self._array.max(axis=0)

    def __contains__(self, ijk) -> bool:
        return tuple(int(v) for v in ijk) in self.voxels

    def __len__(self) -> int:
        return len(self.voxels)

    def save(self, path) -> None:
        lines = [f"delta {self.delta!r}"]
        lines += [f"{i} {j} {k}" for i, j, k in self._array.tolist()]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "VoxelCloud":
        with open(path) as fh:
            rows = [ln.split() for ln in fh if ln.strip()]
        if not rows or rows[0][0] != "delta" or len(rows[0]) != 2:
            raise ValueError(f"{path}: first line must be 'delta <value>'")
        delta = float(rows[0][1])
        vox = set()
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'ix iy iz'")
            vox.add(tuple(int(v) for v in row))
        if not vox:
            raise NoReach(f"{path}: no voxels")
        return cls(delta, frozenset(vox))


def build_voxel_cloud(arm: ArmModel, delta: float) -> VoxelCloud:
    """Mark every voxel whose center the arm reaches with the nozzle near vertical."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    reach = arm.L1 + arm.L2 + delta
    lo = np.floor((np.array([arm.x_j2, 0.0, arm.z_j2]) - reach) / delta).astype(int)
    hi = np.ceil((np.array([arm.x_j2, 0.0, arm.z_j2]) + reach) / delta).astype(int)
    grid = np.stack(np.meshgrid(*(np.arange(a, b + 1) for a, b in zip(lo, hi)),
                                indexing="ij"), axis=-1).reshape(-1, 3)
    ok = _ik_valid_mask(arm, grid * delta)
    if not ok.any():
        raise NoReach("no voxel center is reachable")
    return VoxelCloud(delta, frozenset(map(tuple, grid[ok].tolist())))


class ReachStatus(enum.Enum):
    OK = "ok"
    HEIGHT_MISMATCH = "height_mismatch"
    BEHIND_PLANE = "behind_plane"
    OUTSIDE_SHELL = "outside_shell"


@dataclass(frozen=True)
class ReachableRegionParams:
    h: float
    x_min: float
    r_min: float
    r_max: float
    joint2_offset: tuple[float, float]
    delta: float

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")

    @property
    def planar_reach(self) -> float:
        """Largest horizontal distance from the yaw axis inside the shell."""
        dz = self.h - self.joint2_offset[1]
        return math.sqrt(max(0.0, self.r_max ** 2 - dz * dz))


def _slice_voxels(cloud: VoxelCloud, h: float, x_min: float, joint2, r_top: float):
    """All grid voxels (valid or not) of the height slice in front of ``x_min``.

    Returns center distances to joint 2 and validity flags.
    """
    d = cloud.delta
    iz = np.arange(math.ceil((h - d / 2) / d - 1e-9), math.floor((h + d / 2) / d + 1e-9) + 1)
    x_j2, z_j2 = joint2
    ix = np.arange(math.ceil(x_min / d - 1e-9), math.floor((x_j2 + r_top) / d) + 1)
    iy = np.arange(-math.floor(r_top / d), math.floor(r_top / d) + 1)
    g = np.stack(np.meshgrid(ix, iy, iz, indexing="ij"), axis=-1).reshape(-1, 3)
    c = g * d
    dist = np.sqrt((c[:, 0] - x_j2) ** 2 + c[:, 1] ** 2 + (c[:, 2] - z_j2) ** 2)
    valid = np.array([tuple(v) in cloud.voxels for v in g.tolist()], dtype=bool)
    return dist, valid


def extract_region(cloud: VoxelCloud, h: float, x_min: float,
                   joint2: tuple[float, float]) -> ReachableRegionParams:
    """Pick the all-valid spherical shell with the most voxels in one height slice.

    Candidate radii are multiples of ``delta/2``.  Ties prefer the wider shell,
    then the smaller inner radius.
    """
    d = cloud.delta
    lo, hi = cloud.bbox
    corners = np.array([[a, b, c] for a in (lo[0], hi[0]) for b in (lo[1], hi[1])
                        for c in (lo[2], hi[2])]) * d
    r_top = float(np.max(np.linalg.norm(corners - [joint2[0], 0.0, joint2[1]], axis=1))) + d
    dist, valid = _slice_voxels(cloud, h, x_min, joint2, r_top)
    if not valid.any():
        raise NoValidRegion(f"no valid voxel in slice h={h}")
    step = d / 2
    cand = step * np.arange(1, int(math.ceil(r_top / step)) + 2)
    inv = np.sort(dist[~valid])
    val = np.sort(dist[valid])
    best = None
    for a_i, a in enumerate(cand):
        # the shell [a, b] may not contain an invalid center
        k = np.searchsorted(inv, a, side="left")
        limit = inv[k] if k < len(inv) else np.inf
        n_lo = np.searchsorted(val, a, side="left")
        for b in cand[a_i + 1:]:
            if b >= limit:
                break
            count = int(np.searchsorted(val, b, side="right") - n_lo)
            if count == 0:
                continue
            key = (count, b - a, -a)
            if best is None or key > best[0]:
                best = (key, a, b)
    if best is None:
        raise NoValidRegion(f"no all-valid shell in slice h={h}")
    _, a, b = best
    return ReachableRegionParams(h=float(h), x_min=float(x_min), r_min=float(a), r_max=float(b),
                                 joint2_offset=tuple(joint2), delta=d)


def base_frame(base, p) -> tuple[float, float]:
    """Forward and lateral coordinates of world point ``p`` seen from ``base``."""
    x, y, phi = base
    ddx, ddy = p[0] - x, p[1] - y
    c, s = math.cos(phi), math.sin(phi)
    return c * ddx + s * ddy, -s * ddx + c * ddy


def reach_status(region: ReachableRegionParams, base, ee) -> ReachStatus:
    pz = ee.position[2] if hasattr(ee, "position") else ee[2]
    p = ee.position if hasattr(ee, "position") else ee
    if abs(pz - region.h) > region.delta / 2 + 1e-12:
        return ReachStatus.HEIGHT_MISMATCH
    fwd, lat = base_frame(base, p)
    if fwd < region.x_min:
        return ReachStatus.BEHIND_PLANE
    x_j2, z_j2 = region.joint2_offset
    D2 = (fwd - x_j2) ** 2 + lat ** 2 + (region.h - z_j2) ** 2
    if not region.r_min ** 2 <= D2 <= region.r_max ** 2:
        return ReachStatus.OUTSIDE_SHELL
    return ReachStatus.OK


def is_reachable(region: ReachableRegionParams, base, ee) -> bool:
    """Whether ``ee`` lies in the region when the base sits at ``(x, y, phi)``."""
    return reach_status(region, base, ee) is ReachStatus.OK


def reachable_mask(region: ReachableRegionParams, xs, ys, phis, p) -> np.ndarray:
    """Vectorized :func:`is_reachable` over base poses for one nozzle position."""
    if abs(p[2] - region.h) > region.delta / 2 + 1e-12:
        return np.zeros(np.broadcast(xs, ys, phis).shape, dtype=bool)
    ddx, ddy = p[0] - xs, p[1] - ys
    c, s = np.cos(phis), np.sin(phis)
    fwd = c * ddx + s * ddy
    lat = -s * ddx + c * ddy
    x_j2, z_j2 = region.joint2_offset
    D2 = (fwd - x_j2) ** 2 + lat ** 2 + (region.h - z_j2) ** 2
    return (fwd >= region.x_min) & (D2 >= region.r_min ** 2) & (D2 <= region.r_max ** 2)


def certify_region(region: ReachableRegionParams, arm: ArmModel,
                   n_radial: int = 64, n_yaw: int = 180, n_height: int = 5) -> ReachableRegionParams:
    """Shrink a voxel-derived shell until dense samples of it all pass IK.

    Voxel validity is tested at centers only, so a shell edge may overhang the
    true workspace by less than one voxel.  Samples cover the whole height
    slab accepted by :func:`is_reachable`.  Radii move inward in ``delta/4``
    steps.  The inner radius is first raised to the smallest vertical offset
    from joint 2 within the slab, below which the shell has no points.
    """
    step = region.delta / 4
    x_j2, z_j2 = region.joint2_offset
    hs = np.linspace(region.h - region.delta / 2, region.h + region.delta / 2, n_height)
    dzs = np.abs(hs - z_j2)
    r_min, r_max = max(region.r_min, float(dzs.min())), region.r_max
    yaw = np.linspace(-math.pi, math.pi, n_yaw, endpoint=False)
    while r_min < r_max:
        D = np.linspace(r_min, r_max, n_radial)
        Dg, Y, Hg = np.meshgrid(D, yaw, hs, indexing="ij")
        dz = np.abs(Hg - z_j2)
        exists = Dg >= dz
        R = np.sqrt(np.maximum(Dg * Dg - dz * dz, 0.0))
        pts = np.stack([x_j2 + R * np.cos(Y), R * np.sin(Y), Hg], -1)
        front = (pts[..., 0] >= region.x_min) & exists
        ok = _ik_valid_mask(arm, pts.reshape(-1, 3)).reshape(R.shape)
        bad = front & ~ok
        if not bad.any():
            break
        near_inner = Dg - r_min < r_max - Dg
        if (bad & near_inner).any():
            r_min += step
        if (bad & ~near_inner).any():
            r_max -= step
    if not r_min < r_max:
        raise NoValidRegion(f"shell at h={region.h} vanishes under certification")
    return ReachableRegionParams(region.h, region.x_min, float(r_min), float(r_max),
                                 region.joint2_offset, region.delta)


def regions_for_heights(cloud: VoxelCloud, heights: Iterable[float], x_min: float,
                        arm: ArmModel, certify: bool = True) -> dict[float, ReachableRegionParams]:
    """One region per distinct height, cached by value."""
    out = {}
    for h in heights:
        h = float(h)
        if h in out:
            continue
        reg = extract_region(cloud, h, x_min, arm.joint2_offset)
        out[h] = certify_region(reg, arm) if certify else reg
    return out
