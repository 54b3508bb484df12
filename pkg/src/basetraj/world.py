"""Task environment: nozzle trajectory, obstacles, and admissible spacetime."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .reachability import ReachableRegionParams, reachable_mask
from .spacetime import Event, GridSpec, Infeasible

# key packing: lexicographic order of (jx, jy, jphi) == numeric order of keys
_OFF = 1 << 20
_SPAN = 1 << 21


class EmptyStage(Infeasible):
    """The nozzle pose of one stage admits no collision-free base placement."""

    def __init__(self, stage: int):
        super().__init__(stage, f"empty admissible set at stage {stage}")


@dataclass(frozen=True)
class EEPose:
    position: tuple[float, float, float]
    axis: tuple[float, float, float] = (0.0, 0.0, -1.0)

    def __post_init__(self):
        n = math.sqrt(sum(a * a for a in self.axis))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"tool axis must be a unit vector, norm={n}")


@dataclass(frozen=True)
class EETrajectory:
    """Nozzle samples ``p^0..p^N`` at a uniform time step."""

    poses: tuple[EEPose, ...]
    dt: float
    speed: float | None = None
    arclength: tuple[float, ...] = ()
    irregular_end: bool = False

    @property
    def n_stages(self) -> int:
        return len(self.poses) - 1

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.poses])

    @property
    def duration(self) -> float:
        return self.n_stages * self.dt


def _cumlength(vertices: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def point_at(vertices: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points at arc lengths ``s`` along a polyline."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    seglen = cum[k + 1] - cum[k]
    frac = np.where(seglen > 0, (s - cum[k]) / np.where(seglen > 0, seglen, 1.0), 0.0)
    return vertices[k] + frac[:, None] * (vertices[k + 1] - vertices[k])


def sample_ee_trajectory(vertices, speed: float, dt: float) -> EETrajectory:
    """Arc-length uniform samples of a polyline traversed at constant nozzle speed.

    When the path length is not a whole number of ``speed*dt`` steps, the step
    count is rounded half up, the last sample is the path end (so the final step
    is between 0.5 and 1.5 nominal steps long) and the trajectory is flagged
    ``irregular_end``.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3 or len(v) < 2:
        raise ValueError("path must be an (n>=2, 3) array of vertices")
    if not (speed > 0 and dt > 0):
        raise ValueError("speed and dt must be positive")
    cum = _cumlength(v)
    d = cum[-1]
    if not d > 0:
        raise ValueError("degenerate zero-length path")
    step = speed * dt
    ratio = d / step
    n = max(1, math.floor(ratio + 0.5))
    irregular = bool(abs(ratio - n) > 1e-6 * max(1.0, ratio))
    s = np.arange(n + 1) * step
    s[-1] = d
    pts = point_at(v, cum, s)
    pts[-1] = v[-1]
    pts[0] = v[0]
    poses = tuple(EEPose(tuple(map(float, p))) for p in pts)
    return EETrajectory(poses, dt, speed, tuple(map(float, s)), irregular)


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def distance(self, x, y):
        return np.maximum(np.hypot(x - self.center[0], y - self.center[1]) - self.radius, 0.0)


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 < 0:
            object.__setattr__(self, "vertices", tuple(map(tuple, v[::-1].tolist())))

    def distance(self, x, y):
        """Euclidean distance to the polygon; zero inside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(self.vertices, dtype=float)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        inside = np.ones_like(best, dtype=bool)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            ex, ey = b - a
            px, py = x - a[0], y - a[1]
            t = np.clip((px * ex + py * ey) / (ex * ex + ey * ey), 0.0, 1.0)
            best = np.minimum(best, np.hypot(px - t * ex, py - t * ey))
            inside &= (ex * py - ey * px) >= 0
        return np.where(inside, 0.0, best)


def densify(vertices, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Points along a polyline no more than ``spacing`` apart, with arc lengths."""
    v = np.asarray(vertices, dtype=float)
    cum = _cumlength(v)
    n = max(1, math.ceil(cum[-1] / spacing))
    s = np.linspace(0.0, cum[-1], n + 1)
    return point_at(v, cum, s), s


@dataclass
class WorldModel:
    """Static obstacles plus the printed structure growing in time.

    The base is a disc of radius ``footprint_radius``; a position is free when
    it keeps ``footprint_radius + margin`` from every obstacle and from every
    printed point whose print time has passed.
    """

    footprint_radius: float = 0.35
    margin: float = 0.05
    obstacles: list = field(default_factory=list)
    print_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    print_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.footprint_radius > 0:
            raise ValueError("footprint radius must be positive")
        if not self.margin >= 0:
            raise ValueError("margin must be non-negative")
        self.print_points = np.asarray(self.print_points, dtype=float).reshape(-1, 2)
        self.print_times = np.asarray(self.print_times, dtype=float).reshape(-1)
        if len(self.print_points) != len(self.print_times):
            raise ValueError("print points and times differ in length")
        if np.any(np.diff(self.print_times) < 0):
            raise ValueError("print timestamps must be non-decreasing")

    @property
    def clearance(self) -> float:
        return self.footprint_radius + self.margin

    def with_print_path(self, vertices, speed: float, spacing: float) -> "WorldModel":
        pts, s = densify(vertices, spacing)
        return WorldModel(self.footprint_radius, self.margin, list(self.obstacles),
                          pts[:, :2], s / speed)

    def free_mask(self, x, y, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = self.clearance
        ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for ob in self.obstacles:
            ok &= ob.distance(x, y) >= c
        n = int(np.searchsorted(self.print_times, t, side="right"))
        if n:
            pts = self.print_points[:n]
            flat_x, flat_y = np.broadcast_arrays(x, y)
            fx, fy = flat_x.ravel(), flat_y.ravel()
            # only printed points within reach of the query box matter
            near = ((pts[:, 0] >= fx.min() - c) & (pts[:, 0] <= fx.max() + c)
                    & (pts[:, 1] >= fy.min() - c) & (pts[:, 1] <= fy.max() + c))
            pts = pts[near]
            out = ok.ravel().copy()
            for lo in range(0, len(pts), 256):
                chunk = pts[lo:lo + 256]
                d2 = (fx[:, None] - chunk[None, :, 0]) ** 2 + (fy[:, None] - chunk[None, :, 1]) ** 2
                out &= d2.min(axis=1) >= c * c
            ok = out.reshape(ok.shape)
        return ok


def collision_free(world: WorldModel, pos, t: float) -> bool:
    return bool(world.free_mask(np.array(pos[0]), np.array(pos[1]), t))


def encode(ijk: np.ndarray, n_phi: int) -> np.ndarray:
    ijk = np.asarray(ijk, dtype=np.int64).reshape(-1, 3)
    return ((ijk[:, 0] + _OFF) * _SPAN + (ijk[:, 1] + _OFF)) * n_phi + ijk[:, 2]


def decode(keys: np.ndarray, n_phi: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    jphi = keys % n_phi
    rest = keys // n_phi
    return np.stack([rest // _SPAN - _OFF, rest % _SPAN - _OFF, jphi], axis=1)


class AdmissibleSpacetime:
    """Per-stage sets of admissible grid nodes ``(jx, jy, jphi)``.

    Each stage is stored as a lexicographically sorted ``(n, 3)`` int64 array,
    so array position order equals the canonical tie-break order.
    """

    def __init__(self, stages: Sequence, spec: GridSpec):
        self.spec = spec
        n_phi = spec.n_phi
        self._nodes = []
        for arr in stages:
            arr = np.asarray(arr, dtype=np.int64).reshape(-1, 3).copy()
            if len(arr):
                arr[:, 2] %= n_phi
                if np.abs(arr[:, :2]).max() >= _OFF:
                    raise ValueError("grid index out of the supported range")
            keys = np.unique(encode(arr, n_phi))
            self._nodes.append(decode(keys, n_phi))
        self._sets: list[set | None] = [None] * len(self._nodes)

    @property
    def n_stages(self) -> int:
        return len(self._nodes) - 1

    def nodes(self, i: int) -> np.ndarray:
        return self._nodes[i]

    @property
    def stage_sizes(self) -> list[int]:
        return [len(a) for a in self._nodes]

    def _set(self, i: int) -> set:
        if self._sets[i] is None:
            self._sets[i] = set(map(tuple, self._nodes[i].tolist()))
        return self._sets[i]

    def contains(self, stage: int, ijk) -> bool:
        if not 0 <= stage < len(self._nodes):
            return False
        jx, jy, jphi = (int(v) for v in ijk)
        return (jx, jy, jphi % self.spec.n_phi) in self._set(stage)

    def __contains__(self, e: Event) -> bool:
        return self.contains(e.stage, e.index)

    def events(self, i: int) -> list[Event]:
        return [self.spec.event(i, *row) for row in self._nodes[i].tolist()]

    def first_empty(self) -> int | None:
        for i, a in enumerate(self._nodes):
            if len(a) == 0:
                return i
        return None


def _stage_nodes(p, t: float, region: ReachableRegionParams, world: WorldModel,
                 spec: GridSpec) -> np.ndarray:
    x0, y0, _ = spec.origin
    rad = abs(region.joint2_offset[0]) + region.planar_reach + 1e-9
    jx = np.arange(math.ceil((p[0] - rad - x0) / spec.dx), math.floor((p[0] + rad - x0) / spec.dx) + 1)
    jy = np.arange(math.ceil((p[1] - rad - y0) / spec.dy), math.floor((p[1] + rad - y0) / spec.dy) + 1)
    if len(jx) == 0 or len(jy) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    JX, JY = np.meshgrid(jx, jy, indexing="ij")
    xs, ys = spec.x_of(JX), spec.y_of(JY)
    free = world.free_mask(xs, ys, t)
    if not free.any():
        return np.zeros((0, 3), dtype=np.int64)
    fx, fy = JX[free], JY[free]
    n_phi = spec.n_phi
    jp = np.arange(n_phi)
    phis = spec.phi_array(jp)
    ok = reachable_mask(region, spec.x_of(fx)[:, None], spec.y_of(fy)[:, None],
                        phis[None, :], p)
    a, b = np.nonzero(ok)
    return np.stack([fx[a], fy[a], jp[b]], axis=1).astype(np.int64)


def build_admissible_spacetime(ee: EETrajectory,
                               regions: Sequence[ReachableRegionParams] | Callable,
                               world: WorldModel, spec: GridSpec) -> AdmissibleSpacetime:
    """Admissible grid nodes per stage: reachable for ``p(i*dt)`` and collision-free.

    ``regions`` is a per-stage sequence or a callable ``stage -> region``.
    Raises :class:`EmptyStage` for the first stage without admissible nodes.
    """
    if ee.n_stages != spec.n_stages:
        raise ValueError(f"trajectory has {ee.n_stages} stages, grid expects {spec.n_stages}")
    region_of = regions if callable(regions) else (lambda i: regions[i])
    stages = []
    for i, pose in enumerate(ee.poses):
        nodes = _stage_nodes(pose.position, i * spec.dt, region_of(i), world, spec)
        if len(nodes) == 0:
            raise EmptyStage(i)
        stages.append(nodes)
    return AdmissibleSpacetime(stages, spec)
