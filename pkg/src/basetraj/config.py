"""Experiment configuration and the task-to-spacetime pipeline."""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import tasks
from .reachability import ArmModel, build_voxel_cloud, regions_for_heights
from .spacetime import AdmissibleControlSet, GridSpec, build_control_set
from .world import (AdmissibleSpacetime, ConvexPolygon, Disc, EETrajectory, WorldModel,
                    build_admissible_spacetime, sample_ee_trajectory)


class ConfigError(ValueError):
    pass


_PI_EXPR = re.compile(r"^\s*(?:(\d+(?:\.\d*)?)\s*\*?\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(v) -> float:
    """Accept a number or an expression like ``"pi/30"`` / ``"2*pi/60"``."""
    if isinstance(v, (int, float)):
        return float(v)
    m = _PI_EXPR.match(str(v))
    if not m:
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"cannot parse angle {v!r}") from None
    num = float(m.group(1)) if m.group(1) else 1.0
    den = float(m.group(2)) if m.group(2) else 1.0
    return num * math.pi / den


@dataclass
class GridConfig:
    dt: float = 3.0
    dv: float = 0.05
    domega: float = math.pi / 30
    v_max: float = 0.2
    omega_max: float = math.pi / 10
    weight: float = 0.1
    snap_domega: bool = False


@dataclass
class RegionConfig:
    voxel: float = 0.05
    x_min: float = 0.3
    certify: bool = True


@dataclass
class WorldConfig:
    footprint_radius: float = 0.35
    margin: float = 0.05
    obstacles: list = field(default_factory=list)


@dataclass
class TaskConfig:
    shape: str = "u_shape"          # u_shape | ntu | line | file
    nozzle_speed: float = 0.1
    layers: int = 5
    layer_height: float = 0.01
    z0: float = 0.05
    length: float = 2.1             # line tasks
    path: str | None = None         # file tasks


@dataclass
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    arm: ArmModel = field(default_factory=ArmModel)
    region: RegionConfig = field(default_factory=RegionConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    planner: str = "mobocontp"
    base_dof: str = "xyp"
    rate: float | None = None
    workers: int = 1
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def _build(cls, data: dict, where: str):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    grid = dict(d.pop("grid", {}))
    for k in ("domega", "omega_max"):
        if k in grid:
            grid[k] = parse_angle(grid[k])
    arm = dict(d.pop("arm", {}))
    for k in list(arm):
        if k.endswith("_limits"):
            arm[k] = tuple(parse_angle(a) for a in arm[k])
        elif k == "joint2_offset":
            arm[k] = tuple(arm[k])
        elif k == "alpha_max":
            arm[k] = parse_angle(arm[k])
    try:
        cfg = ExperimentConfig(
            grid=_build(GridConfig, grid, "grid"),
            arm=_build(ArmModel, arm, "arm"),
            region=_build(RegionConfig, d.pop("region", {}), "region"),
            world=_build(WorldConfig, d.pop("world", {}), "world"),
            task=_build(TaskConfig, d.pop("task", {}), "task"),
            **d,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.planner not in ("mobocontp", "dijkstra", "brute"):
        raise ConfigError(f"unknown planner {cfg.planner!r}")
    if not set(cfg.base_dof) <= set("xyp") or not cfg.base_dof:
        raise ConfigError(f"base_dof must combine 'x', 'y', 'p', got {cfg.base_dof!r}")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def task_path(task: TaskConfig) -> np.ndarray:
    if task.shape == "u_shape":
        return tasks.gen_layers(tasks.u_shape_outline(task.z0), task.layers, task.layer_height)
    if task.shape == "ntu":
        return tasks.gen_layers(tasks.ntu_outline(task.z0), task.layers, task.layer_height)
    if task.shape == "line":
        return tasks.gen_line(task.length, task.z0)
    if task.shape == "file":
        if not task.path:
            raise ConfigError("file task needs 'path'")
        return tasks.load_path_file(task.path)
    raise ConfigError(f"unknown task shape {task.shape!r}")


def make_obstacles(specs: list) -> list:
    out = []
    for ob in specs:
        kind = ob.get("type")
        if kind == "disc":
            out.append(Disc(tuple(ob["center"]), float(ob["radius"])))
        elif kind == "polygon":
            out.append(ConvexPolygon(tuple(tuple(v) for v in ob["vertices"])))
        else:
            raise ConfigError(f"unknown obstacle type {kind!r}")
    return out


def snapped_domega(domega: float, dt: float) -> float:
    """Largest heading rate not above ``domega`` whose step divides the circle."""
    ratio = 2 * math.pi / (domega * dt)
    n = max(1, math.ceil(ratio - 1e-9))
    return 2 * math.pi / (n * dt)


@dataclass
class Problem:
    config: ExperimentConfig
    path: np.ndarray
    ee: EETrajectory
    spec: GridSpec
    ua: AdmissibleControlSet
    world: WorldModel
    regions: dict
    xa: AdmissibleSpacetime | None
    build_time: float


def make_spec(cfg: ExperimentConfig, n_stages: int, origin) -> GridSpec:
    g = cfg.grid
    domega = snapped_domega(g.domega, g.dt) if g.snap_domega else g.domega
    return GridSpec(dt=g.dt, dv_x=g.dv, dv_y=g.dv, domega=domega, v_max=g.v_max,
                    omega_max=g.omega_max, w=g.weight, origin=origin, n_stages=n_stages)


_CLOUD_CACHE: dict = {}


def voxel_cloud(arm: ArmModel, delta: float):
    key = (arm, delta)
    if key not in _CLOUD_CACHE:
        _CLOUD_CACHE[key] = build_voxel_cloud(arm, delta)
    return _CLOUD_CACHE[key]


_REGION_CACHE: dict = {}


def cached_regions(arm: ArmModel, rc: RegionConfig, heights) -> dict:
    out = {}
    for h in heights:
        key = (arm, rc.voxel, rc.x_min, rc.certify, h)
        if key not in _REGION_CACHE:
            cloud = voxel_cloud(arm, rc.voxel)
            _REGION_CACHE[key] = regions_for_heights(cloud, [h], rc.x_min, arm, rc.certify)[h]
        out[h] = _REGION_CACHE[key]
    return out


def build_problem(cfg: ExperimentConfig, with_spacetime: bool = True) -> Problem:
    """Sample the task, build the world and regions, and the admissible spacetime.

    Raises :class:`~basetraj.world.EmptyStage` when some stage is infeasible.
    """
    t0 = time.perf_counter()
    path = task_path(cfg.task)
    ee = sample_ee_trajectory(path, cfg.task.nozzle_speed, cfg.grid.dt)
    p0 = ee.poses[0].position
    spec = make_spec(cfg, ee.n_stages, (p0[0], p0[1], 0.0))
    ua = build_control_set(spec)
    if cfg.base_dof != "xyp":
        ua = ua.restrict(cfg.base_dof)
    world = WorldModel(cfg.world.footprint_radius, cfg.world.margin,
                       make_obstacles(cfg.world.obstacles))
    world = world.with_print_path(path, cfg.task.nozzle_speed, cfg.region.voxel)
    regions = cached_regions(cfg.arm, cfg.region, sorted({p.position[2] for p in ee.poses}))
    xa = None
    if with_spacetime:
        xa = build_admissible_spacetime(ee, lambda i: regions[ee.poses[i].position[2]], world, spec)
    return Problem(cfg, path, ee, spec, ua, world, regions, xa, time.perf_counter() - t0)


def override(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Copy of ``cfg`` with dotted-key overrides, e.g. ``override(cfg, **{"grid.dt": 2.0})``."""
    groups: dict = {}
    top = {}
    for k, v in kw.items():
        if "." in k:
            g, name = k.split(".", 1)
            groups.setdefault(g, {})[name] = v
        else:
            top[k] = v
    new = replace(cfg, **top)
    for g, vals in groups.items():
        new = replace(new, **{g: replace(getattr(new, g), **vals)})
    return new
