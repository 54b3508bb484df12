"""Discretized base configuration spacetime.

Events live on an integer grid ``(stage, jx, jy, jphi)``; realized coordinates
are derived on demand from a :class:`GridSpec`.  Controls are integer velocity
steps ``(kx, ky, kphi)`` drawn from the closed velocity cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
# relative slack for the closed cone test; keeps k*dv == v_max on the boundary
CONE_RTOL = 1e-9
PHI_CLOSE_RTOL = 1e-9


class GridError(ValueError):
    """Invalid grid parameters."""


class Infeasible(Exception):
    """No admissible base trajectory exists; ``stage`` is where the search died."""

    def __init__(self, stage: int, message: str = ""):
        super().__init__(message or f"no feasible trajectory (empty set at stage {stage})")
        self.stage = stage


class InadmissibleStep(ValueError):
    """Two consecutive events are not joined by an admissible control."""

    def __init__(self, stage: int, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


def wrap_angle(phi: float) -> float:
    """Wrap ``phi`` into the half-open interval (-pi, pi]."""
    if not math.isfinite(phi):
        raise ValueError(f"cannot wrap non-finite angle {phi!r}")
    r = math.remainder(phi, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class GridSpec:
    """Time step, velocity steps, limits and grid anchor.

    Spatial steps follow from the velocity steps so that every admissible
    control moves the base from one grid point to another.
    """

    dt: float
    dv_x: float
    dv_y: float
    domega: float
    v_max: float
    omega_max: float
    w: float = 0.1
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    n_stages: int = 0

    def __post_init__(self):
        for name in ("dt", "dv_x", "dv_y", "domega", "v_max", "omega_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise GridError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.w) and self.w >= 0):
            raise GridError(f"w must be >= 0, got {self.w!r}")
        if self.n_stages < 0:
            raise GridError(f"n_stages must be >= 0, got {self.n_stages}")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        ratio = TWO_PI / self.dphi
        n = round(ratio)
        if n < 1 or abs(n * self.dphi - TWO_PI) > PHI_CLOSE_RTOL * TWO_PI:
            n_fix = max(1, n)
            hint = TWO_PI / (n_fix * self.dt)
            raise GridError(
                f"dphi = domega*dt = {self.dphi!r} does not divide 2*pi "
                f"(2*pi/dphi = {ratio:.6f}); use domega = {hint!r} "
                f"for {n_fix} heading bins"
            )

    @property
    def dx(self) -> float:
        return self.dv_x * self.dt

    @property
    def dy(self) -> float:
        return self.dv_y * self.dt

    @property
    def dphi(self) -> float:
        return self.domega * self.dt

    @property
    def n_phi(self) -> int:
        return round(TWO_PI / self.dphi)

    def replace(self, **changes) -> "GridSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return GridSpec(**kw)

    def x_of(self, jx):
        return self.origin[0] + jx * self.dx

    def y_of(self, jy):
        return self.origin[1] + jy * self.dy

    def phi_of(self, jphi: int) -> float:
        return wrap_angle(self.origin[2] + (jphi % self.n_phi) * self.dphi)

    def phi_array(self, jphi: np.ndarray) -> np.ndarray:
        """Vectorized heading lookup, bitwise equal to :meth:`phi_of`."""
        table = np.array([self.phi_of(j) for j in range(self.n_phi)])
        return table[np.asarray(jphi) % self.n_phi]

    def event(self, stage: int, jx: int, jy: int, jphi: int) -> "Event":
        jphi = int(jphi) % self.n_phi
        return Event(
            stage=int(stage), jx=int(jx), jy=int(jy), jphi=jphi,
            t=stage * self.dt, x=self.x_of(int(jx)), y=self.y_of(int(jy)),
            phi=self.phi_of(jphi),
        )

    def snap(self, x: float, y: float, phi: float) -> tuple[int, int, int]:
        """Grid indices of the node nearest to a continuous pose."""
        jx = round((x - self.origin[0]) / self.dx)
        jy = round((y - self.origin[1]) / self.dy)
        jphi = round(wrap_angle(phi - self.origin[2]) / self.dphi) % self.n_phi
        return int(jx), int(jy), int(jphi)

    def displacement(self, u: "Control") -> tuple[float, float, float, float]:
        return (self.dt, u.kx * self.dx, u.ky * self.dy, u.kphi * self.dphi)

    def in_cone(self, kx: int, ky: int, kphi: int) -> bool:
        vx, vy, om = kx * self.dv_x, ky * self.dv_y, kphi * self.domega
        return (vx * vx + vy * vy <= self.v_max ** 2 * (1 + CONE_RTOL)
                and om * om <= self.omega_max ** 2 * (1 + CONE_RTOL))

    def phi_step(self, jphi_from: int, jphi_to: int) -> int:
        """Signed heading step with the smallest magnitude between two bins."""
        n = self.n_phi
        d = (jphi_to - jphi_from) % n
        return d - n if d > n // 2 else d


@dataclass(frozen=True)
class Event:
    """One grid point of the base trajectory in spacetime."""

    stage: int
    jx: int
    jy: int
    jphi: int
    t: float = field(compare=False)
    x: float = field(compare=False)
    y: float = field(compare=False)
    phi: float = field(compare=False)

    @property
    def index(self) -> tuple[int, int, int]:
        return (self.jx, self.jy, self.jphi)


@dataclass(frozen=True, order=True)
class Control:
    kx: int
    ky: int
    kphi: int

    def __neg__(self) -> "Control":
        return Control(-self.kx, -self.ky, -self.kphi)


class AdmissibleControlSet:
    """All integer control steps inside the closed velocity cone.

    Controls are kept in lexicographic ``(kx, ky, kphi)`` order.  ``steps`` and
    ``costs`` are aligned numpy views used by the vectorized planners.
    """

    def __init__(self, controls: Iterable[Control], spec: GridSpec):
        self.controls: tuple[Control, ...] = tuple(sorted(set(controls)))
        self.spec = spec
        self._index = {c: i for i, c in enumerate(self.controls)}
        self.steps = np.array([(c.kx, c.ky, c.kphi) for c in self.controls],
                              dtype=np.int64).reshape(-1, 3)
        self.costs = np.array([step_cost(c, spec) for c in self.controls])

    def __len__(self) -> int:
        return len(self.controls)

    def __iter__(self) -> Iterator[Control]:
        return iter(self.controls)

    def __contains__(self, u) -> bool:
        if not isinstance(u, Control):
            u = Control(*u)
        return u in self._index

    def index(self, u: Control) -> int:
        return self._index[u]

    def restrict(self, axes: str) -> "AdmissibleControlSet":
        """Subset moving only along ``axes`` (any of 'x', 'y', 'p')."""
        keep = [c for c in self.controls
                if ("x" in axes or c.kx == 0)
                and ("y" in axes or c.ky == 0)
                and ("p" in axes or c.kphi == 0)]
        return AdmissibleControlSet(keep, self.spec)


def build_control_set(spec: GridSpec) -> AdmissibleControlSet:
    kx_max = int(math.floor(spec.v_max / spec.dv_x * (1 + CONE_RTOL)))
    ky_max = int(math.floor(spec.v_max / spec.dv_y * (1 + CONE_RTOL)))
    kp_max = int(math.floor(spec.omega_max / spec.domega * (1 + CONE_RTOL)))
    controls = [
        Control(kx, ky, kp)
        for kx in range(-kx_max, kx_max + 1)
        for ky in range(-ky_max, ky_max + 1)
        for kp in range(-kp_max, kp_max + 1)
        if spec.in_cone(kx, ky, kp)
    ]
    return AdmissibleControlSet(controls, spec)


def displacement_cost(dt: float, dx: float, dy: float, dphi: float, w: float) -> float:
    return (dx * dx + dy * dy + w * dphi * dphi) / dt


def step_cost(u: Control, spec: GridSpec) -> float:
    """Control-effort cost of one step: ``(dx^2 + dy^2 + w*dphi^2) / dt``."""
    dt, dx, dy, dphi = spec.displacement(u)
    return displacement_cost(dt, dx, dy, dphi, spec.w)


def apply_control(e: Event, u: Control, spec: GridSpec) -> Event:
    if e.stage >= spec.n_stages:
        raise ValueError(f"event at stage {e.stage} has no successor (N={spec.n_stages})")
    return spec.event(e.stage + 1, e.jx + u.kx, e.jy + u.ky, e.jphi + u.kphi)


def control_between(a: Event, b: Event, spec: GridSpec) -> Control:
    return Control(b.jx - a.jx, b.jy - a.jy, spec.phi_step(a.jphi, b.jphi))


def total_cost(traj: Sequence[Event], spec: GridSpec,
               ua: AdmissibleControlSet | None = None) -> float:
    """Sum of step costs in stage order.

    Raises :class:`InadmissibleStep` naming the first offending stage.
    """
    J = 0.0
    for a, b in zip(traj, traj[1:]):
        if b.stage != a.stage + 1:
            raise InadmissibleStep(a.stage, f"next event has stage {b.stage}")
        u = control_between(a, b, spec)
        ok = (u in ua) if ua is not None else spec.in_cone(u.kx, u.ky, u.kphi)
        if not ok:
            raise InadmissibleStep(a.stage, f"control {u} outside the velocity cone")
        J += step_cost(u, spec)
    return J
