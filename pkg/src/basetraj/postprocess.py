"""Dense interpolation, plan validation, and trajectory metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .planner import PlanResult
from .reachability import is_reachable
from .spacetime import (AdmissibleControlSet, Event, GridSpec, control_between,
                        step_cost, wrap_angle)
from .world import AdmissibleSpacetime, collision_free

REL_TOL = 1e-9


@dataclass
class DenseTrajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    omega: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def _unwrapped_headings(events: Sequence[Event], spec: GridSpec) -> np.ndarray:
    """Headings accumulated from the executed heading steps, starting at the first knot."""
    phi = [events[0].phi]
    for a, b in zip(events, events[1:]):
        phi.append(phi[-1] + spec.phi_step(a.jphi, b.jphi) * spec.dphi)
    return np.array(phi)


def interpolate(events: Sequence[Event], spec: GridSpec, rate: float) -> DenseTrajectory:
    """Piecewise-linear resampling at ``rate`` Hz; knots are reproduced exactly."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    if rate * spec.dt < 1:
        raise ValueError("rate*dt must be at least 1")
    if not events:
        raise ValueError("empty trajectory")
    N = len(events) - 1
    kx = np.array([e.x for e in events])
    ky = np.array([e.y for e in events])
    kp = _unwrapped_headings(events, spec)
    n = int(math.floor(N * spec.dt * rate + 1e-9)) + 1
    t = np.arange(n) / rate
    if N == 0:
        z = np.zeros(n)
        return DenseTrajectory(t, np.full(n, kx[0]), np.full(n, ky[0]),
                               np.full(n, events[0].phi), z, z.copy(), z.copy())
    seg = np.minimum(np.floor(t / spec.dt + 1e-9).astype(int), N - 1)
    frac = np.clip((t - seg * spec.dt) / spec.dt, 0.0, 1.0)
    vxs = np.diff(kx) / spec.dt
    vys = np.diff(ky) / spec.dt
    oms = np.diff(kp) / spec.dt
    x = kx[seg] + frac * (kx[seg + 1] - kx[seg])
    y = ky[seg] + frac * (ky[seg + 1] - ky[seg])
    p = kp[seg] + frac * (kp[seg + 1] - kp[seg])
    phi = np.array([wrap_angle(v) for v in p])
    # samples that land on a knot copy the grid values bit for bit
    knot = np.isclose(t / spec.dt, np.round(t / spec.dt), rtol=0, atol=1e-9)
    kidx = np.round(t / spec.dt).astype(int)
    for s in np.nonzero(knot)[0]:
        e = events[kidx[s]]
        x[s], y[s], phi[s] = e.x, e.y, e.phi
    return DenseTrajectory(t, x, y, phi, vxs[seg], vys[seg], oms[seg])


@dataclass
class Violation:
    stage: int
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def validate_plan(plan: PlanResult, xa: AdmissibleSpacetime,
                  ua: AdmissibleControlSet) -> ValidationReport:
    """Audit stage membership, control admissibility, Bellman identity, and cost."""
    spec = xa.spec
    rep = ValidationReport()
    ev = plan.events
    if len(ev) != xa.n_stages + 1:
        rep.violations.append(Violation(-1, "length", f"{len(ev)} events for {xa.n_stages} stages"))
    for i, e in enumerate(ev):
        if e.stage != i:
            rep.violations.append(Violation(i, "stage", f"event labelled stage {e.stage}"))
        if not xa.contains(i, e.index):
            rep.violations.append(Violation(i, "membership", f"{e.index} not admissible"))
    J = 0.0
    for i, (a, b) in enumerate(zip(ev, ev[1:])):
        u = control_between(a, b, spec)
        if u not in ua:
            rep.violations.append(Violation(i, "control", f"{u} outside the velocity cone"))
        J += step_cost(u, spec)
    g = plan.cost_to_go
    if len(g) != len(ev):
        rep.violations.append(Violation(-1, "bellman", "cost-to-go length mismatch"))
    else:
        if g and g[-1] != 0.0:
            rep.violations.append(Violation(len(g) - 1, "bellman", f"G at final stage is {g[-1]}"))
        for i, (a, b) in enumerate(zip(ev, ev[1:])):
            lhs = g[i]
            rhs = step_cost(control_between(a, b, spec), spec) + g[i + 1]
            if not _close(lhs, rhs):
                rep.violations.append(Violation(i, "bellman", f"G={lhs!r} but l+G'={rhs!r}"))
    if not _close(J, plan.cost):
        rep.violations.append(Violation(-1, "cost", f"reported J={plan.cost!r}, recomputed {J!r}"))
    return rep


def inter_knot_warnings(plan: PlanResult, ee, regions, world, samples: int = 4) -> list[Violation]:
    """Sample between knots and report points leaving the admissible region.

    ``regions`` maps a stage index to its region; the nozzle pose is linearly
    interpolated too.  These are diagnostics only.
    """
    spec = plan.spec
    out = []
    head = _unwrapped_headings(plan.events, spec)
    pos = ee.positions
    for i, (a, b) in enumerate(zip(plan.events, plan.events[1:])):
        for k in range(1, samples):
            f = k / samples
            base = (a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), head[i] + f * (head[i + 1] - head[i]))
            p = pos[i] + f * (pos[i + 1] - pos[i])
            t = (i + f) * spec.dt
            reg = regions(i) if callable(regions) else regions[i]
            if not is_reachable(reg, base, p):
                out.append(Violation(i, "between-knots", f"unreachable at t={t:.3f}"))
            elif not collision_free(world, base[:2], t):
                out.append(Violation(i, "between-knots", f"collision at t={t:.3f}"))
    return out


@dataclass
class Metrics:
    path_length: float
    duration: float
    average_speed: float
    bbox: tuple[float, float, float, float]
    zero_velocity_steps: int
    max_abs_omega: float

    @property
    def extent(self) -> tuple[float, float]:
        return (self.bbox[1] - self.bbox[0], self.bbox[3] - self.bbox[2])


def metrics(traj, spec: GridSpec | None = None) -> Metrics:
    """Summary of a grid trajectory (list of events, needs ``spec``) or a dense one."""
    if isinstance(traj, DenseTrajectory):
        x, y, t = traj.x, traj.y, traj.t
        steps = list(zip(np.diff(x), np.diff(y), np.diff(np.unwrap(traj.phi))))
        om = float(np.max(np.abs(traj.omega))) if len(traj) else 0.0
    else:
        if not traj:
            raise ValueError("empty trajectory")
        if spec is None:
            raise ValueError("grid trajectories need their GridSpec")
        x = np.array([e.x for e in traj])
        y = np.array([e.y for e in traj])
        t = np.array([e.t for e in traj])
        us = [control_between(a, b, spec) for a, b in zip(traj, traj[1:])]
        steps = [(u.kx * spec.dx, u.ky * spec.dy, u.kphi * spec.dphi) for u in us]
        om = max((abs(u.kphi) * spec.domega for u in us), default=0.0)
    if len(x) == 0:
        raise ValueError("empty trajectory")
    length = float(np.sum(np.hypot(np.diff(x), np.diff(y))))
    duration = float(t[-1] - t[0])
    zero = sum(1 for dx, dy, dp in steps if dx == 0 and dy == 0 and dp == 0)
    return Metrics(length, duration, length / duration if duration > 0 else 0.0,
                   (float(x.min()), float(x.max()), float(y.min()), float(y.max())),
                   zero, om)
