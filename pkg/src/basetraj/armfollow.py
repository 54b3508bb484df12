"""Joint trajectories for the arm riding on a planned base trajectory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .reachability import DOWN, ArmModel, arm_ik, forward_kinematics
from .spacetime import Event
from .world import EEPose, EETrajectory

DEFAULT_JUMP_THRESHOLD = 0.35


class NoSolution(ValueError):
    def __init__(self, message: str, stage: int | None = None):
        self.stage = stage
        super().__init__(message if stage is None else f"stage {stage}: {message}")


def world_to_base(base, p) -> np.ndarray:
    x, y, phi = base
    c, s = math.cos(phi), math.sin(phi)
    dx, dy = p[0] - x, p[1] - y
    return np.array([c * dx + s * dy, -s * dx + c * dy, p[2]])


def solve_arm_ik(arm: ArmModel, base, ee) -> list[tuple[float, ...]]:
    """Analytic IK for a world-frame nozzle pose seen from base pose ``(x, y, phi)``."""
    if isinstance(ee, EEPose):
        p, axis = ee.position, ee.axis
    else:
        p, axis = ee, DOWN
    phi = base[2]
    c, s = math.cos(phi), math.sin(phi)
    a = np.asarray(axis, dtype=float)
    a_base = np.array([c * a[0] + s * a[1], -s * a[0] + c * a[1], a[2]])
    sols = arm_ik(arm, world_to_base(base, p), a_base)
    if not sols:
        raise NoSolution(f"no in-limit IK solution for ee {tuple(p)} from base {tuple(base)}")
    return sols


def _jdist(a, b) -> float:
    return max(abs(math.remainder(x - y, 2 * math.pi)) for x, y in zip(a, b))


@dataclass
class JointTrajectory:
    t: np.ndarray
    q: np.ndarray                      # (N+1, n_joints)
    max_jump: np.ndarray               # per joint, over consecutive stages
    flagged: list[int] = field(default_factory=list)   # stages i with a jump i -> i+1 above threshold
    threshold: float = DEFAULT_JUMP_THRESHOLD

    @property
    def continuous(self) -> bool:
        return not self.flagged

    def to_csv(self, path) -> None:
        n = self.q.shape[1]
        with open(path, "w") as fh:
            fh.write("t," + ",".join(f"q{k + 1}" for k in range(n)) + "\n")
            for t, row in zip(self.t.tolist(), self.q.tolist()):
                fh.write(",".join(repr(v) for v in [t, *row]) + "\n")


def solve_arm_trajectory(base_traj: Sequence[Event], ee: EETrajectory, arm: ArmModel,
                         threshold: float = DEFAULT_JUMP_THRESHOLD) -> JointTrajectory:
    """Greedy chaining: at every stage keep the solution nearest the previous one.

    The first stage takes the first solution in :func:`arm_ik` order.  Joint
    distance is the largest wrapped per-joint difference.
    """
    if len(base_traj) != len(ee.poses):
        raise ValueError(f"{len(base_traj)} base events for {len(ee.poses)} ee poses")
    qs = []
    for i, (e, pose) in enumerate(zip(base_traj, ee.poses)):
        try:
            sols = solve_arm_ik(arm, (e.x, e.y, e.phi), pose)
        except NoSolution as exc:
            raise NoSolution(str(exc), stage=i) from None
        if qs:
            prev = qs[-1]
            sols = sorted(sols, key=lambda q: _jdist(q, prev))
        qs.append(sols[0])
    q = np.array(qs, dtype=float)
    if len(q) > 1:
        jumps = np.abs(np.remainder(np.diff(q, axis=0) + math.pi, 2 * math.pi) - math.pi)
        max_jump = jumps.max(axis=0)
        flagged = [int(i) for i in np.nonzero(jumps.max(axis=1) > threshold)[0]]
    else:
        max_jump = np.zeros(q.shape[1])
        flagged = []
    t = np.array([e.t for e in base_traj])
    return JointTrajectory(t, q, max_jump, flagged, threshold)


def fk_world(arm: ArmModel, base, q) -> tuple[np.ndarray, np.ndarray]:
    """Nozzle position and tool axis in the world frame."""
    p, a = forward_kinematics(arm, q)
    x, y, phi = base
    c, s = math.cos(phi), math.sin(phi)
    pw = np.array([x + c * p[0] - s * p[1], y + s * p[0] + c * p[1], p[2]])
    aw = np.array([c * a[0] - s * a[1], s * a[0] + c * a[1], a[2]])
    return pw, aw
