"""Minimum control-effort base trajectories for mobile manipulators that must
follow a time-parametrized end-effector path."""

from .planner import PLANNERS, PlanResult, brute_force_plan, dijkstra_baseline, mobocontp
from .spacetime import (AdmissibleControlSet, Control, Event, GridError, GridSpec, Infeasible,
                        build_control_set, step_cost, total_cost)
from .world import AdmissibleSpacetime, EmptyStage

__all__ = [
    "AdmissibleControlSet", "AdmissibleSpacetime", "Control", "EmptyStage", "Event",
    "GridError", "GridSpec", "Infeasible", "PLANNERS", "PlanResult", "brute_force_plan",
    "build_control_set", "dijkstra_baseline", "mobocontp", "step_cost", "total_cost",
]
