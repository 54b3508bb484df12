"""Parameter sweeps, timing, and the fits used to summarise them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import ExperimentConfig, build_problem, override
from .planner import PLANNERS
from .spacetime import Infeasible

SWEEP_KEYS = {"dv": "grid.dv", "dt": "grid.dt", "layers": "task.layers"}
CSV_COLUMNS = ("param", "planner", "wall_s", "relaxations", "cost", "feasible")


@dataclass
class Cell:
    param: float
    planner: str
    wall_s: float
    relaxations: int
    cost: float
    feasible: bool
    build_s: float = math.nan
    error: str = ""

    def row(self) -> list[str]:
        return [repr(self.param), self.planner, repr(self.wall_s), str(self.relaxations),
                repr(self.cost), str(self.feasible).lower()]


def run_planner(name: str, problem, repeats: int = 1, workers: int = 1):
    """Best-of-``repeats`` wall time; the returned result is the last run."""
    fn = PLANNERS[name]
    kw = {"workers": workers} if name == "mobocontp" else {}
    best = math.inf
    res = None
    for _ in range(repeats):
        res = fn(problem.xa, problem.ua, problem.spec, **kw)
        best = min(best, res.wall_time)
    return res, best


def sweep(cfg: ExperimentConfig, key: str, values: Iterable, planners=("mobocontp", "dijkstra"),
          repeats: int = 1, log=None) -> list[Cell]:
    """Plan every (value, planner) cell; failures are recorded and the sweep continues."""
    dotted = SWEEP_KEYS.get(key, key)
    cells = []
    for v in values:
        c = override(cfg, **{dotted: v})
        try:
            pb = build_problem(c)
        except (Infeasible, ValueError) as exc:
            for name in planners:
                cells.append(Cell(v, name, math.nan, 0, math.inf, False, error=str(exc)))
                if log:
                    log(cells[-1])
            continue
        for name in planners:
            try:
                res, wall = run_planner(name, pb, repeats, cfg.workers)
                cells.append(Cell(v, name, wall, res.relaxations, res.cost, True, pb.build_time))
            except (Infeasible, ValueError) as exc:
                cells.append(Cell(v, name, math.nan, 0, math.inf, False, pb.build_time, str(exc)))
            if log:
                log(cells[-1])
    return cells


def write_csv(path, cells: list[Cell]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in cells:
            w.writerow(c.row())


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def linear_fit(x, y) -> tuple[float, float, float]:
    """Slope, intercept, and coefficient of determination of a straight-line fit."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    a, b = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (a * x + b)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def summarize(key: str, cells: list[Cell]) -> dict:
    """Per-planner fits: log-log slopes against 1/param for step sizes, linear for layers."""
    out = {}
    for name in sorted({c.planner for c in cells}):
        ok = [c for c in cells if c.planner == name and c.feasible]
        if len(ok) < 2:
            out[name] = {"cells": len(ok)}
            continue
        p = np.array([c.param for c in ok], dtype=float)
        wall = np.array([c.wall_s for c in ok])
        rel = np.array([c.relaxations for c in ok], dtype=float)
        if key == "layers":
            a, b, r2 = linear_fit(p, wall)
            out[name] = {"cells": len(ok), "slope": a, "intercept": b, "r2": r2}
        else:
            out[name] = {"cells": len(ok), "time_slope": loglog_slope(1 / p, wall),
                         "relax_slope": loglog_slope(1 / p, rel)}
    return out
