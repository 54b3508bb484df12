"""End-to-end acceptance checks; each prints one PASS/FAIL line in the summary."""

import math
import time

import numpy as np
import pytest

from basetraj import tasks
from basetraj.armfollow import NoSolution, solve_arm_ik
from basetraj.benchmark import linear_fit, loglog_slope, sweep
from basetraj.cli import main
from basetraj.config import ExperimentConfig, build_problem, override
from basetraj.planner import (OracleGuardExceeded, brute_force_plan, dijkstra_baseline,
                              mobocontp)
from basetraj.postprocess import validate_plan
from basetraj.reachability import is_reachable
from basetraj.spacetime import Infeasible

from instances import random_instance

U_SHAPE = override(ExperimentConfig(), **{"task.shape": "u_shape"})
STEP_CFG = override(U_SHAPE, **{"grid.snap_domega": True})


def plan_all(xa, ua, spec):
    """Run the three planners; None marks an infeasible verdict, 'guard' a skipped oracle."""
    out = {}
    for name, fn in (("mobocontp", mobocontp), ("dijkstra", dijkstra_baseline),
                     ("brute", brute_force_plan)):
        try:
            out[name] = fn(xa, ua, spec)
        except OracleGuardExceeded:
            out[name] = "guard"
        except Infeasible:
            out[name] = None
    return out


@pytest.fixture(scope="module")
def oracle_runs():
    rng = np.random.default_rng(20240501)
    runs = []
    t0 = time.perf_counter()
    for k in range(240):
        large = k % 4 == 3
        spec, ua, xa = random_instance(rng, large=large)
        runs.append((xa, ua, plan_all(xa, ua, spec)))
    return runs, time.perf_counter() - t0


@pytest.mark.acceptance(1, "optimality oracle equivalence")
def test_oracle_equivalence(oracle_runs, report):
    runs, wall = oracle_runs
    brute_checked = infeasible = 0
    worst = 0.0
    for xa, _, res in runs:
        m, d, b = res["mobocontp"], res["dijkstra"], res["brute"]
        assert (m is None) == (d is None)
        if b != "guard":
            brute_checked += 1
            assert (m is None) == (b is None)
        if m is None:
            infeasible += 1
            continue
        for other in (d, b):
            if other in (None, "guard"):
                continue
            rel = abs(m.cost - other.cost) / max(1.0, abs(other.cost))
            worst = max(worst, rel)
            assert m.cost == pytest.approx(other.cost, rel=1e-9, abs=1e-12)
    assert len(runs) >= 200 and wall < 120
    report(f"{len(runs)} instances ({brute_checked} with brute force, {infeasible} infeasible), "
           f"max rel diff {worst:.1e}, {wall:.1f} s")


@pytest.mark.acceptance(2, "Bellman and admissibility audit")
def test_audit_random_plans(oracle_runs, report):
    runs, _ = oracle_runs
    n = 0
    for xa, ua, res in runs:
        for r in res.values():
            if r in (None, "guard"):
                continue
            rep = validate_plan(r, xa, ua)
            assert rep.ok, rep.violations
            n += 1
    report(f"{n} random-instance plans clean")


@pytest.mark.acceptance(2, "Bellman and admissibility audit")
@pytest.mark.parametrize("shape", ["u_shape", "line"])
def test_audit_task_plans(shape, report):
    pb = build_problem(override(U_SHAPE, **{"task.shape": shape}))
    for fn in (mobocontp, dijkstra_baseline):
        rep = validate_plan(fn(pb.xa, pb.ua, pb.spec), pb.xa, pb.ua)
        assert rep.ok, rep.violations
    report(f"{shape} plans clean")


@pytest.mark.acceptance(3, "region soundness")
def test_region_soundness(report):
    pb = build_problem(U_SHAPE, with_spacetime=False)
    rng = np.random.default_rng(7)
    checked = failures = 0
    heights = sorted(pb.regions)
    while checked < 1000:
        reg = pb.regions[heights[rng.integers(len(heights))]]
        base = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-math.pi, math.pi))
        # bias samples toward the shell so most pass the region test
        r = rng.uniform(0.0, 1.2)
        a = base[2] + rng.uniform(-math.pi / 2, math.pi / 2)
        z = reg.h + rng.uniform(-reg.delta / 2, reg.delta / 2)
        ee = (base[0] + r * math.cos(a), base[1] + r * math.sin(a), z)
        if not is_reachable(reg, base, ee):
            continue
        checked += 1
        try:
            solve_arm_ik(pb.config.arm, base, ee)
        except NoSolution:
            failures += 1
    assert failures == 0
    report(f"{checked} reachable pairs, {failures} IK failures")


@pytest.mark.acceptance(4, "U-shape task plans within 60 s")
def test_u_shape_feasible(report):
    path = tasks.gen_layers(tasks.u_shape_outline(0.05), 5, 0.01)
    assert tasks.path_length(tasks.u_shape_outline(0.05)) == pytest.approx(3.97)
    pb = build_problem(U_SHAPE)
    res = mobocontp(pb.xa, pb.ua, pb.spec)
    assert np.array_equal(pb.path, path)
    assert res.wall_time <= 60 and validate_plan(res, pb.xa, pb.ua).ok
    report(f"{pb.spec.n_stages} stages, plan {res.wall_time:.2f} s, build {pb.build_time:.2f} s, "
           f"J={res.cost:.4f}")


@pytest.mark.acceptance(5, "linear task-length scaling")
def test_layer_scaling(report):
    cells = sweep(U_SHAPE, "layers", [2, 4, 6, 8], ("mobocontp", "dijkstra"), repeats=5)
    by = {(c.param, c.planner): c for c in cells}
    assert all(c.feasible for c in cells)
    m = [by[(n, "mobocontp")].wall_s for n in (2, 4, 6, 8)]
    d = [by[(n, "dijkstra")].wall_s for n in (2, 4, 6, 8)]
    _, _, r2 = linear_fit([2, 4, 6, 8], m)
    _, _, r2_rel = linear_fit([2, 4, 6, 8], [by[(n, "mobocontp")].relaxations for n in (2, 4, 6, 8)])
    report(f"MoboConTP R2={r2:.3f} (relaxations R2={r2_rel:.3f}), "
           f"wall ms {[round(v * 1e3) for v in m]} vs dijkstra {[round(v * 1e3) for v in d]}")
    assert r2 >= 0.95
    assert all(a <= b for a, b in zip(m, d))


@pytest.mark.acceptance(6, "step-size scaling")
def test_dv_scaling(report):
    vals = [0.02, 0.025, 0.03, 0.04, 0.05]
    cells = sweep(STEP_CFG, "dv", vals, ("mobocontp",))
    assert all(c.feasible for c in cells)
    inv = [1 / v for v in vals]
    s_rel = loglog_slope(inv, [c.relaxations for c in cells])
    s_wall = loglog_slope(inv, [c.wall_s for c in cells])
    report(f"dv slope relaxations {s_rel:.2f} (wall {s_wall:.2f}, published 3.9)")
    assert 3.0 <= s_rel <= 5.0


@pytest.mark.acceptance(6, "step-size scaling")
def test_dt_scaling(report):
    vals = [1.6, 1.8, 2.0, 2.4, 3.0]
    cells = sweep(STEP_CFG, "dt", vals, ("mobocontp",))
    assert all(c.feasible for c in cells)
    inv = [1 / v for v in vals]
    s_rel = loglog_slope(inv, [c.relaxations for c in cells])
    s_wall = loglog_slope(inv, [c.wall_s for c in cells])
    report(f"dt slope relaxations {s_rel:.2f} (wall {s_wall:.2f}, published 6.0)")
    assert 5.0 <= s_rel <= 7.0


@pytest.mark.acceptance(7, "stationary optimum gives J = 0")
def test_stationary_random(report):
    rng = np.random.default_rng(99)
    n = 0
    for k in range(60):
        spec, ua, xa = random_instance(rng, large=k % 3 == 2, stationary=True)
        for fn in (mobocontp, dijkstra_baseline):
            assert fn(xa, ua, spec).cost == 0.0
        n += 1
    report(f"{n} planted instances exact zero")


@pytest.mark.acceptance(7, "stationary optimum gives J = 0")
def test_stationary_short_print(tmp_path, report):
    tasks.save_path_file(tmp_path / "p.txt", tasks.gen_line(0.4, 0.05))
    cfg = override(STEP_CFG, **{"task.shape": "file", "task.path": str(tmp_path / "p.txt"),
                                "grid.dt": 0.5})
    pb = build_problem(cfg)
    res = mobocontp(pb.xa, pb.ua, pb.spec)
    assert res.cost == 0.0
    assert len({e.index for e in res.events}) == 1 and pb.spec.n_stages >= 8
    report(f"0.4 m print over {pb.spec.n_stages} stages, base still")


@pytest.mark.acceptance(8, "determinism across runs and workers")
def test_determinism(tmp_path, report):
    outs = []
    for run, workers in enumerate([1, 1, 4, 4]):
        out = tmp_path / f"r{run}"
        assert main(["plan", "--task", "u_shape", "--seed", "3", "--workers", str(workers),
                     "--rate", "1", "--svg", "--out", str(out)]) == 0
        outs.append(out)
    files = ["trajectory.csv", "dense.csv", "spacetime.svg", "plan_view.svg"]
    for f in files:
        blobs = {(o / f).read_bytes() for o in outs}
        assert len(blobs) == 1, f
    report(f"{len(files)} artifacts identical over 4 runs (workers 1 and 4)")
