"""Command line: ``basetraj {plan,validate,benchmark,render}``.

Exit codes: 0 success, 1 configuration error, 2 infeasible task.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bm
from .armfollow import NoSolution, solve_arm_trajectory
from .config import (ConfigError, ExperimentConfig, build_problem, config_from_dict,
                     load_config, override, parse_angle)
from .planner import PLANNERS, PlanResult, _suffix_costs
from .postprocess import interpolate, inter_knot_warnings, metrics, validate_plan
from .render import plan_view_svg, read_trajectory_csv, spacetime_svg
from .spacetime import GridError, InadmissibleStep, Infeasible, total_cost

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2
SHAPES = ("u_shape", "ntu", "line")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="JSON experiment config")
    p.add_argument("--task", help="path file, or one of: " + ", ".join(SHAPES))
    p.add_argument("--layers", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--dv", type=float)
    p.add_argument("--domega", help="rad/s; accepts e.g. pi/30")
    p.add_argument("--vmax", type=float)
    p.add_argument("--omegamax", help="rad/s; accepts e.g. pi/10")
    p.add_argument("--weight", type=float)
    p.add_argument("--planner", choices=sorted(PLANNERS))
    p.add_argument("--rate", type=float, help="dense output rate in Hz")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="basetraj", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("plan", help="plan a base trajectory")
    _common(p)
    p.add_argument("--joints", action="store_true", help="also write the arm joint CSV")
    v = sub.add_parser("validate", help="re-check a written trajectory")
    _common(v)
    v.add_argument("--trajectory", help="trajectory CSV (default OUT/trajectory.csv)")
    b = sub.add_parser("benchmark", help="sweep a parameter and time both planners")
    _common(b)
    b.add_argument("--sweep", choices=sorted(bm.SWEEP_KEYS), required=True)
    b.add_argument("--values", required=True, help="comma separated values")
    b.add_argument("--planners", default="mobocontp,dijkstra")
    b.add_argument("--repeats", type=int, default=1)
    r = sub.add_parser("render", help="draw SVGs for a written trajectory")
    _common(r)
    r.add_argument("--trajectory", help="trajectory CSV (default OUT/trajectory.csv)")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    kw = {}
    if args.task:
        if args.task in SHAPES:
            kw["task.shape"] = args.task
        else:
            kw["task.shape"] = "file"
            kw["task.path"] = args.task
    for flag, key, conv in (("layers", "task.layers", int), ("dt", "grid.dt", float),
                            ("dv", "grid.dv", float), ("domega", "grid.domega", parse_angle),
                            ("vmax", "grid.v_max", float), ("omegamax", "grid.omega_max", parse_angle),
                            ("weight", "grid.weight", float), ("planner", "planner", str),
                            ("rate", "rate", float), ("workers", "workers", int),
                            ("seed", "seed", int)):
        val = getattr(args, flag, None)
        if val is not None:
            kw[key] = conv(val)
    cfg = override(cfg, **kw)
    if cfg.planner not in PLANNERS:
        raise ConfigError(f"unknown planner {cfg.planner!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def write_trajectory_csv(path, events) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,y,phi\n")
        for e in events:
            fh.write(f"{e.t!r},{e.x!r},{e.y!r},{e.phi!r}\n")


def write_dense_csv(path, dense) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,y,phi,vx,vy,omega\n")
        cols = (dense.t, dense.x, dense.y, dense.phi, dense.vx, dense.vy, dense.omega)
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(repr(v) for v in row) + "\n")


def _write_svgs(out: Path, pb, xy_t, base_pose0) -> None:
    t, x, y = xy_t
    (out / "spacetime.svg").write_text(spacetime_svg(t, x, y, pb.ee.positions[:, :2]))
    region = pb.regions[pb.ee.poses[0].position[2]]
    (out / "plan_view.svg").write_text(
        plan_view_svg(np.stack([x, y], 1), pb.path, pb.world.obstacles, region, base_pose0))


def cmd_plan(args) -> int:
    cfg = resolve_config(args)
    random.seed(cfg.seed)
    np.random.seed(cfg.seed)
    pb = build_problem(cfg)
    fn = PLANNERS[cfg.planner]
    kw = {"workers": cfg.workers} if cfg.planner == "mobocontp" else {}
    res = fn(pb.xa, pb.ua, pb.spec, **kw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", res.events)
    report = validate_plan(res, pb.xa, pb.ua)
    warn = inter_knot_warnings(res, pb.ee, lambda i: pb.regions[pb.ee.poses[i].position[2]], pb.world)
    m = metrics(res.events, pb.spec)
    meta = {
        "planner": res.planner,
        "J": res.cost,
        "n_stages": pb.spec.n_stages,
        "stage_sizes": res.stage_sizes,
        "feasible_sizes": res.feasible_sizes,
        "relaxations": res.relaxations,
        "planning_time_s": res.wall_time,
        "build_time_s": pb.build_time,
        "grid": {"dt": pb.spec.dt, "dv": pb.spec.dv_x, "domega": pb.spec.domega,
                 "v_max": pb.spec.v_max, "omega_max": pb.spec.omega_max, "w": pb.spec.w,
                 "origin": list(pb.spec.origin), "n_phi": pb.spec.n_phi},
        "irregular_end": bool(pb.ee.irregular_end),
        "violations": [vars(v) for v in report.violations],
        "between_knot_warnings": len(warn),
        "metrics": {"path_length": m.path_length, "average_speed": m.average_speed,
                    "bbox": list(m.bbox), "zero_velocity_steps": m.zero_velocity_steps,
                    "max_abs_omega": m.max_abs_omega},
    }
    if cfg.rate:
        write_dense_csv(out / "dense.csv", interpolate(res.events, pb.spec, cfg.rate))
    if getattr(args, "joints", False):
        try:
            jt = solve_arm_trajectory(res.events, pb.ee, cfg.arm)
        except NoSolution as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        jt.to_csv(out / "joints.csv")
        meta["joints"] = {"max_jump": jt.max_jump.tolist(), "flagged_stages": jt.flagged}
    if args.svg:
        t = np.array([e.t for e in res.events])
        x = np.array([e.x for e in res.events])
        y = np.array([e.y for e in res.events])
        e0 = res.events[0]
        _write_svgs(out, pb, (t, x, y), (e0.x, e0.y, e0.phi))
    (out / "plan.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"J={res.cost!r} stages={pb.spec.n_stages} plan={res.wall_time:.3f}s "
          f"build={pb.build_time:.3f}s violations={len(report.violations)}")
    return EXIT_OK


def _load_events(path, spec):
    rows = read_trajectory_csv(path)
    events, off = [], []
    for i, (t, x, y, phi) in enumerate(rows.tolist()):
        e = spec.event(i, *spec.snap(x, y, phi))
        if (e.x, e.y, e.phi) != (x, y, phi) or abs(t - e.t) > 1e-9:
            off.append(i)
        events.append(e)
    return events, off


def cmd_validate(args) -> int:
    cfg = resolve_config(args)
    pb = build_problem(cfg)
    path = args.trajectory or str(Path(args.out) / "trajectory.csv")
    events, off = _load_events(path, pb.spec)
    try:
        J = total_cost(events, pb.spec)
    except InadmissibleStep:
        J = math.nan
    plan = PlanResult(events, J, _suffix_costs(events, pb.spec), pb.xa.stage_sizes,
                      [], 0, 0.0, "file", pb.spec)
    meta = Path(path).with_name("plan.json")
    if meta.exists():
        plan.cost = json.loads(meta.read_text())["J"]
    rep = validate_plan(plan, pb.xa, pb.ua)
    for i in off:
        print(f"stage {i}: off-grid: row does not match a grid node")
    for v in rep.violations:
        print(f"stage {v.stage}: {v.kind}: {v.detail}")
    n = len(rep.violations) + len(off)
    print(f"{n} violation(s)")
    return EXIT_OK if n == 0 else EXIT_INFEASIBLE


def cmd_benchmark(args) -> int:
    cfg = resolve_config(args)
    conv = int if args.sweep == "layers" else float
    try:
        values = [conv(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {args.values!r}") from None
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    for p in planners:
        if p not in PLANNERS:
            raise ConfigError(f"unknown planner {p!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def log(c):
        status = "ok" if c.feasible else f"failed ({c.error})"
        print(f"{args.sweep}={c.param} {c.planner}: wall={c.wall_s:.4f}s "
              f"relax={c.relaxations} J={c.cost!r} {status}")

    cells = bm.sweep(cfg, args.sweep, values, planners, args.repeats, log)
    bm.write_csv(out / f"benchmark_{args.sweep}.csv", cells)
    summary = bm.summarize(args.sweep, cells)
    (out / f"benchmark_{args.sweep}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, s in summary.items():
        print(name, " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in s.items()))
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = resolve_config(args)
    path = Path(args.trajectory or Path(args.out) / "trajectory.csv")
    if not path.exists():
        raise ConfigError(f"missing trajectory file {path}")
    rows = read_trajectory_csv(path)
    pb = build_problem(cfg, with_spacetime=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_svgs(out, pb, (rows[:, 0], rows[:, 1], rows[:, 2]), tuple(rows[0, 1:4]))
    print(f"wrote {out / 'spacetime.svg'} and {out / 'plan_view.svg'}")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "validate": cmd_validate, "benchmark": cmd_benchmark,
            "render": cmd_render}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except Infeasible as exc:
        print(f"infeasible: first empty stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
