"""Planning cost against grid resolution: sweeps of dv and dt on the U-shape task."""

import argparse
import json
from pathlib import Path

from basetraj.benchmark import summarize, sweep, write_csv
from basetraj.config import ExperimentConfig, override

SWEEPS = {"dv": [0.02, 0.025, 0.03, 0.04, 0.05], "dt": [1.6, 1.8, 2.0, 2.4, 3.0]}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/step_size")
    ap.add_argument("--planners", default="mobocontp")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # dt values other than 3 s need the heading step snapped so 2*pi closes
    cfg = override(ExperimentConfig(), **{"task.shape": "u_shape", "grid.snap_domega": True})
    report = {}
    for key, values in SWEEPS.items():
        cells = sweep(cfg, key, values, args.planners.split(","), args.repeats,
                      log=lambda c: print(f"{c.param} {c.planner} {c.wall_s:.3f}s {c.relaxations}"))
        write_csv(out / f"sweep_{key}.csv", cells)
        report[key] = summarize(key, cells)
    (out / "slopes.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
