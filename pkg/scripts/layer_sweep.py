"""Planning time against task length: layer sweeps on the U-shape and the NTU stand-in."""

import argparse
import json
from pathlib import Path

from basetraj.benchmark import summarize, sweep, write_csv
from basetraj.config import ExperimentConfig, override

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/layers")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--ntu", action="store_true", help="also run the 8..14 layer NTU sweep")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = [("u_shape", [2, 4, 6, 8])]
    if args.ntu:
        runs.append(("ntu", [8, 10, 12, 14]))
    report = {}
    for shape, layers in runs:
        cfg = override(ExperimentConfig(), **{"task.shape": shape})
        cells = sweep(cfg, "layers", layers, ("mobocontp", "dijkstra"), args.repeats,
                      log=lambda c: print(f"{shape} {c.param} {c.planner} {c.wall_s:.3f}s"))
        write_csv(out / f"layers_{shape}.csv", cells)
        report[shape] = summarize("layers", cells)
    (out / "fits.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
