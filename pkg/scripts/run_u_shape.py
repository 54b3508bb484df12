"""Plan the 5-layer U-shape task with both planners and write the CLI artifacts."""

import argparse
import json
from pathlib import Path

from basetraj.cli import main


def run(out: Path) -> dict:
    summary = {}
    for planner in ("mobocontp", "dijkstra"):
        d = out / planner
        code = main(["plan", "--task", "u_shape", "--planner", planner, "--rate", "2",
                     "--joints", "--svg", "--out", str(d)])
        if code != 0:
            raise SystemExit(code)
        meta = json.loads((d / "plan.json").read_text())
        summary[planner] = {k: meta[k] for k in ("J", "planning_time_s", "build_time_s",
                                                  "relaxations", "n_stages")}
    return summary


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/u_shape")
    out = Path(ap.parse_args().out)
    s = run(out)
    (out / "summary.json").write_text(json.dumps(s, indent=2) + "\n")
    print(json.dumps(s, indent=2))
