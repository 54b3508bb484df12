"""Straight-line print with the base restricted to x, then x and y, then full (x, y, phi)."""

import argparse
import json
from pathlib import Path

from basetraj.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/line")
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    rows = {}
    for dof in ("x", "xy", "xyp"):
        cfg = out / f"line_{dof}.json"
        cfg.write_text(json.dumps({"task": {"shape": "line"}, "base_dof": dof}))
        d = out / dof
        if main(["plan", str(cfg), "--svg", "--out", str(d)]) != 0:
            raise SystemExit(f"plan failed for base_dof={dof}")
        rows[dof] = json.loads((d / "plan.json").read_text())["J"]
    # more freedom can only lower the optimum
    print(json.dumps(rows, indent=2))
