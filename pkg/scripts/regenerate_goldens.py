#!/usr/bin/env python3
"""Recreate the frozen artifacts under tests/golden/.

Run from the repository root after an intentional behavior change:

    python scripts/regenerate_goldens.py
"""

import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "tests"))

from funnelforge.config import load_config
from funnelforge.planner import rrt_baseline
from funnelforge.sdp import problem_to_json, solution_to_json, solve


def main():
    golden = REPO / "tests" / "golden"
    golden.mkdir(exist_ok=True)

    from test_sdp import trace_cap_problem

    p = trace_cap_problem()
    s = solve(p)
    (golden / "sdp_trace_cap.json").write_text(
        json.dumps({"problem": problem_to_json(p), "solution": solution_to_json(s)}, indent=2, sort_keys=True)
        + "\n"
    )

    bundle = load_config(REPO / "configs" / "paper_example.json")
    obstacles = bundle.workspace.others("a0", "a1")
    rng = np.random.default_rng(42)
    _, path = rrt_baseline(
        bundle.workspace.regions["a0"].centroid(),
        bundle.workspace.regions["a1"].centroid(),
        bundle.planner.delta,
        obstacles,
        rng,
        reach_radius=bundle.workspace.reach_radius,
    )
    (golden / "rrt_baseline_seed42.json").write_text(
        json.dumps({"path": [pt.tolist() for pt in path]}, indent=2) + "\n"
    )
    print(f"regenerated goldens in {golden}")


if __name__ == "__main__":
    main()
