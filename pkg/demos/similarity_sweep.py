"""
Similarity sweep
================

Eight fragments of 64k keys each, all sent to fragment 0. Adjacent
fragments share a growing slice of their key range. The more they share,
the more GRASP gains by merging before the destination.
"""

from pathlib import Path

import yaml

from aggsched.experiment import run_sweep

cfg = yaml.safe_load((Path(__file__).parent.parent / "configs" / "similarity.yaml").read_text())
rows, _ = run_sweep(cfg, "workload.jaccard", [0, 0.25, 0.5, 0.75, 1])

print(f"{'J':>5} {'planner':>14} {'realized':>10} {'phases':>6} {'dest tuples':>11} {'speedup':>7}")
for _, J, name, _, real, phases, dest, speed in rows:
    print(f"{J:>5} {name:>14} {real:>10} {phases:>6} {dest:>11} {speed:>7}")
