"""
Skewed all-to-all aggregation
=============================

Each fragment is the destination of a key range. When one range is much
larger (imbalance) or more popular (zipf), repartitioning jams that
destination's downlink, while GRASP can pre-merge elsewhere.
"""

from pathlib import Path

import yaml

from aggsched.experiment import run_sweep
from aggsched.workloads import imbalance_split

configs = Path(__file__).parent.parent / "configs"

imb = yaml.safe_load((configs / "imbalance.yaml").read_text())
rows, _ = run_sweep(imb, "workload.fragment0_units", [16, 30, 44, 58, 72])
for _, units, name, _, real, phases, _, speed in rows:
    if name == "grasp":
        m, level = imbalance_split(128, units, 8)
        print(f"l = {level:4.2f}: grasp {real} s, {speed}x vs preagg+repart")

# feed the planner bandwidths that are 0/20/50% too low
zipf = yaml.safe_load((configs / "zipf.yaml").read_text())
rows, _ = run_sweep(zipf, "noise.percent", [0, 20, 50])
for _, pct, name, planned, real, *_ in rows:
    if name == "grasp":
        print(f"{pct:>3}% underestimate: planned {planned}, realized {real}")
