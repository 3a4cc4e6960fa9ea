"""
Non-uniform bandwidth
=====================

56 fragments on 4 machines: fragments on the same machine talk 8x faster
than across machines. We also show what a noisy bandwidth probe feeds the
planner.
"""

import numpy as np

from aggsched import NoiseSpec, make_uniform_star, pairwise_bandwidth, simulate_benchmark
from aggsched.experiment import ExperimentConfig, run_experiment

top = make_uniform_star(56, 118e6)
bw = pairwise_bandwidth(top, [v // 14 for v in range(56)], intra_factor=8)
print("distinct rates:", np.unique(bw.bw[np.isfinite(bw.bw)]))

probe = simulate_benchmark(bw, NoiseSpec("per_entry", 30), seed=1)
ratio = probe.bw[np.isfinite(probe.bw)] / bw.bw[np.isfinite(bw.bw)]
print(f"probe / truth ranges over [{ratio.min():.2f}, {ratio.max():.2f}]")

cfg = ExperimentConfig.from_dict({
    "seed": 7,
    "planners": ["grasp", "preagg_repart", "loom"],
    "workload": {"kind": "range_overlap", "node_count": 56, "tuples_per_node": 14000, "jaccard": 1.0},
    "topology": {"link_bw": 118e6, "group_size": 14, "intra_factor": 8},
})
report = run_experiment(cfg)
for r in report.results:
    print(f"{r.planner:>14}: {r.realized_cost * 1e3:7.2f} ms over {r.phases} phases")

# GRASP keeps early phases on the fast local links
grasp = report.by_planner()["grasp"]
local = [sum(t.source // 14 == t.target // 14 for t in ph) / len(ph) for ph in grasp.plan.phases]
print("share of intra-machine transfers per phase:", [round(x, 2) for x in local])
