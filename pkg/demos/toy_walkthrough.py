"""
Four nodes, one destination
===========================

v1 holds {A,B,C}, v2 and v3 both hold {D,E,F}, and everything has to end
up on v0. One tuple crosses a link per time unit.
"""

import numpy as np

from aggsched import AggregationState, BandwidthMatrix, ExactState, plan_cost, plan_grasp, plan_repartition
from aggsched.grasp import cost_matrix
from aggsched.oracle import optimal_tree_plan

A, B, C, D, E, F = range(1, 7)
state = AggregationState.all_to_one([[], [A, B, C], [D, E, F], [D, E, F]], destination=0, tuple_width=1)
bw = BandwidthMatrix.uniform(4, 1.0)

# shipping everything straight to v0 serialises on v0's downlink
direct = plan_repartition(state)
print("repartition:", direct.phases)
print("  cost", plan_cost(state, direct, bw).total)

# first-phase cost matrix; rows are senders, columns receivers
np.set_printoptions(precision=1)
print(cost_matrix(ExactState(state.data), bw, state.mapping, 1.0)[0])

# v2 and v3 are identical, so merging them first halves what v0 has to take in
p = plan_grasp(state, bw, mode="exact")
for i, phase in enumerate(p.phases, 1):
    print(f"phase {i}:", ", ".join(str(t) for t in phase))
print("  cost", plan_cost(state, p, bw).total)

# the same plan from 100 minhash functions instead of exact counts
print("sketch plan equal:", plan_grasp(state, bw, seed=3).phases == p.phases)

tree, best = optimal_tree_plan(state, bw)
print("best possible:", best, "via parents", tree.parent)
