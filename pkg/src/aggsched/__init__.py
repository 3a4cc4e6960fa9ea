"""Distribution-aware aggregation scheduling: planners, cost model and simulator."""

from .baselines import LoomConfig, plan_loom, plan_repartition, preaggregate
from .grasp import plan_grasp
from .model import (
    AggregationPlan,
    AggregationState,
    PlanError,
    Transfer,
    apply_phase,
    is_complete,
    phase_cost,
    plan_cost,
    transfer_cost,
    validate_plan,
)
from .oracle import exact_union_card, optimal_tree_plan
from .sketch import ExactState, HashFamily, SketchState, est_jaccard, merge, signature
from .topology import (
    BandwidthMatrix,
    NoiseSpec,
    Topology,
    effective_bandwidth,
    make_uniform_star,
    pairwise_bandwidth,
    simulate_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "LoomConfig",
    "plan_loom",
    "plan_repartition",
    "preaggregate",
    "plan_grasp",
    "AggregationPlan",
    "AggregationState",
    "PlanError",
    "Transfer",
    "apply_phase",
    "is_complete",
    "phase_cost",
    "plan_cost",
    "transfer_cost",
    "validate_plan",
    "exact_union_card",
    "optimal_tree_plan",
    "ExactState",
    "HashFamily",
    "SketchState",
    "est_jaccard",
    "merge",
    "signature",
    "BandwidthMatrix",
    "NoiseSpec",
    "Topology",
    "effective_bandwidth",
    "make_uniform_star",
    "pairwise_bandwidth",
    "simulate_benchmark",
]
