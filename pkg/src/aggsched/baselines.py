"""Comparison planners: direct repartitioning and fixed fan-in aggregation trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AggregationPlan, AggregationState, Transfer

__all__ = ["LoomConfig", "preaggregate", "plan_repartition", "plan_loom", "auto_fanin", "loom_parents"]


def preaggregate(state: AggregationState) -> AggregationState:
    """Collapse each (node, partition) holding to its distinct keys."""
    data = tuple(tuple(np.unique(p) for p in row) for row in state.data)
    return AggregationState(data, state.mapping, state.tuple_width)


def plan_repartition(state: AggregationState) -> AggregationPlan:
    """Ship every holding straight to its partition's destination.

    Phases are filled greedily in (node, partition) order: a node sends at most
    one partition and a destination receives at most one transfer per phase.
    A node's next pending partition is tried first, so senders rotate through
    their partitions round-robin.
    """
    n, L = state.node_count, state.partition_count
    pending = {
        v: [l for l in range(L) if state.mapping[l] != v and state.size(v, l) > 0]
        for v in range(n)
    }
    phases = []
    while any(pending.values()):
        busy_recv: set[int] = set()
        phase = []
        for v in range(n):
            for l in pending[v]:
                dest = state.mapping[l]
                if dest not in busy_recv:
                    busy_recv.add(dest)
                    phase.append(Transfer(v, dest, l))
                    pending[v].remove(l)
                    break
        phases.append(tuple(phase))
    return AggregationPlan(phases)


def auto_fanin(input_tuples: float, result_tuples: float, node_count: int) -> int:
    """Stand-in fan-in rule driven by the reduction rate.

    With k data holders, k * result / input is 1 when all holders share the
    same keys and k when they are disjoint. Heavy combining favours deep
    binary trees; no combining favours a flat star.
    """
    if input_tuples <= 0 or result_tuples <= 0:
        raise ValueError("cardinalities must be positive")
    holders = node_count - 1
    if holders < 1:
        raise ValueError("need at least two nodes")
    raw = round(node_count * result_tuples / input_tuples)
    return int(min(max(2, raw), max(2, holders)))


@dataclass(frozen=True)
class LoomConfig:
    """``fanin`` is an integer >= 2 or ``'auto'``.

    ``input_tuples``/``result_tuples`` are the total leaf input and final
    result sizes consulted by the auto rule; when omitted they are taken from
    the state being planned (LOOM is given accurate sizes).
    """

    fanin: int | str = 5
    input_tuples: float | None = None
    result_tuples: float | None = None

    def __post_init__(self):
        if self.fanin != "auto" and (not isinstance(self.fanin, int) or self.fanin < 2):
            raise ValueError(f"fan-in must be an integer >= 2 or 'auto', got {self.fanin!r}")

    def resolve(self, state: AggregationState) -> int:
        if self.fanin != "auto":
            return int(self.fanin)
        total = self.input_tuples
        if total is None:
            total = float(state.sizes().sum())
        result = self.result_tuples
        if result is None:
            result = float(state.distinct_keys(0).size)
        return auto_fanin(total, result, state.node_count)


def loom_parents(members: list[int], root: int, fanin: int) -> dict[int, int]:
    """Balanced tree in level order: the i-th non-root member hangs below order[(i - 1) // fanin]."""
    order = [root] + [v for v in members if v != root]
    return {order[i]: order[(i - 1) // fanin] for i in range(1, len(order))}


def plan_loom(state: AggregationState, cfg: LoomConfig | None = None) -> AggregationPlan:
    """Fixed fan-in aggregation tree rooted at the destination.

    Only nodes holding data join the tree. A node forwards once all its
    children have delivered; a parent takes one child per phase, lowest index
    first.
    """
    cfg = cfg or LoomConfig()
    if not state.is_all_to_one:
        raise ValueError("LOOM plans only all-to-one aggregations")
    if state.partition_count != 1:
        raise ValueError("LOOM planner expects a single partition")
    root = state.mapping[0]
    fanin = cfg.resolve(state)
    members = [v for v in range(state.node_count) if v == root or state.size(v, 0) > 0]
    parent = loom_parents(members, root, fanin)
    children: dict[int, set[int]] = {v: set() for v in members}
    for c, p in parent.items():
        children[p].add(c)
    done: set[int] = set()
    phases = []
    while len(done) < len(parent):
        ready = sorted(v for v in parent if v not in done and children[v] <= done)
        taken: set[int] = set()
        phase = []
        for v in ready:
            p = parent[v]
            if p not in taken:
                taken.add(p)
                phase.append(Transfer(v, p, 0))
        done.update(tr.source for tr in phase)
        phases.append(tuple(phase))
    return AggregationPlan(phases)
