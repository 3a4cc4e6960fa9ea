"""Brute-force ground truth for small all-to-one instances.

Every valid all-to-one plan is derived from a spanning tree rooted at the
destination (each node forwards exactly once, to its parent). The search
enumerates all such trees over the nodes that hold data. For each tree it
finds the cheapest phase schedule by dynamic programming over the set of
nodes that have already forwarded. A schedule must respect
children-before-parent order and allow at most one delivery per receiver per
phase. The minimum over trees is therefore the optimum over all valid plans.
Set arithmetic uses Python sets, independently of the numpy paths it checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .model import AggregationPlan, AggregationState, Transfer
from .topology import BandwidthMatrix

__all__ = ["TreePlan", "exact_union_card", "enumerate_trees", "schedule_tree", "optimal_tree_plan", "DEFAULT_NODE_LIMIT"]

DEFAULT_NODE_LIMIT = 6


def exact_union_card(a, b) -> int:
    return len({int(k) for k in a} | {int(k) for k in b})


@dataclass(frozen=True)
class TreePlan:
    parent: dict[int, int]
    root: int
    plan: AggregationPlan


def enumerate_trees(nodes: list[int], root: int):
    """Yield every spanning tree on ``nodes`` rooted at ``root`` as a parent map.

    Yields |nodes|**(|nodes| - 2) trees, in lexicographic order of the parent
    tuple taken over the sorted non-root nodes.
    """
    others = sorted(v for v in nodes if v != root)
    for choice in itertools.product(sorted(nodes), repeat=len(others)):
        parent = dict(zip(others, choice))
        if any(parent[v] == v for v in others):
            continue
        if all(_reaches_root(v, parent, root, len(nodes)) for v in others):
            yield parent


def _reaches_root(v, parent, root, limit):
    for _ in range(limit):
        if v == root:
            return True
        v = parent[v]
    return v == root


def schedule_tree(parent: dict[int, int], edge_cost: dict[int, float]):
    """Cheapest phase schedule for a fixed tree; returns (cost, phases)."""
    nodes = sorted(parent)
    index = {v: i for i, v in enumerate(nodes)}
    kids = {v: [c for c in nodes if parent[c] == v] for v in nodes}
    full = (1 << len(nodes)) - 1

    @lru_cache(maxsize=None)
    def best(sent: int):
        if sent == full:
            return 0.0, ()
        ready = [
            v for v in nodes
            if not sent >> index[v] & 1 and all(sent >> index[c] & 1 for c in kids[v])
        ]
        top = None
        # every non-empty subset of ready nodes with pairwise distinct parents
        for r in range(1, len(ready) + 1):
            for group in itertools.combinations(ready, r):
                if len({parent[v] for v in group}) < r:
                    continue
                mask = sent
                for v in group:
                    mask |= 1 << index[v]
                rest, tail = best(mask)
                cost = max(edge_cost[v] for v in group) + rest
                if top is None or cost < top[0]:
                    top = (cost, (group,) + tail)
        return top

    return best(0)


def optimal_tree_plan(state: AggregationState, bw: BandwidthMatrix, node_limit: int = DEFAULT_NODE_LIMIT):
    """Minimum-cost valid plan for a small single-partition all-to-one state.

    Returns ``(TreePlan, cost)``. Ties between trees go to the lexicographically
    smallest parent map.
    """
    if not state.is_all_to_one or state.partition_count != 1:
        raise ValueError("the oracle handles single-partition all-to-one instances only")
    if state.node_count > node_limit:
        raise ValueError(f"{state.node_count} nodes exceeds the oracle limit of {node_limit}")
    root = state.mapping[0]
    w = state.tuple_width
    keys = {v: {int(k) for k in state.data[v][0]} for v in range(state.node_count)}
    members = [v for v in range(state.node_count) if v == root or keys[v]]
    if len(members) == 1:
        return TreePlan({}, root, AggregationPlan([])), 0.0

    best = None
    for parent in enumerate_trees(members, root):
        sub = _subtree_keys(parent, keys, root)
        cost_of = {v: len(sub[v]) * w / bw.bw[v, parent[v]] for v in parent}
        cost, groups = schedule_tree(parent, cost_of)
        rank = (cost, tuple(parent[v] for v in sorted(parent)))
        if best is None or rank < best[0]:
            best = (rank, parent, groups)
    (cost, _), parent, groups = best
    phases = [tuple(Transfer(v, parent[v], 0) for v in g) for g in groups]
    return TreePlan(parent, root, AggregationPlan(phases)), float(cost)


def _subtree_keys(parent, keys, root):
    kids: dict[int, list[int]] = {}
    for c, p in parent.items():
        kids.setdefault(p, []).append(c)
    out: dict[int, set[int]] = {}

    def collect(v):
        acc = set(keys[v])
        for c in kids.get(v, ()):
            acc |= collect(c)
        out[v] = acc
        return acc

    collect(root)
    return out
