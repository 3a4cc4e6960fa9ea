"""Aggregation state, phase semantics, network cost accounting and plan checks.

A key array per (node, partition) is the ground truth. Arrays may contain
repeated keys (raw tuples before local aggregation); any node that receives
data aggregates it, so its holding collapses to distinct keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .topology import BandwidthMatrix

__all__ = [
    "Transfer",
    "AggregationPlan",
    "AggregationState",
    "PlanError",
    "PlanCost",
    "apply_phase",
    "is_complete",
    "transfer_cost",
    "phase_cost",
    "plan_cost",
    "validate_plan",
    "phase_violations",
]

_EMPTY = np.empty(0, dtype=np.uint64)
_EMPTY.setflags(write=False)


def _keys(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.uint64).ravel()
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


class PlanError(ValueError):
    """A phase or plan breaks the execution model."""


class Transfer(NamedTuple):
    source: int
    target: int
    partition: int = 0

    def __str__(self):
        return f"v{self.source}->v{self.target}[l{self.partition}]"


@dataclass
class AggregationPlan:
    phases: list[tuple[Transfer, ...]] = field(default_factory=list)
    # the planner's own per-phase cost belief, when it has one
    estimated_phase_costs: list[float] | None = None

    def __len__(self):
        return len(self.phases)

    def __iter__(self):
        return iter(self.phases)

    def transfers(self):
        for i, phase in enumerate(self.phases):
            for tr in phase:
                yield i, tr


@dataclass(frozen=True)
class AggregationState:
    """Data per (node, partition), the partition -> destination mapping and tuple width."""

    data: tuple[tuple[np.ndarray, ...], ...]
    mapping: tuple[int, ...]
    tuple_width: float = 1.0

    def __post_init__(self):
        data = tuple(tuple(_keys(p) for p in row) for row in self.data)
        if len(data) < 1:
            raise ValueError("state needs at least one node")
        parts = len(data[0])
        if parts < 1 or any(len(row) != parts for row in data):
            raise ValueError("every node must hold the same number of partitions (>= 1)")
        mapping = tuple(int(m) for m in self.mapping)
        if len(mapping) != parts:
            raise ValueError(f"mapping has {len(mapping)} entries for {parts} partitions")
        if any(not 0 <= m < len(data) for m in mapping):
            raise ValueError("mapping points outside the node range")
        if not self.tuple_width > 0:
            raise ValueError("tuple width must be positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def all_to_one(cls, node_data: Sequence, destination: int = 0, tuple_width: float = 1.0):
        return cls(tuple((d,) for d in node_data), (destination,), tuple_width)

    @property
    def node_count(self) -> int:
        return len(self.data)

    @property
    def partition_count(self) -> int:
        return len(self.mapping)

    @property
    def is_all_to_one(self) -> bool:
        return len(set(self.mapping)) == 1

    def size(self, v: int, l: int) -> int:
        return int(self.data[v][l].size)

    def sizes(self) -> np.ndarray:
        return np.array([[p.size for p in row] for row in self.data], dtype=np.int64)

    def distinct_keys(self, l: int) -> np.ndarray:
        parts = [row[l] for row in self.data]
        return np.unique(np.concatenate(parts)) if parts else _EMPTY


def transfer_cost(tuples: float, w: float, bw: float) -> float:
    """Time to push ``tuples`` tuples of ``w`` bytes over ``bw`` bytes per time unit."""
    if not bw > 0:
        raise ValueError(f"bandwidth must be positive, got {bw}")
    return tuples * w / bw


def phase_violations(state: AggregationState, phase: Sequence[Transfer]) -> list[str]:
    out = []
    senders: dict[int, Transfer] = {}
    receivers: dict[int, Transfer] = {}
    n, L = state.node_count, state.partition_count
    for tr in phase:
        s, t, l = tr
        if not (0 <= s < n and 0 <= t < n and 0 <= l < L):
            out.append(f"{tr}: node or partition out of range")
            continue
        if s == t:
            out.append(f"{tr}: node sends to itself")
        if s in senders:
            out.append(f"{tr}: v{s} already sends {senders[s]} in this phase")
        senders.setdefault(s, tr)
        if t in receivers:
            out.append(f"{tr}: v{t} already receives {receivers[t]} in this phase")
        receivers.setdefault(t, tr)
        if s == state.mapping[l]:
            out.append(f"{tr}: v{s} is the destination of partition {l} and must not send it")
        if state.size(s, l) == 0:
            out.append(f"{tr}: v{s} holds no data for partition {l}")
        if state.size(t, l) == 0 and t != state.mapping[l]:
            out.append(f"{tr}: v{t} holds no data for partition {l} and is not its destination")
    sent = {(tr.source, tr.partition) for tr in phase}
    for tr in phase:
        if (tr.target, tr.partition) in sent:
            out.append(f"{tr}: v{tr.target} both sends and receives partition {tr.partition}")
    return out


def apply_phase(state: AggregationState, phase: Sequence[Transfer]) -> AggregationState:
    """Run one phase of concurrent transfers.

    Senders give up their whole holding of the partition; each receiver ends up
    with the distinct keys of its old holding plus what it was sent.
    """
    bad = phase_violations(state, phase)
    if bad:
        raise PlanError("invalid phase: " + "; ".join(bad))
    data = [list(row) for row in state.data]
    for s, t, l in phase:
        data[t][l] = np.union1d(state.data[t][l], state.data[s][l])
        data[s][l] = _EMPTY
    return AggregationState(tuple(map(tuple, data)), state.mapping, state.tuple_width)


def is_complete(state: AggregationState) -> bool:
    return all(
        state.size(v, l) == 0
        for l, dest in enumerate(state.mapping)
        for v in range(state.node_count)
        if v != dest
    )


def _transfer_costs(state, phase, bw: BandwidthMatrix):
    return [
        (tr, state.size(tr.source, tr.partition),
         transfer_cost(state.size(tr.source, tr.partition), state.tuple_width, bw.bw[tr.source, tr.target]))
        for tr in phase
    ]


def phase_cost(state: AggregationState, phase: Sequence[Transfer], bw: BandwidthMatrix) -> float:
    """Cost of the transfer that finishes last (0 for an empty phase)."""
    bad = phase_violations(state, phase)
    if bad:
        raise PlanError("invalid phase: " + "; ".join(bad))
    return max((c for _, _, c in _transfer_costs(state, phase, bw)), default=0.0)


class PlanCost(NamedTuple):
    total: float
    phase_costs: list[float]
    final_state: AggregationState
    # tuples received per node over the whole plan, only counting transfers
    # into the partition's final destination
    dest_tuples: np.ndarray
    # per phase: (transfer, tuples sent, transfer cost)
    details: list[list[tuple[Transfer, int, float]]]


def plan_cost(state: AggregationState, plan: AggregationPlan | Sequence, bw: BandwidthMatrix) -> PlanCost:
    """Serial sum of phase costs, applying phases in order."""
    phases = plan.phases if isinstance(plan, AggregationPlan) else list(plan)
    costs, details = [], []
    dest = np.zeros(state.node_count, dtype=np.int64)
    cur = state
    for i, phase in enumerate(phases):
        bad = phase_violations(cur, phase)
        if bad:
            raise PlanError(f"phase {i + 1}: " + "; ".join(bad))
        rows = _transfer_costs(cur, phase, bw)
        for tr, k, _ in rows:
            if tr.target == cur.mapping[tr.partition]:
                dest[tr.target] += k
        details.append(rows)
        costs.append(max((c for _, _, c in rows), default=0.0))
        cur = apply_phase(cur, phase)
    return PlanCost(float(sum(costs)), costs, cur, dest, details)


def validate_plan(state: AggregationState, plan: AggregationPlan | Sequence) -> list[str]:
    """Every rule the plan breaks, in order; an empty list means the plan is valid."""
    phases = plan.phases if isinstance(plan, AggregationPlan) else list(plan)
    out = []
    cur = state
    for i, phase in enumerate(phases):
        bad = phase_violations(cur, phase)
        if bad:
            out.extend(f"phase {i + 1}: {b}" for b in bad)
            return out
        cur = apply_phase(cur, phase)
    if not is_complete(cur):
        left = [
            f"v{v}[l{l}]"
            for l, d in enumerate(cur.mapping)
            for v in range(cur.node_count)
            if v != d and cur.size(v, l)
        ]
        out.append("plan ends before aggregation completes; still holding data: " + ", ".join(left))
    return out
