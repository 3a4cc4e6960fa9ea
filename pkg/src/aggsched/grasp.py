"""Similarity-aware greedy phase planner.

Each phase is built from a cost matrix that charges a candidate transfer
s -> t (partition l) for shipping s's data now plus, unless t is the final
destination, for forwarding the estimated merged result later. Transfers are
picked cheapest-first under a one-send/one-receive per node rule.

Complexity: building the matrix is O(|L| * n^2 * h) for h hash functions,
and every pick is an O(|L| * n^2) masked argmin, so a phase costs
O(|L| * n^2 * (h + n)).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import AggregationPlan, AggregationState, Transfer
from .sketch import ExactState, HashFamily, SketchState
from .topology import BandwidthMatrix

__all__ = ["cost_entry", "cost_matrix", "select_phase", "plan", "plan_grasp", "sketch_complete"]


def cost_entry(st, bw: BandwidthMatrix, mapping: Sequence[int], s: int, t: int, l: int, w: float) -> float:
    """One entry of the cost matrix, inf for forbidden transfers."""
    dest = mapping[l]
    if s == t or s == dest:
        return np.inf
    if st.card[s, l] == 0:
        return np.inf
    if t != dest and st.card[t, l] == 0:
        return np.inf
    now = st.card[s, l] * w / bw.bw[s, t]
    if t == dest:
        return float(now)
    return float(now + st.est_card(s, t, l) * w / bw.bw[s, t])


def cost_matrix(st, bw: BandwidthMatrix, mapping: Sequence[int], w: float) -> np.ndarray:
    """All entries at once, laid out as C[l, s, t]."""
    n, L = st.shape
    rate = w / bw.bw
    C = np.full((L, n, n), np.inf)
    for l in range(L):
        c = st.card[:, l]
        dest = mapping[l]
        live = c > 0
        if not live.any():
            continue
        ok = live[:, None] & live[None, :]
        ok[:, dest] = live
        ok[dest, :] = False
        np.fill_diagonal(ok, False)
        if not ok.any():
            continue
        now = c[:, None] * rate
        later = np.zeros((n, n))
        fwd = ok.copy()
        fwd[:, dest] = False
        if fwd.any():
            later[fwd] = (st.union_estimates(l) * rate)[fwd]
        C[l][ok] = (now + later)[ok]
    return C


def sketch_complete(st, mapping: Sequence[int]) -> bool:
    for l, dest in enumerate(mapping):
        c = st.card[:, l].copy()
        c[dest] = 0
        if np.any(c > 0):
            return False
    return True


def select_phase(st, bw: BandwidthMatrix, mapping: Sequence[int], w: float):
    """Greedily fill one phase; mutates ``st`` with the chosen transfers.

    Returns ``(transfers, estimated_phase_cost)``. Ties on equal cost go to the
    lexicographically smallest (partition, target, source).
    """
    C = cost_matrix(st, bw, mapping, w)
    # reorder to [l, t, s] so the flat argmin honours the tie-break order
    work = np.ascontiguousarray(C.transpose(0, 2, 1))
    L, n, _ = work.shape
    phase: list[Transfer] = []
    est = 0.0
    for _ in range(n):
        k = int(np.argmin(work))
        l, t, s = np.unravel_index(k, work.shape)
        if not np.isfinite(work[l, t, s]):
            break
        l, t, s = int(l), int(t), int(s)
        est = max(est, float(st.card[s, l] * w / bw.bw[s, t]))
        phase.append(Transfer(s, t, l))
        st.update(s, t, l)
        # s leaves V_send and V_l; t leaves V_recv and V_l
        work[:, :, s] = np.inf
        work[l, s, :] = np.inf
        work[:, t, :] = np.inf
        work[l, :, t] = np.inf
    return phase, est


def plan(st, bw: BandwidthMatrix, mapping: Sequence[int], w: float, max_phases: int | None = None) -> AggregationPlan:
    """Loop :func:`select_phase` until every partition sits at its destination.

    ``st`` is consumed (left in the completed state).
    """
    n, L = st.shape
    if max_phases is None:
        max_phases = n * L + 1
    phases, est = [], []
    while not sketch_complete(st, mapping):
        if len(phases) >= max_phases:
            raise RuntimeError(f"planner did not converge within {max_phases} phases")
        phase, cost = select_phase(st, bw, mapping, w)
        if not phase:
            raise RuntimeError("no viable transfer although data is still undelivered")
        phases.append(tuple(phase))
        est.append(cost)
    return AggregationPlan(phases, est)


def plan_grasp(
    state: AggregationState,
    bw: BandwidthMatrix,
    mode: str = "estimates",
    family: HashFamily | None = None,
    seed: int = 0,
) -> AggregationPlan:
    """Plan for a (pre-aggregated) ground-truth state.

    ``mode='estimates'`` drives the planner from minhash signatures only;
    ``mode='exact'`` substitutes true union cardinalities.
    """
    if mode == "estimates":
        fam = family or HashFamily.from_seed(100, seed)
        st = SketchState.from_data(state.data, fam)
    elif mode == "exact":
        st = ExactState(state.data)
    else:
        raise ValueError(f"unknown planner mode {mode!r}")
    return plan(st, bw, state.mapping, state.tuple_width)
