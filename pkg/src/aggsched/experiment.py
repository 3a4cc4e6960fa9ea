"""Config-driven experiment runner and report writers.

A run builds one workload and one cluster, plans it with every requested
planner on identical inputs, and replays each plan on the true bandwidth
matrix. Planners only ever see the benchmark-measured matrix.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .baselines import LoomConfig, plan_loom, plan_repartition, preaggregate
from .grasp import plan_grasp
from .model import AggregationPlan, AggregationState, PlanError, apply_phase, plan_cost, validate_plan
from .oracle import DEFAULT_NODE_LIMIT, optimal_tree_plan
from .sketch import HashFamily
from .topology import NoiseSpec, make_uniform_star, pairwise_bandwidth, simulate_benchmark
from .workloads import WorkloadError, WorkloadSpec, build_workload

__all__ = [
    "ConfigError",
    "SimulationError",
    "ExperimentConfig",
    "PlannerResult",
    "SimReport",
    "load_config",
    "run_experiment",
    "emit_report",
    "run_sweep",
    "write_sweep",
    "fmt_cost",
]

log = logging.getLogger(__name__)

PLANNERS = ("grasp", "grasp_exact", "repart", "preagg_repart", "loom", "oracle")
SUMMARY_COLUMNS = ("planner", "planned_cost", "realized_cost", "phases", "dest_tuples")
TIMELINE_COLUMNS = ("link_id", "direction", "start", "end", "tuples")
SWEEP_COLUMNS = ("axis", "value") + SUMMARY_COLUMNS + ("speedup",)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


class SimulationError(RuntimeError):
    """A plan broke an execution-model invariant during replay."""


def fmt_cost(x: float) -> str:
    """Six significant digits, always printed as a float literal."""
    return repr(float(f"{float(x):.6g}"))


@dataclass
class ExperimentConfig:
    workload: WorkloadSpec
    planners: list[str]
    link_bw: float = 1.0
    groups: list[int] | None = None
    intra_factor: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    hashes: int = 100
    loom: LoomConfig = field(default_factory=LoomConfig)
    oracle_limit: int = DEFAULT_NODE_LIMIT
    baseline: str = "preagg_repart"
    out_dir: str = "out"
    format: str = "csv"
    base_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path | None = None, seed: int | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a mapping")
        raw = copy.deepcopy(d)
        if seed is None:
            seed = d.get("seed")
        if seed is None:
            env = os.environ.get("AGGSCHED_SEED")
            try:
                seed = int(env) if env is not None else 0
            except ValueError:
                raise ConfigError("AGGSCHED_SEED", f"not an integer: {env!r}")
        if not isinstance(seed, int):
            raise ConfigError("seed", f"must be an integer, got {seed!r}")

        w = d.get("tuple_width", 16.0)
        if not isinstance(w, (int, float)) or w <= 0:
            raise ConfigError("tuple_width", "must be a positive number")

        wl = d.get("workload")
        if not isinstance(wl, dict) or "kind" not in wl:
            raise ConfigError("workload", "a workload section with a 'kind' is required")
        core = ("kind", "node_count", "partition_count", "tuples_per_node", "mapping", "destination")
        params = {k: v for k, v in wl.items() if k not in core}
        try:
            spec = WorkloadSpec(
                kind=wl["kind"],
                node_count=int(wl.get("node_count", 8)),
                partition_count=int(wl.get("partition_count", 1)),
                tuples_per_node=int(wl.get("tuples_per_node", 64_000)),
                mapping=wl.get("mapping", "all_to_one"),
                destination=int(wl.get("destination", 0)),
                tuple_width=float(w),
                seed=seed,
                params=params,
            )
        except (WorkloadError, TypeError, ValueError) as e:
            raise ConfigError("workload", str(e)) from e

        top = d.get("topology", {}) or {}
        link_bw = top.get("link_bw", 1.0)
        if not isinstance(link_bw, (int, float)) or link_bw <= 0:
            raise ConfigError("topology.link_bw", "must be a positive number")
        intra = top.get("intra_factor", 1.0)
        if not isinstance(intra, (int, float)) or intra < 1:
            raise ConfigError("topology.intra_factor", "must be >= 1")
        groups = top.get("groups")
        if groups is None and "group_size" in top:
            gs = top["group_size"]
            if not isinstance(gs, int) or gs < 1:
                raise ConfigError("topology.group_size", "must be a positive integer")
            groups = [v // gs for v in range(spec.node_count)]
        if groups is not None and len(groups) != spec.node_count:
            raise ConfigError("topology.groups", f"needs one group per node ({spec.node_count})")

        nz = d.get("noise", {}) or {}
        try:
            noise = NoiseSpec(nz.get("kind", "none"), float(nz.get("percent", 0.0)))
        except ValueError as e:
            raise ConfigError("noise", str(e)) from e

        lm = d.get("loom", {}) or {}
        try:
            loom = LoomConfig(lm.get("fanin", 5), lm.get("input_tuples"), lm.get("result_tuples"))
        except ValueError as e:
            raise ConfigError("loom.fanin", str(e)) from e

        planners = d.get("planners")
        if not planners or not isinstance(planners, list):
            raise ConfigError("planners", "at least one planner is required")
        for i, p in enumerate(planners):
            if _planner_kind(p) not in PLANNERS:
                raise ConfigError(f"planners[{i}]", f"unknown planner {p!r}; expected one of {PLANNERS}")
        if len(set(planners)) != len(planners):
            raise ConfigError("planners", "duplicate planner entries")

        limit = int(d.get("oracle_limit", DEFAULT_NODE_LIMIT))
        tree_planners = [p for p in planners if _planner_kind(p) in ("loom", "oracle")]
        if tree_planners and spec.partition_count != 1:
            raise ConfigError("workload.partition_count", f"{tree_planners[0]} needs a single partition")
        if "oracle" in planners:
            if spec.mapping != "all_to_one" or spec.kind in ("imbalance", "zipf_skew"):
                raise ConfigError("planners", "oracle requires an all-to-one workload")
            if spec.node_count > limit:
                raise ConfigError("planners", f"oracle requires node_count <= {limit}")
        if any(_planner_kind(p) == "loom" for p in planners) and (
            spec.mapping != "all_to_one" or spec.kind in ("imbalance", "zipf_skew")
        ):
            raise ConfigError("planners", "loom requires an all-to-one workload")

        out = d.get("output", {}) or {}
        fmt = out.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("output.format", "must be csv or json")
        hashes = d.get("hashes", 100)
        if not isinstance(hashes, int) or hashes < 1:
            raise ConfigError("hashes", "must be a positive integer")
        return cls(
            workload=spec,
            planners=list(planners),
            link_bw=float(link_bw),
            groups=groups,
            intra_factor=float(intra),
            noise=noise,
            seed=seed,
            hashes=hashes,
            loom=loom,
            oracle_limit=limit,
            baseline=d.get("baseline", "preagg_repart"),
            out_dir=str(out.get("dir", "out")),
            format=fmt,
            base_dir=str(base_dir) if base_dir is not None else None,
            raw=raw,
        )


def _planner_kind(name: str) -> str:
    return name.split(":", 1)[0] if isinstance(name, str) else ""


def load_config(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        d = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(str(path), f"malformed YAML: {e}") from e
    return ExperimentConfig.from_dict(d, base_dir=path.parent, seed=seed)


@dataclass
class PlannerResult:
    planner: str
    planned_cost: float
    realized_cost: float
    phase_costs: list[float]
    dest_tuples: int
    dest_tuples_per_node: list[int]
    planning_time: float
    plan: AggregationPlan
    # (link_id, direction, start, end, tuples)
    intervals: list[tuple[int, str, float, float, int]]

    @property
    def phases(self) -> int:
        return len(self.plan)


@dataclass
class SimReport:
    results: list[PlannerResult]
    node_count: int
    partition_count: int
    seed: int
    config: dict = field(default_factory=dict)

    def by_planner(self) -> dict[str, PlannerResult]:
        return {r.planner: r for r in self.results}


def _timeline(details, phase_costs):
    out = []
    start = 0.0
    for rows, dur in zip(details, phase_costs):
        for tr, k, c in rows:
            out.append((tr.source, "up", start, start + c, k))
            out.append((tr.target, "down", start, start + c, k))
        start += dur
    return out


def _check_conservation(state: AggregationState, plan: AggregationPlan, name: str):
    want = [state.distinct_keys(l) for l in range(state.partition_count)]
    cur = state
    for i, phase in enumerate(plan.phases):
        cur = apply_phase(cur, phase)
        for l in {tr.partition for tr in phase}:
            if not np.array_equal(cur.distinct_keys(l), want[l]):
                raise SimulationError(f"{name}: keys of partition {l} changed in phase {i + 1}")


def build_cluster(cfg: ExperimentConfig):
    n = cfg.workload.node_count
    top = make_uniform_star(n, cfg.link_bw)
    true_bw = pairwise_bandwidth(top, cfg.groups, cfg.intra_factor)
    measured = simulate_benchmark(true_bw, cfg.noise, cfg.seed)
    return top, true_bw, measured


def run_experiment(cfg: ExperimentConfig, check_invariants: bool = True) -> SimReport:
    base = Path(cfg.base_dir) if cfg.base_dir else None
    try:
        raw = build_workload(cfg.workload, base)
    except WorkloadError as e:
        raise ConfigError("workload", str(e)) from e
    _, true_bw, measured = build_cluster(cfg)
    pre = preaggregate(raw)

    results = []
    for name in cfg.planners:
        kind = _planner_kind(name)
        state = raw if kind == "repart" else pre
        t0 = time.perf_counter()
        if kind == "grasp":
            fam = HashFamily.from_seed(cfg.hashes, cfg.seed)
            plan = plan_grasp(state, measured, "estimates", family=fam)
        elif kind == "grasp_exact":
            plan = plan_grasp(state, measured, "exact")
        elif kind in ("repart", "preagg_repart"):
            plan = plan_repartition(state)
        elif kind == "loom":
            loom = cfg.loom
            if ":" in name:
                loom = LoomConfig(int(name.split(":", 1)[1]), loom.input_tuples, loom.result_tuples)
            plan = plan_loom(state, loom)
        else:
            plan = optimal_tree_plan(state, measured, cfg.oracle_limit)[0].plan
        elapsed = time.perf_counter() - t0

        bad = validate_plan(state, plan)
        if bad:
            raise SimulationError(f"{name} produced an invalid plan: " + "; ".join(bad[:5]))
        if check_invariants:
            _check_conservation(state, plan, name)
        try:
            real = plan_cost(state, plan, true_bw)
            believed = plan_cost(state, plan, measured).total
        except PlanError as e:
            raise SimulationError(f"{name}: {e}") from e
        if plan.estimated_phase_costs is not None:
            believed = float(sum(plan.estimated_phase_costs))
        results.append(
            PlannerResult(
                planner=name.replace(":", ""),
                planned_cost=float(believed),
                realized_cost=real.total,
                phase_costs=[float(c) for c in real.phase_costs],
                dest_tuples=int(real.dest_tuples.sum()),
                dest_tuples_per_node=[int(x) for x in real.dest_tuples],
                planning_time=elapsed,
                plan=plan,
                intervals=_timeline(real.details, real.phase_costs),
            )
        )
        log.info("%s: realized %.6g over %d phases", name, real.total, len(plan))
    return SimReport(results, raw.node_count, raw.partition_count, cfg.seed, cfg.raw)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def summary_rows(report: SimReport):
    return [
        (r.planner, fmt_cost(r.planned_cost), fmt_cost(r.realized_cost), r.phases, r.dest_tuples)
        for r in report.results
    ]


def report_dict(report: SimReport) -> dict[str, Any]:
    return {
        "seed": report.seed,
        "node_count": report.node_count,
        "partition_count": report.partition_count,
        "config": report.config,
        "planners": [
            {
                "planner": r.planner,
                "planned_cost": r.planned_cost,
                "realized_cost": r.realized_cost,
                "phase_costs": r.phase_costs,
                "phases": r.phases,
                "dest_tuples": r.dest_tuples,
                "dest_tuples_per_node": r.dest_tuples_per_node,
                "planning_time_s": r.planning_time,
                "plan": [[list(tr) for tr in ph] for ph in r.plan.phases],
            }
            for r in report.results
        ],
    }


def emit_report(report: SimReport, out_dir: str | Path, format: str = "csv") -> list[Path]:
    """Write report files and return their paths.

    ``csv`` writes summary.csv, one timeline_<planner>.csv per planner and
    report.json. ``json`` writes report.json only.
    """
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            p = out / "summary.csv"
            p.write_text(_csv_text(SUMMARY_COLUMNS, summary_rows(report)), encoding="utf-8")
            written.append(p)
            for r in report.results:
                rows = [(lid, d, fmt_cost(a), fmt_cost(b), k) for lid, d, a, b, k in r.intervals]
                p = out / f"timeline_{r.planner}.csv"
                p.write_text(_csv_text(TIMELINE_COLUMNS, rows), encoding="utf-8")
                written.append(p)
        elif format != "json":
            raise ValueError(f"unknown report format {format!r}")
        p = out / "report.json"
        p.write_text(json.dumps(report_dict(report), indent=2, sort_keys=True), encoding="utf-8")
        written.append(p)
    except OSError as e:
        raise OSError(f"cannot write report to {out}: {e}") from e
    return written


def _set_path(d: dict, path: str, value):
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        nxt = cur.get(k)
        if nxt is None:
            nxt = cur[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(path, f"{k!r} is not a section")
        cur = nxt
    cur[keys[-1]] = value


def parse_axis(spec: str) -> tuple[str, list]:
    """``workload.jaccard=0,0.5,1`` -> ('workload.jaccard', [0, 0.5, 1])."""
    if "=" not in spec:
        raise ConfigError("--axis", "expected <param>=<v1,v2,...>")
    path, vals = spec.split("=", 1)
    out = []
    for v in vals.split(","):
        v = v.strip()
        if not v:
            raise ConfigError("--axis", "empty axis value")
        out.append(yaml.safe_load(v))
    return path.strip(), out


def run_sweep(template: dict, axis: str, values: list, base_dir=None, seed=None, baseline: str | None = None):
    """One row per (axis value, planner) with speedup against ``baseline``.

    Speedup is the baseline's realized cost divided by the planner's; blank
    when the baseline did not run.
    """
    rows = []
    reports = []
    for v in values:
        d = copy.deepcopy(template)
        _set_path(d, axis, v)
        cfg = ExperimentConfig.from_dict(d, base_dir=base_dir, seed=seed)
        rep = run_experiment(cfg)
        reports.append(rep)
        base_name = baseline or cfg.baseline
        ref = rep.by_planner().get(base_name)
        for r in rep.results:
            speed = fmt_cost(ref.realized_cost / r.realized_cost) if ref and r.realized_cost > 0 else ""
            rows.append((axis, v, r.planner, fmt_cost(r.planned_cost), fmt_cost(r.realized_cost),
                         r.phases, r.dest_tuples, speed))
    return rows, reports


def write_sweep(rows, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_csv_text(SWEEP_COLUMNS, rows), encoding="utf-8")
    return path
