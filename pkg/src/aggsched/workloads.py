"""Deterministic synthetic workloads and key-file ingestion.

Desk scale divides the original tuple counts by 1000 (64M -> 64k per
fragment). The cost model is linear in tuple counts, so ratios carry over.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .model import AggregationState

__all__ = [
    "WorkloadSpec",
    "WorkloadError",
    "gen_range_overlap",
    "gen_duplicates",
    "gen_imbalance",
    "gen_zipf_skew",
    "load_keys_file",
    "hash_token",
    "build_workload",
    "range_overlap_layout",
    "imbalance_split",
]

KINDS = ("range_overlap", "duplicates", "imbalance", "zipf_skew", "file", "explicit")


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    """Generator selection plus its parameters.

    ``params`` holds the kind-specific knobs (``jaccard``, ``dup_factor``,
    ``fragment0_units``, ``theta``, ``paths``, ``fragments`` ...).
    """

    kind: str
    node_count: int = 8
    partition_count: int = 1
    tuples_per_node: int = 64_000
    mapping: str = "all_to_one"
    destination: int = 0
    tuple_width: float = 16.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WorkloadError(f"unknown workload kind {self.kind!r}; expected one of {KINDS}")
        if self.node_count < 2 or self.partition_count < 1 or self.tuples_per_node < 1:
            raise WorkloadError("node_count >= 2, partition_count >= 1 and tuples_per_node >= 1 required")
        if self.mapping not in ("all_to_one", "all_to_all"):
            raise WorkloadError(f"mapping must be all_to_one or all_to_all, got {self.mapping!r}")
        if not 0 <= self.destination < self.node_count:
            raise WorkloadError("destination outside the node range")


def _mapping(spec: WorkloadSpec, parts: int) -> tuple[int, ...]:
    if spec.mapping == "all_to_one":
        return (spec.destination,) * parts
    return tuple(l % spec.node_count for l in range(parts))


def _split_mod(keys: np.ndarray, parts: int) -> tuple[np.ndarray, ...]:
    if parts == 1:
        return (keys,)
    return tuple(keys[keys % np.uint64(parts) == np.uint64(l)] for l in range(parts))


def _state(spec: WorkloadSpec, node_keys: list[np.ndarray]) -> AggregationState:
    parts = spec.partition_count
    data = tuple(_split_mod(np.asarray(k, dtype=np.uint64), parts) for k in node_keys)
    return AggregationState(data, _mapping(spec, parts), spec.tuple_width)


def range_overlap_layout(size: int, jaccard: float) -> tuple[int, int]:
    """Return (overlap, stride) so adjacent ranges of ``size`` keys have Jaccard ``jaccard``.

    Two ranges of k keys sharing o keys have Jaccard o / (2k - o), so
    o = 2kJ / (1 + J), rounded to the nearest key.
    """
    if not 0 <= jaccard <= 1:
        raise WorkloadError(f"Jaccard target must be in [0, 1], got {jaccard}")
    if size < 1:
        raise WorkloadError("fragments need at least one key")
    overlap = int(round(2 * size * jaccard / (1 + jaccard)))
    return overlap, size - overlap


def gen_range_overlap(spec: WorkloadSpec) -> AggregationState:
    """Fragment i holds the consecutive integer range starting at 1 + i * stride.

    Adjacent fragments share exactly ``overlap`` keys. Above J = 1/3 the
    overlap exceeds half a fragment and ranges two apart intersect as well.
    """
    k = spec.tuples_per_node
    overlap, stride = range_overlap_layout(k, float(spec.params.get("jaccard", 0.0)))
    nodes = [np.arange(1 + i * stride, 1 + i * stride + k, dtype=np.uint64) for i in range(spec.node_count)]
    return _state(spec, nodes)


def gen_duplicates(spec: WorkloadSpec) -> AggregationState:
    """Every fragment holds keys 1..k/d, each repeated d times, in seeded random order."""
    d = int(spec.params.get("dup_factor", 1))
    if d < 1 or spec.tuples_per_node % d:
        raise WorkloadError(f"dup_factor {d} must be >= 1 and divide tuples_per_node={spec.tuples_per_node}")
    distinct = spec.tuples_per_node // d
    rng = np.random.default_rng(spec.seed)
    base = np.repeat(np.arange(1, distinct + 1, dtype=np.uint64), d)
    return _state(spec, [rng.permutation(base) for _ in range(spec.node_count)])


def imbalance_split(total_units: int, fragment0_units: int, node_count: int) -> tuple[int, float]:
    """Units per other fragment and the imbalance level n / m."""
    if not 0 < fragment0_units <= total_units:
        raise WorkloadError(f"fragment-0 share must be in (0, {total_units}], got {fragment0_units}")
    rest = total_units - fragment0_units
    if rest % (node_count - 1):
        raise WorkloadError(
            f"{rest} remaining units do not split evenly over {node_count - 1} fragments"
        )
    m = rest // (node_count - 1)
    return m, (fragment0_units / m if m else float("inf"))


def gen_imbalance(spec: WorkloadSpec):
    """All-to-all aggregation where fragment 0 owns a larger key range.

    The key domain is ``total_units * keys_per_unit``. Fragment 0 is the
    destination of the first ``fragment0_units`` units, and every other
    fragment of an equal share of the rest. Each fragment draws
    ``tuples_per_node`` keys uniformly (with replacement) from the whole
    domain. Returns ``(state, level)``.
    """
    p = spec.params
    total = int(p.get("total_units", 128))
    unit = int(p.get("keys_per_unit", 1000))
    n_units = int(p.get("fragment0_units", total // spec.node_count))
    m_units, level = imbalance_split(total, n_units, spec.node_count)
    bounds = [0, n_units * unit] + [(n_units + j * m_units) * unit for j in range(1, spec.node_count)]
    rng = np.random.default_rng(spec.seed)
    domain = total * unit
    nodes = [rng.integers(1, domain + 1, size=spec.tuples_per_node).astype(np.uint64) for _ in range(spec.node_count)]
    return _range_state(spec, nodes, np.array(bounds[1:], dtype=np.uint64)), level


def _range_state(spec: WorkloadSpec, node_keys, upper: np.ndarray) -> AggregationState:
    """Partition j holds keys in (upper[j-1], upper[j]]; partition j -> node j."""
    parts = len(upper)
    data = []
    for keys in node_keys:
        idx = np.searchsorted(upper, keys, side="left")
        data.append(tuple(keys[idx == j] for j in range(parts)))
    return AggregationState(tuple(data), tuple(range(parts)), spec.tuple_width)


def gen_zipf_skew(spec: WorkloadSpec) -> AggregationState:
    """Zipf(theta) draws over keys 1..domain (key 1 most popular), range-partitioned.

    Fragment j is the destination of the j-th equal-width key range.
    Sampling inverts the CDF of the normalised 1/k**theta weights.
    """
    theta = float(spec.params.get("theta", 1.0))
    if theta < 0:
        raise WorkloadError(f"zipf exponent must be >= 0, got {theta}")
    domain = int(spec.params.get("domain", 128_000))
    if domain % spec.node_count:
        raise WorkloadError(f"domain {domain} must be divisible by node_count {spec.node_count}")
    weights = np.arange(1, domain + 1, dtype=np.float64) ** -theta
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    rng = np.random.default_rng(spec.seed)
    nodes = []
    for _ in range(spec.node_count):
        u = rng.random(spec.tuples_per_node)
        nodes.append((np.searchsorted(cdf, u, side="right") + 1).clip(1, domain).astype(np.uint64))
    width = domain // spec.node_count
    upper = np.array([width * (j + 1) for j in range(spec.node_count)], dtype=np.uint64)
    return _range_state(spec, nodes, upper)


_INT = re.compile(r"^\d+$")


def hash_token(token: str) -> int:
    """64-bit BLAKE2b digest of a UTF-8 token, read little-endian."""
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def _read_keys(path: Path) -> list[int]:
    out = []
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise WorkloadError(f"cannot read key file {path}: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if len(line.split()) != 1:
            raise WorkloadError(f"{path}:{lineno}: expected one key per line, got {raw!r}")
        if _INT.match(line) and int(line) < 1 << 64:
            out.append(int(line))
        else:
            out.append(hash_token(line))
    return out


def load_keys_file(
    paths: Sequence[str | Path],
    node_count: int,
    partition_count: int = 1,
    partition_fn: Callable[[np.ndarray, int], np.ndarray] | None = None,
    mapping: Sequence[int] | None = None,
    tuple_width: float = 16.0,
) -> AggregationState:
    """Read key files and deal them to fragments round-robin (file i -> fragment i mod n).

    ``partition_fn(keys, partition_count)`` returns a partition index per key;
    the default is ``key mod partition_count``. ``mapping`` defaults to
    all-to-one onto fragment 0.
    """
    if node_count < 1:
        raise WorkloadError("node_count must be positive")
    buckets: list[list[int]] = [[] for _ in range(node_count)]
    for i, p in enumerate(paths):
        buckets[i % node_count].extend(_read_keys(Path(p)))
    fn = partition_fn or (lambda k, L: (k % np.uint64(L)).astype(np.int64))
    data = []
    for b in buckets:
        keys = np.array(b, dtype=np.uint64)
        part = np.asarray(fn(keys, partition_count)) if keys.size else np.empty(0, dtype=np.int64)
        data.append(tuple(keys[part == l] for l in range(partition_count)))
    if mapping is None:
        mapping = (0,) * partition_count
    return AggregationState(tuple(data), tuple(mapping), tuple_width)


def build_workload(spec: WorkloadSpec, base_dir: Path | None = None) -> AggregationState:
    """Dispatch on ``spec.kind``; relative file paths resolve against ``base_dir``."""
    if spec.kind == "range_overlap":
        return gen_range_overlap(spec)
    if spec.kind == "duplicates":
        return gen_duplicates(spec)
    if spec.kind == "imbalance":
        return gen_imbalance(spec)[0]
    if spec.kind == "zipf_skew":
        return gen_zipf_skew(spec)
    if spec.kind == "explicit":
        frags = spec.params.get("fragments")
        if not isinstance(frags, list) or len(frags) != spec.node_count:
            raise WorkloadError(f"explicit workload needs {spec.node_count} fragment key lists")
        keys = [
            np.array([int(k) if isinstance(k, int) else hash_token(str(k)) for k in f], dtype=np.uint64)
            for f in frags
        ]
        return _state(spec, keys)
    # file
    paths = [Path(p) for p in spec.params.get("paths", [])]
    if not paths:
        raise WorkloadError("file workload needs at least one path")
    if base_dir is not None:
        paths = [p if p.is_absolute() else base_dir / p for p in paths]
    return load_keys_file(
        paths,
        spec.node_count,
        spec.partition_count,
        mapping=_mapping(spec, spec.partition_count),
        tuple_width=spec.tuple_width,
    )
