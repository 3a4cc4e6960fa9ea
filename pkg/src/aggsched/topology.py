"""Star-network cluster model and bandwidth matrices.

All routers are collapsed into a single hub; each compute node owns one
uplink (node -> hub) and one downlink (hub -> node).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Topology",
    "BandwidthMatrix",
    "NoiseSpec",
    "make_uniform_star",
    "pairwise_bandwidth",
    "simulate_benchmark",
    "effective_bandwidth",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Topology:
    """Star network with per-node uplink/downlink bandwidth (bytes per time unit)."""

    node_count: int
    uplink_bw: np.ndarray
    downlink_bw: np.ndarray

    def __post_init__(self):
        if self.node_count < 2:
            raise ValueError(f"node_count must be >= 2, got {self.node_count}")
        up = _frozen(self.uplink_bw)
        down = _frozen(self.downlink_bw)
        if up.shape != (self.node_count,) or down.shape != (self.node_count,):
            raise ValueError("uplink_bw/downlink_bw must have one entry per node")
        if not (np.all(up > 0) and np.all(down > 0)):
            raise ValueError("all link bandwidths must be strictly positive")
        object.__setattr__(self, "uplink_bw", up)
        object.__setattr__(self, "downlink_bw", down)


@dataclass(frozen=True)
class BandwidthMatrix:
    """Available bandwidth B(s -> t); rows are senders, columns receivers.

    The diagonal is unused and stored as +inf.
    """

    bw: np.ndarray

    def __post_init__(self):
        m = np.array(self.bw, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"bandwidth matrix must be square n x n (n >= 2), got {m.shape}")
        np.fill_diagonal(m, np.inf)
        off = ~np.eye(m.shape[0], dtype=bool)
        if not np.all(m[off] > 0):
            raise ValueError("off-diagonal bandwidths must be strictly positive")
        m.setflags(write=False)
        object.__setattr__(self, "bw", m)

    @property
    def node_count(self) -> int:
        return self.bw.shape[0]

    def __getitem__(self, st):
        return self.bw[st]

    @classmethod
    def uniform(cls, n: int, value: float) -> "BandwidthMatrix":
        return cls(np.full((n, n), float(value)))


@dataclass(frozen=True)
class NoiseSpec:
    """How the simulated benchmark distorts the true matrix.

    kind is ``none``, ``underestimate`` (every entry scaled by 1 - p/100) or
    ``per_entry`` (each entry scaled by an independent draw in [1 - p/100, 1]).
    """

    kind: str = "none"
    percent: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "underestimate", "per_entry"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not (0 <= self.percent < 100):
            raise ValueError(f"noise percent must be in [0, 100), got {self.percent}")


def make_uniform_star(n: int, link_bw: float) -> Topology:
    if n < 2:
        raise ValueError(f"a star needs at least 2 nodes, got {n}")
    if not link_bw > 0:
        raise ValueError(f"link bandwidth must be positive, got {link_bw}")
    return Topology(n, np.full(n, float(link_bw)), np.full(n, float(link_bw)))


def pairwise_bandwidth(
    top: Topology,
    groups: Sequence[int] | Mapping[int, int] | None = None,
    intra_factor: float = 1.0,
) -> BandwidthMatrix:
    """Build B(s -> t) from the star's links, boosting co-located pairs.

    ``groups`` maps node -> locality group; nodes sharing a group model plan
    fragments running on one machine and get ``intra_factor`` times the base
    rate. The base rate is the unshared link bandwidth min(up[s], down[t]).
    """
    if intra_factor < 1:
        raise ValueError(f"intra_factor must be >= 1, got {intra_factor}")
    n = top.node_count
    if groups is None:
        g = np.arange(n)
    else:
        if isinstance(groups, Mapping):
            missing = [v for v in range(n) if v not in groups]
            if missing:
                raise ValueError(f"nodes without a locality group: {missing}")
            g = np.array([groups[v] for v in range(n)])
        else:
            g = np.asarray(groups)
            if g.shape != (n,):
                raise ValueError(f"expected {n} group labels, got {g.shape}")
    base = np.minimum(top.uplink_bw[:, None], top.downlink_bw[None, :])
    same = g[:, None] == g[None, :]
    return BandwidthMatrix(np.where(same, base * intra_factor, base))


def simulate_benchmark(true_bw: BandwidthMatrix, noise: NoiseSpec | None = None, seed: int = 0) -> BandwidthMatrix:
    """Return the matrix a pairwise throughput benchmark would have measured."""
    noise = noise or NoiseSpec()
    m = np.array(true_bw.bw)
    p = noise.percent / 100.0
    if noise.kind == "none" or p == 0:
        return BandwidthMatrix(m)
    if noise.kind == "underestimate":
        return BandwidthMatrix(m * (1.0 - p))
    rng = np.random.default_rng(seed)
    factors = rng.uniform(1.0 - p, 1.0, size=m.shape)
    return BandwidthMatrix(m * factors)


def effective_bandwidth(top: Topology, phase: Iterable, s: int, t: int) -> float:
    """Bandwidth of s -> t when its links are shared with the rest of ``phase``.

    Each transfer in ``phase`` needs ``source``/``target`` attributes or be an
    ``(s, t, ...)`` tuple. The uplink of s is split across d_o(s) transfers and
    the downlink of t across d_i(t).
    """
    pairs = [(int(x[0]), int(x[1])) for x in phase]
    if (s, t) not in pairs:
        raise ValueError(f"transfer {s}->{t} is not part of the phase")
    d_out = sum(1 for a, _ in pairs if a == s)
    d_in = sum(1 for _, b in pairs if b == t)
    return float(min(top.uplink_bw[s] / d_out, top.downlink_bw[t] / d_in))
