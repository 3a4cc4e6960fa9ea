"""Minhash signatures and the Card/MinH bookkeeping used during planning.

Hash functions are h_j(x) = (a_j * x + b_j) mod p. The default modulus is the
Mersenne prime 2**61 - 1, evaluated exactly in uint64 arithmetic by splitting
operands into 31/30-bit halves. Small moduli (< 2**32) are also supported so
textbook examples can be reproduced verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MERSENNE61",
    "EMPTY",
    "DegenerateInputError",
    "HashFamily",
    "signature",
    "empty_signature",
    "merge",
    "est_jaccard",
    "SketchState",
    "ExactState",
]

MERSENNE61 = (1 << 61) - 1
EMPTY = np.uint64(np.iinfo(np.uint64).max)

_U = np.uint64
_MASK31 = _U((1 << 31) - 1)
_MASK30 = _U((1 << 30) - 1)
_P61 = _U(MERSENNE61)


class DegenerateInputError(ValueError):
    """Raised when an estimate is requested for two empty sets."""


def _reduce61(x: np.ndarray) -> np.ndarray:
    x = (x & _P61) + (x >> _U(61))
    x = (x & _P61) + (x >> _U(61))
    return np.where(x >= _P61, x - _P61, x)


def _mulmod61(a: int, x: np.ndarray) -> np.ndarray:
    # a, x < 2**61. With 2**61 == 1 (mod p) every partial product fits in uint64.
    a0, a1 = _U(a & ((1 << 31) - 1)), _U(a >> 31)
    x0, x1 = x & _MASK31, x >> _U(31)
    mid = a1 * x0 + a0 * x1
    s = _U(2) * (a1 * x1) + (mid >> _U(30)) + ((mid & _MASK30) << _U(31)) + a0 * x0
    return _reduce61(s)


@dataclass(frozen=True)
class HashFamily:
    """n universal hash functions sharing one prime modulus."""

    a: tuple[int, ...]
    b: tuple[int, ...]
    modulus: int = MERSENNE61

    def __post_init__(self):
        if len(self.a) != len(self.b) or len(self.a) < 1:
            raise ValueError("need n >= 1 matching (a, b) pairs")
        if not (self.modulus == MERSENNE61 or 2 <= self.modulus < (1 << 32)):
            raise ValueError("modulus must be 2**61 - 1 or smaller than 2**32")
        if any(ai % self.modulus == 0 for ai in self.a):
            raise ValueError("every a_j must be nonzero modulo the prime")

    @property
    def n(self) -> int:
        return len(self.a)

    @classmethod
    def from_seed(cls, n: int = 100, seed: int = 0) -> "HashFamily":
        rng = np.random.default_rng(seed)
        a = rng.integers(1, MERSENNE61, size=n, dtype=np.uint64)
        b = rng.integers(0, MERSENNE61, size=n, dtype=np.uint64)
        return cls(tuple(int(v) for v in a), tuple(int(v) for v in b))

    def hash_values(self, keys) -> np.ndarray:
        """Return an (n, len(keys)) array with h_j(k) in row j."""
        x = np.asarray(keys, dtype=np.uint64).ravel()
        out = np.empty((self.n, x.size), dtype=np.uint64)
        if self.modulus == MERSENNE61:
            xr = _reduce61(x)
            for j, (aj, bj) in enumerate(zip(self.a, self.b)):
                out[j] = _reduce61(_mulmod61(aj, xr) + _U(bj))
        else:
            p = _U(self.modulus)
            xr = x % p
            for j, (aj, bj) in enumerate(zip(self.a, self.b)):
                out[j] = (_U(aj % self.modulus) * xr + _U(bj % self.modulus)) % p
        return out


def empty_signature(n: int) -> np.ndarray:
    return np.full(n, EMPTY, dtype=np.uint64)


def signature(keys, fam: HashFamily) -> np.ndarray:
    """Per-function minimum hash over ``keys``; all-EMPTY for an empty set."""
    x = np.unique(np.asarray(keys, dtype=np.uint64))
    if x.size == 0:
        return empty_signature(fam.n)
    sig = np.full(fam.n, EMPTY, dtype=np.uint64)
    # chunk to bound the (n, chunk) temporary
    for lo in range(0, x.size, 1 << 16):
        np.minimum(sig, fam.hash_values(x[lo:lo + (1 << 16)]).min(axis=1), out=sig)
    return sig


def merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ValueError(f"signature length mismatch: {a.shape} vs {b.shape}")
    return np.minimum(a, b)


def est_jaccard(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"signature length mismatch: {a.shape} vs {b.shape}")
    if np.all(a == EMPTY) and np.all(b == EMPTY):
        raise DegenerateInputError("Jaccard similarity of two empty sets is undefined")
    return float(np.count_nonzero(a == b)) / a.size


class SketchState:
    """Card and MinH arrays, indexed [node, partition].

    Mutated in place by :meth:`update`; not safe for concurrent writers.
    """

    def __init__(self, card: np.ndarray, minh: np.ndarray):
        self.card = np.array(card, dtype=np.float64)
        self.minh = np.array(minh, dtype=np.uint64)
        if self.minh.shape[:2] != self.card.shape:
            raise ValueError("card and minh disagree on (node, partition) shape")

    @classmethod
    def from_data(cls, data, fam: HashFamily) -> "SketchState":
        """``data[v][l]`` is the key array of partition l on node v."""
        nodes, parts = len(data), len(data[0])
        card = np.zeros((nodes, parts))
        minh = np.empty((nodes, parts, fam.n), dtype=np.uint64)
        for v in range(nodes):
            for l in range(parts):
                keys = np.unique(np.asarray(data[v][l], dtype=np.uint64))
                card[v, l] = keys.size
                minh[v, l] = signature(keys, fam)
        return cls(card, minh)

    @property
    def shape(self) -> tuple[int, int]:
        return self.card.shape

    def copy(self) -> "SketchState":
        return SketchState(self.card.copy(), self.minh.copy())

    def est_card(self, s: int, t: int, l: int) -> float:
        """Estimated |X(s) u X(t)| for partition l: (|S| + |T|) / (1 + J)."""
        if self.card[s, l] == 0 and self.card[t, l] == 0:
            raise DegenerateInputError(f"nodes {s} and {t} both hold no data for partition {l}")
        j = est_jaccard(self.minh[s, l], self.minh[t, l])
        return (self.card[s, l] + self.card[t, l]) / (1.0 + j)

    def union_estimates(self, l: int) -> np.ndarray:
        """All-pairs estimate of |X(s) u X(t)| for partition l (entries with two empty sets are nan)."""
        sig = self.minh[:, l, :]
        j = (sig[:, None, :] == sig[None, :, :]).mean(axis=2)
        c = self.card[:, l]
        out = (c[:, None] + c[None, :]) / (1.0 + j)
        both_empty = (c[:, None] == 0) & (c[None, :] == 0)
        out[both_empty] = np.nan
        return out

    def update(self, s: int, t: int, l: int) -> None:
        """Account for s shipping all of partition l to t."""
        self.card[t, l] = self.est_card(s, t, l)
        self.card[s, l] = 0.0
        self.minh[t, l] = merge(self.minh[s, l], self.minh[t, l])
        self.minh[s, l] = EMPTY


class ExactState:
    """Drop-in for :class:`SketchState` that tracks the true key sets.

    Used by the ``grasp_exact`` planner mode to separate estimator error from
    the scheduling heuristic.
    """

    def __init__(self, data):
        self.sets = [[np.unique(np.asarray(p, dtype=np.uint64)) for p in row] for row in data]
        self.card = np.array([[s.size for s in row] for row in self.sets], dtype=np.float64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.card.shape

    def copy(self) -> "ExactState":
        return ExactState(self.sets)

    def est_card(self, s: int, t: int, l: int) -> float:
        if self.card[s, l] == 0 and self.card[t, l] == 0:
            raise DegenerateInputError(f"nodes {s} and {t} both hold no data for partition {l}")
        return float(np.union1d(self.sets[s][l], self.sets[t][l]).size)

    def union_estimates(self, l: int) -> np.ndarray:
        n = self.card.shape[0]
        c = self.card[:, l]
        out = c[:, None] + c[None, :]
        out[(c[:, None] == 0) & (c[None, :] == 0)] = np.nan
        for s in range(n):
            for t in range(s + 1, n):
                if c[s] > 0 and c[t] > 0:
                    out[s, t] = out[t, s] = np.union1d(self.sets[s][l], self.sets[t][l]).size
        return out

    def update(self, s: int, t: int, l: int) -> None:
        self.sets[t][l] = np.union1d(self.sets[s][l], self.sets[t][l])
        self.sets[s][l] = np.empty(0, dtype=np.uint64)
        self.card[t, l] = self.sets[t][l].size
        self.card[s, l] = 0.0
