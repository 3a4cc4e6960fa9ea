"""
Estimating overlap from minhash signatures
==========================================

A signature is the per-function minimum hash over a key set. The union of
two sets has the element-wise minimum as its signature, so the planner can
track merged data without touching it.
"""

import numpy as np

from aggsched import HashFamily, est_jaccard, merge, signature

fam = HashFamily.from_seed(100, seed=0)
rng = np.random.default_rng(0)

pool = rng.choice(2**40, size=15000, replace=False).astype(np.uint64)
S, T = pool[:10000], pool[5000:]
exact = len(np.intersect1d(S, T)) / len(np.union1d(S, T))

sS, sT = signature(S, fam), signature(T, fam)
print(f"Jaccard exact {exact:.3f}  estimated {est_jaccard(sS, sT):.3f}")

# union cardinality from the estimate
J = est_jaccard(sS, sT)
print("union size", len(np.union1d(S, T)), "estimated", round((len(S) + len(T)) / (1 + J)))

print("merge == signature of union:", np.array_equal(merge(sS, sT), signature(np.union1d(S, T), fam)))

# error shrinks as the number of hash functions grows
for n in (10, 50, 100, 400):
    errs = []
    for seed in range(20):
        f = HashFamily.from_seed(n, seed)
        errs.append(abs(est_jaccard(signature(S, f), signature(T, f)) - exact))
    print(f"{n:4d} hashes: mean |error| {np.mean(errs):.3f}")
