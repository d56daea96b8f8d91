"""Independent brute-force oracles shared by the test-suite."""
import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def consecutive_incidence(n: int) -> np.ndarray:
    """Rows: subsets of range(n); columns: ordered pairs (i, j); 1 if adjacent in subset."""
    rows = []
    for mask in range(1 << n):
        idx = [k for k in range(n) if mask >> k & 1]
        row = np.zeros(n * n)
        for a, b in zip(idx, idx[1:]):
            row[a * n + b] = 1
        rows.append(row)
    return np.array(rows)


def variation_bruteforce(X: np.ndarray, r: float) -> np.ndarray:
    """Exhaustive r-variation seminorm for a batch of scalar sequences (B, n)."""
    X = np.asarray(X)
    B, n = X.shape
    Dr = np.abs(X[:, :, None] - X[:, None, :]) ** r
    sums = Dr.reshape(B, n * n) @ consecutive_incidence(n).T
    return sums.max(axis=1) ** (1 / r)


def variation_itertools(x, r):
    x = list(x)
    best = 0.0
    for k in range(2, len(x) + 1):
        for idx in itertools.combinations(range(len(x)), k):
            s = sum(abs(x[b] - x[a]) ** r for a, b in zip(idx, idx[1:]))
            best = max(best, s)
    return best ** (1 / r)


def covering_bruteforce(points, lam):
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    for k in range(1, n + 1):
        for centres in itertools.combinations(range(n), k):
            if all(min(abs(pts[c] - p) for c in centres) <= lam for p in pts):
                return k
    return n
