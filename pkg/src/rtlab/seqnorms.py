"""Variation, oscillation and covering numbers of finite vector sequences."""
from __future__ import annotations

import bisect
import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_MAX_LEN = 22
COVER_EXACT_MAX_LEN = 18


@dataclass(frozen=True)
class VectorSequence:
    """Vectors ``x_k`` for ``k = index_start, ..., index_start + n - 1``."""
    values: np.ndarray
    index_start: int = 0

    @classmethod
    def of(cls, values, index_start: int = 0) -> "VectorSequence":
        arr = np.asarray(values)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("values must be a list of scalars or of equal-length vectors")
        return cls(arr, index_start)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def pos(self, k: int) -> int:
        p = k - self.index_start
        if not 0 <= p < len(self):
            raise ValueError(f"index {k} outside [{self.index_start}, {self.index_start + len(self)})")
        return p

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + [f"{p}_{c + 1}" for c in range(self.dim) for p in ("re", "im")])
        for k, row in enumerate(self.values.astype(complex)):
            w.writerow([k + self.index_start]
                       + [repr(float(f(z))) for z in row for f in (np.real, np.imag)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "VectorSequence":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r]
        idx = [int(r[0]) for r in body]
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise ValueError("indices must be contiguous")
        nums = np.array([[float(v) for v in r[1:]] for r in body])
        return cls(nums[:, 0::2] + 1j * nums[:, 1::2], idx[0])


def _as_seq(seq) -> VectorSequence:
    if isinstance(seq, VectorSequence):
        return seq
    return VectorSequence.of(seq)


def _dist(values: np.ndarray) -> np.ndarray:
    diff = values[:, None, :] - values[None, :, :]
    return np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1))


def _sup(values: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(np.abs(values) ** 2, axis=-1))))


def _enumerate_best(D: np.ndarray, r: float) -> float:
    """Max over all index subsets of the sum of r-th powers of consecutive gaps.

    Literal enumeration: every bitmask is visited once; the value of a mask is
    the value of the mask without its top element plus one gap.
    """
    n = D.shape[0]
    Dr = D ** r
    val = np.zeros(1 << n)
    hb = np.full(1 << n, -1, dtype=np.int64)
    for t in range(n):
        lo, hi = 1 << t, 1 << (t + 1)
        rest = np.arange(0, lo)
        hb[lo:hi] = t
        second = hb[rest]
        gap = np.where(second >= 0, Dr[np.maximum(second, 0), t], 0.0)
        val[lo:hi] = val[rest] + gap
    return float(val.max())


def _dp_best(D: np.ndarray, r: float) -> float:
    n = D.shape[0]
    Dr = D ** r
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = max(0.0, float(np.max(best[:j] + Dr[:j, j])))
    return float(best.max())


def variation_seminorm(seq, r: float, mode: str = "dp") -> float:
    """The homogeneous part ``sup (sum |x_{k_m} - x_{k_{m-1}}|^r)^{1/r}``."""
    s = _as_seq(seq)
    n = len(s)
    if n == 0:
        raise ValueError("empty sequence")
    if r < 1:
        raise ValueError("r must be >= 1")
    if n == 1:
        return 0.0
    D = _dist(s.values)
    if np.isinf(r):
        return float(D.max())
    if mode == "exact":
        if n > EXACT_MAX_LEN:
            raise ValueError(f"exact mode supports length <= {EXACT_MAX_LEN}")
        total = _enumerate_best(D, r)
    elif mode in ("dp", "dp_lower"):
        total = _dp_best(D, r)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return total ** (1.0 / r)


def variation_norm(seq, r: float, mode: str = "dp") -> float:
    """``sup_k |x_k|`` plus the r-variation over increasing subsequences.

    ``mode='exact'`` enumerates every subsequence (length <= 22). ``'dp'`` runs
    the O(n^2) recursion on the last chosen index, which attains the same
    supremum; ``'dp_lower'`` is accepted as an alias.
    """
    s = _as_seq(seq)
    if len(s) == 0:
        raise ValueError("empty sequence")
    return _sup(s.values) + variation_seminorm(s, r, mode)


def variation_seminorm_batch(X: np.ndarray, r: float) -> np.ndarray:
    """Exact r-variation for a batch ``X`` of shape (B, n) or (B, n, d)."""
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[..., None]
    B, n, _ = X.shape
    if n == 1:
        return np.zeros(B)
    if np.isinf(r):
        out = np.zeros(B)
        for i in range(n):
            out = np.maximum(out, np.max(np.linalg.norm(X - X[:, i:i + 1], axis=-1), axis=1))
        return out
    best = np.zeros((B, n))
    for j in range(1, n):
        gaps = np.sum(np.abs(X[:, :j] - X[:, j:j + 1]) ** 2, axis=-1) ** (r / 2)
        best[:, j] = np.max(best[:, :j] + gaps, axis=1)
    return best.max(axis=1) ** (1.0 / r)


def variation_norm_batch(X: np.ndarray, r: float) -> np.ndarray:
    X = np.asarray(X)
    mags = np.abs(X) if X.ndim == 2 else np.linalg.norm(X, axis=-1)
    return mags.max(axis=1) + variation_seminorm_batch(X, r)


def _check_partition(s: VectorSequence, U: Sequence[int]) -> list[int]:
    U = [int(u) for u in U]
    if len(U) < 2 or any(b <= a for a, b in zip(U, U[1:])):
        raise ValueError("U must be strictly increasing with at least two points")
    for u in U:
        s.pos(u)
    return U


def oscillation_norm(seq, U: Sequence[int], anchor: str = "left") -> float:
    """``(sum_j sup_{u_j <= k < u_{j+1}} |x_k - x_anchor|^2)^{1/2}``.

    ``anchor='left'`` compares to ``x_{u_j}``, ``'right'`` to ``x_{u_{j+1}}``.
    """
    s = _as_seq(seq)
    U = _check_partition(s, U)
    if anchor not in ("left", "right"):
        raise ValueError("anchor must be 'left' or 'right'")
    total = 0.0
    for a, b in zip(U, U[1:]):
        block = s.values[s.pos(a):s.pos(b)]
        ref = s.values[s.pos(a if anchor == "left" else b)]
        total += float(np.max(np.sum(np.abs(block - ref) ** 2, axis=-1)))
    return total ** 0.5


def oscillation_norm_batch(X: np.ndarray, U: Sequence[int], anchor: str = "left",
                           index_start: int = 0) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[..., None]
    total = np.zeros(X.shape[0])
    for a, b in zip(U, U[1:]):
        pa, pb = a - index_start, b - index_start
        ref = X[:, pa if anchor == "left" else pb][:, None]
        total += np.max(np.sum(np.abs(X[:, pa:pb] - ref) ** 2, axis=-1), axis=1)
    return np.sqrt(total)


def osc_var_norm(seq, U: Sequence[int], r: float, mode: str = "dp") -> float:
    return oscillation_norm(seq, U, "left") + variation_norm(seq, r, mode)


def _cover_line(xs: list, lam: float) -> int:
    """Exact cover of sorted reals: centre each ball at the last point within ``lam``
    of the leftmost uncovered one (no optimal cover can reach further right)."""
    k, i, n = 0, 0, len(xs)
    while i < n:
        c = bisect.bisect_right(xs, xs[i] + lam) - 1
        i = bisect.bisect_right(xs, xs[c] + lam)
        k += 1
    return k


def covering_number(seq, lam: float, return_exact: bool = False):
    """Fewest closed radius-``lam`` balls centred at sequence elements covering it.

    Real scalar sequences use the exact interval sweep; otherwise exact subset
    search for length <= 18, greedy (an upper bound) beyond.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    s = _as_seq(seq)
    n = len(s)
    if n == 0:
        raise ValueError("empty sequence")
    if s.dim == 1 and not np.any(s.values.imag):
        k = _cover_line(sorted(s.values[:, 0].real.tolist()), lam)
        return (k, True) if return_exact else k
    D = _dist(s.values)
    near = D <= lam
    masks = [sum(1 << j for j in range(n) if near[i, j]) for i in range(n)]
    full = (1 << n) - 1
    if n <= COVER_EXACT_MAX_LEN:
        # drop balls dominated by another ball
        uniq = sorted(set(masks), key=lambda m: -bin(m).count("1"))
        cand = [m for m in uniq if not any(o != m and (o | m) == o for o in uniq)]
        for k in range(1, n + 1):
            for combo in itertools.combinations(cand, k):
                acc = 0
                for m in combo:
                    acc |= m
                if acc == full:
                    return (k, True) if return_exact else k
    covered, k = 0, 0
    while covered != full:
        covered |= max(masks, key=lambda m: bin(m & ~covered).count("1"))
        k += 1
    return (k, False) if return_exact else k


def entropy_profile(seq, r: float) -> tuple[float, float]:
    """``sup_{0 < lam <= diam} lam * M_lam^{1/r}`` and the maximising ``lam``.

    ``M_lam`` only changes at pairwise distances, so the supremum is approached
    just below each of them (and at the diameter itself).
    """
    s = _as_seq(seq)
    D = _dist(s.values)
    levels = np.unique(D[D > 0])
    if levels.size == 0:
        return 0.0, 0.0
    if s.dim == 1 and not np.any(s.values.imag):
        xs = sorted(s.values[:, 0].real.tolist())
        cover = lambda lam: _cover_line(xs, lam)
    else:
        cover = lambda lam: covering_number(s, lam)
    best, arg = 0.0, 0.0
    for d in levels.tolist():
        for lam in (d * (1 - 1e-9), d):
            v = lam * cover(lam) ** (1.0 / r)
            if v > best:
                best, arg = v, lam
    return best, arg


def norm_json(name: str, value: float, r=None, anchor=None, mode=None) -> str:
    return json.dumps({"norm_name": name, "r": r, "anchor": anchor,
                       "value": value, "mode": mode})
