"""Measure-preserving systems and weighted ergodic averages along their orbits."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .probes import DenseFamily, ShiftAverageFamily, objective, run_protocol

GOLDEN = (np.sqrt(5.0) - 1) / 2


def _split(a: float) -> tuple[float, float]:
    """Dekker split: ``hi`` has at most 26 significant bits, ``hi + lo == a``."""
    c = 134217729.0 * a  # 2^27 + 1
    hi = c - (c - a)
    return hi, a - hi


@dataclass(frozen=True)
class DiscreteSystem:
    kind: str  # rotation | doubling | cyclic_shift
    alpha: float = GOLDEN
    K: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("rotation", "doubling", "cyclic_shift"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == "rotation" and not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.kind == "cyclic_shift" and self.K < 1:
            raise ValueError("cyclic shift needs K >= 1")

    @classmethod
    def from_json(cls, d) -> "DiscreteSystem":
        d = json.loads(d) if isinstance(d, str) else dict(d)
        return cls(d["kind"], float(d.get("alpha", GOLDEN)), int(d.get("K", 0)), int(d.get("seed", 0)))

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "alpha": self.alpha, "K": self.K, "seed": self.seed})

    def orbit(self, x0, n_lo: int, n_hi: int) -> np.ndarray:
        """States ``tau^n x0`` for ``n_lo <= n < n_hi``.

        Rotation: ``x0 + n alpha mod 1`` with ``n alpha`` split so the integer
        part is removed exactly. Doubling: the base point is the seeded
        two-sided bit stream itself (``x0`` is ignored) and the state at ``n`` is
        read off bits ``n+1 .. n+53``. Cyclic: ``(x0 + n) mod K``.
        """
        n = np.arange(n_lo, n_hi)
        if self.kind == "rotation":
            hi, lo = _split(self.alpha)
            nf = n.astype(float)
            a = nf * hi  # exact: 26-bit times <= 27-bit integers
            frac = a - np.floor(a)
            return np.mod(np.mod(float(x0) + frac, 1.0) + nf * lo, 1.0)
        if self.kind == "doubling":
            return self._doubling_states(n_lo, n_hi)
        return (int(x0) + n) % self.K

    def _doubling_states(self, n_lo: int, n_hi: int) -> np.ndarray:
        bits = self.bits(n_lo + 1, n_hi + 53)
        w = np.lib.stride_tricks.sliding_window_view(bits, 53).astype(float)
        return w @ (0.5 ** np.arange(1, 54))

    def bits(self, lo: int, hi: int) -> np.ndarray:
        """Bits ``b_k`` for ``lo <= k < hi`` of the stream, deterministic in ``seed``.

        Bits come in blocks of 4096 so any window is reproducible on its own.
        """
        out = []
        B = 4096
        for blk in range(lo // B, (hi - 1) // B + 1):
            rng = np.random.default_rng([self.seed, blk & 0xFFFFFFFF, blk < 0])
            bb = rng.integers(0, 2, B, dtype=np.int8)
            s, e = max(lo, blk * B) - blk * B, min(hi, (blk + 1) * B) - blk * B
            out.append(bb[s:e])
        return np.concatenate(out)

    def invariant_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "cyclic_shift":
            return rng.integers(0, self.K, size)
        return rng.random(size)


@dataclass
class OrbitWeights:
    """Cached ``f(tau^n x)`` for ``n_lo <= n < n_hi``."""
    system: DiscreteSystem
    x: float
    f: Callable
    n_lo: int
    n_hi: int
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.f(self.system.orbit(self.x, self.n_lo, self.n_hi)), dtype=complex)

    @classmethod
    def constant(cls, c: complex, n_lo: int, n_hi: int) -> "OrbitWeights":
        return cls(DiscreteSystem("cyclic_shift", K=1), 0, lambda s: np.full(np.shape(s), c), n_lo, n_hi)

    @classmethod
    def from_values(cls, values, n_lo: int = 0) -> "OrbitWeights":
        vals = np.asarray(values, dtype=complex)
        ow = cls.constant(0, n_lo, n_lo + vals.size)
        ow.values = vals
        return ow

    def window(self, lo: int, hi: int) -> np.ndarray:
        if lo < self.n_lo or hi > self.n_hi:
            raise ValueError(f"window [{lo}, {hi}) outside cached [{self.n_lo}, {self.n_hi})")
        return self.values[lo - self.n_lo:hi - self.n_lo]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "f_re", "f_im"])
        for n, v in zip(range(self.n_lo, self.n_hi), self.values):
            w.writerow([n, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


def _g_orbit(sys_y: DiscreteSystem, g, y, lo: int, hi: int) -> np.ndarray:
    return np.asarray(g(sys_y.orbit(y, lo, hi)), dtype=complex)


def return_avg(fw: OrbitWeights, sys_y: DiscreteSystem, g, y, N: int) -> complex:
    """``(1/N) sum_{n<N} f(tau^n x) g(sigma^n y)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return complex(np.mean(fw.window(0, N) * _g_orbit(sys_y, g, y, 0, N)))


def return_avg_path(fw: OrbitWeights, sys_y: DiscreteSystem, g, y, N_max: int) -> np.ndarray:
    """All averages for ``N = 1 .. N_max`` at once."""
    v = np.cumsum(fw.window(0, N_max) * _g_orbit(sys_y, g, y, 0, N_max))
    return v / np.arange(1, N_max + 1)


def hilbert_series(fw: OrbitWeights, sys_y: DiscreteSystem, g, y, N: int) -> complex:
    """``sum'_{|n| <= N} f(tau^n x) g(sigma^n y) / n``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(-N, N + 1)
    terms = fw.window(-N, N + 1) * _g_orbit(sys_y, g, y, -N, N + 1)
    keep = n != 0
    return complex(np.sum(terms[keep] / n[keep]))


def wiener_wintner(fw: OrbitWeights, theta: float, N: int) -> complex:
    n = np.arange(N)
    return complex(np.mean(fw.window(0, N) * np.exp(2j * np.pi * n * theta)))


def cotlar_series(fw: OrbitWeights, N: int) -> complex:
    n = np.arange(-N, N + 1)
    keep = n != 0
    return complex(np.sum(fw.window(-N, N + 1)[keep] / n[keep]))


def lacunary_differences(series: Callable[[int], complex], m_range) -> np.ndarray:
    """``|S(2^{m+1}) - S(2^m)|`` for each m."""
    return np.array([abs(series(2 ** (m + 1)) - series(2 ** m)) for m in m_range])


def averaged_lacunary_differences(series_at: Callable[[int], np.ndarray], m_range) -> np.ndarray:
    """Root-mean-square over base points of ``|S(2^{m+1}) - S(2^m)|``.

    ``series_at(N)`` returns the series at ``N`` for a fixed sample of base points.
    """
    return np.array([float(np.sqrt(np.mean(np.abs(series_at(2 ** (m + 1)) - series_at(2 ** m)) ** 2)))
                     for m in m_range])


def inversions(values) -> int:
    v = np.asarray(values)
    return int(np.sum(v[1:] > v[:-1]))


def birkhoff_average(system: DiscreteSystem, g, x, N: int) -> complex:
    return complex(np.mean(np.asarray(g(system.orbit(x, 0, N)), dtype=complex)))


def ks_uniform(samples: np.ndarray) -> float:
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - s), np.max(s - (i - 1) / n)))


# ---------------------------------------------------------------------------
# maximal return-time norms


@dataclass
class MaxNormResult:
    value: float
    initial_best: float
    counts: dict
    probe: np.ndarray | None = None


def cyclic_return_family(fw: OrbitWeights, K: int, N_max: int) -> ShiftAverageFamily:
    """On ``Z_K`` with the shift, probes are vectors; ``u[y, N]`` is the return average at ``y``."""
    return ShiftAverageFamily(fw.window(0, N_max), K, np.arange(K), wrap=K,
                              weights=np.full(K, 1.0 / K))


def rotation_return_family(fw: OrbitWeights, sys_y: DiscreteSystem, y_samples, N_max: int,
                           max_freq: int = 16) -> DenseFamily:
    """Probes ``g = sum_{|j| <= J} c_j e^{2 pi i j y}`` with ``|g|_2 = |c|``."""
    y = np.asarray(y_samples, dtype=float)
    j = np.arange(-max_freq, max_freq + 1)
    f = fw.window(0, N_max)
    n = np.arange(N_max)
    # e^{2 pi i j (y + n alpha)} = e^{2 pi i j y} e^{2 pi i j n alpha}
    rot = np.exp(2j * np.pi * np.outer(n, j) * sys_y.alpha)  # (M, J)
    path = np.cumsum(f[:, None] * rot, axis=0) / (n + 1)[:, None]  # (M, J)
    A = np.exp(2j * np.pi * np.outer(y, j))[:, None, :] * path[None]
    return DenseFamily(A, weights=np.full(y.size, 1.0 / y.size), basis="fourier")


def max_return_norm(fw: OrbitWeights, sys_y: DiscreteSystem, g_probes=None, y_samples=None,
                    N_max: int = 64, rng: np.random.Generator | None = None,
                    n_random: int = 512, n_freq: int = 64, ascent_steps: int = 50,
                    max_freq: int = 16) -> MaxNormResult:
    """Lower bound for ``sup_{|g|=1} || sup_{N <= N_max} |return average| ||_{L^2_y}``.

    With explicit ``g_probes`` only those are evaluated (each normalised on the
    sampled y set); otherwise the full probe protocol runs.
    """
    if sys_y.kind == "cyclic_shift":
        fam = cyclic_return_family(fw, sys_y.K, N_max)
        if g_probes is not None:
            G = np.atleast_2d(np.asarray(g_probes, dtype=complex))
            if G.size == 0:
                raise ValueError("empty probe set")
            G = G / np.sqrt(np.mean(np.abs(G) ** 2, axis=1, keepdims=True))
            vals = objective(fam, G)
            return MaxNormResult(float(vals.max()), float(vals.max()), {"total": len(G)})
    else:
        y = np.linspace(0, 1, 64, endpoint=False) if y_samples is None else np.asarray(y_samples)
        if g_probes is not None:
            probes = list(g_probes)
            if not probes:
                raise ValueError("empty probe set")
            best = 0.0
            for g in probes:
                vals = np.array([np.max(np.abs(return_avg_path(fw, sys_y, g, yy, N_max))) for yy in y])
                gn = np.sqrt(np.mean(np.abs(np.asarray(g(y), dtype=complex)) ** 2))
                best = max(best, float(np.sqrt(np.mean(vals ** 2))) / gn)
            return MaxNormResult(best, best, {"total": len(probes)})
        if sys_y.kind != "rotation":
            raise ValueError("probe protocol supports rotation and cyclic systems")
        fam = rotation_return_family(fw, sys_y, y, N_max, max_freq)
    rng = np.random.default_rng(0) if rng is None else rng
    res = run_protocol(fam, rng, n_random, n_freq, ascent_steps)
    # vector probes on Z_K are normalised in l^2; the L^2(uniform) norm is sqrt(K) smaller
    scale = np.sqrt(sys_y.K) if sys_y.kind == "cyclic_shift" else 1.0
    return MaxNormResult(res.value * scale, res.initial_best * scale, res.counts, res.probe)


# ---------------------------------------------------------------------------
# transfer best constants


def transfer_family(phi: np.ndarray, phi_lo: int, a: int, width: int) -> ShiftAverageFamily | None:
    """``u[c, N] = (1/N) sum_{b<N} phi(a+b) psi(c+b)`` with psi supported in ``[0, width)``."""
    phi = np.asarray(phi, dtype=complex)
    hi = phi_lo + phi.size - 1
    B = hi - a  # last useful b
    if B < 0:
        return None
    b = np.arange(B + 1)
    idx = a + b - phi_lo
    f = np.where((idx >= 0) & (idx < phi.size), phi[np.clip(idx, 0, phi.size - 1)], 0)
    offsets = np.arange(-B, width)
    return ShiftAverageFamily(f, width, offsets)


def transfer_best_constant(phi, a: int, phi_lo: int = 0, width: int | None = None,
                           rng: np.random.Generator | None = None, n_random: int = 64,
                           n_freq: int = 16, ascent_steps: int = 50) -> float:
    """Probe lower bound for the best constant ``C(phi)(a)``.

    Beyond ``b = max supp(phi) - a`` partial sums stop changing, so ``N`` up to
    that point suffices.
    """
    phi = np.asarray(phi, dtype=complex)
    if not np.any(phi):
        return 0.0
    width = width or 2 * phi.size
    fam = transfer_family(phi, phi_lo, a, width)
    if fam is None:
        return 0.0
    rng = np.random.default_rng(0) if rng is None else rng
    extra = np.zeros(width, dtype=complex)
    extra[0] = 1
    return run_protocol(fam, rng, n_random, n_freq, ascent_steps, extra=extra).value


def transfer_constants(phi, a_range, p_list=(1.5, 2, 3), **kw) -> dict:
    """C(phi)(a) over a range of ``a`` and the recorded ratio
    ``sum_a C^p / sum |phi|^p`` per ``p``, with the analytic tail beyond the range.
    """
    phi = np.asarray(phi, dtype=complex)
    C = np.array([transfer_best_constant(phi, a, **kw) for a in a_range])
    l1 = float(np.sum(np.abs(phi)))
    a_min = min(a_range)
    ratios, tails = {}, {}
    for p in p_list:
        # C(phi)(a) <= |phi|_1 / (|a| - max supp + 1) for a below the range
        t = np.arange(1, 200000)
        tail = float(np.sum((l1 / (abs(a_min) + t)) ** p)) if a_min < 0 else 0.0
        ratios[p] = float(np.sum(C ** p) / np.sum(np.abs(phi) ** p))
        tails[p] = tail / float(np.sum(np.abs(phi) ** p))
    return {"C": C, "ratios": ratios, "tail_bounds": tails}
