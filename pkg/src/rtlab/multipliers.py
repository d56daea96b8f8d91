"""Band multipliers around a finite frequency set, multiplier norms and the model operator.

``Delta_k f = sum_{omega in R_k} (m_omega 1_omega f^)^vee`` where ``R_k`` holds the
grid intervals of length ``2^-k`` that contain a point of the frequency set. All
operators act by spectral masking on a periodic sample grid; band masks are
half-open, ``[left, right)``, so adjacent bands never share a bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import STANDARD, GridInterval, GridSpec, pow2
from .probes import MultiplierFamily, run_protocol
from .seqnorms import oscillation_norm_batch, variation_norm_batch
from .signal import SampledSignal, fft_frequencies
from .timefreq import MODULUS, SampleGrid, Tile, analyze, psi0, window_hat

MIN_BINS = 8


# ---------------------------------------------------------------------------
# frequency sets and band families


@dataclass(frozen=True)
class FrequencyPointSet:
    points: tuple
    separated: bool = False

    def __post_init__(self):
        pts = tuple(Fraction(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("empty frequency set")
        if len(set(pts)) != len(pts):
            raise ValueError("frequency points must be distinct")
        if self.separated:
            cells = [math.floor(p) for p in pts]
            if len(set(cells)) != len(cells):
                raise ValueError("two points share a unit frequency interval")

    def __len__(self):
        return len(self.points)

    @classmethod
    def random(cls, rng: np.random.Generator, L: int, span: int | None = None,
               denominator: int = 64) -> "FrequencyPointSet":
        """``L`` separated points, one in each of ``L`` distinct unit cells of ``[0, span)``."""
        span = span or L
        cells = np.sort(rng.choice(span, size=L, replace=False))
        offs = rng.integers(0, denominator, size=L)
        return cls(tuple(int(c) + Fraction(int(o), denominator) for c, o in zip(cells, offs)), True)


@dataclass
class BandFamily:
    """``R_k`` on a frequency grid plus a per-band multiplier ``m(omega, xi)``."""
    points: FrequencyPointSet
    grid: GridSpec = STANDARD
    multiplier: Callable | None = None

    def bands(self, k: int) -> list[GridInterval]:
        """Grid intervals of length ``2^-k`` containing a point, sorted by position."""
        origin = self.grid.origin(-k)
        if origin is None:
            raise ValueError(f"scale {-k} is not admissible for {self.grid}")
        step = pow2(-k)
        idx = sorted({math.floor((p - origin) / step) for p in self.points.points})
        off = self.grid.offset(-k)
        return [GridInterval(-k, l, off, self.grid.N) for l in idx]

    def band_map(self, k: int) -> dict[GridInterval, list[int]]:
        out: dict[GridInterval, list[int]] = {w: [] for w in self.bands(k)}
        for j, p in enumerate(self.points.points):
            for w in out:
                if w.left <= p < w.right:
                    out[w].append(j)
        return out

    def symbol(self, k: int, xi: np.ndarray) -> np.ndarray:
        """Sum over bands of ``m_omega 1_[left, right)`` at the frequencies ``xi``."""
        out = np.zeros(xi.size, dtype=complex)
        dxi = np.min(np.diff(np.sort(xi))) if xi.size > 1 else 1.0
        for w in self.bands(k):
            a, b = float(w.left), float(w.right)
            if (b - a) / dxi < MIN_BINS:
                raise ValueError(f"band {w} ({a}, {b}) is resolved by fewer than {MIN_BINS} bins")
            mask = (xi >= a) & (xi < b)
            out[mask] += 1.0 if self.multiplier is None else self.multiplier(w, xi[mask])
        return out

    def sup_multiplier(self, k: int, xi: np.ndarray) -> float:
        return float(np.max(np.abs(self.symbol(k, xi)))) if xi.size else 0.0


def _spectrum(f: SampledSignal) -> tuple[np.ndarray, np.ndarray]:
    return np.fft.fft(f.samples), fft_frequencies(f.n, f.spacing)


def apply_band_multiplier(family: BandFamily, k: int, f: SampledSignal) -> SampledSignal:
    F, xi = _spectrum(f)
    return f.with_samples(np.fft.ifft(F * family.symbol(k, xi)), k=k)


def delta_stack(family: BandFamily, f: SampledSignal, k_values: Iterable[int]) -> np.ndarray:
    """``Delta_k f`` for each ``k``, shape ``(len(k_values), n)``."""
    F, xi = _spectrum(f)
    return np.array([np.fft.ifft(F * family.symbol(k, xi)) for k in k_values])


def maximal_delta(family: BandFamily, f: SampledSignal, k_range: Iterable[int]) -> SampledSignal:
    ks = list(k_range)
    if not ks:
        raise ValueError("empty k range")
    F, xi = _spectrum(f)
    best = np.zeros(f.n)
    for k in ks:
        best = np.maximum(best, np.abs(np.fft.ifft(F * family.symbol(k, xi))))
    return f.with_samples(best, k_range=(min(ks), max(ks)))


def _l2(values: np.ndarray, spacing: float) -> float:
    return float(np.sqrt(spacing * np.sum(np.abs(values) ** 2)))


def oscillation_delta(family: BandFamily, f: SampledSignal, U: Sequence[int]) -> float:
    """``(sum_j || sup_{u_j <= k < u_{j+1}} |Delta_k f - Delta_{u_j} f| ||_2^2)^{1/2}``."""
    U = [int(u) for u in U]
    if len(U) < 2 or any(b <= a for a, b in zip(U, U[1:])):
        raise ValueError("U must be strictly increasing with at least two points")
    D = delta_stack(family, f, range(U[0], U[-1]))
    total = 0.0
    for a, b in zip(U, U[1:]):
        block = D[a - U[0]:b - U[0]]
        total += _l2(np.max(np.abs(block - block[0]), axis=0), f.spacing) ** 2
    return math.sqrt(total)


def block_weights(family: BandFamily, f: SampledSignal, k_values: Sequence[int]) -> np.ndarray:
    """``W[a, b] = || sup_{a <= k < b} |Delta_k f - Delta_a f| ||_2^2`` over positions in ``k_values``."""
    D = delta_stack(family, f, k_values)
    K = len(k_values)
    W = np.zeros((K + 1, K + 1))
    for a in range(K):
        run = np.zeros(f.n)
        for b in range(a + 1, K + 1):
            run = np.maximum(run, np.abs(D[b - 1] - D[a]))
            W[a, b] = _l2(run, f.spacing) ** 2
    return W


def worst_partition(family: BandFamily, f: SampledSignal, k_values: Sequence[int],
                    J: int, weights: np.ndarray | None = None) -> tuple[float, list[int]]:
    """Largest oscillation over partitions with at most ``J`` points inside ``k_values`` (exact DP).

    Extra points placed past the window only add blocks, so this is a lower
    bound for the supremum over all ``J``-point partitions. The last point may
    sit one past the end of ``k_values``. Pass ``weights`` from
    :func:`block_weights` to reuse them across several ``J``.
    """
    if J < 2:
        raise ValueError("J must be >= 2")
    W = block_weights(family, f, k_values) if weights is None else weights
    K = len(k_values)
    blocks = min(J, K + 1) - 1
    # best[j, b]: best sum of j blocks whose last point is position b
    best = np.full((blocks + 1, K + 1), -np.inf)
    arg = np.zeros((blocks + 1, K + 1), dtype=int)
    best[0, :] = 0.0
    for j in range(1, blocks + 1):
        for b in range(1, K + 1):
            cand = best[j - 1, :b] + W[:b, b]
            a = int(np.argmax(cand))
            best[j, b], arg[j, b] = cand[a], a
    j, b = np.unravel_index(int(np.argmax(best[1:])), best[1:].shape)
    j += 1
    value = best[j, b]
    pos = [int(b)]
    for jj in range(j, 0, -1):
        b = arg[jj, b]
        pos.append(int(b))
    pos.reverse()
    ks = list(k_values) + [k_values[-1] + 1]
    return math.sqrt(max(value, 0.0)), [ks[p] for p in pos]


# ---------------------------------------------------------------------------
# nested chains and partial band sums


def _check_chain(chain: Sequence) -> list[tuple[Fraction, Fraction]]:
    ivs = []
    for w in chain:
        a, b = (w.left, w.right) if isinstance(w, GridInterval) else (Fraction(w[0]), Fraction(w[1]))
        ivs.append((a, b))
    if not ivs:
        raise ValueError("empty chain")
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        if not (a0 <= a1 and b1 <= b0):
            raise ValueError(f"chain is not nested at [{a1}, {b1}] inside [{a0}, {b0}]")
        if (b1 - a1) * 2 != (b0 - a0):
            raise ValueError("consecutive chain lengths must halve")
    return ivs


def chain_projections(chain: Sequence, f: SampledSignal) -> np.ndarray:
    """``(1_{omega_k} f^)^vee`` for every interval of the chain, shape ``(n, K)``."""
    ivs = _check_chain(chain)
    F, xi = _spectrum(f)
    dxi = 1.0 / (f.n * f.spacing)
    out = np.empty((f.n, len(ivs)), dtype=complex)
    for k, (a, b) in enumerate(ivs):
        if float(b - a) / dxi < MIN_BINS:
            raise ValueError(f"band [{a}, {b}] is resolved by fewer than {MIN_BINS} bins")
        out[:, k] = np.fft.ifft(F * ((xi >= float(a)) & (xi < float(b))))
    return out


def nested_band_variation(chain: Sequence, f: SampledSignal, r: float, U: Sequence[int],
                          chunk: int = 8192) -> float:
    """``|| ||(P_{omega_k} f)_k||_{O_U} + ||(P_{omega_k} f)_k||_{V^r} ||_{L^2_x}``.

    ``U`` indexes positions in the chain.
    """
    if not r > 2:
        raise ValueError("r must exceed 2")
    X = chain_projections(chain, f)
    vals = np.empty(f.n)
    for s in range(0, f.n, chunk):
        blk = X[s:s + chunk]
        vals[s:s + chunk] = oscillation_norm_batch(blk, U) + variation_norm_batch(blk, r)
    return _l2(vals, f.spacing)


def random_chain(rng: np.random.Generator, K: int, top: GridInterval) -> list[GridInterval]:
    chain = [top]
    for _ in range(K - 1):
        w = chain[-1]
        chain.append(GridInterval(w.i - 1, 2 * w.l + int(rng.integers(0, 2)), 0, 1))
    return chain


def partial_band_maxima(bands: Sequence[tuple[float, float]], f: SampledSignal) -> list[float]:
    """``A_m = || sup_{j <= 2^m} |sum_{i < j} P_{band_i} f| ||_2`` for ``2^m <= len(bands)``."""
    F, xi = _spectrum(f)
    cur = np.zeros(f.n, dtype=complex)
    best = np.zeros(f.n)
    out = []
    for j, (a, b) in enumerate(bands, start=1):
        cur = cur + np.fft.ifft(F * ((xi >= a) & (xi < b)))
        best = np.maximum(best, np.abs(cur))
        if j & (j - 1) == 0:
            out.append(_l2(best, f.spacing))
    return out


# ---------------------------------------------------------------------------
# multiplier norms


@dataclass
class MultiplierEstimate:
    value: float
    p: float
    probes: int
    sup_symbol: float | None = None
    best_probe: int = -1


def mp_norm_estimate(m: Callable, p: float, probes: Sequence[SampledSignal]) -> MultiplierEstimate:
    """Largest ``||(m h^)^vee||_p / ||h||_p`` over the probes (a lower bound for ``||m||_{M_p}``).

    For ``p = 2`` the exact value ``sup |m|`` on the probe grid is attached.
    """
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    best, arg = 0.0, -1
    for j, h in enumerate(probes):
        nh = h.norm(p)
        if nh == 0:
            continue
        F, xi = _spectrum(h)
        out = h.with_samples(np.fft.ifft(F * m(xi)))
        v = out.norm(p) / nh
        if v > best:
            best, arg = v, j
    sup = None
    if p == 2:
        h = probes[0]
        sup = float(np.max(np.abs(m(fft_frequencies(h.n, h.spacing)))))
    return MultiplierEstimate(float(best), p, len(probes), sup, arg)


def _longest_run_centre(mask: np.ndarray, xi: np.ndarray) -> float:
    order = np.argsort(xi)
    mk, xs = mask[order], xi[order]
    best_len, best_c, run = 0, xs[int(np.argmax(mk))], 0
    for j in range(mk.size):
        run = run + 1 if mk[j] else 0
        if run > best_len:
            best_len, best_c = run, 0.5 * (xs[j - run + 1] + xs[j])
    return float(best_c)


def standard_probes(grid: SampleGrid, m: Callable, rng: np.random.Generator,
                    count: int = 16) -> list[SampledSignal]:
    """Random smooth probes plus wide Gaussians modulated to where ``|m|`` peaks."""
    xi = grid.xi
    a = np.abs(m(xi))
    centre = _longest_run_centre(a >= a.max() * (1 - 1e-12), xi)
    x = grid.x
    out = []
    for width in (grid.period / 16, grid.period / 32, grid.period / 64):
        out.append(grid.signal(np.exp(-0.5 * (x / width) ** 2 + 2j * np.pi * centre * x)))
    for _ in range(count):
        spec = (rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)) * np.exp(-0.5 * xi ** 2)
        out.append(grid.from_spectrum(spec))
    return out


@dataclass
class SequenceEstimate:
    value: float
    initial_best: float
    counts: dict
    sup_symbol: float


def m2star_estimate(symbols: np.ndarray, rng: np.random.Generator, n_random: int = 64,
                    n_freq: int = 64, ascent_steps: int = 30) -> SequenceEstimate:
    """Probe lower bound for the ``M_2^*`` norm of multipliers sampled on a uniform theta grid.

    ``symbols`` has shape ``(K, n_theta)`` (or ``(B, K, n_theta)`` for block sums).
    """
    fam = MultiplierFamily(symbols)
    res = run_protocol(fam, rng, n_random, n_freq, ascent_steps)
    return SequenceEstimate(res.value, res.initial_best, res.counts,
                            float(np.max(np.abs(fam.S))) if fam.S.size else 0.0)


# ---------------------------------------------------------------------------
# sign patterns


@dataclass
class SignPatternReport:
    L: int
    q: float
    norm_fL: float
    square_norm: float
    best_ratio: float        # max_eps ||f_L||_q / ||g_eps||_q  (lower bound for the sign multiplier norm)
    literal_ratio: float     # max_eps ||g_eps||_q / ||f_L||_q
    best_signs: list = field(default_factory=list)
    draws: int = 0


def sign_pattern_lower_bound(L: int, q: float, rng: np.random.Generator, draws: int = 256,
                             spacing: float = 1 / 256, period: float = 512.0) -> SignPatternReport:
    """Random sign patterns against ``f_L`` with ``f_L^ = 1_[0, L)``.

    ``g_eps`` has spectrum ``sum_l eps_l 1_[l, l+1)``; applying the sign multiplier
    to ``g_eps`` returns ``f_L``.
    """
    if not 2 < q < np.inf:
        raise ValueError("q must lie in (2, inf)")
    if not 1 <= L <= 64:
        raise ValueError("L must lie in [1, 64]")
    n = int(round(period / spacing))
    if n & (n - 1):
        raise ValueError("period / spacing must be a power of two")
    xi = fft_frequencies(n, spacing)
    cell = np.floor(xi).astype(int)
    inband = (xi >= 0) & (xi < L)

    def from_signs(eps: np.ndarray) -> np.ndarray:
        spec = np.where(inband, eps[np.clip(cell, 0, L - 1)], 0.0)
        return np.fft.ifft(spec) * n / period  # Riemann sum of the inverse transform

    def qnorm(z):
        return float((spacing * np.sum(np.abs(z) ** q)) ** (1 / q))

    fL = qnorm(from_signs(np.ones(L)))
    one = np.zeros(L)
    one[0] = 1
    square = math.sqrt(L) * qnorm(from_signs(one))  # every band piece has the same modulus
    best, lit, best_eps = 0.0, 0.0, np.ones(L)
    for _ in range(draws):
        eps = rng.choice([-1.0, 1.0], size=L)
        eps[0] = 1.0  # a global sign changes nothing
        g = qnorm(from_signs(eps))
        if fL / g > best:
            best, best_eps = fL / g, eps
        lit = max(lit, g / fL)
    return SignPatternReport(L, q, fL, square, best, lit, [int(e) for e in best_eps], draws)


# ---------------------------------------------------------------------------
# exponent fits


@dataclass
class ExponentFit:
    exponent: float
    stderr: float
    intercept: float
    residuals: list


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> ExponentFit:
    """Least squares ``log y = a log x + b`` with the standard error of ``a``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    dof = max(lx.size - 2, 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return ExponentFit(float(coef[0]), float(np.sqrt(cov[0, 0])), float(coef[1]), [float(r) for r in res])


# ---------------------------------------------------------------------------
# the model operator


class ModelOperator:
    """``sum_{|I_s| < 2^k} a_s phi_s(x, theta)`` at chosen points ``x`` and a uniform theta grid.

    ``phi_s(x, theta) = int psi0(2^i (theta - xi)) phi_s^(xi) e^{2 pi i xi x} dxi`` is
    evaluated directly from the convolution formula at every grid theta; call
    :meth:`precompute` before any evaluation.
    """

    def __init__(self, coeffs: dict, grid: SampleGrid, thetas: np.ndarray):
        self.coeffs = dict(coeffs)
        self.grid = grid
        self.thetas = np.asarray(thetas, dtype=float)
        self.scales = sorted({t.scale for t in self.coeffs})
        self.fields: np.ndarray | None = None
        self.x: np.ndarray | None = None

    @classmethod
    def from_signal(cls, f: SampledSignal, tiles: Sequence[Tile], thetas: np.ndarray) -> "ModelOperator":
        return cls(analyze(f, tiles), SampleGrid.of(f), thetas)

    @property
    def levels(self) -> list[int]:
        """The ``k`` at which the truncated sum changes: one past each tile scale."""
        return [i + 1 for i in self.scales]

    def precompute(self, x: np.ndarray) -> "ModelOperator":
        x = np.asarray(x, dtype=float)
        xi, dxi = self.grid.xi, self.grid.dxi
        F = np.zeros((len(self.scales), self.thetas.size, x.size), dtype=complex)
        pos = {i: j for j, i in enumerate(self.scales)}
        for s, a in self.coeffs.items():
            if a == 0:
                continue
            i, m, l = s.scale, s.m, s.l
            u = 2.0 ** i * xi - l / MODULUS
            band = np.flatnonzero((u > 0) & (u < 2 / MODULUS))
            h0, h1 = (float(v) for v in s.halves[1].endpoints())
            th = np.flatnonzero((self.thetas >= h0) & (self.thetas <= h1))
            if band.size == 0 or th.size == 0:
                continue
            ph = 2.0 ** (i / 2) * np.exp(-2j * np.pi * m * u[band]) * window_hat(u[band])
            V = psi0(2.0 ** i * (self.thetas[th, None] - xi[None, band])) * ph[None]
            E = np.exp(2j * np.pi * np.outer(xi[band], x))
            F[pos[i], th] += a * dxi * (V @ E)
        self.fields, self.x = F, x
        return self

    def _need(self):
        if self.fields is None:
            raise RuntimeError("model operator used before precompute()")

    def value(self, x_index: int, theta_index: int, k: int) -> complex:
        self._need()
        keep = [j for j, i in enumerate(self.scales) if i < k]
        return complex(self.fields[keep, theta_index, x_index].sum()) if keep else 0j

    def symbols(self, x_index: int, ks: Sequence[int] | None = None) -> np.ndarray:
        """``m_k(theta)`` at one point, shape ``(len(ks), n_theta)``."""
        self._need()
        ks = self.levels if ks is None else list(ks)
        cum = np.cumsum(self.fields[:, :, x_index], axis=0)
        out = np.zeros((len(ks), self.thetas.size), dtype=complex)
        for r, k in enumerate(ks):
            q = sum(1 for i in self.scales if i < k)
            if q:
                out[r] = cum[q - 1]
        return out

    def _x_norm(self, vals: np.ndarray, p: float, dx: float) -> float:
        return float((dx * np.sum(np.abs(vals) ** p)) ** (1 / p))

    def maximal(self, rng: np.random.Generator, p: float = 2, dx: float | None = None,
                **protocol) -> tuple[float, np.ndarray]:
        """``|| M_2^*((m_k(x, .))_k) ||_{L^p_x}`` over the precomputed points, per-point values attached."""
        self._need()
        dx = self._spacing(dx)
        vals = np.zeros(self.x.size)
        if self.scales:
            for j in range(self.x.size):
                S = self.symbols(j)
                if np.any(S):
                    vals[j] = m2star_estimate(S, rng, **protocol).value
        return self._x_norm(vals, p, dx), vals

    def square(self, p: float = 2, dx: float | None = None) -> tuple[float, np.ndarray]:
        """``M_2`` norm of the square function of the single-scale pieces (exact: sup over theta)."""
        self._need()
        dx = self._spacing(dx)
        vals = np.sqrt(np.sum(np.abs(self.fields) ** 2, axis=0)).max(axis=0) if self.scales \
            else np.zeros(self.x.size)
        return self._x_norm(vals, p, dx), vals

    def oscillation(self, U: Sequence[int], rng: np.random.Generator, p: float = 2,
                    dx: float | None = None, **protocol) -> tuple[float, np.ndarray]:
        """Blocks ``[u_j, u_{j+1})`` of ``m_k - m_{u_j}`` probed jointly (``O_U``-style ``M_2^*``)."""
        self._need()
        dx = self._spacing(dx)
        U = [int(u) for u in U]
        width = max(b - a for a, b in zip(U, U[1:]))
        vals = np.zeros(self.x.size)
        for j in range(self.x.size):
            S = np.zeros((len(U) - 1, width, self.thetas.size), dtype=complex)
            for b, (lo, hi) in enumerate(zip(U, U[1:])):
                block = self.symbols(j, range(lo, hi))
                S[b, :hi - lo] = block - block[0]
            if np.any(S):
                vals[j] = m2star_estimate(S, rng, **protocol).value
        return self._x_norm(vals, p, dx), vals

    def _spacing(self, dx):
        if dx is not None:
            return dx
        return float(self.x[1] - self.x[0]) if self.x.size > 1 else 1.0


def theta_grid(tiles: Sequence[Tile], per_unit: int) -> np.ndarray:
    """Uniform theta grid covering the right halves of all frequency intervals."""
    lo = min(t.halves[1].left for t in tiles)
    hi = max(t.halves[1].right for t in tiles)
    a, b = math.floor(lo), math.ceil(hi)
    n = (b - a) * per_unit
    return a + np.arange(n) / per_unit


def smooth_test_signal(rng: np.random.Generator, terms: int = 6, time_window=(0.0, 16.0),
                       band=(0.5, 7.5)) -> Callable:
    """Sum of modulated Gaussians, defined independently of any sample grid."""
    c = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    x0 = rng.uniform(*time_window, size=terms)
    nu = rng.uniform(*band, size=terms)
    sd = rng.uniform(1.0, 3.0, size=terms)

    def f(x):
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(c * np.exp(-0.5 * ((x - x0) / sd) ** 2 + 2j * np.pi * nu * x), axis=-1)
    return f


@dataclass
class ResolutionRow:
    level: int
    n: int
    period: float
    n_theta: int
    ratio: float
    f_norm: float


def resolution_sweep(f: Callable, tiles: Sequence[Tile], x_points: np.ndarray, rng_seed: int,
                     doublings: int = 3, base_half_width: float = 256.0, spacing: float = 1 / 32,
                     theta_per_unit: int = 16, protocol: dict | None = None) -> list[ResolutionRow]:
    """Model-operator maximal ratio to ``||f||_2`` as the frequency and theta grids are refined."""
    protocol = protocol or {}
    rows = []
    dx = float(x_points[1] - x_points[0])
    for level in range(doublings + 1):
        half = base_half_width * 2 ** level
        n = int(round(2 * half / spacing))
        grid = SampleGrid.centered(half, n)
        sig = grid.signal(f(grid.x))
        op = ModelOperator.from_signal(sig, tiles, theta_grid(tiles, theta_per_unit * 2 ** level))
        op.precompute(x_points)
        val, _ = op.maximal(np.random.default_rng(rng_seed), dx=dx, **protocol)
        rows.append(ResolutionRow(level, n, grid.period, op.thetas.size, val / sig.norm(2), sig.norm(2)))
    return rows
