"""Sampled functions on the line and the elementary operators acting on them.

Fourier convention: ``F f(xi) = int f(x) exp(-2 pi i xi x) dx``, discretised as a
Riemann sum on the sample grid. Frequencies are stored centred: ``xi_m =
(m - n/2) / (n dx)``.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np


def _check_n(n: int):
    if n < 2 or n & (n - 1):
        raise ValueError(f"sample count must be a power of two >= 2, got {n}")


@dataclass(frozen=True, eq=False)
class SampledSignal:
    origin: float
    spacing: float
    samples: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", s)
        _check_n(s.size)
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")

    @classmethod
    def from_function(cls, func, origin: float, spacing: float, n: int) -> "SampledSignal":
        x = origin + spacing * np.arange(n)
        return cls(origin, spacing, np.asarray(func(x), dtype=complex) * np.ones(n))

    @classmethod
    def centered(cls, func, half_width: float, n: int) -> "SampledSignal":
        dx = 2 * half_width / n
        return cls.from_function(func, -half_width, dx, n)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    @property
    def span(self) -> tuple[float, float]:
        return self.origin, self.origin + self.n * self.spacing

    def with_samples(self, samples, **meta) -> "SampledSignal":
        return SampledSignal(self.origin, self.spacing, samples, dict(self.meta, **meta))

    def norm(self, p: float = 2) -> float:
        if np.isinf(p):
            return float(np.max(np.abs(self.samples)))
        return float((self.spacing * np.sum(np.abs(self.samples) ** p)) ** (1 / p))

    def inner(self, other: "SampledSignal") -> complex:
        return complex(self.spacing * np.vdot(other.samples, self.samples))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for x, z in zip(self.x, self.samples):
            w.writerow([repr(float(x)), repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledSignal":
        rows = [r for r in csv.reader(io.StringIO(text))][1:]
        x = np.array([float(r[0]) for r in rows])
        z = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
        return cls(float(x[0]), float(x[1] - x[0]), z)

    def to_bytes(self) -> bytes:
        head = struct.pack("<ddQ", self.origin, self.spacing, self.n)
        body = np.empty(2 * self.n, dtype="<f8")
        body[0::2], body[1::2] = self.samples.real, self.samples.imag
        return head + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SampledSignal":
        origin, spacing, n = struct.unpack_from("<ddQ", data)
        body = np.frombuffer(data, dtype="<f8", offset=24, count=2 * n)
        return cls(origin, spacing, body[0::2] + 1j * body[1::2])


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Values of the transform on the centred frequency grid dual to a signal grid."""
    origin: float
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        _check_n(self.values.size)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dxi(self) -> float:
        return 1.0 / (self.n * self.spacing)

    @property
    def xi(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dxi

    def norm(self) -> float:
        return float(np.sqrt(self.dxi * np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values) -> "Spectrum":
        return Spectrum(self.origin, self.spacing, values)


def frequencies(n: int, spacing: float) -> np.ndarray:
    return (np.arange(n) - n // 2) / (n * spacing)


def transform(f: SampledSignal) -> Spectrum:
    xi = frequencies(f.n, f.spacing)
    vals = f.spacing * np.exp(-2j * np.pi * xi * f.origin) * np.fft.fftshift(np.fft.fft(f.samples))
    return Spectrum(f.origin, f.spacing, vals)


def inverse(F: Spectrum) -> SampledSignal:
    raw = F.values * np.exp(2j * np.pi * F.xi * F.origin) / F.spacing
    return SampledSignal(F.origin, F.spacing, np.fft.ifft(np.fft.ifftshift(raw)))


def fft_frequencies(n: int, spacing: float) -> np.ndarray:
    """Frequencies in numpy's unshifted FFT order."""
    return np.fft.fftfreq(n, d=spacing)


def apply_multiplier(f: SampledSignal, symbol) -> SampledSignal:
    """Multiply the spectrum by ``symbol(xi)`` (callable or array in FFT order)."""
    xi = fft_frequencies(f.n, f.spacing)
    m = symbol(xi) if callable(symbol) else np.asarray(symbol)
    return f.with_samples(np.fft.ifft(np.fft.fft(f.samples) * m))


def _interp_periodic(f: SampledSignal, y: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of ``f`` at arbitrary points ``y``."""
    F = np.fft.fft(f.samples) / f.n
    xi = fft_frequencies(f.n, f.spacing)
    if f.n % 2 == 0:
        # split the Nyquist term symmetrically so real input stays real
        nyq = f.n // 2
        xi = np.append(xi, -xi[nyq])
        F = np.append(F, F[nyq] / 2)
        F[nyq] /= 2
    out = np.empty(y.size, dtype=complex)
    t = y - f.origin
    for s in range(0, y.size, 512):
        out[s:s + 512] = np.exp(2j * np.pi * np.outer(t[s:s + 512], xi)) @ F
    return out


def dil(f: SampledSignal, s: float, p: float = 2) -> SampledSignal:
    """``s^{-1/p} f(x/s)`` by band-limited interpolation."""
    if s <= 0:
        raise ValueError("dilation factor must be positive")
    if s == 1:
        return f.with_samples(f.samples.copy(), truncated=False)
    y = f.x / s
    lo, hi = f.span
    inside = (y >= lo) & (y < hi)
    vals = np.zeros(f.n, dtype=complex)
    vals[inside] = _interp_periodic(f, y[inside])
    # mass of f whose image x = s*y falls outside the span
    lost = (f.x * s < lo) | (f.x * s >= hi)
    lost_mass = float(np.sum(np.abs(f.samples[lost]) ** 2) / max(np.sum(np.abs(f.samples) ** 2), 1e-300))
    return f.with_samples(s ** (-1.0 / p) * vals, truncated=bool(lost_mass > 1e-12),
                          lost_mass=lost_mass)


def tr(f: SampledSignal, y: float) -> SampledSignal:
    """``f(x - y)``, realised as a spectral phase (periodic on the span)."""
    g = apply_multiplier(f, lambda xi: np.exp(-2j * np.pi * xi * y))
    lo, hi = f.span
    wrap = (f.x + y < lo) | (f.x + y >= hi)
    lost = float(np.sum(np.abs(f.samples[wrap]) ** 2) / max(np.sum(np.abs(f.samples) ** 2), 1e-300))
    return g.with_samples(g.samples, truncated=bool(lost > 1e-12), lost_mass=lost)


def mod(f: SampledSignal, theta: float) -> SampledSignal:
    return f.with_samples(np.exp(2j * np.pi * theta * f.x) * f.samples, truncated=False)


def dil_tr_mod(f: SampledSignal, op: str, param: float, p: float = 2) -> SampledSignal:
    if op == "dil":
        return dil(f, param, p)
    if op == "tr":
        return tr(f, param)
    if op == "mod":
        return mod(f, param)
    raise ValueError(f"unknown operator {op!r}")


def chi_weight(I, x, M: int = 1):
    """``(1 + |x - c(I)| / |I|)^{-M}``."""
    a, b = float(I[0]), float(I[1])
    if b <= a:
        raise ValueError("interval must have positive length")
    return (1 + np.abs(np.asarray(x, dtype=float) - (a + b) / 2) / (b - a)) ** (-M)


def maximal_p(f: SampledSignal, p: float = 1, max_radius: int | None = None) -> SampledSignal:
    """Centred maximal average ``sup_R (mean_{|t|<=R} |f(x+t)|^p)^{1/p}``.

    Averages run over ``2R+1`` samples (zero outside the span), for
    ``R = 0 .. max_radius``; with ``R`` in samples the continuum radius is
    ``R dx`` and the normalisation is the window length ``2 R dx``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    n = f.n
    R_max = n if max_radius is None else max_radius
    a = np.abs(f.samples) ** p
    cs = np.concatenate([[0.0], np.cumsum(a)])
    k = np.arange(n)
    best = a.copy()
    for R in range(1, R_max + 1):
        hi = np.minimum(k + R + 1, n)
        lo = np.maximum(k - R, 0)
        best = np.maximum(best, (cs[hi] - cs[lo]) / (2 * R + 1))
    return f.with_samples(best ** (1 / p))


def bmo_norm(f: SampledSignal, periodic: bool = False) -> float:
    """Largest mean oscillation over windows of ``2^a`` samples at every start.

    A lower bound for the supremum over all intervals. With ``periodic=True``
    windows wrap around the span, which makes the value shift invariant.
    """
    z = f.samples
    n = f.n
    best = 0.0
    ext = np.concatenate([z, z]) if periodic else z
    m = 2
    while m <= n:
        win = np.lib.stride_tricks.sliding_window_view(ext, m)
        if periodic:
            win = win[:n]
        mean = win.mean(axis=1, keepdims=True)
        best = max(best, float(np.max(np.mean(np.abs(win - mean), axis=1))))
        m *= 2
    return best


@dataclass
class AdaptedReport:
    A: dict
    C: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def adapted_check(phi: SampledSignal, I, C: float = 1.0, M_list=(1, 2, 3, 4),
                  dphi: np.ndarray | None = None, A_max: float | None = None) -> AdaptedReport:
    """Smallest ``A(M)`` with ``|phi| <= A C |I|^{-1/2} chi_I^M`` and the same for
    ``phi'`` with ``|I|^{-3/2}``; derivative by centred differences unless given."""
    length = float(I[1]) - float(I[0])
    d = np.gradient(phi.samples, phi.spacing) if dphi is None else np.asarray(dphi)
    A, bad = {}, []
    for M in M_list:
        w = chi_weight(I, phi.x, M)
        a0 = np.max(np.abs(phi.samples) / (C * length ** -0.5 * w))
        a1 = np.max(np.abs(d) / (C * length ** -1.5 * w))
        A[M] = float(max(a0, a1))
        if A_max is not None and A[M] > A_max:
            bad.append(M)
    return AdaptedReport(A=A, C=C, violations=bad)


def mean_zero_check(phi: SampledSignal, c: float, tol: float = 1e-8) -> tuple[bool, float]:
    """Is ``|int phi(x) exp(-2 pi i c x) dx| <= tol * ||phi||_1``?"""
    val = abs(phi.spacing * np.sum(phi.samples * np.exp(-2j * np.pi * c * phi.x)))
    l1 = phi.norm(1)
    return bool(val <= tol * l1), float(val / l1 if l1 else 0.0)


def poisson(f: SampledSignal, t: float) -> SampledSignal:
    if t <= 0:
        raise ValueError("t must be positive")
    return apply_multiplier(f, lambda xi: np.exp(-t * np.abs(xi)))
