"""Admissible singular kernels, the low-frequency splitting and discrete transfer kernels."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

# ---------------------------------------------------------------------------
# smooth building blocks


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def septic_step(t):
    """Order-7 polynomial smoothstep (three continuous derivatives at both ends)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t ** 4 * (35 - 84 * t + 70 * t ** 2 - 20 * t ** 3)


def cutoff(y):
    """Even cutoff, flat at 0 and vanishing for |y| >= 1."""
    return 1.0 - smooth_step(np.abs(np.asarray(y, dtype=float)))


def bump(t):
    """``exp(1 - 1/(1 - t^2))`` on (-1, 1), 0 elsewhere; equals 1 at 0."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    out = np.zeros_like(t)
    out[inside] = np.exp(1 - 1 / (1 - t[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def _gauss_nodes(a: float, b: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = (b - a) / panels
    nodes = ((edges[:-1, None] + edges[1:, None]) / 2 + x[None] * h / 2).ravel()
    return nodes, np.tile(w * h / 2, panels)


def _chunked(fn, xi: np.ndarray, size: int = 256) -> np.ndarray:
    flat = np.ravel(xi)
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, size):
        out[s:s + size] = fn(flat[s:s + size])
    return out.reshape(np.shape(xi))


# ---------------------------------------------------------------------------
# kernel catalog

TAIL_CUTOFF = 256.0  # the cutoff transform is below 1e-16 beyond this


def cutoff_hat_derivative(eta, m: int = 0):
    """m-th derivative of the transform of :func:`cutoff` (an even real function)."""
    y, w = _gauss_nodes(0.0, 1.0, 1024)
    wb = w * cutoff(y)

    def run(e):
        u = 2 * np.pi * np.outer(e, y)
        # d^m/du^m cos(u) cycles through cos, -sin, -cos, sin
        trig = [np.cos(u), -np.sin(u), -np.cos(u), np.sin(u)][m % 4]
        return 2 * (trig * (2 * np.pi * y) ** m) @ wb

    return _chunked(run, np.asarray(eta, dtype=float)).real


def _cutoff_tail(xi):
    """``int_xi^X cutoff_hat`` for xi >= 0, with X = TAIL_CUTOFF."""
    y, w = _gauss_nodes(0.0, 1.0, 1024)
    wb = w * cutoff(y) / y
    X = TAIL_CUTOFF

    def run(e):
        return (np.sin(2 * np.pi * X * y)[None] - np.sin(2 * np.pi * np.outer(e, y))) @ wb / np.pi

    xi = np.asarray(xi, dtype=float)
    return np.where(xi < X, _chunked(run, np.minimum(xi, X)).real, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    name: str
    khat: Callable  # transform on the line
    kspace: Callable  # values K(y)
    limit_right: complex
    limit_left: complex
    derivative: Callable | None = None  # (xi, n) -> n-th derivative, when a formula exists
    derivative_order_max: int = 3
    notes: dict = field(default_factory=dict, compare=False)

    def dil_space(self, s: float, y):
        """``Dil^1_s K(y) = K(y/s)/s``."""
        return self.kspace(np.asarray(y, dtype=float) / s) / s


def _inverse_y() -> KernelSpec:
    def kspace(y):
        y = np.asarray(y, dtype=float)
        safe = np.where(y == 0, 1.0, y)
        return np.where(y == 0, 0.0, (1 - cutoff(y)) / safe)

    def khat(xi):
        xi = np.asarray(xi, dtype=float)
        return -2j * np.pi * np.sign(xi) * _cutoff_tail(np.abs(xi))

    def deriv(xi, n):
        if n == 0:
            return khat(xi)
        return 2j * np.pi * cutoff_hat_derivative(xi, n - 1)

    return KernelSpec("inverse_y", khat, kspace, -1j * np.pi, 1j * np.pi, deriv,
                      notes={"K": "(1 - cutoff(y))/y", "cutoff": "1 - smooth_step(|y|)"})


BUMP_RADIUS = 3 / 8


def _bump_kernel() -> KernelSpec:
    def khat(xi):
        return bump(np.asarray(xi, dtype=float) / BUMP_RADIUS).astype(complex)

    def kspace(y):
        u, w = _gauss_nodes(0.0, BUMP_RADIUS, 64)
        wb = w * bump(u / BUMP_RADIUS)
        return _chunked(lambda e: 2 * np.cos(2 * np.pi * np.outer(e, u)) @ wb,
                        np.asarray(y, dtype=float)).real

    return KernelSpec("bump", khat, kspace, 1.0, 1.0,
                      notes={"Khat": "exp(1 - 1/(1 - (xi/r)^2)), r = 3/8"})


def _poisson_kernel() -> KernelSpec:
    def khat(xi):
        return np.exp(-2 * np.pi * np.abs(np.asarray(xi, dtype=float))).astype(complex)

    def kspace(y):
        return 1.0 / (np.pi * (1 + np.asarray(y, dtype=float) ** 2))

    def deriv(xi, n):
        xi = np.asarray(xi, dtype=float)
        return (-2 * np.pi * np.sign(xi)) ** n * np.exp(-2 * np.pi * np.abs(xi)) + 0j

    return KernelSpec("poisson", khat, kspace, 1.0, 1.0, deriv,
                      notes={"Khat": "exp(-2 pi |xi|)", "K": "1/(pi (1 + y^2))"})


CATALOG = {"inverse_y": _inverse_y, "bump": _bump_kernel, "poisson": _poisson_kernel}


@lru_cache(maxsize=None)
def kernel_catalog(name: str) -> KernelSpec:
    if name not in CATALOG:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(CATALOG)}")
    return CATALOG[name]()


def custom_kernel(name: str, khat: Callable, kspace: Callable | None = None) -> KernelSpec:
    """Wrap an explicit transform (used for negative controls)."""
    lim = complex(np.ravel(khat(np.array([1e-12])))[0])
    liml = complex(np.ravel(khat(np.array([-1e-12])))[0])
    return KernelSpec(name, khat, kspace or (lambda y: np.zeros_like(np.asarray(y, float))),
                      lim, liml)


# ---------------------------------------------------------------------------
# admissibility

_FD = {1: [(-1, -0.5), (1, 0.5)],
       2: [(-1, 1.0), (0, -2.0), (1, 1.0)],
       3: [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
       4: [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)]}


def finite_difference(fn, xi: np.ndarray, n: int, rel_step: float = 0.02) -> np.ndarray:
    """Central difference of order ``n`` with step ``rel_step * min(|xi|, 1)``."""
    if n not in _FD:
        raise ValueError("derivative order must be 1..4")
    h = rel_step * np.minimum(np.abs(xi), 1.0)
    return sum(c * fn(xi + o * h) for o, c in _FD[n]) / h ** n


@dataclass
class AdmissibilityReport:
    kernel: str
    constants: dict
    passed: dict
    c_max: float

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def default_xi_samples(count: int = 161) -> np.ndarray:
    pos = np.logspace(-4, 4, count)
    return np.concatenate([-pos[::-1], pos])


def check_admissible(spec: KernelSpec, xi_samples=None, n_max: int = 3,
                     c_max: float = 1e3, use_formula: bool = False,
                     noise: float = 1e-14) -> AdmissibilityReport:
    """Minimal constants in the decay conditions on the transform.

    ``smooth``: values finite and first difference quotients stable under step
    halving (relative to the derivative bound); ``decay``:
    ``|K^(xi)| <= C min(1, 1/|xi|)``; ``derivative_n``:
    ``|d^n K^| <= C |xi|^{-n} min(|xi|, 1/|xi|)``. A condition passes when its
    constant is at most ``c_max``. Difference quotients below the rounding
    floor ``noise * sum|stencil| / h^n`` count as zero.
    """
    xi = default_xi_samples() if xi_samples is None else np.asarray(xi_samples, dtype=float)
    if np.any(xi == 0):
        raise ValueError("xi samples must avoid 0")
    a = np.abs(xi)
    vals = spec.khat(xi)
    amp = max(1.0, float(np.max(np.abs(vals))))
    constants, passed = {}, {}

    def bound(n):
        return a ** (-float(n)) * np.minimum(a, 1.0 / a)

    def floor(n, step):
        h = step * np.minimum(a, 1.0)
        return noise * amp * sum(abs(c) for _, c in _FD[n]) / h ** n

    finite = bool(np.all(np.isfinite(vals)))
    d1 = finite_difference(spec.khat, xi, 1)
    d1b = finite_difference(spec.khat, xi, 1, rel_step=0.01)
    jump = np.maximum(np.abs(d1 - d1b) - floor(1, 0.01), 0) / bound(1)
    constants["smooth"] = float(np.max(jump))
    passed["smooth"] = finite and constants["smooth"] <= 1.0
    constants["decay"] = float(np.max(np.abs(vals) / np.minimum(1.0, 1.0 / a)))
    for n in range(1, n_max + 1):
        if use_formula and spec.derivative is not None:
            d = np.abs(spec.derivative(xi, n))
        else:
            d = np.maximum(np.abs(finite_difference(spec.khat, xi, n)) - floor(n, 0.02), 0)
        constants[f"derivative_{n}"] = float(np.max(d / bound(n)))
    for key, c in constants.items():
        if key != "smooth":
            passed[key] = bool(np.isfinite(c) and c <= c_max)
    return AdmissibilityReport(spec.name, constants, passed, c_max)


# ---------------------------------------------------------------------------
# low-frequency part and Littlewood-Paley pieces

RAMP_NOTE = "septic smoothstep t^4(35 - 84t + 70t^2 - 20t^3)"


def eta_hat(spec: KernelSpec, xi):
    """One-sided limits of the transform near 0, ramped to 0 across 1/8 < |xi| < 3/8."""
    xi = np.asarray(xi, dtype=float)
    ramp = 1.0 - septic_step((np.abs(xi) - 1 / 8) / (1 / 4))
    side = np.where(xi > 0, spec.limit_right, np.where(xi < 0, spec.limit_left,
                                                       (spec.limit_left + spec.limit_right) / 2))
    return side * ramp


def build_eta(spec: KernelSpec, f_or_n, spacing: float | None = None):
    """Low-frequency multiplier as a :class:`~rtlab.signal.Spectrum` on a signal's dual grid."""
    from .signal import Spectrum, frequencies
    if spacing is None:
        n, spacing, origin = f_or_n.n, f_or_n.spacing, f_or_n.origin
    else:
        n, origin = int(f_or_n), 0.0
    return Spectrum(origin, spacing, eta_hat(spec, frequencies(n, spacing)))


def psi_profile(xi):
    """1 on (0, 1/8], septic ramp down to 0 at 3/8, 0 for xi <= 0."""
    xi = np.asarray(xi, dtype=float)
    return np.where(xi > 0, 1.0 - septic_step((xi - 1 / 8) / (1 / 4)), 0.0)


def lp_piece(psi: Callable, i: int, xi):
    """``psi(2^i xi) - psi(2^{i+1} xi)``."""
    xi = np.asarray(xi, dtype=float)
    return psi(2.0 ** i * xi) - psi(2.0 ** (i + 1) * xi)


def lp_pieces(psi: Callable, i_range, xi) -> np.ndarray:
    return np.array([lp_piece(psi, i, xi) for i in i_range])


def q_partition(xi):
    """Smooth ``q`` supported in 1/8 < |xi| < 3/8 with ``sum_j q(xi/2^j) = 1`` off 0."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)

    def b(t):
        return bump((t - 0.25) / 0.125)

    safe = np.where(a > 0, a, 1.0)
    # dyadic dilates of (1/8, 3/8) containing a: j with 2^j/8 < a < 3 2^j/8
    j0 = np.floor(np.log2(safe * 8 / 3))
    total = sum(b(safe / 2.0 ** (j0 + d)) for d in range(-1, 3))
    return np.where(a > 0, b(a) / np.where(total > 0, total, 1.0), 0.0)


def g_piece_constants(spec: KernelSpec, j_range, n_max: int = 2, samples: int = 801) -> dict:
    """``sup |d^n g_j| * 2^{|j|} * 2^{jn}`` for ``g_j = (K^ - eta^) q(./2^j)``, by differences."""
    out = {}
    for j in j_range:
        xi = 2.0 ** j * np.linspace(0.126, 0.374, samples)
        xi = np.concatenate([-xi[::-1], xi])

        def g(x, j=j):
            return (spec.khat(x) - eta_hat(spec, x)) * q_partition(x / 2.0 ** j)

        row = [float(np.max(np.abs(g(xi)))) * 2.0 ** abs(j)]
        for n in range(1, n_max + 1):
            h = 2.0 ** j * 1e-3
            d = sum(c * g(xi + o * h) for o, c in _FD[n]) / h ** n
            row.append(float(np.max(np.abs(d))) * 2.0 ** abs(j) * 2.0 ** (j * n))
        out[j] = row
    return out


# ---------------------------------------------------------------------------
# discrete transfer kernels


@dataclass(frozen=True)
class DiscreteKernel:
    """Integer-indexed weights ``values[i - lo]`` for ``lo <= i <= hi``, zero elsewhere."""
    name: str
    k: int
    lo: int
    values: tuple

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    def at(self, i: int) -> Fraction:
        if self.lo <= i <= self.hi:
            return self.values[i - self.lo]
        return Fraction(0)

    def __sub__(self, other: "DiscreteKernel") -> "DiscreteKernel":
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return DiscreteKernel(f"{self.name}-{other.name}", self.k, lo,
                              tuple(self.at(i) - other.at(i) for i in range(lo, hi + 1)))

    def as_array(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        return np.array([float(self.at(i)) for i in range(lo, hi + 1)])


def truncation_radius(k: int) -> int:
    return 2 ** (k + 6)


def discrete_kernels(spec: KernelSpec, k: int, radius: int | None = None) -> dict:
    """Exact rational tables of H_k, A_k, S_k, O_k on ``|i| <= radius``.

    Kernel samples are the exact rationals of the float values, so identities
    between the tables hold with no rounding.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if spec.name != "inverse_y":
        raise ValueError("discrete kernels need a kernel equal to 1/y for |y| >= 1")
    R = truncation_radius(k) if radius is None else radius
    m = 2 ** k
    inner = np.arange(-m, m)
    kv = spec.kspace(inner / m)
    H = []
    for i in range(-R, R + 1):
        if -m <= i <= m - 1:
            H.append(Fraction(float(kv[i + m])) / m)
        else:
            H.append(Fraction(1, i))
    H = tuple(H)
    A = tuple(H[i + R] for i in range(-m, m + 1))
    S = tuple(Fraction(0) if i == 0 else Fraction(1, i) for i in range(-m, m + 1))
    O = tuple(a - s for a, s in zip(A, S))
    return {"H": DiscreteKernel("H", k, -R, H), "A": DiscreteKernel("A", k, -m, A),
            "S": DiscreteKernel("S", k, -m, S), "O": DiscreteKernel("O", k, -m, O),
            "radius": R, "tail_l2_bound": float(np.sqrt(2.0 / R))}


def h_kernel_float(spec: KernelSpec, k: int, y) -> np.ndarray:
    """Piecewise-constant H_k evaluated at real points."""
    y = np.asarray(y, dtype=float)
    i = np.floor(y)
    m = 2.0 ** k
    inner = (i >= -m) & (i <= m - 1)
    safe = np.where(i == 0, 1.0, i)
    return np.where(inner, spec.kspace(i / m) / m, 1.0 / safe)


@dataclass
class ApproxReport:
    k: int
    inner_constant: float
    outer_constant: float


def kernel_approx_error(spec: KernelSpec, k: int, per_unit: int = 8) -> ApproxReport:
    """``sup 4^k |H_k - Dil K|`` on ``|y| <= 2^k`` and ``sup y^2 |H_k - Dil K|`` beyond."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = 2 ** k
    R = truncation_radius(k)
    cells = np.arange(-R, R)
    t = np.concatenate([np.arange(per_unit) / per_unit, [1 - 1e-9]])
    y = (cells[:, None] + t[None]).ravel()
    err = np.abs(h_kernel_float(spec, k, y) - spec.dil_space(m, y))
    inner = np.abs(y) <= m
    return ApproxReport(k, float(np.max(err[inner]) * m * m),
                        float(np.max(err[~inner] * y[~inner] ** 2)))


def summation_by_parts_weights(spec: KernelSpec, k: int) -> list[Fraction]:
    """``w_k(n) = n (A_k(n) - A_k(n+1))`` for ``n = 1 .. 2^k``."""
    A = discrete_kernels(spec, k, radius=2 ** k + 1)["A"]
    return [n * (A.at(n) - A.at(n + 1)) for n in range(1, 2 ** k + 1)]


def kernels_to_csv(tables_by_k: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "n", "H", "A", "S", "O"])
    for k in sorted(tables_by_k):
        t = tables_by_k[k]
        H = t["H"]
        for n in range(H.lo, H.hi + 1):
            w.writerow([k, n] + [repr(float(t[key].at(n))) for key in ("H", "A", "S", "O")])
    return buf.getvalue()
