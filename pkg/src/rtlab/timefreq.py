"""Wave packets on the frequency lattice ``Z/41``, tiles, trees and forest selection.

The window spectrum is a smooth bump on ``(0, 2/41)`` divided by the root of
the sum of its squared ``1/41``-shifts, so the squared shifts add up to one.
A phase ``exp(-i pi xi)`` centres the window at ``x = 1/2``; packets
``phi_{i,m,l}`` are then centred on the time interval ``[2^i m, 2^i (m+1)]``.

All signals live on a periodic sample grid. Analysis and synthesis at one scale
form a tight frame on that grid, so reconstruction and the energy identity are
exact up to rounding regardless of how far a packet spreads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .grid import GridInterval, pow2, sons
from .kernels import bump, lp_piece, psi_profile, smooth_step
from .signal import SampledSignal, Spectrum, frequencies, inverse, transform

MODULUS = 41          # packet frequencies are multiples of 2^{-i}/41
SHIFT = 18            # omega_{i,l} starts 18/41 (in units of 2^{-i}) below the packet spectrum
THETA_STEPS = 1024    # theta resolution per unit of omega in the packet table


# ---------------------------------------------------------------------------
# window and packets


def _b(u):
    return bump(MODULUS * np.asarray(u, dtype=float) - 1.0)


def window_hat(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    k = np.floor(xi * MODULUS)
    den = sum(_b(xi - (k + d) / MODULUS) ** 2 for d in range(-2, 2))
    num = _b(xi)
    amp = np.where(num > 0, num / np.sqrt(np.where(den > 0, den, 1.0)), 0.0)
    return amp * np.exp(-1j * np.pi * xi)


def partition_defect(xi) -> float:
    """``max |sum_l |window_hat(xi - l/41)|^2 - 1|`` over the given frequencies."""
    xi = np.asarray(xi, dtype=float)
    k = np.floor(xi * MODULUS)
    tot = sum(np.abs(window_hat(xi - (k + d) / MODULUS)) ** 2 for d in range(-3, 3))
    return float(np.max(np.abs(tot - 1.0)))


@dataclass(frozen=True)
class SampleGrid:
    """Periodic sample grid ``origin + spacing * k``, ``k < n`` (``n`` a power of two)."""
    origin: float
    spacing: float
    n: int

    @classmethod
    def centered(cls, half_width: float, n: int) -> "SampleGrid":
        return cls(-half_width, 2 * half_width / n, n)

    @property
    def period(self) -> float:
        return self.n * self.spacing

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        return frequencies(self.n, self.spacing)

    @property
    def dxi(self) -> float:
        return 1.0 / self.period

    def signal(self, samples, **meta) -> SampledSignal:
        return SampledSignal(self.origin, self.spacing, samples, meta)

    def from_spectrum(self, values, **meta) -> SampledSignal:
        s = inverse(Spectrum(self.origin, self.spacing, values))
        return self.signal(s.samples, **meta)

    @classmethod
    def of(cls, f: SampledSignal) -> "SampleGrid":
        return cls(f.origin, f.spacing, f.n)


DEFAULT_GRID = SampleGrid.centered(1024.0, 8192)


def _modulation(l) -> float:
    return float(Fraction(l) / MODULUS)


def packet_hat(i: int, m: int, l, xi) -> np.ndarray:
    """Transform of ``phi_{i,m,l/41}``: ``2^{i/2} e^{-2 pi i m (2^i xi - a)} window_hat(2^i xi - a)``."""
    a = _modulation(l)
    u = 2.0 ** i * np.asarray(xi, dtype=float) - a
    return 2.0 ** (i / 2) * np.exp(-2j * np.pi * m * u) * window_hat(u)


def _edge_energy(samples: np.ndarray, frac: float = 1 / 16) -> float:
    e = np.abs(samples) ** 2
    k = max(1, int(samples.size * frac))
    tot = e.sum()
    return float((e[:k].sum() + e[-k:].sum()) / tot) if tot > 0 else 0.0


def build_window(grid: SampleGrid = DEFAULT_GRID) -> SampledSignal:
    phi = grid.from_spectrum(window_hat(grid.xi))
    return phi.with_samples(phi.samples, kind="window", edge_energy=_edge_energy(phi.samples))


def wave_packet(i: int, m: int, l, grid: SampleGrid = DEFAULT_GRID,
                edge_tol: float = 1e-10) -> SampledSignal:
    """``2^{-i/2} phi(2^{-i} x - m) exp(2 pi i 2^{-i} x l/41)`` sampled on ``grid``.

    ``l`` is the numerator of the modulation ``l/41``. The packet is computed
    from its spectrum, so it is the periodisation over the grid span; the
    ``truncated`` flag reports energy near the span edges above ``edge_tol``.
    """
    if 2.0 ** -i * 2 / MODULUS * grid.period < 8:
        raise ValueError(f"grid too coarse in frequency for scale {i}")
    phi = grid.from_spectrum(packet_hat(i, m, l, grid.xi))
    edge = _edge_energy(phi.samples)
    centre = 2.0 ** i * (m + 0.5)
    lo, hi = grid.origin, grid.origin + grid.period
    trunc = bool(edge > edge_tol or not lo <= centre < hi)
    return phi.with_samples(phi.samples, kind="packet", i=i, m=m, l=str(l),
                            edge_energy=edge, truncated=trunc)


# ---------------------------------------------------------------------------
# tiles


def tile_omega(i: int, l: int) -> GridInterval:
    """``[2^{-i} (l-18)/41, 2^{-i} ((l-18)/41 + 1)]`` as an exact grid interval."""
    q, L = divmod(l - SHIFT, MODULUS)
    return GridInterval(-i, q, L, MODULUS)


def packet_supports(i: int, l: int) -> dict:
    """Exact supports of a packet spectrum and of its theta-profile."""
    s = pow2(-i)
    xi_sup = (s * Fraction(l, MODULUS), s * Fraction(l + 2, MODULUS))
    th_sup = (s * (Fraction(l, MODULUS) + Fraction(1, 16)), s * (Fraction(l + 2, MODULUS) + Fraction(3, 8)))
    w = tile_omega(i, l)
    left, right = sons(w)
    return {"xi": xi_sup, "theta": th_sup, "omega": w,
            "xi_in_left_half": left.left <= xi_sup[0] and xi_sup[1] <= left.right,
            "theta_in_right_half": right.left <= th_sup[0] and th_sup[1] <= right.right}


@dataclass(frozen=True, order=True)
class Tile:
    """``I x omega`` with ``I`` a standard dyadic time interval and ``|I| |omega| = 1``."""
    I: GridInterval
    omega: GridInterval

    def __post_init__(self):
        if self.I.N != 1:
            raise ValueError("time interval must lie in the standard grid")
        if self.I.length * self.omega.length != 1:
            raise ValueError(f"|I| |omega| must be 1, got {self.I.length * self.omega.length}")

    @classmethod
    def from_packet(cls, i: int, m: int, l: int) -> "Tile":
        return cls(GridInterval(i, m), tile_omega(i, l))

    @classmethod
    def standard(cls, i: int, m: int, n: int) -> "Tile":
        """Time ``[2^i m, 2^i (m+1)]``, frequency ``[2^{-i} n, 2^{-i} (n+1)]``."""
        return cls(GridInterval(i, m), GridInterval(-i, n))

    @property
    def scale(self) -> int:
        return self.I.i

    @property
    def m(self) -> int:
        return self.I.l

    @property
    def l(self) -> int:
        """Packet index with ``omega = omega_{i,l}``."""
        v = self.omega.left * pow2(self.scale) * MODULUS + SHIFT
        if v.denominator != 1:
            raise ValueError("frequency interval is not of the form omega_{i,l}")
        return int(v)

    @property
    def halves(self) -> tuple[GridInterval, GridInterval]:
        return sons(self.omega)

    def to_dict(self) -> dict:
        w = self.omega
        return {"I": [self.I.i, self.I.l], "omega": [w.i, w.l, w.L, w.N]}

    @classmethod
    def from_dict(cls, d: dict) -> "Tile":
        return cls(GridInterval(*d["I"]), GridInterval(*d["omega"]))

    def __str__(self):
        return f"{self.I}x{self.omega}"


@lru_cache(maxsize=1 << 16)
def _ends(w: GridInterval) -> tuple[Fraction, Fraction]:
    return w.left, w.right


def _inside(a: GridInterval, b: GridInterval) -> bool:
    (a0, a1), (b0, b1) = _ends(a), _ends(b)
    return b0 <= a0 and a1 <= b1


def tile_order(s: Tile, t: Tile) -> str:
    """``le`` when ``I_s ⊆ I_t`` and ``omega_t ⊆ omega_s``; ``ge`` the reverse."""
    if s == t:
        return "equal"
    if _inside(s.I, t.I) and _inside(t.omega, s.omega):
        return "le"
    if _inside(t.I, s.I) and _inside(s.omega, t.omega):
        return "ge"
    return "incomparable"


def le(s: Tile, t: Tile) -> bool:
    return _inside(s.I, t.I) and _inside(t.omega, s.omega)


# ---------------------------------------------------------------------------
# coefficients


class CoefficientTable(dict):
    """``tile -> <f, phi_tile>``, write-once."""

    def __setitem__(self, key, value):
        if key in self:
            raise KeyError(f"coefficient for {key} already set")
        super().__setitem__(key, value)

    def energy(self) -> float:
        return math.fsum(abs(v) ** 2 for v in self.values())

    def to_json(self) -> str:
        return json.dumps([{"tile": t.to_dict(), "re": v.real, "im": v.imag}
                           for t, v in sorted(self.items())])


def _shift_correlation(fhat: np.ndarray, xi: np.ndarray, dxi: float, i: int, l,
                       ms: np.ndarray) -> np.ndarray:
    """``<f, phi_{i,m,l/41}>`` for every ``m`` in ``ms``, from the spectrum of f."""
    a = _modulation(l)
    u = 2.0 ** i * xi - a
    band = (u > 0) & (u < 2 / MODULUS)
    if not band.any():
        return np.zeros(ms.size, dtype=complex)
    w = fhat[band] * np.conj(2.0 ** (i / 2) * window_hat(u[band]))
    phase = np.exp(2j * np.pi * np.outer(ms, u[band]))
    return dxi * (phase @ w)


def analyze(f: SampledSignal, tiles: Iterable[Tile]) -> CoefficientTable:
    F = transform(f)
    xi, dxi = F.xi, F.dxi
    groups: dict[tuple[int, int], list[Tile]] = {}
    for t in tiles:
        groups.setdefault((t.scale, t.l), []).append(t)
    table = CoefficientTable()
    for (i, l), ts in sorted(groups.items()):
        ms = np.array([t.m for t in ts])
        vals = _shift_correlation(F.values, xi, dxi, i, l, ms)
        for t, v in zip(ts, vals):
            table[t] = complex(v)
    return table


def scale_indices(grid: SampleGrid, i: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``m`` (one period) and all ``l`` whose packets meet the grid's frequencies."""
    step = 2.0 ** i
    count = grid.period / step
    if count < 1 or abs(count - round(count)) > 1e-9:
        raise ValueError(f"span {grid.period} is not a multiple of 2^{i}")
    m0 = math.ceil(grid.origin / step - 1e-12)
    ms = np.arange(m0, m0 + int(round(count)))
    xi = grid.xi
    lo = math.floor(MODULUS * step * xi[0]) - 2
    hi = math.ceil(MODULUS * step * xi[-1]) + 1
    return ms, np.arange(lo, hi + 1)


def scale_coefficients(f: SampledSignal, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficient matrix ``C[l, m]`` for every packet at scale ``i``."""
    grid = SampleGrid.of(f)
    ms, ls = scale_indices(grid, i)
    F = transform(f)
    C = np.array([_shift_correlation(F.values, F.xi, F.dxi, i, int(l), ms) for l in ls])
    return C, ms, ls


def synthesize(grid: SampleGrid, i: int, C: np.ndarray, ms: np.ndarray, ls: np.ndarray) -> SampledSignal:
    xi = grid.xi
    spec = np.zeros(grid.n, dtype=complex)
    for row, l in zip(C, ls):
        nz = row != 0
        if not nz.any():
            continue
        u = 2.0 ** i * xi - _modulation(int(l))
        band = (u > 0) & (u < 2 / MODULUS)
        if not band.any():
            continue
        phase = np.exp(-2j * np.pi * np.outer(u[band], ms[nz]))
        spec[band] += 2.0 ** (i / 2) * window_hat(u[band]) * (phase @ row[nz])
    return grid.from_spectrum(spec)


def single_scale_reconstruct(f: SampledSignal, i: int, rel_threshold: float = 1e-8) -> SampledSignal:
    """``sum <f, phi> phi`` over packets at scale ``i`` with ``|<f,phi>| > rel_threshold |f|``."""
    C, ms, ls = scale_coefficients(f, i)
    kept = np.where(np.abs(C) > rel_threshold * f.norm(2), C, 0)
    out = synthesize(SampleGrid.of(f), i, kept, ms, ls)
    return out.with_samples(out.samples, scale=i, kept=int(np.count_nonzero(kept)),
                            energy=float(np.sum(np.abs(C) ** 2)))


# ---------------------------------------------------------------------------
# trees and quasitrees


def _odd_part_ok(q: Fraction, N: int) -> bool:
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    return any(d % p == 0 and N % p != 0 for p in _odd_primes(d))


def _odd_primes(d: int) -> list[int]:
    out, p = [], 3
    while p * p <= d:
        if d % p == 0:
            out.append(p)
            while d % p == 0:
                d //= p
        p += 2
    if d > 1:
        out.append(d)
    return out


def non_dyadic_point(w: GridInterval) -> Fraction:
    """A point of the left half of ``w`` that is no endpoint of any grid interval."""
    third = 5 if w.N % 3 == 0 else 3
    return w.left + w.length / third


@dataclass(frozen=True)
class Tree:
    top: Tile
    members: frozenset

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        bad = [s for s in self.members if not le(s, self.top)]
        if bad:
            raise ValueError(f"{len(bad)} members are not below the top")

    @property
    def xi(self) -> Fraction:
        return non_dyadic_point(self.top.omega)

    def flavor(self) -> str | None:
        """``"1-tree"``/``"2-tree"`` when every non-top member has the top inside that half."""
        rest = [s for s in self.members if s != self.top]
        for k in (0, 1):
            if all(_inside(self.top.omega, s.halves[k]) for s in rest):
                return f"{k + 1}-tree"
        return "tree"

    def as_quasitree(self) -> "Quasitree":
        return Quasitree((self.top.I.left, self.top.I.right), self.xi, self.members)


@dataclass(frozen=True)
class Quasitree:
    interval: tuple
    xi: Fraction
    members: frozenset
    N: int = MODULUS

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "interval", (Fraction(self.interval[0]), Fraction(self.interval[1])))
        object.__setattr__(self, "xi", Fraction(self.xi))
        a, b = self.interval
        for s in self.members:
            if not (a <= s.I.left and s.I.right <= b):
                raise ValueError(f"time interval of {s} not inside the top interval")
            if not s.omega.left <= self.xi <= s.omega.right:
                raise ValueError(f"top frequency not in the frequency interval of {s}")

    @property
    def length(self) -> Fraction:
        return self.interval[1] - self.interval[0]

    def flavor(self) -> str:
        for k in (0, 1):
            if all(s.halves[k].left <= self.xi <= s.halves[k].right for s in self.members):
                return f"{k + 1}-quasitree"
        return "quasitree"


def standard_decomposition(T: Quasitree) -> tuple[Quasitree, Quasitree]:
    """Split by which half of each frequency interval holds the top frequency."""
    if not _odd_part_ok(T.xi, T.N):
        raise ValueError(f"top frequency {T.xi} may be a grid endpoint; use a non-dyadic point")
    one = frozenset(s for s in T.members if s.halves[0].left < T.xi < s.halves[0].right)
    two = T.members - one
    return Quasitree(T.interval, T.xi, one, T.N), Quasitree(T.interval, T.xi, two, T.N)


def saturation(tiles: Iterable[Tile], top: Tile) -> frozenset:
    return frozenset(s for s in tiles if _inside(top.omega, s.omega))


def block_index(s: Tile, top: Tile, l: int) -> int:
    """The ``m`` with ``s`` in ``T_{l,m}``: majority overlap, ties to the left block."""
    B = pow2(l) * top.I.length
    c = top.I.center
    u0 = (s.I.left - c) / B + Fraction(1, 2)
    u1 = (s.I.right - c) / B + Fraction(1, 2)
    m0 = math.floor(u0)
    if u1 <= m0 + 1:
        return m0
    a, b = m0 + 1 - u0, u1 - (m0 + 1)
    return m0 if a >= b else m0 + 1


def split_saturation(tiles: Iterable[Tile], top: Tile, l: int) -> dict[int, Quasitree]:
    """``T_{l,m}`` for every ``m`` that occurs, with top ``(2 x (2^l I_T + 2^l m |I_T|), xi_T)``."""
    G = saturation(tiles, top)
    if any(s.I.length > top.I.length for s in G):
        raise ValueError("a tile of the saturation is longer than the top")
    groups: dict[int, set] = {}
    for s in G:
        groups.setdefault(block_index(s, top, l), set()).add(s)
    xi = non_dyadic_point(top.omega)
    B = pow2(l) * top.I.length
    out = {}
    for m, members in sorted(groups.items()):
        c = top.I.center + m * B
        out[m] = Quasitree((c - B, c + B), xi, members)
    return out


# ---------------------------------------------------------------------------
# size and forest selection


def _ancestor(I: GridInterval, k: int) -> GridInterval:
    return GridInterval(k, I.l >> (k - I.i)) if k >= I.i else I


def _leftmost(w: GridInterval, k: int) -> GridInterval:
    while w.i > k:
        w = sons(w)[0]
    return w


class SizeIndex:
    """Every 2-tree top needed for the exact size of a finite tile set.

    For a fixed top time interval the 2-tree below a top is determined by the
    chain of right halves that contain its frequency interval, so it suffices
    to try, per time ancestor, the leftmost interval of the right length inside
    each candidate right half (plus the tiles themselves as tops). Weights are
    ``|<f, phi_s>|^2``; row sums use ``math.fsum`` so they are correctly rounded
    and therefore monotone under removal of members.
    """

    def __init__(self, tiles: Sequence[Tile], weights: Sequence[float], extra_levels: int = 2):
        self.tiles = list(tiles)
        self.w = [float(x) for x in weights]
        if not self.tiles:
            self.tops, self.rows = [], []
            return
        kmax = max(t.scale for t in self.tiles)
        lo = min(t.I.left for t in self.tiles)
        hi = max(t.I.right for t in self.tiles)
        span_levels = max(0, math.ceil(math.log2(max(float(hi - lo), 1e-300) / 2.0 ** kmax))) if hi > lo else 0
        k_top = kmax + span_levels + extra_levels
        by_I: dict[GridInterval, list[int]] = {}
        for idx, t in enumerate(self.tiles):
            for k in range(t.scale, k_top + 1):
                by_I.setdefault(_ancestor(t.I, k), []).append(idx)
        tops = set()
        for I, idxs in by_I.items():
            for idx in idxs:
                t = self.tiles[idx]
                if t.scale == I.i:
                    tops.add(Tile(I, t.omega))
                else:
                    tops.add(Tile(I, _leftmost(t.halves[1], -I.i)))
        self.tops = sorted(tops, key=self._key)
        self.rows = [self._members(T, by_I.get(T.I, [])) for T in self.tops]

    @staticmethod
    def _key(T: Tile):
        return (T.omega.left, T.I.left, -T.I.length, T.omega.right)

    def _members(self, T: Tile, idxs: list[int]) -> np.ndarray:
        out = []
        for idx in idxs:
            s = self.tiles[idx]
            if s.I == T.I:
                if s.omega == T.omega:
                    out.append(idx)
            elif _inside(T.omega, s.halves[1]):
                out.append(idx)
        return np.array(sorted(out), dtype=np.int64)

    def row_value(self, r: int, alive: np.ndarray | None = None) -> float:
        idx = self.rows[r]
        if alive is not None:
            idx = idx[alive[idx]]
        return math.fsum(self.w[j] for j in idx) / float(self.tops[r].I.length)

    def size_squared(self, alive: np.ndarray | None = None) -> tuple[float, int]:
        best, arg = 0.0, -1
        for r in range(len(self.tops)):
            v = self.row_value(r, alive)
            if v > best:
                best, arg = v, r
        return best, arg


def tree_size(tree, coeffs: dict) -> float:
    """``(|I_T|^{-1} sum_{s in T} |<f, phi_s>|^2)^{1/2}``."""
    members = tree.members
    length = tree.top.I.length if isinstance(tree, Tree) else tree.length
    return math.sqrt(math.fsum(abs(coeffs[s]) ** 2 for s in members) / float(length))


def collection_size(tiles: Sequence[Tile], coeffs: dict) -> float:
    tiles = list(tiles)
    idx = SizeIndex(tiles, [abs(coeffs[t]) ** 2 for t in tiles])
    return math.sqrt(idx.size_squared()[0])


@dataclass
class ForestLevel:
    n: int
    trees: list
    size: float = 0.0
    top_length: float = 0.0

    @property
    def tiles(self) -> frozenset:
        return frozenset().union(*[t.members for t in self.trees]) if self.trees else frozenset()


@dataclass
class ForestSelection:
    levels: list
    residual: frozenset
    energy: float
    notes: dict = field(default_factory=dict)

    def partition(self) -> list[frozenset]:
        return [lv.tiles for lv in self.levels] + ([self.residual] if self.residual else [])

    def counting_constants(self) -> dict[int, float]:
        if self.energy <= 0:
            return {}
        return {lv.n: lv.top_length / (4.0 ** lv.n * self.energy) for lv in self.levels}

    def to_jsonl(self, tiles: Sequence[Tile]) -> str:
        ids = {t: k for k, t in enumerate(tiles)}
        lines = []
        for lv in self.levels:
            for T in lv.trees:
                lines.append(json.dumps({"n": lv.n, "top": T.top.to_dict(),
                                         "members": sorted(ids[s] for s in T.members)}))
        return "\n".join(lines) + ("\n" if lines else "")


def select_forest(tiles: Sequence[Tile], coeffs: dict, energy: float | None = None) -> ForestSelection:
    """Greedy size-driven selection.

    At level ``n`` (starting at ``floor(-log2 size)``), while some 2-tree has
    ``size > 2^{-n-1}``, take the qualifying top with the lowest frequency
    (then leftmost, then longest) and remove every remaining tile below it.
    The removed trees form level ``n``. Tiles with zero coefficient are never
    selected and are returned as ``residual``.
    """
    tiles = list(dict.fromkeys(tiles))
    w = [abs(coeffs[t]) ** 2 for t in tiles]
    idx = SizeIndex(tiles, w)
    alive = np.ones(len(tiles), dtype=bool)
    vals = np.array([idx.row_value(r) for r in range(len(idx.tops))]) if idx.tops else np.zeros(0)
    energy = math.fsum(w) if energy is None else energy
    levels: list[ForestLevel] = []
    if vals.size == 0 or vals.max() <= 0:
        return ForestSelection([], frozenset(tiles), energy, {"tie_break": "lowest frequency, leftmost, longest"})
    n = math.floor(-0.5 * math.log2(vals.max()))
    while n > -1100 and 4.0 ** (-n) < vals.max():
        n -= 1  # guard against rounding in the logarithm
    # row membership: tile -> rows containing it
    rows_of: dict[int, list[int]] = {}
    for r, row in enumerate(idx.rows):
        for j in row:
            rows_of.setdefault(int(j), []).append(r)
    current = ForestLevel(n, [])
    while alive.any():
        vmax = vals.max() if vals.size else 0.0
        if vmax <= 0:
            break
        thresh = 4.0 ** (-n - 1)
        if vmax <= thresh:
            if current.trees:
                levels.append(current)
            n += 1
            current = ForestLevel(n, [])
            continue
        r = int(np.flatnonzero(vals > thresh)[0])  # rows are sorted by the tie-break key
        T = idx.tops[r]
        removed = [j for j in np.flatnonzero(alive) if le(tiles[j], T)]
        alive[removed] = False
        current.trees.append(Tree(T, {tiles[j] for j in removed}))
        current.top_length += float(T.I.length)
        for rr in {rr for j in removed for rr in rows_of.get(j, [])}:
            vals[rr] = idx.row_value(rr, alive)
    if current.trees:
        levels.append(current)
    residual = frozenset(tiles[j] for j in np.flatnonzero(alive))
    for lv in levels:
        lv.size = collection_size(sorted(lv.tiles), coeffs)
    return ForestSelection(levels, residual, energy,
                           {"tie_break": "lowest frequency, leftmost, longest"})


def counting_function(tops: Iterable, x) -> int:
    """Number of tops whose time interval ``[a, b)`` contains ``x``."""
    x = Fraction(x)
    n = 0
    for T in tops:
        a, b = _top_interval(T)
        n += a <= x < b
    return n


def _top_interval(T):
    if isinstance(T, Tree):
        return T.top.I.left, T.top.I.right
    if isinstance(T, Tile):
        return T.I.left, T.I.right
    if isinstance(T, Quasitree):
        return T.interval
    a, b = T
    return Fraction(a), Fraction(b)


def counting_integral(tops: Iterable) -> Fraction:
    """Exact integral of the counting function (piecewise constant between endpoints)."""
    ivs = [_top_interval(T) for T in tops]
    pts = sorted({p for iv in ivs for p in iv})
    total = Fraction(0)
    for a, b in zip(pts, pts[1:]):
        total += (b - a) * counting_function(ivs, a)
    return total


# ---------------------------------------------------------------------------
# theta-dependent packets and the split against a quasitree top


def psi0(xi):
    return lp_piece(psi_profile, 0, xi)


class PacketTable:
    """Memoised ``phi_s(x, theta) = int psi0(2^i (theta - xi)) phi_s^(xi) e^{2 pi i xi x} dxi``.

    ``theta`` is snapped to a grid of step ``|omega_s| / 1024``. Entries are
    spectra of the demodulated profile on the sample grid, keyed by scale,
    packet index and snapped theta; the time shift ``m`` is a phase.
    """

    def __init__(self, grid: SampleGrid, steps: int = THETA_STEPS):
        self.grid = grid
        self.steps = steps
        self._cache: dict = {}

    def snap(self, s: Tile, theta: float) -> float:
        w = float(s.omega.length)
        k = round((theta - float(s.omega.left)) / w * self.steps)
        return float(s.omega.left) + k * w / self.steps

    def _profile(self, i: int, l: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        key = (i, l, k)
        if key not in self._cache:
            a = _modulation(l)
            xi = self.grid.xi
            u = 2.0 ** i * xi - a
            band = np.flatnonzero((u > 0) & (u < 2 / MODULUS))
            w = float(pow2(-i))
            theta = float(tile_omega(i, l).left) + k * w / self.steps
            vals = psi0(2.0 ** i * (theta - xi[band])) * 2.0 ** (i / 2) * window_hat(u[band])
            self._cache[key] = (band, vals, u[band])
        return self._cache[key]

    def spectrum(self, s: Tile, theta: float) -> tuple[np.ndarray, np.ndarray]:
        """Support bins and spectral values of ``phi_s(., theta)``."""
        w = float(s.omega.length)
        k = round((theta - float(s.omega.left)) / w * self.steps)
        band, vals, u = self._profile(s.scale, s.l, k)
        return band, vals * np.exp(-2j * np.pi * s.m * u)

    def evaluate(self, s: Tile, theta: float) -> SampledSignal:
        spec = np.zeros(self.grid.n, dtype=complex)
        band, vals = self.spectrum(s, theta)
        spec[band] = vals
        return self.grid.from_spectrum(spec, theta=self.snap(s, theta))

    def theta_support(self, s: Tile) -> tuple[float, float]:
        h = s.halves[1]
        return float(h.left), float(h.right)


def _eta(t):
    """1 on [-1/4, 1/4], 0 outside (-1/2, 1/2), smooth in between."""
    a = np.abs(np.asarray(t, dtype=float))
    return 1.0 - smooth_step((a - 0.25) / 0.25)


@dataclass
class SplitResult:
    local: SampledSignal      # supported in 2^{l-1} I_s
    remainder: SampledSignal  # mean zero against the top frequency
    coefficient: complex


def phi_split(phi_s: SampledSignal, s: Tile, xi_top, l: int) -> SplitResult:
    """Split ``phi_s`` into a piece supported in ``2^{l-1} I_s`` and a mean-zero remainder.

    With ``D(x) = eta((x - c(I_s)) / (2^l |I_s|))`` and
    ``c = int phi_s e^{-2 pi i xi x} D``, the remainder is
    ``e^{2 pi i xi x} D c / int D + phi_s (1 - D)`` and the local part is the
    difference. ``l = 0`` returns ``(0, phi_s)``.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if l == 0:
        return SplitResult(phi_s.with_samples(np.zeros(phi_s.n)), phi_s, 0j)
    x = phi_s.x
    xi = float(xi_top)
    D = _eta((x - float(s.I.center)) / (2.0 ** l * float(s.I.length)))
    demod = np.exp(-2j * np.pi * xi * x)
    c = phi_s.spacing * np.sum(phi_s.samples * demod * D)
    mass = phi_s.spacing * np.sum(D)
    bumpterm = np.conj(demod) * D * c / mass
    remainder = bumpterm + phi_s.samples * (1 - D)
    local = phi_s.samples - remainder
    return SplitResult(phi_s.with_samples(local, part="local", l=l),
                       phi_s.with_samples(remainder, part="remainder", l=l), complex(c))


# ---------------------------------------------------------------------------
# random instances


def random_tiles(rng: np.random.Generator, count: int, scales: Sequence[int],
                 time_window=(0, 16), freq_window=(0, 8)) -> list[Tile]:
    """Distinct standard-grid tiles inside the given time and frequency windows."""
    universe = []
    t0, t1 = Fraction(time_window[0]), Fraction(time_window[1])
    f0, f1 = Fraction(freq_window[0]), Fraction(freq_window[1])
    for i in scales:
        step = pow2(i)
        for m in range(math.ceil(t0 / step), math.floor(t1 / step)):
            for n in range(math.ceil(f0 * step), math.floor(f1 * step)):
                universe.append(Tile.standard(i, m, n))
    if count > len(universe):
        raise ValueError(f"only {len(universe)} tiles available")
    pick = rng.choice(len(universe), size=count, replace=False)
    return [universe[k] for k in sorted(pick)]


def random_signal(rng: np.random.Generator, grid: SampleGrid, band=(0.0, 8.0),
                  support=(0.0, 16.0)) -> SampledSignal:
    """Random band-limited signal concentrated on a time window."""
    xi = grid.xi
    spec = (rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)) * ((xi >= band[0]) & (xi < band[1]))
    g = grid.from_spectrum(spec)
    x = grid.x
    a, b = support
    env = np.exp(-0.5 * ((x - (a + b) / 2) / ((b - a) / 4)) ** 2)
    h = grid.signal(g.samples * env)
    # re-band-limit after windowing
    H = transform(h)
    H = H.with_values(H.values * ((H.xi >= band[0] - 1) & (H.xi < band[1] + 1)))
    out = inverse(H)
    return grid.signal(out.samples / out.norm(2))
