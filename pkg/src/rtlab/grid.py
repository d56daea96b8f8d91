"""Exact dyadic and N-adic grids of intervals.

Intervals are kept as integer tuples ``(i, l, L, N)`` standing for
``[2**i * (l + L/N), 2**i * (l + L/N + 1)]``; every comparison goes through
:class:`fractions.Fraction`, never floats.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

DISJOINT = "disjoint"
A_INSIDE_B = "a_inside_b"
B_INSIDE_A = "b_inside_a"
VIOLATION = "violation"


def pow2(i: int) -> Fraction:
    return Fraction(2) ** i


@dataclass(frozen=True, order=True)
class GridInterval:
    i: int
    l: int
    L: int = 0
    N: int = 1

    def __post_init__(self):
        if self.N < 1 or (self.N != 1 and (self.N < 3 or self.N % 2 == 0)):
            raise ValueError(f"N must be 1 or an odd integer >= 3, got {self.N}")
        if not 0 <= self.L < self.N:
            raise ValueError(f"L must lie in [0, N), got L={self.L}, N={self.N}")

    @property
    def left(self) -> Fraction:
        return pow2(self.i) * (self.l + Fraction(self.L, self.N))

    @property
    def right(self) -> Fraction:
        return self.left + pow2(self.i)

    @property
    def length(self) -> Fraction:
        return pow2(self.i)

    @property
    def center(self) -> Fraction:
        return self.left + pow2(self.i - 1)

    def endpoints(self) -> tuple[Fraction, Fraction]:
        return endpoints(self)

    def sons(self) -> tuple["GridInterval", "GridInterval"]:
        return sons(self)

    def contains_point(self, x) -> bool:
        return self.left <= x <= self.right

    def __str__(self):
        return f"[{self.left}, {self.right}]"


def endpoints(w: GridInterval) -> tuple[Fraction, Fraction]:
    return w.left, w.right


def _bounds(x) -> tuple[Fraction, Fraction]:
    if isinstance(x, GridInterval):
        return x.left, x.right
    a, b = x
    return Fraction(a), Fraction(b)


def relate(a, b) -> str:
    """Classify two closed intervals; touching endpoints count as disjoint."""
    a0, a1 = _bounds(a)
    b0, b1 = _bounds(b)
    if a1 <= b0 or b1 <= a0:
        return DISJOINT
    if b0 <= a0 and a1 <= b1:
        return A_INSIDE_B
    if a0 <= b0 and b1 <= a1:
        return B_INSIDE_A
    return VIOLATION


def sons(w: GridInterval) -> tuple[GridInterval, GridInterval]:
    q, L2 = divmod(2 * w.L, w.N)
    return (GridInterval(w.i - 1, 2 * w.l + q, L2, w.N),
            GridInterval(w.i - 1, 2 * w.l + q + 1, L2, w.N))


def is_descendant(child: GridInterval, parent: GridInterval) -> bool:
    """True when ``child`` is obtained from ``parent`` by repeated halving."""
    d = parent.i - child.i
    if d < 0:
        return False
    if not (parent.left <= child.left and child.right <= parent.right):
        return False
    return ((child.left - parent.left) / child.length).denominator == 1


@dataclass(frozen=True)
class GridSpec:
    """The grid ``G_{N,j,L}`` (or its saturation); ``N == 1`` is the standard grid."""
    N: int = 1
    j: int = 0
    L: int = 0
    saturated: bool = False

    def __post_init__(self):
        if self.N != 1 and (self.N < 3 or self.N % 2 == 0):
            raise ValueError(f"N must be 1 or an odd integer >= 3, got {self.N}")
        period = max(self.N - 1, 1)
        if not 0 <= self.j < period:
            raise ValueError(f"j must lie in [0, {period}), got {self.j}")
        if not 0 <= self.L < self.N:
            raise ValueError(f"L must lie in [0, {self.N}), got {self.L}")

    @property
    def standard(self) -> bool:
        return self.N == 1

    @property
    def period(self) -> int:
        return 1 if self.N == 1 else self.N - 1

    def admissible(self, k: int) -> bool:
        if self.standard or self.saturated:
            return True
        return (k - self.j) % self.period == 0

    def offset(self, k: int) -> int | None:
        """Offset numerator ``L_k`` of the lattice at scale ``k``, or None if absent.

        Descendants of the scale-``k0`` intervals carry ``L * 2**(k0-k) mod N``,
        where ``k0`` is the nearest admissible scale at or above ``k``.
        """
        if self.standard:
            return 0
        if not self.admissible(k):
            return None
        d = (self.j - k) % self.period
        return (self.L * pow(2, d, self.N)) % self.N

    def origin(self, k: int) -> Fraction | None:
        off = self.offset(k)
        if off is None:
            return None
        return pow2(k) * Fraction(off, self.N)

    def interval(self, k: int, l: int) -> GridInterval:
        off = self.offset(k)
        if off is None:
            raise ValueError(f"scale {k} is not admissible for {self}")
        return GridInterval(k, l, off, self.N)

    def contains(self, w: GridInterval) -> bool:
        """Lazy membership: decided arithmetically, nothing is materialised."""
        o = self.origin(w.i)
        if o is None:
            return False
        return ((w.left - o) / w.length).denominator == 1

    def index_range(self, k: int, lo, hi) -> range:
        """Indices ``l`` of scale-``k`` intervals meeting the window ``[lo, hi)``."""
        o = self.origin(k)
        if o is None or hi <= lo:
            return range(0)
        step = pow2(k)
        # need left < hi and right > lo
        first = math.floor((Fraction(lo) - o) / step - 1) + 1
        last = math.ceil((Fraction(hi) - o) / step) - 1
        return range(first, last + 1)

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "j": self.j, "L": self.L,
                           "saturated": self.saturated})

    @classmethod
    def from_json(cls, text: str | dict) -> "GridSpec":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        return cls(N=int(d["N"]), j=int(d.get("j", 0)), L=int(d.get("L", 0)),
                   saturated=bool(d.get("saturated", False)))


STANDARD = GridSpec()


def enumerate_grid(spec: GridSpec, scales: Iterable[int], window) -> list[GridInterval]:
    lo, hi = _bounds(window)
    out = []
    for k in sorted(set(scales)):
        if not spec.admissible(k):
            continue
        off = spec.offset(k)
        out.extend(GridInterval(k, l, off, spec.N) for l in spec.index_range(k, lo, hi))
    out.sort(key=lambda w: (w.i, w.left))
    return out


def count_in_window(spec: GridSpec, k: int, window) -> int:
    lo, hi = _bounds(window)
    r = spec.index_range(k, lo, hi)
    return max(0, r.stop - r.start)


@dataclass
class GridReport:
    checked_pairs: int
    violations: list
    method: str
    shared_intervals: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations and self.shared_intervals == 0


def _pairwise(intervals: Sequence[GridInterval]) -> tuple[int, list]:
    bad = []
    pairs = 0
    n = len(intervals)
    for x in range(n):
        for y in range(x + 1, n):
            pairs += 1
            if relate(intervals[x], intervals[y]) == VIOLATION:
                bad.append((intervals[x], intervals[y]))
    return pairs, bad


def _sweep(specs: Sequence[GridSpec], scales: Sequence[int], window,
           max_violations: int = 100) -> tuple[int, list]:
    """Boundary-point reduction of the pairwise check.

    Two grid intervals at scales ``k < k'`` overlap without nesting exactly when
    a boundary point of the coarse one falls strictly inside the fine one. All
    coarse boundary points differ by multiples of the fine step, so one
    comparison of lattice origins settles each pair of layers.
    """
    lo, hi = _bounds(window)
    layers = []
    for spec in specs:
        for k in sorted(set(scales)):
            if spec.admissible(k):
                layers.append((k, spec.origin(k), spec))
    layers.sort(key=lambda t: t[0])
    pairs = 0
    bad = []
    counts = [count_in_window(sp, k, (lo, hi)) for k, _, sp in layers]
    for a in range(len(layers)):
        pairs += counts[a] * (counts[a] - 1) // 2
        for b in range(a + 1, len(layers)):
            pairs += counts[a] * counts[b]
    for k_fine, o_fine, sp_f in layers:
        step_f = pow2(k_fine)
        for k_coarse, o_coarse, sp_c in layers:
            if k_coarse < k_fine or (k_coarse == k_fine and o_coarse == o_fine):
                continue
            # every coarse boundary o_c + n 2^k_c sits on the fine lattice iff
            # the origins differ by a multiple of the fine step
            if ((o_coarse - o_fine) / step_f).denominator == 1:
                continue
            step_c = pow2(k_coarse)
            n = math.ceil((lo - o_coarse) / step_c)
            p = o_coarse + n * step_c
            if p > hi:
                continue
            fine = sp_f.interval(k_fine, math.floor((p - o_fine) / step_f))
            coarse = sp_c.interval(k_coarse, n if p < hi else n - 1)
            bad.append((fine, coarse))
            if len(bad) >= max_violations:
                return pairs, bad
    return pairs, bad


def verify_grid(spec, scale_range: Iterable[int], window, method: str = "auto",
                pair_limit: int = 64, others: Sequence[GridSpec] = ()) -> GridReport:
    """Check the nestedness axiom on a finite piece of one or more grids.

    ``spec`` may be a single :class:`GridSpec` or a sequence of them (the latter
    is how a deliberately corrupted union is fed in). ``method='pairwise'`` runs
    :func:`relate` on every enumerated pair; ``'sweep'`` uses the boundary-point
    reduction, which covers the same pairs without materialising them.
    ``others`` are sibling grids (other ``(j, L)``) that must share no interval
    with ``spec``.
    """
    specs = [spec] if isinstance(spec, GridSpec) else list(spec)
    scales = sorted(set(scale_range))
    total = sum(count_in_window(sp, k, window) for sp in specs for k in scales
                if sp.admissible(k))
    if method == "auto":
        method = "pairwise" if total <= pair_limit else "sweep"
    if method == "pairwise":
        ivs = sorted({w for sp in specs for w in enumerate_grid(sp, scales, window)},
                     key=lambda w: (w.i, w.left))
        pairs, bad = _pairwise(ivs)
    elif method == "sweep":
        pairs, bad = _sweep(specs, scales, window)
    else:
        raise ValueError(f"unknown method {method!r}")
    shared = 0
    if others:
        shared = sum(shared_intervals([sp, o], scales, window)
                     for sp in specs for o in others if o != sp)
    return GridReport(checked_pairs=pairs, violations=bad, method=method,
                      shared_intervals=shared)


def shared_intervals(specs: Sequence[GridSpec], scale_range: Iterable[int], window) -> int:
    """Number of intervals (within the window) that belong to two or more specs.

    At a fixed scale each grid is a translated lattice, so two grids share an
    interval iff their offsets agree; this decides the infinite intersection
    exactly and only counts the shared members inside the window.
    """
    shared = 0
    for k in sorted(set(scale_range)):
        seen: dict[int, int] = {}
        for sp in specs:
            off = sp.offset(k)
            if off is None:
                continue
            key = Fraction(off, sp.N)
            seen[key] = seen.get(key, 0) + 1
        for key, c in seen.items():
            if c > 1:
                n = _lattice_count(pow2(k) * key, pow2(k), window)
                shared += n * (c - 1)
    return shared


def _lattice_count(origin: Fraction, step: Fraction, window) -> int:
    lo, hi = _bounds(window)
    first = math.floor((lo - origin) / step - 1) + 1
    last = math.ceil((hi - origin) / step) - 1
    return max(0, last - first + 1)


def intervals_to_csv(intervals: Iterable[GridInterval]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "l", "L", "N", "left_num", "left_den"])
    for iv in intervals:
        a = iv.left
        w.writerow([iv.i, iv.l, iv.L, iv.N, a.numerator, a.denominator])
    return buf.getvalue()


def intervals_from_csv(text: str) -> list[GridInterval]:
    rows = csv.DictReader(io.StringIO(text))
    out = []
    for r in rows:
        iv = GridInterval(int(r["i"]), int(r["l"]), int(r["L"]), int(r["N"]))
        if iv.left != Fraction(int(r["left_num"]), int(r["left_den"])):
            raise ValueError(f"row {r} has inconsistent left endpoint")
        out.append(iv)
    return out
