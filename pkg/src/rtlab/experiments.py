"""Named experiments: schema-checked parameters, seeded cells, verdicts and reports.

Every experiment receives one random stream derived from ``(seed, name)``; cells
that run in parallel get children of that stream, spawned in cell order, so
results do not depend on the thread count. Verdicts are ``pass``/``fail`` for
exact or tolerance invariants and ``informative`` for lower-bound measurements
against inequalities with unspecified constants.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np

from . import dynamics, grid, kernels, multipliers, seqnorms, timefreq
from .signal import SampledSignal

PASS, FAIL, INFORMATIVE = "pass", "fail", "informative"


class UsageError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


# ---------------------------------------------------------------------------
# specs, reports, context


@dataclass
class ExperimentSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str | None = None
    threads: int = 1


@dataclass
class Verdict:
    check: str
    status: str
    detail: str

    def to_dict(self) -> dict:
        return {"check": self.check, "status": self.status, "detail": self.detail}


@dataclass
class ExperimentReport:
    name: str
    params: dict
    seed: int
    claim: str
    operations: list
    cells: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    measurements: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    plotdata: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    threads: int = 1
    version: str = field(default_factory=tool_version)
    output_dir: str | None = None

    @property
    def status(self) -> str:
        states = {v.status for v in self.verdicts}
        return FAIL if FAIL in states else (PASS if PASS in states else INFORMATIVE)

    @property
    def exit_code(self) -> int:
        return 1 if self.status == FAIL else 0

    def verdict(self, check: str) -> Verdict:
        for v in self.verdicts:
            if v.check == check:
                return v
        raise KeyError(check)

    def to_dict(self) -> dict:
        return _plain({
            "experiment": self.name, "version": self.version,
            "spec": {"name": self.name, "params": self.params, "seed": self.seed,
                     "output_dir": self.output_dir},
            "claim": self.claim, "operations": self.operations, "status": self.status,
            "verdicts": [v.to_dict() for v in self.verdicts], "fits": self.fits,
            "measurements": self.measurements, "cells": self.cells,
            "wall_clock_s": self.wall_clock_s, "threads": self.threads,
        })

    def cells_csv(self) -> str:
        return rows_to_csv(self.cells)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        (out / "cells.csv").write_text(self.cells_csv())
        if self.plotdata:
            (out / "plotdata").mkdir(exist_ok=True)
            for name, rows in self.plotdata.items():
                (out / "plotdata" / f"{name}.csv").write_text(rows_to_csv(rows))
        return out


def _plain(x):
    """Convert numpy scalars, tuples and Fractions so ``json.dumps`` is exact."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    return x


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence[dict]) -> str:
    cols: list = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def experiment_stream(seed: int, name: str) -> np.random.SeedSequence:
    """Fixed splitting rule: entropy ``(seed, first 8 bytes of sha256(name))``."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")
    return np.random.SeedSequence([int(seed), tag])


class RunContext:
    def __init__(self, report: ExperimentReport, stream: np.random.SeedSequence, threads: int):
        self.report = report
        self.params = report.params
        self.stream = stream
        self.threads = max(1, int(threads))
        self.rng = np.random.default_rng(stream.spawn(1)[0])

    def map(self, fn: Callable, items: Sequence) -> list:
        """``fn(item, rng)`` per item; children are spawned in item order."""
        items = list(items)
        rngs = [np.random.default_rng(s) for s in self.stream.spawn(len(items))]
        if self.threads == 1 or len(items) < 2:
            return [fn(it, r) for it, r in zip(items, rngs)]
        with ThreadPoolExecutor(self.threads) as ex:
            return list(ex.map(fn, items, rngs))

    def cell(self, **values):
        self.report.cells.append(values)

    def measure(self, **values):
        self.report.measurements.update(values)

    def fit(self, name: str, xs, ys) -> multipliers.ExponentFit:
        f = multipliers.fit_exponent(xs, ys)
        self.report.fits[name] = {"exponent": f.exponent, "stderr": f.stderr,
                                  "intercept": f.intercept, "residuals": list(f.residuals),
                                  "points": len(xs)}
        return f

    def verdict(self, check: str, ok: bool | None, detail: str):
        status = INFORMATIVE if ok is None else (PASS if ok else FAIL)
        self.report.verdicts.append(Verdict(check, status, detail))

    def plot(self, name: str, rows: list):
        self.report.plotdata[name] = rows


# ---------------------------------------------------------------------------
# registry


@dataclass
class Experiment:
    name: str
    claim: str
    operations: tuple
    properties: dict
    body: Callable
    kernel_param: bool = False

    @property
    def schema(self) -> dict:
        return {"type": "object", "properties": self.properties, "additionalProperties": False}

    def defaults(self) -> dict:
        return {k: v["default"] for k, v in self.properties.items()}


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, claim: str, operations: Sequence[str], kernel_param: bool = False,
               **properties):
    def register(fn):
        REGISTRY[name] = Experiment(name, claim, tuple(operations), properties, fn, kernel_param)
        return fn
    return register


def Int(default, minimum=None, maximum=None) -> dict:
    s = {"type": "integer", "default": default}
    if minimum is not None:
        s["minimum"] = minimum
    if maximum is not None:
        s["maximum"] = maximum
    return s


def Num(default, minimum=None, maximum=None, exclusive_min=None) -> dict:
    s = {"type": "number", "default": default}
    if minimum is not None:
        s["minimum"] = minimum
    if maximum is not None:
        s["maximum"] = maximum
    if exclusive_min is not None:
        s["exclusiveMinimum"] = exclusive_min
    return s


def IntList(default, minimum=None, min_items=1) -> dict:
    item = {"type": "integer"} if minimum is None else {"type": "integer", "minimum": minimum}
    return {"type": "array", "items": item, "minItems": min_items, "default": default}


def NumList(default, minimum=None, min_items=1) -> dict:
    item = {"type": "number"} if minimum is None else {"type": "number", "minimum": minimum}
    return {"type": "array", "items": item, "minItems": min_items, "default": default}


def Pair(default) -> dict:
    return {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2,
            "default": default}


def Enum(default, values) -> dict:
    return {"enum": list(values), "default": default}


ROTATION = {"oneOf": [{"enum": ["golden", "sqrt2"]}, {"type": "number", "minimum": 0,
                                                        "exclusiveMaximum": 1}]}


def Rotation(default) -> dict:
    return dict(ROTATION, default=default)


def rotation_number(v) -> float:
    return {"golden": float(dynamics.GOLDEN), "sqrt2": math.sqrt(2) - 1}.get(v, v)


def list_experiments() -> list[str]:
    return sorted(REGISTRY)


def describe() -> dict:
    return {n: {"claim": e.claim, "operations": list(e.operations), "defaults": e.defaults(),
                "takes_kernel": e.kernel_param} for n, e in sorted(REGISTRY.items())}


def validate(name: str, params: dict | None) -> dict:
    """Schema check; returns the parameters with defaults filled in."""
    if name not in REGISTRY:
        raise UsageError(f"unknown experiment {name!r}; known: {', '.join(list_experiments())}")
    exp = REGISTRY[name]
    params = {} if params is None else params
    errors = sorted(jsonschema.Draft202012Validator(exp.schema).iter_errors(params),
                    key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError(f"invalid config for {name}: " + "; ".join(msgs))
    full = exp.defaults()
    full.update(params)
    return full


def run(spec: ExperimentSpec) -> ExperimentReport:
    if not 0 <= int(spec.seed) < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    params = validate(spec.name, spec.params)
    exp = REGISTRY[spec.name]
    report = ExperimentReport(spec.name, params, int(spec.seed), exp.claim, list(exp.operations),
                              threads=max(1, int(spec.threads)), output_dir=spec.output_dir)
    ctx = RunContext(report, experiment_stream(spec.seed, spec.name), spec.threads)
    t0 = time.perf_counter()
    exp.body(ctx)
    report.wall_clock_s = time.perf_counter() - t0
    if spec.output_dir is not None:
        report.write(spec.output_dir)
    return report


# ---------------------------------------------------------------------------
# grids, norms, kernels


@experiment("verify-grid", "nestedness of the shifted N-adic grids and disjointness across shifts",
            ["grid.verify_grid", "grid.shared_intervals"],
            N=Int(41, minimum=3), j_values=IntList(None, minimum=0) | {"type": ["array", "null"]},
            L_values=IntList(None, minimum=0) | {"type": ["array", "null"]},
            periods=Int(3, minimum=1, maximum=6), window=Pair([0, 8]))
def _verify_grid(ctx: RunContext):
    p = ctx.params
    N = p["N"]
    if any(N % d == 0 for d in range(2, int(math.isqrt(N)) + 1)):
        ctx.verdict("modulus", None, f"N={N} is composite; nesting is not expected")
    js = p["j_values"] if p["j_values"] is not None else list(range(N - 1))
    Ls = p["L_values"] if p["L_values"] is not None else list(range(N))
    if any(j >= N - 1 for j in js) or any(L >= N for L in Ls):
        raise ConfigError("need j < N-1 and L < N")
    P = N - 1
    scales = range(-P, (p["periods"] - 1) * P)
    window = tuple(Fraction(w) for w in p["window"])
    specs = [grid.GridSpec(N, j, L) for j in js for L in Ls]
    reports = ctx.map(lambda sp, _: grid.verify_grid(sp, scales, window), specs)
    bad = 0
    for sp, r in zip(specs, reports):
        ctx.cell(j=sp.j, L=sp.L, method=r.method, checked_pairs=r.checked_pairs,
                 violations=len(r.violations))
        bad += len(r.violations)
    shared = grid.shared_intervals(specs, scales, window)
    ctx.measure(grids=len(specs), scales=[scales.start, scales.stop], violations=bad,
                shared_intervals=shared, checked_pairs=sum(r.checked_pairs for r in reports))
    ctx.verdict("nestedness", bad == 0, f"{bad} violations over {len(specs)} grids")
    ctx.verdict("disjointness", shared == 0, f"{shared} intervals shared between grids")


def _cover_oracle(x: np.ndarray, lam: float) -> int:
    """Smallest set of centres from ``x`` covering ``x`` with radius ``lam``, by subsets."""
    n = x.size
    near = np.abs(x[:, None] - x[None]) <= lam
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            if near[list(combo)].any(axis=0).all():
                return k
    return n


@experiment("verify-norms", "r-variation and oscillation norm inequalities on short sequences",
            ["seqnorms.variation_norm", "seqnorms.variation_norm_batch",
             "seqnorms.oscillation_norm_batch", "seqnorms.entropy_profile",
             "seqnorms.covering_number"],
            instances=Int(10_000, minimum=1), max_len=Int(12, minimum=2, maximum=16),
            r_range=Pair([1.0, 4.0]), cover_oracle_every=Int(50, minimum=1))
def _verify_norms(ctx: RunContext):
    p = ctx.params
    r_lo, r_hi = p["r_range"]
    if not 1 <= r_lo <= r_hi:
        raise ConfigError("r_range must satisfy 1 <= lo <= hi")
    lengths = list(range(2, p["max_len"] + 1))
    per = [p["instances"] // len(lengths) + (i < p["instances"] % len(lengths))
           for i in range(len(lengths))]

    def cell(item, rng):
        n, B = item
        fails = dict.fromkeys(["oracle", "monotone_r", "subadditive", "product",
                               "oscillation_product", "entropy", "cover"], 0)
        if B == 0:
            return n, B, fails
        scale = rng.choice([0.1, 1.0, 10.0], size=(B, 1))
        a = rng.normal(size=(B, n)) * scale
        b = rng.normal(size=(B, n))
        r = r_lo + (r_hi - r_lo) * rng.random(B)
        r2 = r + rng.random(B) * 2
        U = np.sort(rng.choice(n, size=min(n, 3), replace=False))
        for t in range(B):
            va = seqnorms.variation_norm(a[t], r[t], "exact")
            vb = seqnorms.variation_norm(b[t], r[t], "exact")
            dp = seqnorms.variation_norm_batch(a[t:t + 1], r[t])[0]
            fails["oracle"] += not math.isclose(va, dp, rel_tol=1e-9, abs_tol=1e-12)
            fails["monotone_r"] += seqnorms.variation_norm_batch(a[t:t + 1], r2[t])[0] > va + 1e-9
            fails["subadditive"] += (seqnorms.variation_norm_batch((a[t] + b[t])[None], r[t])[0]
                                     > va + vb + 1e-9)
            fails["product"] += (seqnorms.variation_norm_batch((a[t] * b[t])[None], r[t])[0]
                                 > 2 * va * vb + 1e-9)
            ent, _ = seqnorms.entropy_profile(a[t], r[t])
            fails["entropy"] += ent > 4 * va + 1e-9
            if t % p["cover_oracle_every"] == 0:
                lam = float(rng.uniform(0.05, 1.0)) * float(np.ptp(a[t]) or 1.0)
                fails["cover"] += seqnorms.covering_number(a[t], lam) != _cover_oracle(a[t], lam)
        if len(U) >= 2:
            lhs = seqnorms.oscillation_norm_batch(a * b, U)
            rhs = (np.abs(b).max(1) * seqnorms.oscillation_norm_batch(a, U)
                   + np.abs(a).max(1) * seqnorms.oscillation_norm_batch(b, U))
            fails["oscillation_product"] = int(np.sum(lhs > rhs + 1e-9))
        return n, B, fails

    total = 0
    worst = dict.fromkeys(["oracle", "monotone_r", "subadditive", "product",
                           "oscillation_product", "entropy", "cover"], 0)
    for n, B, fails in ctx.map(cell, list(zip(lengths, per))):
        ctx.cell(length=n, instances=B, **{f"fail_{k}": int(v) for k, v in fails.items()})
        total += B
        for k, v in fails.items():
            worst[k] += int(v)
    ctx.measure(instances=total, failures=worst)
    labels = {"oracle": "dynamic programme equals subset enumeration",
              "monotone_r": "V^r non-increasing in r", "subadditive": "V^r subadditive",
              "product": "V^r(ab) <= 2 V^r(a) V^r(b)",
              "oscillation_product": "O_U(ab) <= |b|_inf O_U(a) + |a|_inf O_U(b)",
              "entropy": "lambda M_lambda^(1/r) <= 4 V^r",
              "cover": "covering number equals subset-search oracle"}
    for k, label in labels.items():
        ctx.verdict(k, worst[k] == 0, f"{label}: {worst[k]} failures in {total} instances")


@experiment("verify-kernels", "exact transfer-kernel identities and uniform approximation constants",
            ["kernels.kernel_catalog", "kernels.check_admissible", "kernels.discrete_kernels",
             "kernels.kernel_approx_error", "kernels.summation_by_parts_weights"],
            kernel_param=True,
            kernel=Enum("inverse_y", kernels.CATALOG), k_max=Int(10, minimum=1, maximum=14),
            window=Int(4096, minimum=1), approx_k=Pair([1, 10]), sbp_k=Pair([1, 12]),
            stability_factor=Num(2.0, minimum=1), sbp_bound=Num(2.0, exclusive_min=0))
def _verify_kernels(ctx: RunContext):
    p = ctx.params
    spec = kernels.kernel_catalog(p["kernel"])
    adm = kernels.check_admissible(spec)
    ctx.measure(admissible=adm.ok)
    ctx.verdict("admissible", adm.ok, f"{spec.name}: decay and smoothness probes")
    try:
        kernels.discrete_kernels(spec, 1)
    except ValueError as e:
        ctx.verdict("discrete_tables", None, f"not applicable: {e}")
        return
    W = p["window"]
    ks = list(range(1, p["k_max"] + 1))
    tables = dict(zip(ks, ctx.map(lambda k, _: kernels.discrete_kernels(spec, k, radius=W), ks)))
    mismatches = 0
    for a in ks:
        for b in ks:
            if b <= a:
                continue
            Ha, Hb, Oa, Ob = tables[a]["H"], tables[b]["H"], tables[a]["O"], tables[b]["O"]
            mismatches += sum(Ha.at(i) - Hb.at(i) != Oa.at(i) - Ob.at(i) for i in range(-W, W + 1))
    ctx.verdict("h_minus_o_identity", mismatches == 0,
                f"H_k - H_k' = O_k - O_k' at |i| <= {W} for k, k' <= {p['k_max']}: "
                f"{mismatches} mismatches")
    a_lo, a_hi = (int(v) for v in p["approx_k"])
    approx = ctx.map(lambda k, _: kernels.kernel_approx_error(spec, k), range(a_lo, a_hi + 1))
    inner = [r.inner_constant for r in approx]
    outer = [r.outer_constant for r in approx]
    s_lo, s_hi = (int(v) for v in p["sbp_k"])
    sbp = {k: float(sum(abs(x) for x in kernels.summation_by_parts_weights(spec, k)))
           for k in range(s_lo, s_hi + 1)}
    for r in approx:
        ctx.cell(k=r.k, inner_constant=r.inner_constant, outer_constant=r.outer_constant,
                 sbp_weight_sum=sbp.get(r.k))
    for k in sorted(set(sbp) - {r.k for r in approx}):
        ctx.cell(k=k, sbp_weight_sum=sbp[k])
    fac = p["stability_factor"]
    ri, ro = max(inner) / min(inner), max(outer) / min(outer)
    ctx.measure(inner_spread=ri, outer_spread=ro, sbp_max=max(sbp.values()))
    ctx.verdict("approximation_stability", ri <= fac and ro <= fac,
                f"inner spread {ri:.3f}, outer spread {ro:.3f}, allowed {fac}")
    ctx.verdict("sbp_bounded", max(sbp.values()) <= p["sbp_bound"],
                f"max weight sum {max(sbp.values()):.4f} over k={s_lo}..{s_hi}")


# ---------------------------------------------------------------------------
# ergodic averages


OBSERVABLES = {
    "indicator_half": (lambda s: (np.asarray(s) < 0.5).astype(float), 0.5),
    "cosine": (lambda s: np.cos(2 * np.pi * np.asarray(s)), 0.0),
    "identity": (lambda s: np.asarray(s, dtype=float), 0.5),
}


@experiment("birkhoff", "ergodic averages along a rotation converge to the integral",
            ["dynamics.DiscreteSystem.orbit", "dynamics.birkhoff_average"],
            alpha=Rotation("golden"), N=Int(100_000, minimum=1), x0=NumList([0.0], minimum=0),
            observable=Enum("indicator_half", OBSERVABLES), tolerance=Num(0.01, exclusive_min=0),
            checkpoints=Int(8, minimum=1))
def _birkhoff(ctx: RunContext):
    p = ctx.params
    alpha = rotation_number(p["alpha"])
    sysx = dynamics.DiscreteSystem("rotation", alpha=alpha)
    g, integral = OBSERVABLES[p["observable"]]
    N = p["N"]
    Ns = sorted({max(1, int(round(N ** ((c + 1) / p["checkpoints"])))) for c in range(p["checkpoints"])})
    worst = 0.0
    path = []
    for x in p["x0"]:
        for n in Ns:
            avg = dynamics.birkhoff_average(sysx, g, x, n)
            err = abs(avg - integral)
            ctx.cell(x0=x, N=n, average=avg.real, error=err)
            path.append({"x0": x, "N": n, "error": err})
        worst = max(worst, err)
    ctx.plot("convergence", path)
    ctx.measure(alpha=alpha, integral=integral, final_error=worst)
    ctx.verdict("limit", worst <= p["tolerance"],
                f"max |average - integral| at N={N}: {worst:.3g} (tolerance {p['tolerance']})")


@experiment("wiener-wintner", "modulated averages along a rotation converge for every frequency",
            ["dynamics.OrbitWeights", "dynamics.wiener_wintner"],
            alpha=Rotation("golden"), N=Int(20_000, minimum=1), thetas=Int(64, minimum=1),
            x0=Num(0.21, minimum=0, maximum=1), checkpoints=Int(5, minimum=1))
def _wiener_wintner(ctx: RunContext):
    p = ctx.params
    alpha = rotation_number(p["alpha"])
    sysx = dynamics.DiscreteSystem("rotation", alpha=alpha)
    N = p["N"]
    char = dynamics.OrbitWeights(sysx, p["x0"], lambda s: np.exp(2j * np.pi * s), 0, N)
    half = dynamics.OrbitWeights(sysx, p["x0"], OBSERVABLES["indicator_half"][0], 0, N)
    thetas = np.concatenate([[(-alpha) % 1.0], ctx.rng.random(p["thetas"])])
    Ns = sorted({max(1, int(round(N ** ((c + 1) / p["checkpoints"])))) for c in range(p["checkpoints"])})
    violations, resonance = 0, 0.0
    sup_rows = []
    for n in Ns:
        sup_half = 0.0
        for t in thetas:
            v = dynamics.wiener_wintner(char, float(t), n)
            dist = abs(((t + alpha) + 0.5) % 1 - 0.5)
            if dist < 1e-12:
                resonance = max(resonance, abs(v - np.exp(2j * np.pi * p["x0"])))
                bound = None
            else:
                bound = 1 / (2 * n * dist)
                violations += abs(v) > bound + 1e-12
            ctx.cell(N=n, theta=float(t), modulus=abs(v), bound=bound)
            h = half.values[:n] - 0.5
            sup_half = max(sup_half, abs(np.mean(h * np.exp(2j * np.pi * np.arange(n) * t))))
        sup_rows.append({"N": n, "sup_theta": sup_half})
    ctx.plot("uniform_sup", sup_rows)
    ctx.measure(resonance_error=resonance, sup_theta_centered_indicator=sup_rows)
    ctx.verdict("geometric_bound", violations == 0,
                f"{violations} modulated averages above 1/(2N dist(theta, -alpha))")
    ctx.verdict("resonance", resonance < 1e-9,
                f"average at theta = -alpha equals e^(2 pi i x0) to {resonance:.2g}")
    # a rotation has discrete spectrum: the sup tends to the largest Fourier coefficient, 1/pi
    ctx.verdict("uniform_limit", None,
                f"sup over sampled theta of centred indicator averages: {sup_rows[0]['sup_theta']:.3g}"
                f" -> {sup_rows[-1]['sup_theta']:.3g} (largest Fourier coefficient {1 / math.pi:.3g})")


def _lacunary(ctx: RunContext, series_at: Callable, label: str) -> None:
    p = ctx.params
    ms = list(range(p["m_range"][0], p["m_range"][1] + 1))
    rows = []
    for a in p["alphas"]:
        d = series_at(rotation_number(a), ms)
        inv = dynamics.inversions(d)
        for m, v in zip(ms, d):
            ctx.cell(alpha=str(a), m=m, rms_difference=float(v))
            rows.append({"alpha": str(a), "m": m, "rms_difference": float(v)})
        ctx.verdict(f"monotone_{a}", inv <= p["max_inversions"],
                    f"{label} on rotation {a}: {inv} inversions over m={ms[0]}..{ms[-1]}, "
                    f"ratio last/first {d[-1] / d[0]:.3g}")
    ctx.plot("lacunary", rows)


@experiment("cotlar", "lacunary Cauchy differences of the ergodic Hilbert series decay",
            ["dynamics.OrbitWeights", "dynamics.cotlar_series",
             "dynamics.averaged_lacunary_differences", "dynamics.inversions"],
            alphas={"type": "array", "items": ROTATION, "minItems": 1, "default": ["golden", "sqrt2"]},
            m_range={"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 22},
                     "minItems": 2, "maxItems": 2, "default": [8, 16]},
            base_points=Int(32, minimum=1), max_inversions=Int(1, minimum=0))
def _cotlar(ctx: RunContext):
    p = ctx.params
    half = OBSERVABLES["indicator_half"][0]
    xs = ctx.rng.random(p["base_points"])

    def series(alpha, ms):
        sysx = dynamics.DiscreteSystem("rotation", alpha=alpha)
        R = 2 ** (ms[-1] + 1)
        fws = [dynamics.OrbitWeights(sysx, x, half, -R - 1, R + 1) for x in xs]
        return dynamics.averaged_lacunary_differences(
            lambda N: np.array([dynamics.cotlar_series(w, N) for w in fws]), ms)
    _lacunary(ctx, series, "RMS |S(2^(m+1)) - S(2^m)|")


@experiment("return-times", "return-times Hilbert series converge; maximal return averages bounded",
            ["dynamics.OrbitWeights", "dynamics.hilbert_series",
             "dynamics.averaged_lacunary_differences", "dynamics.max_return_norm"],
            alphas={"type": "array", "items": ROTATION, "minItems": 1, "default": ["golden", "sqrt2"]},
            m_range={"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 22},
                     "minItems": 2, "maxItems": 2, "default": [8, 16]},
            base_points=Int(32, minimum=1), max_inversions=Int(1, minimum=0),
            max_norm_N=Int(64, minimum=1))
def _return_times(ctx: RunContext):
    p = ctx.params
    half = OBSERVABLES["indicator_half"][0]
    xs = ctx.rng.random(p["base_points"])
    ys = ctx.rng.random(p["base_points"])

    def partner(alpha):
        # the y-system rotates by the other shipped number so tau and sigma differ
        other = math.sqrt(2) - 1 if abs(alpha - dynamics.GOLDEN) < 1e-15 else float(dynamics.GOLDEN)
        return dynamics.DiscreteSystem("rotation", alpha=other)

    def series(alpha, ms):
        sysx = dynamics.DiscreteSystem("rotation", alpha=alpha)
        sy = partner(alpha)
        R = 2 ** (ms[-1] + 1)
        fws = [dynamics.OrbitWeights(sysx, x, half, -R - 1, R + 1) for x in xs]
        return dynamics.averaged_lacunary_differences(
            lambda N: np.array([dynamics.hilbert_series(w, sy, half, y, N)
                                for w, y in zip(fws, ys)]), ms)
    _lacunary(ctx, series, "RMS return-times Hilbert differences")
    norms = {}
    for a in p["alphas"]:
        alpha = rotation_number(a)
        fw = dynamics.OrbitWeights(dynamics.DiscreteSystem("rotation", alpha=alpha), float(xs[0]),
                                   half, 0, p["max_norm_N"])
        res = dynamics.max_return_norm(fw, partner(alpha), N_max=p["max_norm_N"], rng=ctx.rng,
                                       n_random=64, n_freq=16, ascent_steps=20)
        norms[str(a)] = res.value
    ctx.measure(max_return_norm=norms)
    ctx.verdict("maximal_return_norm", None,
                "probe lower bounds of sup_g ||sup_N |return average| ||_2: "
                + ", ".join(f"{k}: {v:.4f}" for k, v in norms.items()))


@experiment("transfer-constants", "l^p summability of the transfer best constants",
            ["kernels.discrete_kernels", "dynamics.transfer_constants"], kernel_param=True,
            kernel=Enum("inverse_y", kernels.CATALOG), phi=Enum("kernel", ["kernel", "ones", "random"]),
            k=Int(4, minimum=1, maximum=8), length=Int(32, minimum=1, maximum=512),
            a_step=Int(2, minimum=1), p_list=NumList([1.5, 2.0, 3.0], minimum=1.0001),
            n_random=Int(16, minimum=0), ascent_steps=Int(20, minimum=0))
def _transfer(ctx: RunContext):
    p = ctx.params
    if p["phi"] == "kernel":
        try:
            A = kernels.discrete_kernels(kernels.kernel_catalog(p["kernel"]), p["k"])["A"]
        except ValueError as e:
            raise ConfigError(f"phi='kernel' needs a discrete kernel table: {e}")
        lo = 1
        phi = A.as_array(1, A.hi)
    elif p["phi"] == "ones":
        lo, phi = 0, np.ones(p["length"])
    else:
        lo, phi = 0, ctx.rng.normal(size=p["length"])
    hi = lo + phi.size - 1
    a_range = range(lo - 2 * phi.size, hi + 1, p["a_step"])
    out = dynamics.transfer_constants(phi, a_range, tuple(p["p_list"]), phi_lo=lo,
                                      rng=ctx.rng, n_random=p["n_random"], n_freq=4,
                                      ascent_steps=p["ascent_steps"])
    for a, c in zip(a_range, out["C"]):
        ctx.cell(a=a, best_constant=float(c))
    ctx.measure(ratios=out["ratios"], tail_bounds=out["tail_bounds"], phi_l1=float(np.abs(phi).sum()))
    ok = all(math.isfinite(v) for v in out["ratios"].values())
    ctx.verdict("finite", ok, "all ratios finite")
    ctx.verdict("lp_ratio", None, "sum_a C(a)^p / sum |phi|^p: " + ", ".join(
        f"p={q}: {v:.4g} (+tail <= {out['tail_bounds'][q]:.3g})" for q, v in out["ratios"].items()))


# ---------------------------------------------------------------------------
# multiplier scaling


def _band_signal(rng, n: int, dx: float, mask: np.ndarray) -> SampledSignal:
    spec = (rng.normal(size=n) + 1j * rng.normal(size=n)) * mask
    f = SampledSignal(-n * dx / 2, dx, np.fft.ifft(spec))
    return f.with_samples(f.samples / f.norm())


@experiment("bourgain-L", "growth in L of the maximal band operator over L frequencies",
            ["multipliers.FrequencyPointSet.random", "multipliers.BandFamily",
             "multipliers.maximal_delta", "multipliers.fit_exponent"],
            L_values=IntList([2, 4, 8, 16, 32], minimum=1), seeds=Int(10, minimum=1),
            log2_n=Int(18, minimum=8, maximum=22), log2_spacing=Int(-7, minimum=-12, maximum=0),
            span=Int(32, minimum=1), k_range=Pair([0, 7]))
def _bourgain_L(ctx: RunContext):
    p = ctx.params
    if max(p["L_values"]) > p["span"]:
        raise ConfigError("every L must be at most span")
    n, dx = 2 ** p["log2_n"], 2.0 ** p["log2_spacing"]
    ks = range(int(p["k_range"][0]), int(p["k_range"][1]) + 1)
    xi = np.fft.fftfreq(n, dx)
    items = [(L, s) for L in p["L_values"] for s in range(p["seeds"])]

    def cell(item, rng):
        L, _ = item
        fam = multipliers.BandFamily(multipliers.FrequencyPointSet.random(rng, L, span=p["span"]))
        mask = np.zeros(n, dtype=bool)
        for w in fam.bands(ks[0]):
            mask |= (xi >= float(w.left)) & (xi < float(w.right))
        f = _band_signal(rng, n, dx, mask)
        return multipliers.maximal_delta(fam, f, ks).norm() / f.norm()
    vals = ctx.map(cell, items)
    fit = ctx.fit("L", [L for L, _ in items], vals)
    for (L, s), v in zip(items, vals):
        ctx.cell(L=L, seed=s, measured=v, fit_exponent=fit.exponent, stderr=fit.stderr)
    ctx.plot("ratio_vs_L", [{"L": L, "mean_ratio": float(np.mean([v for (LL, _), v in zip(items, vals) if LL == L]))}
                            for L in p["L_values"]])
    limit = 0.5 + 2 * fit.stderr
    ctx.verdict("growth_exponent", fit.exponent <= limit,
                f"fitted exponent {fit.exponent:.4f} +- {fit.stderr:.4f}, limit {limit:.4f}")


@experiment("bourgain-J", "J-growth of the oscillation of band operators over partitions",
            ["multipliers.BandFamily", "multipliers.block_weights", "multipliers.worst_partition",
             "multipliers.fit_exponent"],
            J_values=IntList([2, 4, 8, 16], minimum=2), seeds=Int(10, minimum=1),
            L=Int(4, minimum=1), log2_n=Int(18, minimum=8, maximum=22),
            log2_spacing=Int(-4, minimum=-12, maximum=0), span=Int(8, minimum=1),
            k_range=Pair([-4, 11]), f_band=Pair([-4, 8]), r=Num(4.0, exclusive_min=2))
def _bourgain_J(ctx: RunContext):
    p = ctx.params
    if p["L"] > p["span"]:
        raise ConfigError("L must be at most span")
    n, dx = 2 ** p["log2_n"], 2.0 ** p["log2_spacing"]
    ks = list(range(int(p["k_range"][0]), int(p["k_range"][1]) + 1))
    xi = np.fft.fftfreq(n, dx)
    lo, hi = p["f_band"]

    def cell(s, rng):
        fam = multipliers.BandFamily(multipliers.FrequencyPointSet.random(rng, p["L"], span=p["span"]))
        f = _band_signal(rng, n, dx, (xi > lo) & (xi < hi))
        W = multipliers.block_weights(fam, f, ks)
        return [multipliers.worst_partition(fam, f, ks, J, W) for J in p["J_values"]]
    per_seed = ctx.map(cell, range(p["seeds"]))
    xs, ys = [], []
    for s, res in enumerate(per_seed):
        for J, (v, U) in zip(p["J_values"], res):
            xs.append(J)
            ys.append(v)
    fit = ctx.fit("J", xs, ys)
    ref = (p["r"] + 4) / (4 * p["r"] + 4)
    for s, res in enumerate(per_seed):
        for J, (v, U) in zip(p["J_values"], res):
            ctx.cell(J=J, r=p["r"], seed=s, measured=v, blocks=len(U) - 1,
                     partition=" ".join(map(str, U)), fit_exponent=fit.exponent, stderr=fit.stderr)
    limit = 0.5 + 2 * fit.stderr
    ctx.measure(reference_exponent=ref)
    ctx.verdict("growth_exponent", fit.exponent < limit,
                f"fitted exponent {fit.exponent:.4f} +- {fit.stderr:.4f}, limit {limit:.4f} "
                f"(reference (r+4)/(4r+4) = {ref:.4f})")


@experiment("sign-lower-bound", "sign-pattern lower bound for the maximal band operator",
            ["multipliers.sign_pattern_lower_bound", "multipliers.fit_exponent"],
            q=Num(4.0, exclusive_min=2), L_values=IntList([4, 8, 16, 32], minimum=1),
            draws=Int(256, minimum=1), norm_tolerance=Num(0.05, exclusive_min=0),
            ratio_slack=Num(0.1, minimum=0))
def _sign(ctx: RunContext):
    p = ctx.params
    q, Ls = p["q"], p["L_values"]
    if max(Ls) > 64:
        raise ConfigError("L must be at most 64")
    reps = ctx.map(lambda L, rng: multipliers.sign_pattern_lower_bound(L, q, rng, draws=p["draws"]), Ls)
    fn = ctx.fit("norm_fL", Ls, [r.norm_fL for r in reps])
    fr = ctx.fit("best_ratio", Ls, [r.best_ratio for r in reps])
    fl = ctx.fit("literal_ratio", Ls, [r.literal_ratio for r in reps])
    for L, r in zip(Ls, reps):
        ctx.cell(L=L, q=q, measured=r.best_ratio, norm_fL=r.norm_fL, square_norm=r.square_norm,
                 literal_ratio=r.literal_ratio, fit_exponent=fr.exponent, stderr=fr.stderr)
    target_norm = 1 - 1 / q
    target_ratio = abs(0.5 - 1 / q) - p["ratio_slack"]
    ctx.verdict("norm_exponent", abs(fn.exponent - target_norm) <= p["norm_tolerance"],
                f"||f_L||_q exponent {fn.exponent:.4f}, target {target_norm:.4f}")
    ctx.verdict("ratio_exponent", fr.exponent >= target_ratio,
                f"achieved ratio exponent {fr.exponent:.4f} +- {fr.stderr:.4f}, "
                f"required >= {target_ratio:.4f}")
    ctx.verdict("literal_ratio", None, f"||g_eps||_q / ||f_L||_q exponent {fl.exponent:.4f}")


# ---------------------------------------------------------------------------
# wave packets, trees, model operator


@experiment("wavepacket", "window partition identity and single-scale packet reconstruction",
            ["timefreq.partition_defect", "timefreq.window_hat", "timefreq.random_signal",
             "timefreq.single_scale_reconstruct", "timefreq.scale_coefficients"],
            frequencies=Int(4096, minimum=16), signals=Int(20, minimum=1),
            scales=IntList([0, -1]), half_width=Num(128.0, exclusive_min=0),
            log2_n=Int(10, minimum=6, maximum=16), band=Pair([-1, 1]), support=Pair([-20, 20]),
            reconstruction_tol=Num(1e-3, exclusive_min=0), spread_tol=Num(1e-3, exclusive_min=0))
def _wavepacket(ctx: RunContext):
    p = ctx.params
    xi = np.linspace(-3, 3, p["frequencies"])
    defect = timefreq.partition_defect(xi)
    outside = np.concatenate([np.linspace(-2, 0, 500), np.linspace(2 / timefreq.MODULUS, 3, 500)])
    support_ok = bool(np.all(timefreq.window_hat(outside) == 0))
    ctx.measure(partition_defect=defect)
    ctx.verdict("partition_identity", defect < 1e-8, f"max deviation {defect:.3g} over {xi.size} points")
    ctx.verdict("support", support_ok, "window spectrum vanishes outside (0, 2/41)")
    sg = timefreq.SampleGrid.centered(p["half_width"], 2 ** p["log2_n"])

    def cell(s, rng):
        f = timefreq.random_signal(rng, sg, band=tuple(p["band"]), support=tuple(p["support"]))
        errs = {}
        for i in p["scales"]:
            g = timefreq.single_scale_reconstruct(f, i)
            errs[i] = sg.signal(f.samples - g.samples).norm() / f.norm()
        C, _, _ = timefreq.scale_coefficients(f, p["scales"][0])
        return errs, float(np.sum(np.abs(C) ** 2) / f.norm() ** 2)
    out = ctx.map(cell, range(p["signals"]))
    worst = 0.0
    ratios = []
    for s, (errs, ratio) in enumerate(out):
        for i, e in errs.items():
            ctx.cell(signal=s, scale=i, relative_error=e, energy_ratio=ratio)
            worst = max(worst, e)
        ratios.append(ratio)
    spread = (max(ratios) - min(ratios)) / float(np.mean(ratios))
    ctx.measure(max_relative_error=worst, energy_ratio_mean=float(np.mean(ratios)), energy_spread=spread)
    ctx.verdict("reconstruction", worst <= p["reconstruction_tol"],
                f"max relative L2 error {worst:.3g} over {len(out)} signals")
    ctx.verdict("parseval_constant", spread <= p["spread_tol"], f"relative spread {spread:.3g}")


@experiment("tree-select", "greedy forest selection obeys the size bound and the counting estimate",
            ["timefreq.random_tiles", "timefreq.random_signal", "timefreq.analyze",
             "timefreq.select_forest", "timefreq.collection_size"],
            instances=Int(20, minimum=1), tiles=Int(200, minimum=1), scales=Pair([-2, 2]),
            half_width=Num(512.0, exclusive_min=0), log2_n=Int(14, minimum=8, maximum=18),
            counting_factor=Num(4.0, minimum=1))
def _tree_select(ctx: RunContext):
    p = ctx.params
    sg = timefreq.SampleGrid.centered(p["half_width"], 2 ** p["log2_n"])
    scales = range(int(p["scales"][0]), int(p["scales"][1]) + 1)

    def cell(s, rng):
        tiles = timefreq.random_tiles(rng, p["tiles"], scales)
        f = timefreq.random_signal(rng, sg)
        coeffs = timefreq.analyze(f, tiles)
        sel = timefreq.select_forest(tiles, coeffs, energy=f.norm() ** 2)
        parts = sel.partition()
        exact = (sum(len(q) for q in parts) == len(set(tiles))
                 and frozenset().union(*parts) == frozenset(tiles))
        return sel, exact
    out = ctx.map(cell, range(p["instances"]))
    size_bad, part_bad, constants = 0, 0, []
    for s, (sel, exact) in enumerate(out):
        part_bad += not exact
        cc = sel.counting_constants()
        for lv in sel.levels:
            ok = lv.size <= 2.0 ** -lv.n
            size_bad += not ok
            ctx.cell(instance=s, n=lv.n, size=lv.size, bound=2.0 ** -lv.n, trees=len(lv.trees),
                     tiles=len(lv.tiles), top_length=lv.top_length, counting_constant=cc[lv.n])
        constants.append(max(cc.values()) if cc else 0.0)
    spread = max(constants) / min(constants) if min(constants) > 0 else math.inf
    ctx.measure(counting_constants=constants, counting_spread=spread)
    ctx.verdict("size_bound", size_bad == 0, f"{size_bad} levels with size above 2^-n")
    ctx.verdict("partition", part_bad == 0, f"{part_bad} instances where levels do not partition the tiles")
    ctx.verdict("counting_stability", spread <= p["counting_factor"],
                f"max/min counting constant across instances {spread:.3f}")


@experiment("model-op", "return-times model operator is stable under grid refinement",
            ["timefreq.random_tiles", "multipliers.smooth_test_signal", "multipliers.ModelOperator",
             "multipliers.resolution_sweep", "probes.run_protocol"],
            tiles=Int(200, minimum=1), scales=Pair([-2, 2]), doublings=Int(3, minimum=1, maximum=5),
            x_range=Pair([-8, 24]), x_step=Num(0.5, exclusive_min=0),
            base_half_width=Num(256.0, exclusive_min=0), log2_spacing=Int(-5, minimum=-8, maximum=0),
            theta_per_unit=Int(16, minimum=1), n_random=Int(16, minimum=0), n_freq=Int(32, minimum=0),
            ascent_steps=Int(10, minimum=0), stability_factor=Num(2.0, minimum=1))
def _model_op(ctx: RunContext):
    p = ctx.params
    tiles = timefreq.random_tiles(ctx.rng, p["tiles"], range(int(p["scales"][0]), int(p["scales"][1]) + 1))
    f = multipliers.smooth_test_signal(ctx.rng)
    x = np.arange(p["x_range"][0], p["x_range"][1], p["x_step"])
    if x.size < 2:
        raise ConfigError("x_range must hold at least two points")
    rows = multipliers.resolution_sweep(
        f, tiles, x, int(ctx.rng.integers(2 ** 32)), doublings=p["doublings"],
        base_half_width=p["base_half_width"], spacing=2.0 ** p["log2_spacing"],
        theta_per_unit=p["theta_per_unit"],
        protocol=dict(n_random=p["n_random"], n_freq=p["n_freq"], ascent_steps=p["ascent_steps"]))
    for r in rows:
        ctx.cell(level=r.level, n=r.n, period=r.period, n_theta=r.n_theta, measured=r.ratio,
                 f_norm=r.f_norm)
    ratios = [r.ratio for r in rows]
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    ctx.measure(ratio_spread=spread)
    ctx.verdict("resolution_stability", spread < p["stability_factor"],
                f"max/min probe ratio across {len(rows)} resolutions {spread:.4f}")
