"""Lower bounds for ``sup_{|g| = 1} || sup_N |(L_N g)(y)| ||_{L^2_y}`` by probing.

A *family* is a linear map from coefficient vectors ``g`` (dimension ``d``) to
arrays ``u[y, N]``; the objective of a probe is
``sqrt(sum_y w_y max_N |u[y, N]|^2)`` for a unit-norm probe. Every probe
evaluated is a feasible point, so the best value found is a certified lower
bound for the supremum over the unit ball.

Protocol: seeded complex Gaussian probes, the constant probe, pure
frequencies, then normalised ascent on the surrogate with ``max_N`` replaced
by an ``l^p`` norm over ``N``. The surrogate is convex and 2-homogeneous, so
the step ``g <- grad / |grad|`` never decreases it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LinearFamily:
    d: int
    weights: np.ndarray  # per-y weights, shape (Y,)

    def apply(self, G: np.ndarray) -> np.ndarray:  # (P, d) -> (P, Y, M)
        raise NotImplementedError

    def adjoint(self, H: np.ndarray) -> np.ndarray:  # (P, Y, M) -> (P, d)
        raise NotImplementedError

    def constant_probe(self) -> np.ndarray:
        return np.ones(self.d, dtype=complex) / np.sqrt(self.d)

    def frequency_probes(self, count: int) -> np.ndarray:
        k = np.arange(self.d)
        freqs = np.unique(np.round(np.linspace(0, self.d, count, endpoint=False)).astype(int))
        return np.exp(2j * np.pi * np.outer(freqs, k) / self.d) / np.sqrt(self.d)


class DenseFamily(LinearFamily):
    """Explicit matrix ``u[y, N] = sum_k A[y, N, k] g_k``."""

    def __init__(self, A: np.ndarray, weights=None, basis: str = "vector"):
        self.A = np.asarray(A, dtype=complex)
        Y, M, self.d = self.A.shape
        self.weights = np.full(Y, 1.0) if weights is None else np.asarray(weights, float)
        self.basis = basis

    def apply(self, G):
        return np.einsum("ymk,pk->pym", self.A, G)

    def adjoint(self, H):
        return np.einsum("ymk,pym->pk", self.A.conj(), H)

    def frequency_probes(self, count: int) -> np.ndarray:
        if self.basis == "fourier":
            # coefficients already index frequencies: pure frequencies are unit vectors
            idx = np.unique(np.round(np.linspace(0, self.d - 1, min(count, self.d))).astype(int))
            return np.eye(self.d, dtype=complex)[idx]
        return super().frequency_probes(count)

    def constant_probe(self) -> np.ndarray:
        if self.basis == "fourier":
            e = np.zeros(self.d, dtype=complex)
            e[self.d // 2] = 1.0
            return e
        return super().constant_probe()


class ShiftAverageFamily(LinearFamily):
    """``u[y, N] = (1/N) sum_{n<N} f_n g[offset_y + n]`` (indices mod ``wrap`` or zero outside)."""

    def __init__(self, f: np.ndarray, d: int, offsets, wrap: int | None = None,
                 weights=None, n_values=None):
        self.f = np.asarray(f, dtype=complex)
        self.d = d
        self.offsets = np.asarray(offsets, dtype=np.int64)
        M = self.f.size
        idx = self.offsets[:, None] + np.arange(M)[None]
        if wrap is not None:
            idx = idx % wrap
            self.mask = np.ones(idx.shape, dtype=bool)
        else:
            self.mask = (idx >= 0) & (idx < d)
        self.idx = np.where(self.mask, idx, 0)
        Y = self.offsets.size
        self.weights = np.full(Y, 1.0) if weights is None else np.asarray(weights, float)
        self.N = np.arange(1, M + 1) if n_values is None else np.asarray(n_values)
        self.fm = np.where(self.mask, self.f[None], 0)

    def apply(self, G):
        V = G[:, self.idx] * self.fm[None]
        S = np.cumsum(V, axis=2)
        return S[:, :, self.N - 1] / self.N

    def adjoint(self, H):
        P, Y, _ = H.shape
        M = self.f.size
        full = np.zeros((P, Y, M), dtype=complex)
        full[:, :, self.N - 1] = H / self.N
        R = np.cumsum(full[:, :, ::-1], axis=2)[:, :, ::-1] * self.fm.conj()[None]
        out = np.zeros((P, self.d), dtype=complex)
        flat = self.idx.ravel()
        for p in range(P):
            r = R[p].ravel()
            out[p] = (np.bincount(flat, r.real, self.d) + 1j * np.bincount(flat, r.imag, self.d))
        return out


def objective(family: LinearFamily, G: np.ndarray, chunk: int = 64) -> np.ndarray:
    out = np.empty(G.shape[0])
    for s in range(0, G.shape[0], chunk):
        U = family.apply(G[s:s + chunk])
        out[s:s + chunk] = np.sqrt(np.einsum("y,py->p", family.weights, np.max(np.abs(U), axis=2) ** 2))
    return out


def _surrogate_and_grad(family: LinearFamily, g: np.ndarray, p: float):
    U = family.apply(g[None])[0]
    a = np.abs(U)
    scale = np.max(a) if np.max(a) > 0 else 1.0
    b = a / scale
    sp = np.sum(b ** p, axis=1)  # (Y,)
    norms = sp ** (1 / p) * scale
    val = float(np.sum(family.weights * norms ** 2))
    # d/d conj(u) of w_y |u_y|_p^2 = w_y |u_y|_p^{2-p} |u|^{p-2} u
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(sp > 0, family.weights * sp ** (2 / p - 1), 0.0)[:, None]
        H = coef * b ** (p - 2) * np.where(a > 0, U / scale, 0) * scale
    H = np.nan_to_num(H)
    grad = family.adjoint(H[None])[0]
    return val, grad


@dataclass
class ProbeResult:
    value: float
    probe: np.ndarray
    initial_best: float
    history: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)


def normalize_rows(G: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(G, axis=1, keepdims=True)
    return G / np.where(n > 0, n, 1)


def probe_set(family: LinearFamily, rng: np.random.Generator, n_random: int = 512,
              n_freq: int = 64, extra=None) -> np.ndarray:
    parts = []
    if n_random:
        parts.append(rng.normal(size=(n_random, family.d)) + 1j * rng.normal(size=(n_random, family.d)))
    parts.append(family.constant_probe()[None])
    if n_freq:
        parts.append(family.frequency_probes(n_freq))
    if extra is not None:
        parts.append(np.atleast_2d(np.asarray(extra, dtype=complex)))
    return normalize_rows(np.concatenate(parts))


def run_protocol(family: LinearFamily, rng: np.random.Generator, n_random: int = 512,
                 n_freq: int = 64, ascent_steps: int = 50, p: float = 20.0, starts: int = 1,
                 extra=None) -> ProbeResult:
    G = probe_set(family, rng, n_random, n_freq, extra)
    vals = objective(family, G)
    order = np.argsort(-vals, kind="stable")
    best_i = int(order[0])
    best, best_g = float(vals[best_i]), G[best_i]
    initial = best
    history = [best]
    for i in order[:starts]:
        g = G[i]
        s_prev = -np.inf
        for _ in range(ascent_steps):
            s, grad = _surrogate_and_grad(family, g, p)
            if s < s_prev * (1 - 1e-12):
                break  # numerical stagnation; monotonicity is otherwise guaranteed
            s_prev = s
            nrm = np.linalg.norm(grad)
            if nrm == 0:
                break
            g = grad / nrm
            v = float(objective(family, g[None])[0])
            if v > best:
                best, best_g = v, g
            history.append(best)
    return ProbeResult(best, best_g, initial, history,
                       {"random": n_random, "frequency": n_freq, "ascent_steps": ascent_steps,
                        "p": p, "starts": starts, "total": int(G.shape[0])})


class MultiplierFamily(LinearFamily):
    """Multiplier sequences on a theta grid, probed by ``g`` given through its spectrum.

    ``symbols[b, k, j]`` is the k-th multiplier of block ``b`` at ``theta_j``. A
    unit probe ``v`` stands for ``g^(theta_j) = v_j / sqrt(dtheta)``; the output
    ``u[b, z, k]`` is ``(m_{b,k} g^)^vee`` on the dual periodic grid, scaled so that
    ``sum_z |u|^2 = |g|_2^2`` when ``m = 1``. Zero rows pad ragged blocks.
    """

    def __init__(self, symbols: np.ndarray):
        S = np.asarray(symbols, dtype=complex)
        if S.ndim == 2:
            S = S[None]
        self.S = S
        self.B, self.K, self.d = S.shape
        self.weights = np.ones(self.B * self.d)

    def apply(self, G):
        U = np.fft.ifft(self.S[None] * G[:, None, None, :], axis=-1, norm="ortho")
        P = G.shape[0]
        return U.transpose(0, 1, 3, 2).reshape(P, self.B * self.d, self.K)

    def adjoint(self, H):
        P = H.shape[0]
        Hb = H.reshape(P, self.B, self.d, self.K).transpose(0, 1, 3, 2)
        V = np.fft.fft(Hb, axis=-1, norm="ortho")
        return np.sum(np.conj(self.S)[None] * V, axis=(1, 2))

    def frequency_probes(self, count: int) -> np.ndarray:
        # pure frequencies of g are unit vectors in this basis; favour large symbols
        peak = np.max(np.abs(self.S), axis=(0, 1))
        idx = np.argsort(-peak, kind="stable")[:min(count, self.d)]
        return np.eye(self.d, dtype=complex)[np.sort(idx)]

    def constant_probe(self) -> np.ndarray:
        e = np.zeros(self.d, dtype=complex)
        e[int(np.argmax(np.max(np.abs(self.S), axis=(0, 1))))] = 1.0
        return e
