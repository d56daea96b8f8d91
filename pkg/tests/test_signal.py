import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtlab.signal import (SampledSignal, adapted_check, apply_multiplier, bmo_norm, chi_weight,
                          dil, dil_tr_mod, inverse, maximal_p, mean_zero_check, mod, poisson,
                          transform, tr)


def gaussian(n=1024, half=8.0):
    return SampledSignal.centered(lambda x: np.exp(-np.pi * x ** 2), half, n)


def random_bandlimited(rng, n=512, half=16.0, band=2.0):
    f = SampledSignal.centered(lambda x: 0 * x, half, n)
    F = transform(f)
    keep = np.abs(F.xi) < band
    vals = np.where(keep, rng.normal(size=n) + 1j * rng.normal(size=n), 0)
    return inverse(F.with_values(vals * np.exp(-F.xi ** 2)))


def test_gaussian_is_self_dual():
    F = transform(gaussian())
    ref = np.exp(-np.pi * F.xi ** 2)
    assert np.max(np.abs(F.values - ref)) / np.max(ref) < 1e-6


def test_delta_has_flat_spectrum_and_roundtrip():
    z = np.zeros(64)
    z[5] = 1
    f = SampledSignal(-3.0, 0.1, z)
    F = transform(f)
    assert np.allclose(np.abs(F.values), 0.1)
    g = inverse(F)
    assert np.max(np.abs(g.samples - f.samples)) < 1e-10
    assert np.max(np.abs(transform(inverse(F)).values - F.values)) < 1e-10


def test_bad_signals():
    with pytest.raises(ValueError):
        SampledSignal(0, 1, np.zeros(12))
    with pytest.raises(ValueError):
        SampledSignal(0, 0, np.zeros(8))
    with pytest.raises(ValueError):
        poisson(gaussian(), 0)


def test_dilation_identity_and_isometry():
    f = gaussian(1024, 16.0)
    assert np.array_equal(dil(f, 1).samples, f.samples)
    g = dil(f, 2, p=2)
    assert not g.meta["truncated"]
    assert abs(g.norm() - f.norm()) / f.norm() < 1e-8
    ref = 2 ** -0.5 * np.exp(-np.pi * (f.x / 2) ** 2)
    assert np.max(np.abs(g.samples - ref)) < 1e-8
    assert dil(f, 40.0).meta["truncated"]


def test_modulation_translation_duality():
    f = gaussian()
    F = transform(f)
    shift = 7
    theta = shift * F.dxi
    G = transform(mod(f, theta))
    rolled = np.roll(F.values, shift)
    assert np.max(np.abs(G.values - rolled)) < 1e-8


def test_translation():
    f = gaussian(1024, 16.0)
    g = dil_tr_mod(f, "tr", 1.5)
    assert np.max(np.abs(g.samples - np.exp(-np.pi * (f.x - 1.5) ** 2))) < 1e-10
    assert not g.meta["truncated"]
    assert tr(f, 15.9).meta["truncated"]


def test_chi_weight():
    I = (2.0, 4.0)
    assert chi_weight(I, 3.0) == 1
    assert chi_weight(I, 5.0, 1) == pytest.approx(0.5)
    assert chi_weight(I, 3.0 + 6.0, 2) == pytest.approx(1 / 16)


def test_maximal_examples():
    f = SampledSignal.from_function(lambda x: ((x >= 0) & (x <= 1)).astype(float), -4, 1 / 256, 2048)
    M = maximal_p(f, 1)
    k = np.argmin(np.abs(f.x - 2))
    # oracle: sup_r |[0,1] ∩ [2-r, 2+r]| / (2r) = 1/4 at r = 2
    r = np.linspace(1, 6, 50001)
    oracle = np.max(np.minimum(1, r - 1) / (2 * r))
    assert oracle == pytest.approx(0.25)
    assert M.samples[k].real == pytest.approx(oracle, abs=2e-3)
    c = SampledSignal(0, 1, np.full(64, 3.0))
    for p in (1, 2, 5):
        assert np.allclose(maximal_p(c, p, max_radius=0).samples, 3)
        assert np.max(maximal_p(c, p).samples.real) == pytest.approx(3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(1, 6))
def test_maximal_monotone_in_p(seed, p):
    rng = np.random.default_rng(seed)
    f = SampledSignal(0, 1, rng.normal(size=128) + 1j * rng.normal(size=128))
    m1 = maximal_p(f, 1).samples.real
    mp = maximal_p(f, p).samples.real
    assert np.all(mp >= m1 - 1e-12)
    assert np.all(m1 >= np.abs(f.samples) - 1e-12)


def test_bmo_examples():
    x = np.arange(64) / 16
    sq = SampledSignal(0, 1 / 16, np.where(np.floor(x) % 2 == 0, 1.0, -1.0))
    assert bmo_norm(sq) >= 1 - 1e-12
    assert bmo_norm(SampledSignal(0, 1, np.full(32, 2.5))) == pytest.approx(0)
    rng = np.random.default_rng(3)
    f = SampledSignal(0, 1, rng.normal(size=64))
    assert bmo_norm(f.with_samples(f.samples + 7)) == pytest.approx(bmo_norm(f))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 63))
def test_bmo_translation_invariant_periodic(seed, s):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=64)
    a = bmo_norm(SampledSignal(0, 1, z), periodic=True)
    b = bmo_norm(SampledSignal(0, 1, np.roll(z, s)), periodic=True)
    assert a == pytest.approx(b)


def test_adapted_examples():
    I = (-1.0, 1.0)
    bump = lambda t: np.where(np.abs(t) < 1, np.exp(-1 / np.maximum(1 - t ** 2, 1e-300)), 0)
    f = SampledSignal.from_function(lambda x: 2 ** -0.5 * bump(x / 2), -32, 1 / 64, 4096)
    rep = adapted_check(f, I, 1.0, (1, 2, 3, 4), A_max=10)
    assert rep.ok and all(0 < a < 10 for a in rep.A.values())
    zero = f.with_samples(np.zeros(f.n))
    assert all(a == 0 for a in adapted_check(zero, I).A.values())
    spike = np.zeros(4096)
    k = np.argmin(np.abs(f.x - 20.0))
    spike[k] = 1.0
    rep = adapted_check(f.with_samples(spike), I, 1.0, (1, 2, 3, 4), dphi=np.zeros(4096))
    ratios = [rep.A[M + 1] / rep.A[M] for M in (1, 2, 3)]
    assert np.allclose(ratios, 11)


def test_mean_zero():
    f = SampledSignal.centered(lambda x: np.exp(-np.pi * x ** 2) * np.exp(2j * np.pi * 3 * x), 8, 1024)
    ok, _ = mean_zero_check(f, 3.0)
    assert not ok
    assert mean_zero_check(f, 0.0)[0]


def test_poisson():
    rng = np.random.default_rng(4)
    f = random_bandlimited(rng)
    assert np.linalg.norm(poisson(f, 1e-5).samples - f.samples) / np.linalg.norm(f.samples) < 1e-3
    c = SampledSignal(0, 0.5, np.full(64, 2.0 + 1j))
    assert np.allclose(poisson(c, 3.0).samples, 2.0 + 1j)
    w = SampledSignal(0, 0.25, rng.normal(size=256))
    F = transform(w)
    ref = np.sqrt(np.sum(np.exp(-2 * np.abs(F.xi)) * np.abs(F.values) ** 2) / np.sum(np.abs(F.values) ** 2))
    assert poisson(w, 1.0).norm() / w.norm() == pytest.approx(ref, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([8, 64, 512]))
def test_plancherel(seed, n):
    rng = np.random.default_rng(seed)
    f = SampledSignal(rng.normal(), rng.uniform(0.01, 2), rng.normal(size=n) + 1j * rng.normal(size=n))
    assert transform(f).norm() == pytest.approx(f.norm(), rel=1e-10)
    assert poisson(f, rng.uniform(0.1, 3)).norm() <= f.norm() * (1 + 1e-12)


def test_io_roundtrip():
    rng = np.random.default_rng(5)
    f = SampledSignal(-1.25, 0.125, rng.normal(size=16) + 1j * rng.normal(size=16))
    g = SampledSignal.from_bytes(f.to_bytes())
    assert np.array_equal(g.samples, f.samples) and g.origin == f.origin
    h = SampledSignal.from_csv(f.to_csv())
    assert np.array_equal(h.samples, f.samples) and h.spacing == f.spacing


def test_apply_multiplier_matches_spectrum_product():
    f = gaussian(256, 4.0)
    g = apply_multiplier(f, lambda xi: np.exp(-np.abs(xi)))
    F = transform(f)
    G = inverse(F.with_values(F.values * np.exp(-np.abs(F.xi))))
    assert np.allclose(g.samples, G.samples)
