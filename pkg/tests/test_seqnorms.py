import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import covering_bruteforce, variation_bruteforce, variation_itertools
from rtlab.seqnorms import (VectorSequence, covering_number, entropy_profile, osc_var_norm,
                            oscillation_norm, oscillation_norm_batch, variation_norm,
                            variation_norm_batch, variation_seminorm)


def test_variation_examples():
    for r in (1, 2, 3.5):
        assert variation_norm([2 + 1j] * 3, r) == pytest.approx(abs(2 + 1j))
    assert variation_norm([0, 1, 0, 1], 2, "exact") == pytest.approx(1 + math.sqrt(3))
    assert variation_norm([0, 1, 0, 1], 1, "exact") == pytest.approx(4)
    assert variation_norm([0, 1, 0, 1], 2, "dp_lower") == pytest.approx(1 + math.sqrt(3))
    with pytest.raises(ValueError):
        variation_norm([], 2)
    with pytest.raises(ValueError):
        variation_norm(np.zeros(23), 2, "exact")


def test_oscillation_examples():
    seq = VectorSequence.of([1, 2, 3, 4], index_start=1)
    assert oscillation_norm(seq, (1, 3), "left") == pytest.approx(1)
    assert oscillation_norm(seq, (1, 3), "right") == pytest.approx(2)
    assert oscillation_norm(VectorSequence.of([5.0] * 6), (0, 2, 5)) == 0
    with pytest.raises(ValueError):
        oscillation_norm(seq, (0, 3))
    with pytest.raises(ValueError):
        oscillation_norm(seq, (3, 3))


def test_osc_var_examples():
    assert osc_var_norm([3, 3, 3], (0, 2), 2) == pytest.approx(3)
    seq = VectorSequence.of([0, 1, 0, 1], index_start=1)
    assert osc_var_norm(seq, (1, 3), 2) == pytest.approx(
        oscillation_norm(seq, (1, 3)) + 1 + math.sqrt(3))
    assert osc_var_norm(np.zeros(5), (0, 4), 2) == 0


def test_covering_examples():
    assert covering_number([0, 1, 2], 0.4) == covering_bruteforce([0, 1, 2], 0.4) == 3
    assert covering_number([0, 0.1, 2], 0.15) == 2
    assert covering_number([0, 3, -1, 2], 4) == 1
    with pytest.raises(ValueError):
        covering_number([1, 2], 0)
    big = np.arange(30.0)
    assert covering_number(big, 1.0, return_exact=True) == (10, True)  # real line: exact sweep
    k, exact = covering_number(big + 0.5j * (big % 2), 1.2, return_exact=True)
    assert not exact and k >= 10


def test_exact_enumeration_matches_oracles():
    rng = np.random.default_rng(1)
    for n in range(1, 9):
        for _ in range(5):
            x = rng.normal(size=n)
            r = rng.uniform(1, 4)
            ref = variation_itertools(x, r)
            assert variation_seminorm(x, r, "exact") == pytest.approx(ref, abs=1e-12)
            assert variation_seminorm(x, r, "dp") == pytest.approx(ref, abs=1e-12)


def test_vector_valued_and_batch():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 7, 3)) + 1j * rng.normal(size=(20, 7, 3))
    got = variation_norm_batch(X, 2.5)
    for b in range(20):
        assert got[b] == pytest.approx(variation_norm(X[b], 2.5, "exact"))
    assert variation_norm(X[0], math.inf) == pytest.approx(
        np.linalg.norm(X[0], axis=1).max()
        + max(np.linalg.norm(X[0][i] - X[0][j]) for i in range(7) for j in range(7)))
    o = oscillation_norm_batch(X, (0, 3, 6))
    assert o[4] == pytest.approx(oscillation_norm(X[4], (0, 3, 6)))


def test_csv_roundtrip():
    seq = VectorSequence.of(np.array([[1 + 2j, 0.5], [3, -1j]]), index_start=-4)
    back = VectorSequence.from_csv(seq.to_csv())
    assert back.index_start == -4 and np.array_equal(back.values, seq.values)


def test_batched_properties_ten_thousand():
    rng = np.random.default_rng(7)
    count = 0
    for n in range(2, 13):
        B = 10_000 // 11 + 1
        a = rng.normal(size=(B, n)) * rng.choice([0.1, 1, 10], size=(B, 1))
        b = rng.normal(size=(B, n))
        r, r2 = 1 + 3 * rng.random(), None
        r2 = r + rng.random() * 2
        va = np.abs(a).max(1) + variation_bruteforce(a, r)
        vb = np.abs(b).max(1) + variation_bruteforce(b, r)
        assert np.allclose(va, variation_norm_batch(a, r))
        assert np.all(variation_norm_batch(a, r2) <= va + 1e-9)
        assert np.all(variation_norm_batch(a + b, r) <= va + vb + 1e-9)
        assert np.all(variation_norm_batch(a * b, r) <= 2 * va * vb + 1e-9)
        U = sorted(rng.choice(n, size=min(n, 3), replace=False))
        if len(U) >= 2:
            lhs = oscillation_norm_batch(a * b, U)
            rhs = (np.abs(b).max(1) * oscillation_norm_batch(a, U)
                   + np.abs(a).max(1) * oscillation_norm_batch(b, U))
            assert np.all(lhs <= rhs + 1e-9)
        count += B
    assert count >= 10_000


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.floats(1, 4))
def test_entropy_bound(xs, r):
    ent, _ = entropy_profile(xs, r)
    assert ent <= 4 * variation_norm(xs, r, "exact") + 1e-9
    for lam in (0.05, 0.3, 1.0):
        assert covering_number(xs, lam) == covering_bruteforce(xs, lam)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3), min_size=2, max_size=9), st.data())
def test_oscillation_bounded_by_sup(xs, data):
    n = len(xs)
    U = sorted(set(data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=n))))
    if len(U) < 2:
        return
    for anchor in ("left", "right"):
        o = oscillation_norm(xs, U, anchor)
        assert o <= math.sqrt(len(U) - 1) * 2 * max(abs(x) for x in xs) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=10), st.floats(0.01, 3))
def test_line_cover_matches_subset_search(xs, lam):
    # a zero second coordinate forces the generic subset search on the same points
    planar = VectorSequence.of(np.array([[x, 0.0] for x in xs]))
    assert covering_number(xs, lam, return_exact=True) == (covering_number(planar, lam), True)
