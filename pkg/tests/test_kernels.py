from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtlab.kernels import (CATALOG, check_admissible, custom_kernel, discrete_kernels, eta_hat,
                           finite_difference, h_kernel_float, kernel_approx_error, kernel_catalog,
                           kernels_to_csv, lp_piece, psi_profile, q_partition, septic_step,
                           summation_by_parts_weights, build_eta)

INV = kernel_catalog("inverse_y")


def test_catalog_kernels_admissible():
    for name in CATALOG:
        rep = check_admissible(kernel_catalog(name))
        assert rep.ok, (name, rep.constants)
    rep = check_admissible(INV)
    assert rep.constants["decay"] == pytest.approx(np.pi, rel=1e-3)
    assert max(rep.constants.values()) < 100


def test_negative_and_zero_controls():
    one = check_admissible(custom_kernel("one", lambda x: np.ones(np.shape(x)) + 0j))
    assert not one.passed["decay"] and one.constants["decay"] == pytest.approx(1e4)
    zero = check_admissible(custom_kernel("zero", lambda x: np.zeros(np.shape(x)) + 0j))
    assert zero.ok and all(c == 0 for c in zero.constants.values())
    with pytest.raises(ValueError):
        check_admissible(INV, [0.0, 1.0])
    with pytest.raises(ValueError):
        kernel_catalog("nope")


def test_inverse_y_transform_inverts_to_kernel():
    # oracle: K(y) = 4 pi int_0^inf T(xi) sin(2 pi xi y) dxi with Khat = -2 pi i sign T
    xi = np.linspace(0, 32, 2 ** 14 + 1)[1:]
    T = (INV.khat(xi) / (-2j * np.pi)).real
    for y in (0.3, 2.0, 5.0):
        val = 4 * np.pi * np.sum(T * np.sin(2 * np.pi * xi * y)) * (xi[1] - xi[0])
        assert val == pytest.approx(float(INV.kspace(np.array([y]))[0]), abs=2e-4)
    assert INV.kspace(np.array([1.0, -3.0, 17.5])) == pytest.approx([1, -1 / 3, 1 / 17.5])


def test_derivative_formula_matches_differences():
    xi = np.concatenate([-np.logspace(-2, 1, 30), np.logspace(-2, 1, 30)])
    for name in ("inverse_y", "poisson"):
        spec = kernel_catalog(name)
        for n in (1, 2):
            fd = finite_difference(spec.khat, xi, n, rel_step=1e-3)
            ex = spec.derivative(xi, n)
            assert np.max(np.abs(fd - ex)) / np.max(np.abs(ex)) < 1e-3


def test_eta_limits_and_support():
    xi = np.linspace(-0.5, 0.5, 4097)
    e = eta_hat(INV, xi)
    assert np.allclose(e[(xi > 0) & (xi <= 1 / 8)], -1j * np.pi)
    assert np.allclose(e[(xi < 0) & (xi >= -1 / 8)], 1j * np.pi)
    assert np.all(e[np.abs(xi) > 3 / 8] == 0)
    p = eta_hat(kernel_catalog("poisson"), xi)
    assert np.allclose(p[np.abs(xi) <= 1 / 8], 1.0)
    # limits agree with the transform near 0
    assert INV.khat(np.array([1e-7]))[0] == pytest.approx(INV.limit_right, abs=1e-5)
    sp = build_eta(INV, 1024, 1 / 8)
    assert np.all(sp.values[np.abs(sp.xi) > 3 / 8] == 0)


def test_k_minus_eta_vanishes_linearly():
    xi = np.concatenate([-np.logspace(-5, -1, 40), np.logspace(-5, -1, 40)])
    for name in CATALOG:
        spec = kernel_catalog(name)
        diff = np.abs(spec.khat(xi) - eta_hat(spec, xi))
        assert np.max(diff / np.abs(xi)) < 20


def test_septic_step():
    t = np.linspace(0, 1, 11)
    s = septic_step(t)
    assert s[0] == 0 and s[-1] == 1 and np.all(np.diff(s) >= 0)
    assert septic_step(0.5) == pytest.approx(0.5)


def test_lp_pieces():
    xi = np.linspace(1e-4, 4, 20001)
    for k in (-2, 0, 3):
        total = sum(lp_piece(psi_profile, i, xi) for i in range(k, k + 21))
        keep = xi >= 3 / 8 * 2.0 ** (-k - 21)
        assert np.max(np.abs(total[keep] - psi_profile(2.0 ** k * xi[keep]))) < 1e-8
    for i in (-1, 0, 2):
        piece = lp_piece(psi_profile, i, xi)
        outside = (xi < 2.0 ** -i / 16) | (xi > 3 * 2.0 ** -i / 8)
        assert np.all(piece[outside] == 0)
        for j in range(i + 3, i + 6):
            assert np.all(piece * lp_piece(psi_profile, j, xi) == 0)
    zero = lambda x: np.zeros_like(np.asarray(x, float))
    assert np.all(lp_piece(zero, 4, xi) == 0)


def test_q_partition_of_unity():
    xi = np.concatenate([-np.logspace(-3, 3, 500), np.logspace(-3, 3, 500)])
    total = sum(q_partition(xi / 2.0 ** j) for j in range(-15, 15))
    assert np.allclose(total, 1.0, atol=1e-12)
    grid = np.linspace(-1, 1, 2001)
    q = q_partition(grid)
    assert np.all(q[(np.abs(grid) <= 1 / 8) | (np.abs(grid) >= 3 / 8)] == 0)


def test_discrete_kernel_examples():
    t = discrete_kernels(INV, 3)
    m = 8
    for i in range(1, m):
        expect = Fraction(float(INV.kspace(np.array([i / m]))[0])) / m - Fraction(1, i)
        assert t["O"].at(i) == expect
    for i in range(m, 40):
        assert t["H"].at(i) == Fraction(1, i)
        assert t["H"].at(-i - 1) == Fraction(1, -i - 1)
    assert t["A"].at(m + 1) == 0 and t["S"].at(0) == 0
    with pytest.raises(ValueError):
        discrete_kernels(INV, 0)
    with pytest.raises(ValueError):
        discrete_kernels(kernel_catalog("poisson"), 2)


def test_h_identity_exact():
    t3, t5 = discrete_kernels(INV, 3), discrete_kernels(INV, 5)
    for i in range(-40, 41):
        assert t3["H"].at(i) - t5["H"].at(i) == t3["O"].at(i) - t5["O"].at(i)


def test_approximation_constants():
    inner, outer = [], []
    for k in range(1, 11):
        r = kernel_approx_error(INV, k)
        inner.append(r.inner_constant)
        outer.append(r.outer_constant)
    assert max(inner) / min(inner) <= 2
    assert max(outer) / min(outer) <= 2
    k = 4
    ys = np.arange(2 ** k, 2 ** (k + 6), dtype=float)
    assert np.max(np.abs(h_kernel_float(INV, k, ys) - INV.dil_space(2 ** k, ys))) < 1e-15
    # hand computation at k = 1, y = 1/2
    val = h_kernel_float(INV, 1, np.array([0.5]))[0] - INV.dil_space(2, np.array([0.5]))[0]
    assert abs(val) == pytest.approx(abs(INV.kspace(np.array([0.0]))[0] / 2
                                         - INV.kspace(np.array([0.25]))[0] / 2))


def test_summation_by_parts():
    sums = []
    for k in range(1, 13):
        w = summation_by_parts_weights(INV, k)
        A = discrete_kernels(INV, k, radius=2 ** k + 1)["A"]
        assert abs(w[-1]) == 2 ** k * abs(A.at(2 ** k))
        sums.append(float(sum(abs(x) for x in w)))
    assert max(sums) < 2
    fives = [abs(float(summation_by_parts_weights(INV, k)[4])) for k in range(3, 13)]
    assert fives[-1] < 1e-8 and fives[-1] <= fives[2]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.lists(st.integers(-9, 9), min_size=40, max_size=40))
def test_summation_by_parts_identity(k, xs):
    # sum_{n>=1} x_n A_k(n) = sum_n w_k(n) * (mean of x_1..x_n), exactly
    A = discrete_kernels(INV, k, radius=2 ** k + 1)["A"]
    w = summation_by_parts_weights(INV, k)
    x = [Fraction(v) for v in xs] + [Fraction(0)] * 64
    lhs = sum(x[n - 1] * A.at(n) for n in range(1, 2 ** k + 1))
    rhs = sum(w[n - 1] * sum(x[:n]) / n for n in range(1, 2 ** k + 1))
    assert lhs == rhs


def test_kernel_csv():
    text = kernels_to_csv({1: discrete_kernels(INV, 1, radius=4)})
    lines = text.strip().split("\n")
    assert lines[0] == "k,n,H,A,S,O" and len(lines) == 10
