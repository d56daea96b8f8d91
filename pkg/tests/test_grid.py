from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from rtlab.grid import (GridInterval, GridSpec, enumerate_grid, endpoints, intervals_from_csv,
                        intervals_to_csv, is_descendant, relate, shared_intervals, sons,
                        verify_grid)


def test_endpoints_examples():
    assert endpoints(GridInterval(0, 0, 0, 1)) == (0, 1)
    assert endpoints(GridInterval(0, 0, 3, 41)) == (F(3, 41), F(44, 41))
    a, b = endpoints(GridInterval(-3, 5, 1, 41))
    # oracle: plain rational arithmetic
    assert (a, b) == (F(1, 8) * (5 + F(1, 41)), F(1, 8) * (6 + F(1, 41)))
    assert (a, b) == (F(206, 328), F(247, 328))


def test_invalid_intervals():
    with pytest.raises(ValueError):
        GridInterval(0, 0, 41, 41)
    with pytest.raises(ValueError):
        GridInterval(0, 0, 0, 4)
    with pytest.raises(ValueError):
        GridSpec(N=41, j=40)


def test_relate_examples():
    assert relate((0, 1), (0, F(1, 2))) == "b_inside_a"
    assert relate((F(3, 41), F(44, 41)), (F(44, 41), F(85, 41))) == "disjoint"
    assert relate((0, 1), (F(1, 2), F(3, 2))) == "violation"
    assert relate((0, F(1, 2)), (0, 1)) == "a_inside_b"


def test_sons_examples():
    assert [s.endpoints() for s in sons(GridInterval(0, 0))] == [(0, F(1, 2)), (F(1, 2), 1)]
    left, right = sons(GridInterval(0, 0, 3, 41))
    mid = (F(3, 41) + F(44, 41)) / 2
    assert mid == F(47, 82)
    assert left.endpoints() == (F(3, 41), mid)
    assert right.endpoints() == (mid, F(44, 41))
    top = GridInterval(1, 0)
    grand = sons(sons(top)[0])[0]
    assert grand.endpoints() == (0, F(1, 2))
    assert is_descendant(grand, top)


def test_enumerate_examples():
    got = enumerate_grid(GridSpec(), [0], (0, 3))
    assert [w.endpoints() for w in got] == [(0, 1), (1, 2), (2, 3)]
    got = enumerate_grid(GridSpec(41, 0, 3), [0], (0, 2))
    assert [w.endpoints() for w in got] == [(F(-38, 41), F(3, 41)), (F(3, 41), F(44, 41)),
                                           (F(44, 41), F(85, 41))]
    got = enumerate_grid(GridSpec(41, 0, 0, saturated=True), [0, -1], (0, 1))
    assert [w.endpoints() for w in got] == [(0, F(1, 2)), (F(1, 2), 1), (0, 1)]
    assert enumerate_grid(GridSpec(), [0], (1, 1)) == []


def test_enumerate_respects_residue():
    got = enumerate_grid(GridSpec(5, 1, 2), range(-6, 7), (0, 4))
    assert {w.i for w in got} == {-3, 1, 5}


def test_verify_examples():
    r = verify_grid(GridSpec(41, 0, 0), [-40, 0, 40], (0, 4))
    assert r.violations == [] and r.checked_pairs > 10**12
    r = verify_grid(GridSpec(), range(-2, 3), (0, 4))
    assert r.violations == [] and r.method == "pairwise"
    bad = verify_grid([GridSpec(41, 0, 3), GridSpec(41, 1, 3)], range(-2, 3), (0, 4))
    assert bad.violations


def test_sweep_matches_pairwise_on_small_windows():
    cases = [[GridSpec(3, j, L)] for j in range(2) for L in range(3)]
    cases += [[GridSpec(5, 0, 2), GridSpec(5, 1, 2)], [GridSpec(3, 0, 1), GridSpec(3, 0, 2)],
              [GridSpec(9, 0, 1)], [GridSpec(5, 2, 3, saturated=True)]]
    for specs in cases:
        a = verify_grid(specs, range(-5, 4), (0, 3), method="pairwise")
        b = verify_grid(specs, range(-5, 4), (0, 3), method="sweep")
        assert bool(a.violations) == bool(b.violations), specs
        assert a.checked_pairs == b.checked_pairs


def test_composite_modulus_breaks_nesting():
    # 2**8 = 4 (mod 9): the residue trick needs a prime modulus
    r = verify_grid(GridSpec(9, 0, 1), range(-16, 9), (0, 4), method="sweep")
    assert r.violations


def test_sibling_grids_share_nothing():
    specs = [GridSpec(5, j, L) for j in range(4) for L in range(5)]
    assert shared_intervals(specs, range(-8, 8), (0, 4)) == 0
    # enumeration-intersection oracle
    seen = set()
    for sp in specs:
        keys = {(w.i, w.left) for w in enumerate_grid(sp, range(-8, 8), (0, 4))}
        assert not keys & seen
        seen |= keys
    r = verify_grid(GridSpec(5, 1, 2), range(-8, 8), (0, 4), others=specs)
    assert r.ok
    dup = shared_intervals([GridSpec(5, 1, 2), GridSpec(5, 1, 2, saturated=True)], [1], (0, 4))
    assert dup > 0


def test_json_csv_roundtrip():
    sp = GridSpec(41, 7, 11, saturated=True)
    assert GridSpec.from_json(sp.to_json()) == sp
    ivs = enumerate_grid(sp, range(-3, 2), (0, 2))
    assert intervals_from_csv(intervals_to_csv(ivs)) == ivs


@settings(max_examples=60, deadline=None)
@given(N=st.sampled_from([3, 5, 41]), data=st.data())
def test_grids_nested(N, data):
    j = data.draw(st.integers(0, N - 2))
    L = data.draw(st.integers(0, N - 1))
    k0 = data.draw(st.integers(-3 * (N - 1), 0))
    scales = range(k0 - 3 * (N - 1), k0 + 1)
    r = verify_grid(GridSpec(N, j, L), scales, (0, 4), method="sweep")
    assert r.violations == []


@settings(max_examples=40, deadline=None)
@given(N=st.sampled_from([3, 5, 41]), data=st.data())
def test_saturated_sons_are_members(N, data):
    sp = GridSpec(N, data.draw(st.integers(0, N - 2)), data.draw(st.integers(0, N - 1)),
                  saturated=True)
    k = data.draw(st.integers(-20, 20))
    l = data.draw(st.integers(-50, 50))
    w = sp.interval(k, l)
    a, b = sons(w)
    assert sp.contains(a) and sp.contains(b)
    assert a.left == w.left and a.right == b.left and b.right == w.right
    assert a.length + b.length == w.length
    assert GridSpec(N, sp.j, sp.L).contains(w) == ((k - sp.j) % (N - 1) == 0)
