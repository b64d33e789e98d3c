import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiplier_lab.bohr import circle_distance, enumerate_bohr, nearest_integer_offsets


def brute(S, rho, N):
    # plain double loop with exact fractional parts via math.modf
    out = []
    for n in range(1, N + 1):
        worst = 0.0
        for xi in S:
            frac = math.modf(xi * n)[0] % 1.0
            worst = max(worst, min(frac, 1.0 - frac))
        if worst < rho - 1e-12:
            out.append(n)
    return out


def test_half_frequency_members():
    b = enumerate_bohr([0.5], 0.3, 10)
    assert b.members == (2, 4, 6, 8, 10)
    assert b.bound == 2 and b.passes


def test_exact_rational_path_agrees():
    b = enumerate_bohr([F(1, 2)], F(3, 10), 10)
    assert b.members == (2, 4, 6, 8, 10)


def test_integer_frequency_keeps_everything():
    assert enumerate_bohr([1.0], 0.1, 5).members == (1, 2, 3, 4, 5)


def test_sqrt_two_members_match_high_precision_enumeration():
    # frozen from a 50-digit mpmath enumeration
    b = enumerate_bohr([math.sqrt(2)], 0.05, 100)
    assert b.members == (12, 17, 29, 41, 53, 58, 70, 82, 87, 99)
    assert {29, 70, 99} <= set(b.members)


@pytest.mark.parametrize("rho", [0.0, -0.1, 0.51])
def test_radius_out_of_range(rho):
    with pytest.raises(ValueError):
        enumerate_bohr([0.3], rho, 10)


def test_offsets_examples():
    t = nearest_integer_offsets([3], 7)
    assert t.nearest == (2,) and t.offsets == (1,)
    t = nearest_integer_offsets([2, 3], 6)
    assert t.nearest == (3, 2) and t.offsets == (0, 0)
    t = nearest_integer_offsets([math.sqrt(2)], 99)
    assert t.nearest == (70,)
    # delta = n0 - a N, evaluated at 50 digits: 99 - 70 sqrt 2
    assert t.offsets[0] == pytest.approx(0.00505063388334293, rel=1e-9)


def test_offsets_half_ties_round_away_from_zero():
    assert nearest_integer_offsets([2], 3).nearest == (2,)
    assert nearest_integer_offsets([2], -3).nearest == (-2,)
    with pytest.raises(ValueError):
        nearest_integer_offsets([1.0, 0.0], 4)


def test_circle_distance():
    assert circle_distance(F(7, 4)) == F(1, 4)
    assert circle_distance(2.9) == pytest.approx(0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.001, 5.0), min_size=1, max_size=3), st.floats(0.02, 0.5), st.integers(1, 1000))
def test_agrees_with_double_loop(S, rho, N):
    assert list(enumerate_bohr(S, rho, N).members) == brute(S, rho, N)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.001, 5.0), min_size=1, max_size=3), st.floats(0.02, 0.25), st.floats(1.0, 2.0),
       st.integers(1, 500))
def test_monotone_in_radius(S, rho, factor, N):
    small = set(enumerate_bohr(S, rho, N).members)
    large = set(enumerate_bohr(S, min(0.5, rho * factor), N).members)
    assert small <= large


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=3), st.floats(0.02, 0.5), st.integers(1, 1000))
def test_size_bound_never_fails(S, rho, N):
    b = enumerate_bohr(S, rho, N)
    assert len(b.members) >= math.ceil(N * rho ** len(S) - 1)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.01, 9.0).filter(lambda a: abs(a - round(a)) > 1e-3), st.floats(0.02, 0.5), st.integers(1, 400))
def test_offsets_small_on_members(a, rho, N):
    for n0 in enumerate_bohr([1.0 / a], rho, N).members:
        t = nearest_integer_offsets([a], n0)
        assert abs(t.offsets[0]) <= a / 2 + 1e-12
        assert abs(t.offsets[0]) < rho * a + 1e-9


def test_vectorized_mask_matches_loop_on_dense_grid():
    rng = np.random.default_rng(3)
    S = list(rng.uniform(0, 1, 2))
    assert list(enumerate_bohr(S, 0.2, 1000).members) == brute(S, 0.2, 1000)
