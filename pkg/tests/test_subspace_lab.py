from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from multiplier_lab.rational_core import solve_moment_orthogonal
from multiplier_lab.subspace_lab import (
    adapted_pair_constraints,
    brute_force_nondegenerate,
    build_gamma_family,
    check_nondegenerate,
    choose_epsilon,
    distinctness_sample,
    exact_perp_distance_sq,
    gamma_scales,
    perp_distance,
    span_rank,
    subspace_from_normals,
)

Q5 = [1, 2, 3, 4, 5]


def test_family_at_zero_parameter_spans_inverse_and_linear_powers():
    g = build_gamma_family(Q5, 0, 2)
    assert g.dim == 3 and g.exact
    inv = [F(1, q) for q in Q5]
    assert span_rank(list(g.normals) + [inv, Q5]) == 2


def test_family_pole_rejected():
    with pytest.raises(ValueError):
        build_gamma_family([1, 2], F(-1, 2), 1)
    with pytest.raises(ValueError):
        build_gamma_family([1, 2, 3], 0, 3)


def test_single_normal_values():
    g = build_gamma_family([1, 2, 3], 0.01, 1)
    np.testing.assert_allclose(g.normals[0], [1 / 1.01, 1 / 2.04, 1 / 3.09], rtol=1e-15)


def test_nondegeneracy_examples():
    assert check_nondegenerate(build_gamma_family(Q5, 0, 2)).passes
    bad = check_nondegenerate(subspace_from_normals([[1, 1]]))
    assert not bad.passes and bad.failing_chain is not None
    assert not check_nondegenerate(subspace_from_normals([[1, 0]])).passes


def test_float_family_near_zero_parameter_still_passes():
    assert check_nondegenerate(build_gamma_family(Q5, 1e-3, 2)).passes


def rational_subspaces():
    @st.composite
    def make(draw):
        n = draw(st.integers(2, 7))
        d = draw(st.integers(1, n - 1))
        rows = draw(st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=d, max_size=d))
        if sp.Matrix(rows).rank() < d:
            rows = [[int(i == j) + (r[j] if i == 0 else 0) for j in range(n)] for i, r in enumerate(rows)]
        return rows
    return make()


@settings(max_examples=50, deadline=None)
@given(rational_subspaces())
def test_certificate_matches_chain_oracle(rows):
    if sp.Matrix(rows).rank() < len(rows):
        return
    g = subspace_from_normals([[F(v) for v in r] for r in rows])
    assert check_nondegenerate(g).passes == brute_force_nondegenerate(g).passes


@settings(max_examples=30, deadline=None)
@given(rational_subspaces(), st.lists(st.integers(1, 9).map(lambda k: F(k, 2)), min_size=7, max_size=7))
def test_row_scaling_invariance(rows, scales):
    if sp.Matrix(rows).rank() < len(rows):
        return
    g = subspace_from_normals([[F(v) for v in r] for r in rows])
    h = subspace_from_normals([[c * F(v) for v in r] for c, r in zip(scales, rows)])
    assert check_nondegenerate(g).passes == check_nondegenerate(h).passes


def test_perp_distance_examples():
    eps = 0.05
    probe = gamma_scales(Q5, eps)
    assert perp_distance(build_gamma_family(Q5, eps, 2), probe) == pytest.approx(0.0, abs=1e-14)
    assert perp_distance(build_gamma_family(Q5, 0, 2), probe) > 1e-4
    g = build_gamma_family(Q5, 0, 2)
    inside = [2 * a - b for a, b in zip(g.normals[0], g.normals[1])]
    assert exact_perp_distance_sq(g, inside) == 0
    with pytest.raises(ValueError):
        perp_distance(g, [0, 0, 0, 0, 0])


def test_exact_and_float_distances_agree():
    g = build_gamma_family(Q5, 0, 2)
    probe = gamma_scales(Q5, F(1, 20))
    assert float(exact_perp_distance_sq(g, probe)) ** 0.5 == pytest.approx(perp_distance(g, probe), rel=1e-10)


def test_distinctness_sampling_sees_several_values():
    eps = choose_epsilon(Q5, [1.0])
    vals = distinctness_sample(Q5, 2, eps, k=8)
    assert vals[-1] == pytest.approx(0.0, abs=1e-12)
    assert len({round(v, 12) for v in vals}) >= 2


def test_adapted_hash_constraints_leave_only_the_mixed_term():
    for n, d in [(5, 1), (7, 2)]:
        q = list(range(1, n + 1))
        exps = {-2, 0} | set(range(1, 2 * d + 1))
        hv = solve_moment_orthogonal(q, exps, e_star=-1)
        r = adapted_pair_constraints(q, 0, d, hv.tilde)
        assert all(v == 0 for v in r["alpha"].values())
        assert all(v == 0 for v in r["beta"].values())
        assert all(v == 0 for v in r["alpha_alpha"].values())
        assert all(v == 0 for v in r["beta_beta"].values())
        assert r["c"] != 0
        assert all(v == 0 for (m, _), v in r["alpha_beta"].items() if m != 1)
