import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiplier_lab.profiles import low_pass
from multiplier_lab.subspace_lab import subspace_from_normals
from multiplier_lab.symbols import (
    check_mikhlin,
    constant_symbol,
    make_carleson_region,
    make_localized,
    make_paraproduct_symbol,
    make_riesz_pair_symbol,
    make_sign_symbol,
    make_smooth_line_symbol,
    make_trilinear_sgn_symbol,
    mikhlin_grid,
    riesz_constant,
    riesz_symbol,
)


def at(m, *pts):
    return m(np.array(pts, dtype=float))


def test_carleson_region_examples():
    m = make_carleson_region((1, 1))
    assert at(m, [1, 1])[0] == 1 and at(m, [1, -1])[0] == 0
    assert at(make_carleson_region((6, 3, 2), 0.0), [1, 1, 1])[0] == 0
    with pytest.raises(ValueError):
        make_carleson_region((0, 0))


def test_paraproduct_examples():
    a = make_paraproduct_symbol(8)
    assert at(a, [0, 32])[0] == 1
    rng = np.random.default_rng(0)
    pts = np.stack([rng.uniform(-300, 300, 500), np.ones(500)], axis=1)
    assert np.all(a(pts) == 0)


def test_paraproduct_derivative_scales_like_inverse_frequency():
    a = make_paraproduct_symbol(8)
    consts = []
    for k in range(1, 9):
        best = 0.0
        for xi3 in np.linspace(2.0 ** (k - 0.5), 2.0 ** (k + 0.5), 200):
            h = 1e-6 * xi3
            d = (at(a, [0, xi3 + h])[0] - at(a, [0, xi3 - h])[0]) / (2 * h)
            best = max(best, abs(d) * 2.0 ** k)
        consts.append(best)
    assert max(consts) / min(consts) < 1.2


def test_trilinear_sign_factorization():
    a = make_paraproduct_symbol(6)
    m = make_trilinear_sgn_symbol(a)
    assert at(m, [1, -2, 32])[0] == -at(a, [-2, 32])[0]
    assert at(m, [1, -1, 32])[0] == 0
    one = make_trilinear_sgn_symbol(constant_symbol(2))
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(200, 3))
    np.testing.assert_array_equal(one(pts), np.sign(pts[:, 0] + pts[:, 1]))


def test_localized_examples():
    m = make_localized(constant_symbol(2), (1, -1), (1, 1))
    assert at(m, [1.5, 1.5])[0] == 1
    assert at(m, [2, 0])[0] == 0
    assert at(m, [0.25, 0.25])[0] == 0
    with pytest.raises(ValueError):
        make_localized(constant_symbol(2), (1, 1), (2, 2))


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(2.0, 50.0), st.floats(-3, 3))
def test_localization_identity_is_bitwise(u, v, w):
    alpha, beta = np.array([1.0, -2.0, 0.5]), np.array([0.5, 1.0, 1.0])
    inner = make_smooth_line_symbol((1, 2, 3), 40.0)
    m = make_localized(inner, alpha, beta)
    # solve alpha.xi = u, beta.xi = v with a free third component
    basis = np.linalg.lstsq(np.stack([alpha, beta]), np.array([u, v]), rcond=None)[0]
    null = np.cross(alpha, beta)
    xi = (basis + w * null / np.linalg.norm(null))[None, :]
    if abs(xi @ alpha)[0] <= 0.5 and (xi @ beta)[0] >= 2:
        assert m(xi)[0] == inner(xi)[0]


def test_riesz_constant_matches_closed_form():
    # c_d = pi^((d+1)/2) / Gamma((d+1)/2), the classical Riesz normalization
    for d in (1, 2, 3):
        assert riesz_constant(d) == pytest.approx(math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2), rel=1e-9)


def test_riesz_symbol_examples():
    c = riesz_constant(2)
    v = riesz_symbol(np.array([[3.0, 4.0], [0.0, 5.0], [7.0, 0.0], [1.0, 0.0]]), c)
    assert abs(v[0]) == pytest.approx(c * 3 / 5, rel=1e-15)
    assert v[1] == 0 and v[2] == v[3]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda e: np.linalg.norm(e) > 1e-3),
       st.floats(1e-3, 1e3))
def test_riesz_homogeneity(eta, lam):
    e = np.array(eta)
    a, b = riesz_symbol(e, 1.0), riesz_symbol(lam * e, 1.0)
    assert abs(a - b) <= 1e-12


def test_riesz_pair_flags_undefined_points():
    m = make_riesz_pair_symbol([[1, 0, 0], [0, 1, 0]], [[0, 0, 1], [0, 0, 0]], 2)
    v = m(np.array([[0.0, 0.0, 3.0], [0.1, 0.2, 3.0]]))
    assert v[0] == 0 and m.flags["undefined_hits"] == 1
    assert v[1] != 0
    with pytest.raises(ValueError):
        make_riesz_pair_symbol([[1, 0], [2, 0]], [[0, 1], [0, 0]], 2)


def test_support_honesty():
    m = make_trilinear_sgn_symbol(make_paraproduct_symbol(5))
    rng = np.random.default_rng(2)
    pts = rng.uniform(-100, 100, (20000, 3))
    (_, _), (l2, h2), (l3, h3) = m.support
    out = (pts[:, 1] <= l2) | (pts[:, 1] >= h2) | (pts[:, 2] <= l3) | (pts[:, 2] >= h3)
    assert np.all(m(pts[out]) == 0)


def test_mikhlin_constant_symbol_is_flat():
    rep = check_mikhlin(constant_symbol(2), "origin", 2, mikhlin_grid(2, 0.1, 10, 5, 8))
    assert all(v == 0 for v in rep["worst_constants"].values())


def test_mikhlin_sign_symbol_off_plane():
    m = make_sign_symbol((1, 1))
    gamma = subspace_from_normals([[1, 1]])
    grid = mikhlin_grid(2, 0.5, 5, 4, 10)
    rep = check_mikhlin(m, gamma, 1, grid)
    assert rep["worst_constants"] == {"10": 0.0, "01": 0.0}


def test_mikhlin_rejects_points_on_the_singular_set():
    with pytest.raises(ValueError):
        check_mikhlin(constant_symbol(2), "origin", 1, np.zeros((1, 2)))


def test_paraproduct_family_telescopes():
    xi = np.linspace(-600, 600, 9001)
    K = 8
    total = sum(low_pass(k)(xi) - low_pass(k - 1)(xi) for k in range(1, K + 1))
    np.testing.assert_allclose(total, low_pass(K)(xi) - low_pass(0)(xi), atol=1e-14)


def test_descriptor_round_trip():
    import json
    m = make_carleson_region((6, 3, 2), 5.0)
    d = json.loads(m.to_json())
    assert d == {"kind": "carleson", "arity": 3, "alpha": [6.0, 3.0, 2.0], "M": 5.0}
