import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiplier_lab import engine
from multiplier_lab.engine import (
    BlockIndex,
    KernelSpec,
    SymbolBoundError,
    apply_kernel_blocks,
    apply_maximal_variant,
    apply_multiplier,
    apply_ncarleson,
    blocks_in_play,
    custom_odd_kernel,
    hilbert_kernel,
    inverse_transform_im,
    lemma_D,
    verify_kernel_lemma,
)
from multiplier_lab.profiles import Identity, band_pass, low_pass
from multiplier_lab.symbols import (
    FrequencySymbol,
    constant_symbol,
    make_carleson_region,
    make_paraproduct_symbol,
    make_sign_symbol,
    make_trilinear_sgn_symbol,
)
from multiplier_lab.witnesses import GaussianBump, make_base_bump, make_bump_train, make_dyadic_chirps

PHI = make_base_bump(0.5)


def pair(N=2, A=8, s1=1.0, s2=-2.0):
    return make_bump_train(PHI, N, A, s1), make_bump_train(PHI, N, A, s2)


def rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# ---------------------------------------------------------------- frequency side

@pytest.mark.parametrize("method", ["structured", "quadrature"])
def test_constant_symbol_gives_pointwise_product(method):
    f1, f2 = pair()
    xs = np.linspace(-30, 30, 41)
    got = apply_multiplier(constant_symbol(2), [f1, f2], xs, method=method)
    assert rel(got, f1(xs) * f2(xs)) < 1e-8


def test_sign_symbol_matches_one_dimensional_hilbert_oracle():
    f1 = make_bump_train(PHI, 1, 8, 0.25)
    f2 = make_bump_train(PHI, 1, 8, -0.125)
    xs = np.array([-7.3, 0.0, 2.5, 11.0])
    # i H(f1 f2)(x), H by scipy's Cauchy-weight quadrature of (1/pi) p.v. int g(y) / (x - y) dy
    ref = np.array([0.2524925800544357 - 0.8992890613621853j, 0.0,
                    0.0002537031589054236 + 0.4476863226763685j, 0.020461962668331717 + 0.08001734039643162j])
    got = apply_multiplier(make_sign_symbol((1, 1)), [f1, f2], xs)
    assert np.max(np.abs(got - ref)) < 1e-6 * np.max(np.abs(ref))


def test_multilinearity():
    f1, f2 = pair()
    g1 = make_bump_train(PHI, 1, 8, 3.0)
    xs = np.linspace(-20, 20, 17)
    m = make_sign_symbol((1, -1))
    lhs = apply_multiplier(m, [_sum(f1, g1), f2], xs)
    rhs = apply_multiplier(m, [f1, f2], xs) + apply_multiplier(m, [g1, f2], xs)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def _sum(f, g):
    """A train whose pieces are the union of two trains with the same base and spacing law."""
    from multiplier_lab.witnesses import BumpTrain

    class Sum(BumpTrain):
        pass

    s = object.__new__(Sum)
    for k, v in f.__dict__.items():
        object.__setattr__(s, k, v)
    object.__setattr__(s, "indices", f.indices + g.indices)
    object.__setattr__(s, "shifts", np.concatenate([f.shifts, g.shifts]))
    object.__setattr__(s, "centers", np.concatenate([f.centers, g.centers]))
    object.__setattr__(s, "phases", np.concatenate([f.phases, g.phases]))
    object.__setattr__(s, "integer_phases", False)
    return s


@pytest.mark.parametrize("symbol", [make_sign_symbol((1, -1)), make_carleson_region((2, 1), 3.0),
                                    make_carleson_region((1, 1))])
@pytest.mark.parametrize("tau", [0.37, -5.0])
def test_translation_covariance(symbol, tau):
    f1, f2 = pair()
    xs = np.linspace(-25, 25, 11)
    moved = apply_multiplier(symbol, [f1.translated(tau), f2.translated(tau)], xs)
    ref = apply_multiplier(symbol, [f1, f2], xs - tau)
    assert np.max(np.abs(moved - ref)) < 1e-8


@pytest.mark.parametrize("symbol", [make_sign_symbol((1, -1)), make_carleson_region((2, 1), 3.0)])
def test_structured_and_quadrature_routes_agree(symbol):
    f1, f2 = pair()
    xs = np.array([-19.0, 0.4, 8.0, 23.0])
    s = apply_multiplier(symbol, [f1, f2], xs, method="structured")
    q = apply_multiplier(symbol, [f1, f2], xs, method="quadrature")
    assert rel(s, q) < 1e-8


def test_quadrature_converges_under_doubling():
    f1, f2 = pair()
    xs = np.array([-19.0, 0.4, 8.0])
    m = make_carleson_region((1, 2), 5.0)
    a = apply_multiplier(m, [f1, f2], xs, method="quadrature", refine=1)
    b = apply_multiplier(m, [f1, f2], xs, method="quadrature", refine=2)
    assert rel(a, b) < 1e-6


def test_sup_norm_violation_is_reported():
    f1, f2 = pair(N=0)
    bad = FrequencySymbol(2, lambda xi: 3.0 * np.ones(xi.shape[:-1]), "bad", {}, 1.0)
    with pytest.raises(SymbolBoundError):
        apply_multiplier(bad, [f1, f2], [0.0])


def test_arity_mismatch():
    f1, _ = pair()
    with pytest.raises(ValueError):
        apply_multiplier(make_sign_symbol((1, 1)), [f1], [0.0])


def test_results_do_not_depend_on_thread_count():
    f1, f2 = pair()
    xs = np.linspace(-30, 30, 70)
    m = make_sign_symbol((1, -1))
    one = apply_multiplier(m, [f1, f2], xs, threads=1)
    many = apply_multiplier(m, [f1, f2], xs, threads=4)
    assert np.array_equal(one, many)


# ---------------------------------------------------------------- maximal Carleson

def test_ncarleson_single_cutoff_matches_region_symbol():
    f1, f2 = pair()
    xs = np.array([-8.0, 0.2, 8.0])
    for M in (-9.0, 4.0, 8.3, 100.0):
        got = apply_ncarleson((2, 1), [f1, f2], xs, [M])
        ref = np.abs(apply_multiplier(make_carleson_region((2, 1), M), [f1, f2], xs, method="quadrature"))
        assert np.max(np.abs(got - ref)) < 1e-8


def test_ncarleson_refining_grid_never_decreases():
    f1, f2 = pair()
    xs = np.linspace(-16, 16, 9)
    coarse = apply_ncarleson((2, 1), [f1, f2], xs, [-8.0, 8.0])
    fine = apply_ncarleson((2, 1), [f1, f2], xs, [-8.0, 0.0, 8.0, 16.0])
    assert np.all(fine >= coarse)


def test_ncarleson_saturates_above_the_spectra():
    f1, f2 = pair()
    xs = np.linspace(-16, 16, 9)
    top = float(np.max(f2.centers)) + f2.h
    a = apply_ncarleson((2, 1), [f1, f2], xs, [top])
    b = apply_ncarleson((2, 1), [f1, f2], xs, [top + 50.0])
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_singular_part_is_half_the_sign_symbol():
    f1, f2 = pair()
    xs = np.array([0.1, 8.0])
    got = apply_ncarleson((2, 1), [f1, f2], xs, [1e6], part="singular")
    ref = 0.5 * np.abs(apply_multiplier(make_sign_symbol((2, 1)), [f1, f2], xs))
    assert np.max(np.abs(got - ref)) < 1e-10
    with pytest.raises(ValueError):
        apply_ncarleson((2, 1), [f1, f2], xs, [])


# ---------------------------------------------------------------- kernel side

def test_principal_value_of_even_function_vanishes():
    f = make_bump_train(PHI, 0, 8, 0.0)
    val = apply_kernel_blocks([f], (1.0,), None, hilbert_kernel(), None, 8, 0.0, window=[BlockIndex(0)])
    assert abs(val) < 1e-10


def test_odd_kernel_on_centered_even_block_cancels():
    f = make_bump_train(PHI, 0, 8, 0.0)
    odd = custom_odd_kernel(lambda t: t ** 4 / (1 + t ** 4), c1=0.0, c2=0.0)
    val = apply_kernel_blocks([f], (1.0,), None, odd, None, 8, 0.0, window=[BlockIndex(-1), BlockIndex(1)])
    assert abs(val) < 1e-12


@pytest.mark.parametrize("N", [2, 4])
@pytest.mark.parametrize("alpha", [(1, -1), (2, 1)])
def test_kernel_blocks_match_frequency_side(N, alpha):
    f1, f2 = pair(N=N)
    xs = np.array([0.3, 8.0, 17.5])
    freq = -1j * math.pi * apply_multiplier(make_sign_symbol(alpha), [f1, f2], xs)
    blocks = np.array([apply_kernel_blocks([f1, f2], alpha, None, hilbert_kernel(), None, 8, x) for x in xs])
    assert rel(blocks, freq) < 1e-4


def test_far_blocks_decay_like_inverse_k():
    A = 16
    f1 = make_bump_train(PHI, 8, A, 1.0)
    f2 = make_bump_train(PHI, 8, A, -1.0)
    x = 0.0
    vals = {}
    for blk in blocks_in_play([f1, f2], (1, -1), A, x):
        if blk.k >= 2:
            vals[blk.k] = abs(apply_kernel_blocks([f1, f2], (1, -1), None, hilbert_kernel(), None, A, x,
                                                  window=[blk]))
    C = max(v * A * k for k, v in vals.items())
    assert all(v <= C / (A * k) * (1 + 1e-12) for k, v in vals.items())
    assert C < 10


def test_pv_pairing_required_for_the_origin_block():
    f1, f2 = pair()
    with pytest.raises(ValueError):
        apply_kernel_blocks([f1, f2], (1, -1), None, hilbert_kernel(), None, 8, 0.0,
                            window=[BlockIndex(0)], pv_pairing=False)


def test_block_windows_tile_the_line():
    A = 8
    edges = [BlockIndex(k).window(A)[0] for k in range(-3, 4)]
    assert all(a[1] == b[0] for a, b in zip(edges, edges[1:]))


# ---------------------------------------------------------------- kernel lemma

def test_hilbert_kernel_constants():
    K = hilbert_kernel()
    assert K.c1 == 1.0
    # Im of the inverse transform of 1/t tends to pi
    assert inverse_transform_im(np.ones_like, 50.0) == pytest.approx(math.pi, rel=1e-8)


def test_lemma_D_is_constant_times_bump_integral():
    from scipy import integrate

    phi = GaussianBump(1.0)
    alpha = (6, 3, 2)
    ref, _ = integrate.quad(lambda t: np.prod([phi(np.array([a * t]))[0] for a in alpha]), -8, 8, epsabs=1e-14)
    assert lemma_D(phi, alpha, 8, hilbert_kernel(), hilbert_kernel()) == pytest.approx(math.pi * ref, rel=1e-10)


def test_lemma_rows_and_halving_small_range():
    rep = verify_kernel_lemma(GaussianBump(1.0), (6, 3, 2), (1, -1, 2), 8, range(2, 17))
    assert rep.passes
    assert all(0.9 <= r <= 1.1 for _, r, _ in rep.halving)


def test_lemma_rejects_k_below_k0():
    with pytest.raises(ValueError):
        verify_kernel_lemma(GaussianBump(1.0), (1, 1), (1, -1), 8, range(2, 5), k0=3)


# ---------------------------------------------------------------- maximal variants

def test_maximal_single_scale_has_no_sup():
    f1, f2 = pair()
    xs = np.linspace(-10, 10, 7)
    fam = ({3: Identity()}, {3: low_pass(3)})
    got = apply_maximal_variant("pair", fam, f1, f2, xs)
    m = FrequencySymbol(2, lambda xi: -1j * np.sign(xi[..., 0] + xi[..., 1]) * low_pass(3)(xi[..., 1]),
                        "ref", {}, 1.0, None, None, (((1.0, 1.0), 0.0),))
    ref = np.abs(apply_multiplier(m, [f1, f2], xs, method="quadrature"))
    assert np.max(np.abs(got - ref)) < 1e-8
    assert np.all(got >= 0)


def test_partial_sums_match_direct_double_computation():
    f1 = make_bump_train(PHI, 1, 8, 0.5)
    f2 = make_bump_train(PHI, 1, 8, 1.0)
    xs = np.array([-4.0, 0.5, 7.0])
    scales = range(1, 6)
    tilde = {k: Identity() for k in scales}
    plain = {k: band_pass(k) for k in scales}
    got = apply_maximal_variant("partial_sum", (tilde, plain), f1, f2, xs)
    running = np.zeros(len(xs), dtype=complex)
    best = np.zeros(len(xs))
    for k in scales:
        g = plain[k]
        m = FrequencySymbol(2, lambda xi, g=g: -1j * np.sign(xi[..., 0] + xi[..., 1]) * g(xi[..., 1]),
                            "ref", {}, 1.0, None, None, (((1.0, 1.0), 0.0),))
        running = running + apply_multiplier(m, [f1, f2], xs, method="quadrature")
        best = np.maximum(best, np.abs(running))
    assert np.max(np.abs(got - best)) < 1e-6


def test_maximal_kind_validated():
    f1, f2 = pair()
    with pytest.raises(ValueError):
        apply_maximal_variant("bogus", ({1: Identity()}, {1: Identity()}), f1, f2, [0.0])


# ---------------------------------------------------------------- trilinear

def test_sign_paraproduct_routes_agree():
    f = make_dyadic_chirps(2, M=3)
    m = make_trilinear_sgn_symbol(make_paraproduct_symbol(3))
    xs = np.array([8.0, 16.3])
    s = apply_multiplier(m, list(f), xs, method="structured")
    q = apply_multiplier(m, list(f), xs, method="quadrature")
    assert rel(s, q) < 1e-4


@settings(max_examples=15, deadline=None)
@given(st.floats(-40, 40))
def test_hypothesis_translation_covariance_sign(tau):
    f1, f2 = pair(N=1)
    xs = np.array([-3.0, 5.0])
    m = make_sign_symbol((1, -1))
    moved = apply_multiplier(m, [f1.translated(tau), f2.translated(tau)], xs)
    assert np.max(np.abs(moved - apply_multiplier(m, [f1, f2], xs - tau))) < 1e-8
