"""Multiplier symbols: half-space indicators, paraproducts, localizations, Riesz pairs.

A symbol carries an evaluator plus, when available, a decomposition into terms
c * S(direction . xi) * prod_j g_j(xi_j) with S one of a few line profiles.
The engine uses that decomposition for the exact kernel-side reduction; symbols
without it are evaluated by frequency-side quadrature only.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .profiles import (Cutoff, EnvelopePair, Multiplier1D, band_pass, bspline_center_value,
                       bspline_density, low_pass)
from .subspace_lab import Subspace, distance_to_subspace, subspace_from_normals


# ---------------------------------------------------------------- line profiles

class LineProfile:
    """S(eta) on the line together with its kernel kappa, S(eta) = int kappa(t) e^{-2 pi i eta t} dt.

    kappa = delta_weight * delta + pv_weight * p.v.(1/t) + smooth(t).
    """

    delta_weight: complex = 0.0
    pv_weight: complex = 0.0

    def __call__(self, eta):
        raise NotImplementedError

    def constant_on(self, lo: float, hi: float):
        raise NotImplementedError

    def smooth_kernel(self, t):
        return None

    def classify(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(value, is_constant) of S on each interval [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        val = np.zeros(lo.shape)
        const = np.zeros(lo.shape, dtype=bool)
        for idx in np.ndindex(lo.shape):
            c = self.constant_on(float(lo[idx]), float(hi[idx]))
            if c is not None:
                val[idx] = c
                const[idx] = True
        return val, const

    def descriptor(self) -> dict:
        raise NotImplementedError


class One(LineProfile):
    delta_weight = 1.0

    def __call__(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def constant_on(self, lo, hi):
        return 1.0

    def classify(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        return np.ones(lo.shape), np.ones(lo.shape, dtype=bool)

    def descriptor(self):
        return {"profile": "one"}


class Sign(LineProfile):
    """sgn(eta) with sgn(0) = 0; kernel (i / pi) p.v. 1/t."""

    pv_weight = 1j / math.pi

    def __call__(self, eta):
        return np.sign(np.asarray(eta, dtype=float))

    def constant_on(self, lo, hi):
        if lo > 0:
            return 1.0
        if hi < 0:
            return -1.0
        return None

    def classify(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return np.where(lo > 0, 1.0, -1.0), (lo > 0) | (hi < 0)

    def descriptor(self):
        return {"profile": "sign"}


class Step(LineProfile):
    """1 on eta > 0, 0 otherwise; kernel delta/2 + (i / 2 pi) p.v. 1/t."""

    delta_weight = 0.5
    pv_weight = 0.5j / math.pi

    def __call__(self, eta):
        return (np.asarray(eta, dtype=float) > 0).astype(float)

    def constant_on(self, lo, hi):
        if lo > 0:
            return 1.0
        if hi <= 0:
            return 0.0
        return None

    def classify(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return (lo > 0).astype(float), (lo > 0) | (hi <= 0)

    def descriptor(self):
        return {"profile": "step"}


@dataclass(frozen=True)
class SplineBump(LineProfile):
    """Normalized B-spline of order ``q`` supported in [-L, L], equal to 1 at 0.

    Its kernel is L sinc(2 L t / q)^q / B(0), a smooth rapidly decaying function.
    """

    L: float
    q: int = 4

    def _density(self):
        return bspline_density(self.q, 2.0 / self.q)

    def __call__(self, eta):
        b0 = bspline_center_value(self.q) * self.q / 2.0
        return self._density()(np.asarray(eta, dtype=float) / self.L) / b0

    def constant_on(self, lo, hi):
        if lo >= self.L or hi <= -self.L:
            return 0.0
        return None

    def classify(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return np.zeros(lo.shape), (lo >= self.L) | (hi <= -self.L)

    def smooth_kernel(self, t):
        b0 = bspline_center_value(self.q) * self.q / 2.0
        return self.L * np.sinc(2.0 * self.L * np.asarray(t, dtype=float) / self.q) ** self.q / b0

    def descriptor(self):
        return {"profile": "spline_bump", "L": self.L, "q": self.q}


# ---------------------------------------------------------------- symbols

@dataclass(frozen=True)
class Term:
    coef: complex
    profile: LineProfile
    direction: tuple
    factors: tuple  # one Multiplier1D or None (meaning 1) per coordinate


@dataclass
class FrequencySymbol:
    arity: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    kind: str
    params: dict
    sup_norm: float
    singular: Subspace | str | None = None
    support: tuple | None = None
    hyperplanes: tuple = ()
    piecewise_constant: bool = False
    terms: tuple | None = None
    flags: dict = field(default_factory=dict)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.arity:
            raise ValueError(f"expected points with {self.arity} coordinates")
        return self.evaluate(xi)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "arity": self.arity, **self.params}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)


def _as_floats(v) -> tuple:
    return tuple(float(x) for x in v)


def _sum_terms(terms: Sequence[Term], n: int) -> Callable:
    def ev(xi):
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for term in terms:
            eta = xi @ np.asarray(term.direction, dtype=float)
            val = term.coef * term.profile(eta)
            for j, g in enumerate(term.factors):
                if g is not None:
                    val = val * g(xi[..., j])
            out = out + val
        return out
    return ev


def constant_symbol(n: int, value: complex = 1.0) -> FrequencySymbol:
    term = Term(value, One(), (0.0,) * n, (None,) * n)
    return FrequencySymbol(n, _sum_terms([term], n), "constant", {"value": [complex(value).real, complex(value).imag]},
                           abs(value), None, None, (), True, (term,))


def make_sign_symbol(direction: Sequence[float]) -> FrequencySymbol:
    """sgn(direction . xi)."""
    d = _as_floats(direction)
    n = len(d)
    term = Term(1.0, Sign(), d, (None,) * n)
    return FrequencySymbol(n, _sum_terms([term], n), "sign", {"direction": list(d)}, 1.0,
                           subspace_from_normals([d]), None, ((d, 0.0),), True, (term,))


def make_carleson_region(alpha: Sequence[float], M: float = math.inf) -> FrequencySymbol:
    """Indicator of {xi . alpha > 0, xi_n < M}."""
    a = _as_floats(alpha)
    if not any(a):
        raise ValueError("alpha must be nonzero")
    n = len(a)
    factors = [None] * n
    planes = [(a, 0.0)]
    if math.isfinite(M):
        factors[-1] = Cutoff(float(M))
        planes.append((tuple(float(i == n - 1) for i in range(n)), float(M)))
    term = Term(1.0, Step(), a, tuple(factors))

    def ev(xi):
        mask = (xi @ np.asarray(a)) > 0
        if math.isfinite(M):
            mask &= xi[..., -1] < M
        return mask.astype(float)

    return FrequencySymbol(n, ev, "carleson", {"alpha": list(a), "M": None if not math.isfinite(M) else float(M)},
                           1.0, subspace_from_normals([a]), None, tuple(planes), True, (term,))


def make_smooth_line_symbol(alpha: Sequence[float], L: float, q: int = 4) -> FrequencySymbol:
    """Compactly supported smooth function of alpha . xi (a control symbol)."""
    a = _as_floats(alpha)
    n = len(a)
    term = Term(1.0, SplineBump(float(L), q), a, (None,) * n)
    return FrequencySymbol(n, _sum_terms([term], n), "smooth_line", {"alpha": list(a), "L": L, "q": q}, 1.0,
                           None, None, (), False, (term,))


def paraproduct_families(K_max: int):
    """(low-pass phi_k, band-pass psi_k) for k = 1..K_max."""
    return [low_pass(k) for k in range(1, K_max + 1)], [band_pass(k) for k in range(1, K_max + 1)]


def make_paraproduct_symbol(K_max: int) -> FrequencySymbol:
    """a(xi2, xi3) = sum_k phi_k(xi2) psi_k(xi3), k = 1..K_max."""
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    lows, bands = paraproduct_families(K_max)
    terms = tuple(Term(1.0, One(), (0.0, 0.0), (lo, bp)) for lo, bp in zip(lows, bands))
    support = ((-2.0 ** K_max, 2.0 ** K_max), (2.0 ** 0.5, 2.0 ** (K_max + 0.5)))
    return FrequencySymbol(2, _sum_terms(terms, 2), "paraproduct", {"K_max": K_max}, 1.0, "origin", support,
                           (), False, terms)


def make_trilinear_sgn_symbol(a: FrequencySymbol) -> FrequencySymbol:
    """m(xi1, xi2, xi3) = sgn(xi1 + xi2) a(xi2, xi3), sgn(0) = 0."""
    if a.arity != 2:
        raise ValueError("needs an arity-2 symbol")

    def ev(xi):
        return np.sign(xi[..., 0] + xi[..., 1]) * a(xi[..., 1:])

    terms = None
    if a.terms is not None and all(isinstance(t.profile, One) for t in a.terms):
        terms = tuple(Term(t.coef, Sign(), (1.0, 1.0, 0.0), (None,) + tuple(t.factors)) for t in a.terms)
    support = None if a.support is None else ((-math.inf, math.inf),) + tuple(a.support)
    return FrequencySymbol(3, ev, "sgn_" + a.kind, {"inner": a.descriptor()}, a.sup_norm,
                           subspace_from_normals([(1.0, 1.0, 0.0)]), support, (((1.0, 1.0, 0.0), 0.0),),
                           False, terms)


def _parallel(u: np.ndarray, v: np.ndarray) -> bool:
    return abs(abs(u @ v) - np.linalg.norm(u) * np.linalg.norm(v)) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(v)


def make_localized(m: FrequencySymbol, alpha: Sequence[float], beta: Sequence[float],
                   env: EnvelopePair | None = None) -> FrequencySymbol:
    """Phi(alpha . xi) Psi(beta . xi) m(xi)."""
    env = env or EnvelopePair()
    a = np.asarray(_as_floats(alpha))
    b = np.asarray(_as_floats(beta))
    if not a.any() or not b.any():
        raise ValueError("alpha and beta must be nonzero")
    if _parallel(a, b):
        raise ValueError("alpha and beta are parallel")

    def ev(xi):
        return env.Phi(xi @ a) * env.Psi(xi @ b) * m(xi)

    return FrequencySymbol(m.arity, ev, "localized",
                           {"inner": m.descriptor(), "alpha": a.tolist(), "beta": b.tolist(), "envelopes": env.descriptor()},
                           m.sup_norm, m.singular, None, m.hyperplanes, False, None)


# ---------------------------------------------------------------- Riesz kernels

def _cache_dir() -> Path:
    return Path(os.environ.get("MULTIPLIER_LAB_CACHE", Path.home() / ".cache" / "multiplier_lab"))


def riesz_constant_numeric(d: int) -> float:
    """c_d with FT[s_1 / |s|^{d+1}](eta) = -i c_d eta_1 / |eta|, by quadrature.

    Integrating out the d-1 transverse variables leaves C_d / s_1, C_d a radial integral;
    the remaining 1-D transform of 1/s_1 is done as a Fourier sine integral.
    """
    from scipy import integrate, special

    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        transverse = 1.0
    else:
        sphere = 2.0 * math.pi ** ((d - 1) / 2.0) / special.gamma((d - 1) / 2.0)
        radial, _ = integrate.quad(lambda r: r ** (d - 2) / (1.0 + r * r) ** ((d + 1) / 2.0), 0.0, math.inf,
                                   epsabs=1e-14, epsrel=1e-13)
        transverse = sphere * radial
    # int g(s) e^{-2 pi i s} ds for odd g = 1/s equals -2i int_0^inf sin(2 pi s)/s ds
    head, _ = integrate.quad(lambda s: np.sinc(2.0 * s) * 2.0 * math.pi, 0.0, 1.0, epsabs=1e-14)
    tail, _ = integrate.quad(lambda s: 1.0 / s, 1.0, math.inf, weight="sin", wvar=2.0 * math.pi)
    return transverse * 2.0 * (head + tail)


def riesz_constant(d: int) -> float:
    """Calibrated c_d, cached on disk under $MULTIPLIER_LAB_CACHE."""
    path = _cache_dir() / "riesz_constants.json"
    table = {}
    try:
        table = json.loads(path.read_text())
    except (OSError, ValueError):
        pass
    key = str(d)
    if key not in table:
        table[key] = riesz_constant_numeric(d)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(table, indent=1, sort_keys=True))
        except OSError:
            pass
    return float(table[key])


def riesz_symbol(eta, c_d: float):
    """-i c_d eta_1 / |eta| (0 where eta = 0)."""
    eta = np.asarray(eta, dtype=float)
    r = np.linalg.norm(eta, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, -1j * c_d * eta[..., 0] / safe, 0.0)


def make_riesz_pair_symbol(A: Sequence[Sequence[float]], B: Sequence[Sequence[float]], d: int,
                           env: EnvelopePair | None = None) -> FrequencySymbol:
    """K_d^(A xi) K_d^(B xi) times the localization over the rows of A and the nonzero rows of B."""
    env = env or EnvelopePair()
    Am = np.atleast_2d(np.asarray(A, dtype=float))
    Bm = np.atleast_2d(np.asarray(B, dtype=float))
    if Am.shape[0] != d or Bm.shape[0] != d or Am.shape[1] != Bm.shape[1]:
        raise ValueError("A and B must both be d x n")
    if np.linalg.matrix_rank(Am) < d:
        raise ValueError("rows of A must be independent")
    live_b = [i for i in range(d) if np.any(Bm[i])]
    if live_b and np.linalg.matrix_rank(Bm[live_b]) < len(live_b):
        raise ValueError("nonzero rows of B must be independent")
    c_d = riesz_constant(d)
    n = Am.shape[1]
    flags = {"undefined_hits": 0}

    def ev(xi):
        ax = xi @ Am.T
        bx = xi @ Bm.T
        zero = ~np.any(ax, axis=-1)
        if zero.any():
            flags["undefined_hits"] += int(zero.sum())
        val = riesz_symbol(ax, c_d) * riesz_symbol(bx, c_d)
        for i in range(d):
            val = val * env.Phi(ax[..., i])
        for i in live_b:
            val = val * env.Psi(bx[..., i])
        return np.where(zero, 0.0, val)

    return FrequencySymbol(n, ev, "riesz_pair", {"A": Am.tolist(), "B": Bm.tolist(), "d": d, "c_d": c_d},
                           c_d * c_d, subspace_from_normals(Am.tolist()), None, (), False, None, flags)


# ---------------------------------------------------------------- Mikhlin check

_STENCILS = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
}


def multi_indices(n: int, max_order: int):
    for total in range(1, max_order + 1):
        for idx in itertools.product(range(total + 1), repeat=n):
            if sum(idx) == total:
                yield idx


def _distance(points: np.ndarray, gamma) -> np.ndarray:
    if gamma is None or (isinstance(gamma, str) and gamma == "origin"):
        return np.linalg.norm(points, axis=-1)
    return distance_to_subspace(gamma, points)


def mikhlin_grid(n: int, r_min: float, r_max: float, n_radii: int, n_dirs: int, seed: int = 0) -> np.ndarray:
    """Log-spaced radii times directions (a circle for n = 2, seeded random unit vectors otherwise)."""
    radii = np.geomspace(r_min, r_max, n_radii)
    if n == 2:
        th = (np.arange(n_dirs) + 0.5) * 2 * math.pi / n_dirs
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((n_dirs, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)


def prune_grid(grid, gamma, rel_margin: float = 1e-6) -> np.ndarray:
    """Drop points closer to gamma than rel_margin times their norm."""
    pts = np.asarray(grid, dtype=float)
    keep = _distance(pts, gamma) > rel_margin * np.linalg.norm(pts, axis=-1)
    return pts[keep]


def check_mikhlin(m: FrequencySymbol, gamma, max_order: int, grid, margin: float = 1e-9,
                  rel_step: float = 1e-3) -> dict:
    """sup over the grid of |Delta^a m| dist^|a| for every multi-index a with 1 <= |a| <= max_order.

    Differences are central with step rel_step * dist(xi, gamma) in each coordinate.
    """
    if max_order > 3:
        raise ValueError("stencils are tabulated up to order 3")
    pts = np.asarray(grid, dtype=float)
    dist = _distance(pts, gamma)
    if np.any(dist <= margin):
        raise ValueError("grid point inside the exclusion margin around the singular set")
    h = rel_step * dist
    n = m.arity
    worst = {}
    for idx in multi_indices(n, max_order):
        stencil_axes = [_STENCILS[a] for a in idx]
        acc = np.zeros(len(pts), dtype=complex)
        for combo in itertools.product(*[range(len(s[0])) for s in stencil_axes]):
            shift = np.array([stencil_axes[j][0][c] for j, c in enumerate(combo)], dtype=float)
            weight = np.prod([stencil_axes[j][1][c] for j, c in enumerate(combo)])
            acc += weight * m(pts + h[:, None] * shift[None, :])
        order = sum(idx)
        # |Delta^a m| dist^|a| with Delta^a = acc / h^|a| and h = rel_step dist
        worst["".join(map(str, idx))] = float(np.max(np.abs(acc)) / rel_step ** order)
    return {"worst_constants": worst, "points": int(len(pts)), "rel_step": rel_step}
