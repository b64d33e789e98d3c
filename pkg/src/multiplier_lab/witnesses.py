"""Witness functions: a band-limited nonnegative bump and modulated trains of it.

The spline bump is phi(x) = sinc(w x)^(2r) with w = h / r. Its transform is the
centered B-spline of order 2r with knot spacing w, supported in [-h, h].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .profiles import bspline_center_value, bspline_density

# relative size of the bump envelope beyond which pieces are treated as zero
ENVELOPE_TOL = 1e-13


@dataclass(frozen=True)
class Bump:
    """phi = |check Phi|^2 with Phi the order-r B-spline density supported in [-h/2, h/2]."""

    h: float
    order: int = 4
    kind: str = "spline"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("half-width h must be positive")
        if self.order < 1:
            raise ValueError("order must be >= 1")

    @property
    def w(self) -> float:
        return self.h / self.order

    @property
    def power(self) -> int:
        return 2 * self.order

    def __call__(self, x):
        return np.sinc(self.w * np.asarray(x, dtype=float)) ** self.power

    def profile(self, xi):
        """Phi itself."""
        return bspline_density(self.order, self.w)(xi)

    def spectrum(self, xi):
        return bspline_density(self.power, self.w)(xi)

    def knots(self) -> np.ndarray:
        """Spectral breakpoints: -h, -h + w, ..., h."""
        return self.w * (np.arange(self.power + 1) - self.order)

    def radius(self, tol: float = ENVELOPE_TOL) -> float:
        """|phi(y)| <= tol for |y| >= radius, from |sinc(u)| <= 1 / (pi |u|)."""
        return tol ** (-1.0 / self.power) / (math.pi * self.w)

    def lp_norm(self, p: float) -> float:
        """||phi||_p; exact B-spline value when 2 r p is an integer."""
        m = self.power * p
        if abs(m - round(m)) < 1e-12:
            return (bspline_center_value(int(round(m))) / self.w) ** (1.0 / p)
        from scipy import integrate

        val, _ = integrate.quad(lambda u: abs(np.sinc(u)) ** m, 0.0, math.inf, limit=400)
        return (2.0 * val / self.w) ** (1.0 / p)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "h": self.h, "order": self.order}


@dataclass(frozen=True)
class GaussianBump:
    """phi(x) = exp(-pi (x / sigma)^2); positive, not band-limited."""

    sigma: float = 1.0
    kind: str = "gaussian"

    def __call__(self, x):
        return np.exp(-math.pi * (np.asarray(x, dtype=float) / self.sigma) ** 2)

    def spectrum(self, xi):
        return self.sigma * np.exp(-math.pi * (self.sigma * np.asarray(xi, dtype=float)) ** 2)

    def radius(self, tol: float = ENVELOPE_TOL) -> float:
        return self.sigma * math.sqrt(-math.log(tol) / math.pi)

    def lp_norm(self, p: float) -> float:
        return (self.sigma / math.sqrt(p)) ** (1.0 / p)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}


def make_base_bump(h: float, order: int = 4) -> Bump:
    return Bump(float(h), order)


@dataclass(frozen=True)
class Piece:
    """weight * phi(x - shift) * exp(2 pi i center x)."""

    center: float
    shift: float
    weight: complex = 1.0


@dataclass(frozen=True)
class BumpTrain:
    """sum_m phi(x - A a m) exp(2 pi i mu(m) x) over the declared indices.

    A nonzero ``offset`` translates the whole train: f(x - offset).
    """

    base: Bump
    indices: tuple
    A: float
    a: float
    law: str = "linear"
    slope: float = 0.0
    sign: int = 1
    integer_phases: bool = field(default=False, compare=False)
    offset: float = 0.0

    def __post_init__(self):
        if self.law not in ("linear", "dyadic"):
            raise ValueError(f"unknown modulation law {self.law!r}")
        if self.a == 0:
            raise ValueError("scale a must be nonzero")

    @property
    def N(self) -> int:
        return max(abs(m) for m in self.indices) if self.indices else 0

    @property
    def h(self) -> float:
        return self.base.h

    def shift(self, m) -> float:
        return self.A * self.a * m + self.offset

    def center(self, m) -> float:
        if self.law == "linear":
            return self.A * self.slope * self.a * m
        return self.sign * 2.0 ** m

    @cached_property
    def shifts(self) -> np.ndarray:
        return np.array([self.shift(m) for m in self.indices], dtype=float)

    @cached_property
    def centers(self) -> np.ndarray:
        return np.array([self.center(m) for m in self.indices], dtype=float)

    @cached_property
    def phases(self) -> np.ndarray:
        """Constant factor of each piece: exp(-2 pi i center offset)."""
        return np.exp(-2j * np.pi * self.centers * self.offset)

    def translated(self, tau: float) -> "BumpTrain":
        return BumpTrain(self.base, self.indices, self.A, self.a, self.law, self.slope, self.sign,
                         self.integer_phases, self.offset + tau)

    def pieces(self) -> list[Piece]:
        return [Piece(float(c), float(s), complex(w)) for c, s, w in zip(self.centers, self.shifts, self.phases)]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        y = flat - self.offset
        shifts = self.shifts - self.offset
        if self.integer_phases:
            # exp(2 pi i c x) = exp(2 pi i c (x - round x)) for integer c; keeps phases accurate at large x
            out = self._eval_reduced(y, shifts)
        else:
            out = kernels.sinc_train(y, shifts, self.centers, self.base.w, self.base.power, self.base.radius())
        return out.reshape(x.shape)

    def _eval_reduced(self, x: np.ndarray, shifts: np.ndarray) -> np.ndarray:
        env = np.zeros(x.shape, dtype=complex)
        frac = x - np.round(x)
        R = self.base.radius()
        for c, s in zip(self.centers, shifts):
            near = np.abs(x - s) < R
            if near.any():
                env[near] += self.base(x[near] - s) * np.exp(2j * np.pi * c * frac[near])
        return env

    def spectrum(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, dtype=complex)
        for c, s, ph in zip(self.centers, self.shifts, self.phases):
            u = xi - c
            near = np.abs(u) < self.h
            if near.any():
                out[near] += ph * self.base.spectrum(u[near]) * np.exp(-2j * np.pi * u[near] * s)
        return out

    def spectral_windows(self) -> list[tuple[float, float]]:
        return [(c - self.h, c + self.h) for c in self.centers]

    def lp_norm(self, p: float, method: str = "auto", nodes_per_unit: int = 12) -> float:
        """||f||_p by a separated-support estimate or dense quadrature.

        'separated' sums the single-bump norm over pieces, valid when the bumps barely
        overlap in space; 'quadrature' integrates |f|^p on a grid resolving every beat.
        """
        if method == "auto":
            method = "separated" if self.A * abs(self.a) >= 4.0 / self.base.w else "quadrature"
        if method == "separated":
            return (len(self.indices) * self.base.lp_norm(p) ** p) ** (1.0 / p)
        if method != "quadrature":
            raise ValueError(f"unknown method {method!r}")
        return self._lp_quadrature(p, nodes_per_unit)

    def _lp_quadrature(self, p: float, nodes_per_unit: int) -> float:
        R = self.base.radius()
        spread = float(np.ptp(self.centers)) + 2 * self.h if len(self.centers) else 2 * self.h
        # |f|^p oscillates at up to about p times the spread of the centers
        panel = 16.0 / (nodes_per_unit * (spread * max(p, 1.0) + 1.0))
        nodes, weights = np.polynomial.legendre.leggauss(16)
        starts = np.arange(float(self.shifts.min()) - R, float(self.shifts.max()) + R, panel)
        total = 0.0
        for chunk in np.array_split(starts, max(1, len(starts) // 4096)):
            x = (chunk[:, None] + 0.5 * panel * (nodes[None, :] + 1.0)).reshape(-1)
            wts = np.tile(0.5 * panel * weights, len(chunk))
            total += float(np.sum(wts * np.abs(self(x)) ** p))
        return total ** (1.0 / p)

    def descriptor(self) -> dict:
        law = {"kind": self.law}
        if self.law == "dyadic":
            law["sign"] = self.sign
        extra = {"offset": self.offset} if self.offset else {}
        return {**extra, "N": self.N, "A": self.A, "slope": self.slope, "a": self.a, "h": self.h,
                "indices": [min(self.indices), max(self.indices)] if self.indices else [],
                "law": law, "base": self.base.descriptor()}


def make_bump_train(base: Bump, N: int, A: float, slope: float, a: float = 1.0) -> BumpTrain:
    """f(x) = sum_{|m| <= N} phi(x - A a m) exp(2 pi i A slope a m x)."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if A < 1:
        raise ValueError("A must be >= 1")
    ints = all(float(v).is_integer() for v in (A, slope, a))
    return BumpTrain(base, tuple(range(-N, N + 1)), float(A), float(a), "linear", float(slope), 1, ints)


def make_dyadic_chirps(N: int, M: int | None = None, base: Bump | None = None, A: float | None = None):
    """(f1, f2, f3): phi(x - A m) with phases exp(-2 pi i 2^m x), exp(+...), exp(+...), m = 1..N."""
    if A is not None:
        k = round(math.log2(A)) if A > 0 else -1
        if A <= 0 or 2 ** k != A:
            raise ValueError(f"A = {A} is not a power of two")
        if M is not None and M != k:
            raise ValueError("A and M disagree")
        M = k
    if M is None:
        raise ValueError("give M or A")
    if N < 1:
        raise ValueError("N must be >= 1")
    if M < 3:
        raise ValueError("M must be >= 3")
    base = base or Bump(0.25)
    idx = tuple(range(1, N + 1))
    A = float(2 ** M)
    return tuple(BumpTrain(base, idx, A, 1.0, "dyadic", 0.0, s, True) for s in (-1, 1, 1))
