"""Smooth transition profiles and one-dimensional Fourier multipliers built from them.

Every 1-D multiplier here knows a cheap enclosure of its range on an interval, which
the engine uses to decide whether a multiplier is constant on a spectral box.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass

import numpy as np

# enclosure width under which a multiplier counts as constant on an interval
FLAT_TOL = 1e-15


def _bump_exp(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity ramp: 0 for u <= 0, 1 for u >= 1, monotone in between.

    Its derivative is a smooth bump supported in [0, 1], so the ramp is an integrated bump.
    """
    u = np.asarray(u, dtype=float)
    a = _bump_exp(u)
    b = _bump_exp(1.0 - u)
    return a / (a + b)


def smooth_step_scalar(u: float) -> float:
    return float(smooth_step(np.array([u]))[0])


class Multiplier1D:
    """Base class: a bounded function on the frequency line."""

    def __call__(self, xi):
        raise NotImplementedError

    def enclosure(self, lo: float, hi: float) -> tuple[float, float]:
        """Bounds (min, max) of the multiplier on [lo, hi]; may be loose."""
        v = self(np.linspace(lo, hi, 65))
        return float(np.min(v)), float(np.max(v))

    def breakpoints(self, lo: float, hi: float) -> list[float]:
        """Points in (lo, hi) where the multiplier is not smooth."""
        return []

    def constant_on(self, lo: float, hi: float):
        mn, mx = self.enclosure(lo, hi)
        if mx - mn <= FLAT_TOL and not self.breakpoints(lo, hi):
            return 0.5 * (mn + mx)
        return None

    def descriptor(self) -> dict:
        return {"kind": type(self).__name__}


class Identity(Multiplier1D):
    def __call__(self, xi):
        return np.ones_like(np.asarray(xi, dtype=float))

    def enclosure(self, lo, hi):
        return 1.0, 1.0

    def descriptor(self):
        return {"kind": "identity"}


@dataclass(frozen=True)
class Ramp(Multiplier1D):
    """smooth_step((xi - start) / (end - start)); decreasing when end < start."""

    start: float
    end: float

    def __call__(self, xi):
        return smooth_step((np.asarray(xi, dtype=float) - self.start) / (self.end - self.start))

    def enclosure(self, lo, hi):
        a = smooth_step_scalar((lo - self.start) / (self.end - self.start))
        b = smooth_step_scalar((hi - self.start) / (self.end - self.start))
        return min(a, b), max(a, b)

    def descriptor(self):
        return {"kind": "ramp", "start": self.start, "end": self.end}


@dataclass(frozen=True)
class EvenPlateau(Multiplier1D):
    """1 on [-inner, inner], 0 outside [-outer, outer], smooth and even."""

    inner: float
    outer: float

    def __call__(self, xi):
        u = np.abs(np.asarray(xi, dtype=float))
        return smooth_step((self.outer - u) / (self.outer - self.inner))

    def enclosure(self, lo, hi):
        if lo <= 0.0 <= hi:
            umin, umax = 0.0, max(-lo, hi)
        else:
            umin, umax = sorted((abs(lo), abs(hi)))
        f = lambda u: smooth_step_scalar((self.outer - u) / (self.outer - self.inner))
        return f(umax), f(umin)

    def descriptor(self):
        return {"kind": "even_plateau", "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class Window(Multiplier1D):
    """Up-ramp on [a0, a1] times down-ramp on [b1, b0]: 1 on [a1, b1], 0 outside [a0, b0]."""

    a0: float
    a1: float
    b1: float
    b0: float

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return smooth_step((xi - self.a0) / (self.a1 - self.a0)) * smooth_step((self.b0 - xi) / (self.b0 - self.b1))

    def enclosure(self, lo, hi):
        up = Ramp(self.a0, self.a1).enclosure(lo, hi)
        down = Ramp(self.b0, self.b1).enclosure(lo, hi)
        return up[0] * down[0], up[1] * down[1]

    def descriptor(self):
        return {"kind": "window", "support": [self.a0, self.b0], "flat": [self.a1, self.b1]}


@dataclass(frozen=True)
class Cutoff(Multiplier1D):
    """Indicator of {xi < M} (strict)."""

    M: float

    def __call__(self, xi):
        return (np.asarray(xi, dtype=float) < self.M).astype(float)

    def enclosure(self, lo, hi):
        if hi < self.M:
            return 1.0, 1.0
        if lo >= self.M:
            return 0.0, 0.0
        return 0.0, 1.0

    def breakpoints(self, lo, hi):
        return [self.M] if lo < self.M < hi else []

    def descriptor(self):
        return {"kind": "cutoff", "M": self.M}


@dataclass(frozen=True)
class Difference(Multiplier1D):
    """g - h for two multipliers (used for telescoping families)."""

    g: Multiplier1D
    h: Multiplier1D

    def __call__(self, xi):
        return self.g(xi) - self.h(xi)

    def enclosure(self, lo, hi):
        a = self.g.enclosure(lo, hi)
        b = self.h.enclosure(lo, hi)
        return a[0] - b[1], a[1] - b[0]

    def breakpoints(self, lo, hi):
        return sorted(set(self.g.breakpoints(lo, hi)) | set(self.h.breakpoints(lo, hi)))

    def descriptor(self):
        return {"kind": "difference", "g": self.g.descriptor(), "h": self.h.descriptor()}


@dataclass(frozen=True)
class Zero(Multiplier1D):
    def __call__(self, xi):
        return np.zeros_like(np.asarray(xi, dtype=float))

    def enclosure(self, lo, hi):
        return 0.0, 0.0

    def descriptor(self):
        return {"kind": "zero"}


def low_pass(k: int) -> EvenPlateau:
    """1 on [-2^(k-1), 2^(k-1)], supported in [-2^k, 2^k]."""
    return EvenPlateau(2.0 ** (k - 1), 2.0 ** k)


def band_pass(k: int) -> Window:
    """1 on [2^(k-1/4), 2^(k+1/4)], supported in [2^(k-1/2), 2^(k+1/2)]."""
    return Window(2.0 ** (k - 0.5), 2.0 ** (k - 0.25), 2.0 ** (k + 0.25), 2.0 ** (k + 0.5))


@dataclass(frozen=True)
class EnvelopePair:
    """Phi with 1_[-1/2,1/2] <= Phi <= 1_[-1,1] and Psi with 1_[2,inf) <= Psi <= 1_[1,inf)."""

    def Phi(self, u):
        return EvenPlateau(0.5, 1.0)(u)

    def Psi(self, u):
        return Ramp(1.0, 2.0)(u)

    def descriptor(self):
        return {"Phi": "even_plateau(1/2, 1)", "Psi": "ramp(1, 2)"}


@lru_cache(maxsize=64)
def _bspline_pieces(order: int, spacing: float):
    from scipy.interpolate import BSpline, PPoly

    knots = spacing * (np.arange(order + 1) - order / 2.0)
    pp = PPoly.from_spline(BSpline.basis_element(knots, extrapolate=False))
    # keep only the polynomial pieces between the first and last knot
    lo = int(np.searchsorted(pp.x, knots[0], side="right")) - 1
    hi = int(np.searchsorted(pp.x, knots[-1], side="left"))
    return PPoly(pp.c[:, lo:hi] / spacing, pp.x[lo:hi + 1], extrapolate=False)


def bspline_density(order: int, spacing: float):
    """Density of the sum of ``order`` uniform variables on [-spacing/2, spacing/2]."""
    pp = _bspline_pieces(order, float(spacing))

    def density(xi):
        return np.nan_to_num(pp(np.asarray(xi, dtype=float)), nan=0.0)

    return density


def bspline_center_value(order: int) -> float:
    """Centered cardinal B-spline of the given order at 0 (unit knot spacing)."""
    total = 0.0
    for k in range(order + 1):
        u = order / 2.0 - k
        if u > 0:
            total += (-1) ** k * math.comb(order, k) * u ** (order - 1)
    return total / math.factorial(order - 1)
