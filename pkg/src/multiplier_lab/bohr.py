"""Bohr sets {n <= N : max_xi ||xi n|| < rho} and nearest-integer offsets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels

# strict inequality is tested as ||xi n|| < rho - GUARD for float frequencies
GUARD = 1e-12


def circle_distance(x) -> float:
    """Distance to the nearest integer, exact for Fractions."""
    if isinstance(x, Fraction):
        frac = x - math.floor(x)
        return min(frac, 1 - frac)
    frac = x - math.floor(x)
    return min(frac, 1.0 - frac)


@dataclass(frozen=True)
class BohrSet:
    frequencies: tuple
    rho: float
    N: int
    members: tuple

    @property
    def bound(self) -> int:
        """ceil(N rho^|S| - 1), the guaranteed minimum size."""
        return max(0, math.ceil(self.N * float(self.rho) ** len(self.frequencies) - 1))

    @property
    def passes(self) -> bool:
        return len(self.members) >= self.bound

    def __contains__(self, n) -> bool:
        return n in set(self.members)


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def enumerate_bohr(S: Sequence, rho, N: int) -> BohrSet:
    if not (0 < rho <= 0.5):
        raise ValueError(f"rho must lie in (0, 1/2], got {rho}")
    if N < 1:
        raise ValueError("N must be positive")
    S = tuple(S)
    if isinstance(rho, Fraction) and all(_is_exact(v) for v in S):
        members = tuple(
            n for n in range(1, N + 1)
            if all(circle_distance(Fraction(xi) * n) < Fraction(rho) for xi in S)
        )
    else:
        freqs = np.asarray([float(v) for v in S], dtype=float)
        mask = kernels.bohr_mask(freqs, float(rho) - GUARD, int(N))
        members = tuple(int(n) for n in np.nonzero(mask)[0] + 1)
    return BohrSet(S, rho, int(N), members)


def naive_bohr(S: Sequence[float], rho: float, N: int) -> list[int]:
    """Double loop reference used by tests."""
    out = []
    for n in range(1, N + 1):
        worst = 0.0
        for xi in S:
            worst = max(worst, circle_distance(float(xi) * n))
        if worst < rho - GUARD:
            out.append(n)
    return out


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class OffsetTable:
    scales: tuple
    anchor: int
    nearest: tuple
    offsets: tuple


def nearest_integer_offsets(a: Sequence[float], n0: int) -> OffsetTable:
    """N_j = round(n0 / a_j) (half away from zero), delta_j = n0 - a_j N_j."""
    if any(float(v) == 0.0 for v in a):
        raise ValueError("scale vector has a zero entry")
    nearest = []
    offsets = []
    for aj in a:
        if _is_exact(aj):
            ratio = Fraction(n0) / Fraction(aj)
            z = math.floor(abs(ratio) + Fraction(1, 2)) * (1 if ratio >= 0 else -1)
            nearest.append(int(z))
            offsets.append(Fraction(n0) - Fraction(aj) * z)
        else:
            aj = float(aj)
            z = round_half_away(n0 / aj)
            nearest.append(z)
            offsets.append(n0 - aj * z)
    return OffsetTable(tuple(a), int(n0), tuple(nearest), tuple(offsets))
