"""Numpy implementations of the hot loops (fallback for the compiled module)."""
from __future__ import annotations

import numpy as np


def bohr_mask(freqs: np.ndarray, rho_eff: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    mask = np.ones(N, dtype=bool)
    for xi in np.asarray(freqs, dtype=float):
        v = xi * n
        frac = v - np.floor(v)
        mask &= np.minimum(frac, 1.0 - frac) < rho_eff
    return mask


def sinc_train(x: np.ndarray, shifts: np.ndarray, centers: np.ndarray, w: float, power: int,
               radius: float) -> np.ndarray:
    """sum_m sinc(w (x - s_m))^power exp(2 pi i c_m x), skipping |x - s_m| > radius."""
    x = np.ascontiguousarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    order = np.argsort(shifts)
    s = np.asarray(shifts, dtype=float)[order]
    c = np.asarray(centers, dtype=float)[order]
    lo = np.searchsorted(s, x - radius, side="left")
    hi = np.searchsorted(s, x + radius, side="right")
    width = int((hi - lo).max()) if x.size else 0
    for k in range(width):
        idx = lo + k
        live = idx < hi
        if not live.any():
            continue
        j = np.where(live, idx, 0)
        u = w * (x - s[j])
        env = np.sinc(u) ** power
        val = env * np.exp(2j * np.pi * c[j] * x)
        out += np.where(live, val, 0.0)
    return out
