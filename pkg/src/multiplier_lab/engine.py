"""Evaluation of multilinear multipliers on bump trains.

Two independent routes:

* structured: the symbol's terms c * S(direction . xi) * prod g_j(xi_j) are reduced piece by
  piece. On a spectral box where S is constant the box contributes S times the pointwise
  product; on a box cut by the singular line the contribution is a one-dimensional kernel
  integral (principal value for the sign profile).
* quadrature: tensor Gauss-Legendre over each product of spectral piece boxes, with panels
  split at the bump knots and at the symbol's declared hyperplanes.

apply_kernel_blocks is a third route that integrates the space-side kernel representation
of the full trains over the annular blocks [A(k - 1/2), A(k + 1/2)].
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .profiles import Cutoff, Multiplier1D
from .symbols import FrequencySymbol, LineProfile, One, Sign, Step, Term, make_carleson_region
from .witnesses import Bump, BumpTrain

TWO_PI = 2.0 * math.pi
# nodes per panel for the space-side kernel integrals
KERNEL_NODES = 20
# sample points per work item
CHUNK = 16
_THREADS = max(1, int(os.environ.get("MULTIPLIER_LAB_THREADS", os.cpu_count() or 1)))


class SymbolBoundError(ValueError):
    """The symbol exceeded its declared sup-norm on the spectral support."""


class QuadratureError(RuntimeError):
    """A block quadrature did not settle within the node budget."""


def set_threads(n: int) -> None:
    global _THREADS
    _THREADS = max(1, int(n))


def get_threads() -> int:
    return _THREADS


def _map_chunks(func: Callable[[np.ndarray], np.ndarray], xs: np.ndarray, threads: int | None = None):
    """Apply func to fixed-size chunks of xs; results reassembled in input order.

    Chunk boundaries do not depend on the thread count, so output is bit-identical
    for any pool size.
    """
    threads = threads or _THREADS
    chunks = [xs[i:i + CHUNK] for i in range(0, len(xs), CHUNK)] or [xs]
    if threads <= 1 or len(chunks) == 1:
        parts = [func(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(func, chunks))
    return np.concatenate(parts, axis=-1)


@lru_cache(maxsize=None)
def gauss(q: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(q)


def composite(a: float, b: float, panel: float, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [a, b] with panels no wider than ``panel``."""
    if b <= a:
        return np.empty(0), np.empty(0)
    npan = max(1, int(math.ceil((b - a) / panel)))
    edges = np.linspace(a, b, npan + 1)
    g, w = gauss(q)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


def cis(freq, x):
    """exp(2 pi i freq x); integer frequencies use the fractional part of x for accuracy."""
    freq = np.asarray(freq, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.all(np.mod(freq, 1.0) == 0.0):
        x = x - np.round(x)
    return np.exp(1j * TWO_PI * freq * x)


# ---------------------------------------------------------------- structured route

@dataclass
class _Factor:
    """Pieces of one input after multiplying its spectrum by a 1-D filter."""

    base: Bump
    centers: np.ndarray
    shifts: np.ndarray
    weights: np.ndarray
    filters: list
    origin: np.ndarray  # index of each kept piece in the original train
    radius: np.ndarray
    phases: np.ndarray  # the train's own constant factor per piece

    @property
    def h(self) -> float:
        return self.base.h

    def __len__(self):
        return len(self.centers)


def _prepare_factor(train: BumpTrain, g: Multiplier1D | None) -> _Factor:
    base = train.base
    R = base.radius()
    cs, ss, ws, fs, org, rad = [], [], [], [], [], []
    for i, (c, s, ph) in enumerate(zip(train.centers, train.shifts, train.phases)):
        weight, filt, r = ph, None, R
        if g is not None:
            const = g.constant_on(c - base.h, c + base.h)
            if const is None:
                filt, r = g, 2.0 * R
            elif const == 0.0:
                continue
            else:
                weight = ph * const
        cs.append(c)
        ss.append(s)
        ws.append(weight)
        fs.append(filt)
        org.append(i)
        rad.append(r)
    return _Factor(base, np.array(cs, dtype=float), np.array(ss, dtype=float), np.array(ws, dtype=complex),
                   fs, np.array(org, dtype=int), np.array(rad, dtype=float), train.phases[org])


def filtered_envelope(base: Bump, center: float, shift: float, filt: Multiplier1D, y: np.ndarray,
                      refine: int = 1) -> np.ndarray:
    """G(y) with int g(xi) phi^(xi - c) e^{-2 pi i (xi - c) s} e^{2 pi i xi y} dxi = e^{2 pi i c y} G(y)."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return np.zeros(0, dtype=complex)
    edges = set(base.knots().tolist())
    for bp in filt.breakpoints(center - base.h, center + base.h):
        edges.add(bp - center)
    edges = np.array(sorted(edges))
    reach = float(np.max(np.abs(y - shift)))
    q = refine * (8 + int(math.ceil(4.5 * base.w * reach)))
    g, w = gauss(q)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * g[None, :]).reshape(-1)
    wu = (half[:, None] * w[None, :]).reshape(-1)
    amp = wu * filt(center + u) * base.spectrum(u)
    out = np.empty(y.shape, dtype=complex)
    flat_y = y.reshape(-1)
    flat_out = out.reshape(-1)
    step = max(1, 2_000_000 // len(u))
    for k in range(0, len(flat_y), step):
        dy = flat_y[k:k + step] - shift
        flat_out[k:k + step] = np.exp(1j * TWO_PI * np.outer(dy, u)) @ amp
    return out


def _envelope(f: _Factor, p: int, y: np.ndarray, refine: int = 1) -> np.ndarray:
    """G_p(y) so that piece p equals weight * exp(2 pi i c y) * G_p(y)."""
    filt = f.filters[p]
    if filt is None:
        return f.weights[p] * f.base(y - f.shifts[p])
    return f.weights[p] * filtered_envelope(f.base, f.centers[p], f.shifts[p], filt, y, refine)


def _piece_values(f: _Factor, xs: np.ndarray, refine: int = 1) -> np.ndarray:
    """F[p, x]: each kept piece evaluated at every x."""
    out = np.zeros((len(f), len(xs)), dtype=complex)
    for p in range(len(f)):
        near = np.abs(xs - f.shifts[p]) < f.radius[p]
        if near.any():
            out[p, near] = _envelope(f, p, xs[near], refine) * cis(f.centers[p], xs[near])
    return out


def _pv_integral(P: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, panel: float, q: int,
                 symmetric: bool) -> complex:
    """p.v. int_lo^hi P(t) dt / t; P is negligible outside [lo, hi]."""
    if symmetric:
        T = max(abs(lo), abs(hi))
        t, w = composite(0.0, T, panel, q)
        return complex(np.sum(w * (P(t) - P(-t)) / t))
    t, w = composite(lo, hi, panel, q)
    return complex(np.sum(w * P(t) / t))


def _cut_integral(profile: LineProfile, factors: Sequence[_Factor], combo: Sequence[int], alpha: np.ndarray,
                  x: float, lo: float, hi: float, omega: float, spread: float, refine: int) -> complex:
    """Kernel part of one cut box at one x: int prod_j G_j(x - a_j t) e^{-2 pi i omega t} kappa(t) dt."""
    live = [j for j in range(len(factors)) if alpha[j] != 0.0]

    def P(t):
        val = np.exp(-1j * TWO_PI * omega * t)
        for j in live:
            val = val * _envelope(factors[j], combo[j], x - alpha[j] * t, refine)
        return val

    panel = 1.0 / max(1.0, 0.5 * (abs(omega) + spread))
    q = KERNEL_NODES * refine
    total = 0.0 + 0.0j
    if profile.pv_weight != 0.0:
        symmetric = lo < 2.0 * panel and hi > -2.0 * panel
        total += profile.pv_weight * _pv_integral(P, lo, hi, panel, q, symmetric)
    smooth = profile.smooth_kernel(np.array([0.0]))
    if smooth is not None:
        t, w = composite(lo, hi, panel, q)
        total += complex(np.sum(w * P(t) * profile.smooth_kernel(t)))
    return total


def _term_contributions(term: Term, trains: Sequence[BumpTrain], xs: np.ndarray, refine: int = 1,
                        split_last: bool = False) -> np.ndarray:
    """Value of one term at xs; with split_last, a (pieces of the last train) x len(xs) breakdown."""
    n = len(trains)
    alpha = np.asarray(term.direction, dtype=float)
    profile = term.profile
    factors = []
    bp_pieces = []
    for j, (tr, g) in enumerate(zip(trains, term.factors)):
        f = _prepare_factor(tr, g)
        factors.append(f)
        bp_pieces.append([p for p in range(len(f))
                          if f.filters[p] is not None and f.filters[p].breakpoints(f.centers[p] - f.h, f.centers[p] + f.h)])
    n_last = len(trains[-1].centers)
    out = np.zeros((n_last, len(xs)), dtype=complex)
    if any(len(f) == 0 for f in factors):
        return out if split_last else out.sum(axis=0)

    # pieces whose filter jumps inside the box go through the frequency route
    for j, bad in enumerate(bp_pieces):
        for p in bad:
            factors[j].filters[p] = _JUMP
    values = [_piece_values_safe(f, xs, refine) for f in factors]

    shape = tuple(len(f) for f in factors)
    omega = np.zeros(shape)
    for j, f in enumerate(factors):
        sl = [None] * n
        sl[j] = slice(None)
        omega = omega + alpha[j] * f.centers[tuple(sl)]
    spread = float(sum(abs(alpha[j]) * factors[j].h for j in range(n)))
    sval, const = profile.classify(omega - spread, omega + spread)
    jump_mask = np.zeros(shape, dtype=bool)
    for j, bad in enumerate(bp_pieces):
        for p in bad:
            idx = [slice(None)] * n
            idx[j] = p
            jump_mask[tuple(idx)] = True
    W = np.where(const & ~jump_mask, sval, 0.0).astype(complex)

    letters = "abcdefghijklmnopq"[:n]
    spec = letters + "," + ",".join(l + "z" for l in letters) + "->" + letters[-1] + "z"
    last = np.einsum(spec, W, *values, optimize=True)
    np.add.at(out, factors[-1].origin, last)

    cut = np.argwhere(~const & ~jump_mask)
    if len(cut):
        _add_cut_boxes(out, cut, term, factors, values, alpha, omega, spread, xs, refine)
    jumps = np.argwhere(jump_mask)
    if len(jumps):
        _add_jump_boxes(out, jumps, term, trains, factors, xs, refine)
    out *= term.coef
    return out if split_last else out.sum(axis=0)


class _JumpMarker(Multiplier1D):
    def __call__(self, xi):
        raise RuntimeError("jump pieces are evaluated on the frequency side")


_JUMP = _JumpMarker()


def _piece_values_safe(f: _Factor, xs: np.ndarray, refine: int) -> np.ndarray:
    vals = np.zeros((len(f), len(xs)), dtype=complex)
    for p in range(len(f)):
        if f.filters[p] is _JUMP:
            continue
        near = np.abs(xs - f.shifts[p]) < f.radius[p]
        if near.any():
            vals[p, near] = _envelope(f, p, xs[near], refine) * cis(f.centers[p], xs[near])
    return vals


def _add_cut_boxes(out, cut, term, factors, values, alpha, omega, spread, xs, refine):
    profile = term.profile
    n = len(factors)
    live = [j for j in range(n) if alpha[j] != 0.0]
    dead = [j for j in range(n) if alpha[j] == 0.0]
    # t-window where every moving factor is non-negligible
    lo = np.full((len(cut), len(xs)), -np.inf)
    hi = np.full((len(cut), len(xs)), np.inf)
    for j in live:
        f = factors[j]
        tc = (xs[None, :] - f.shifts[cut[:, j]][:, None]) / alpha[j]
        r = (f.radius[cut[:, j]] / abs(alpha[j]))[:, None]
        lo = np.maximum(lo, tc - r)
        hi = np.minimum(hi, tc + r)
    delta = np.ones((len(cut), len(xs)), dtype=complex)
    if profile.delta_weight != 0.0:
        for j in range(n):
            delta = delta * values[j][cut[:, j], :]
    const = np.ones((len(cut), len(xs)), dtype=complex)
    for j in dead:
        const = const * values[j][cut[:, j], :]
    origin = factors[-1].origin
    for c_idx, combo in enumerate(cut):
        combo = tuple(int(v) for v in combo)
        w = float(omega[combo])
        phase_freq = float(sum(factors[j].centers[combo[j]] for j in live))
        for x_idx in range(len(xs)):
            acc = 0.0 + 0.0j
            if profile.delta_weight != 0.0:
                acc += profile.delta_weight * delta[c_idx, x_idx]
            if lo[c_idx, x_idx] < hi[c_idx, x_idx] and const[c_idx, x_idx] != 0.0:
                x = float(xs[x_idx])
                val = _cut_integral(profile, factors, combo, alpha, x, lo[c_idx, x_idx], hi[c_idx, x_idx],
                                    w, spread, refine)
                acc += val * const[c_idx, x_idx] * complex(cis(phase_freq, x))
            out[origin[combo[-1]], x_idx] += acc


def _term_symbol(term: Term, n: int) -> Callable:
    alpha = np.asarray(term.direction, dtype=float)

    def ev(xi):
        val = term.profile(xi @ alpha).astype(complex)
        for j, g in enumerate(term.factors):
            if g is not None:
                val = val * g(xi[..., j])
        return val
    return ev


def _term_planes(term: Term, n: int) -> list:
    planes = []
    if isinstance(term.profile, (Sign, Step)):
        planes.append((tuple(term.direction), 0.0))
    for j, g in enumerate(term.factors):
        if isinstance(g, Cutoff):
            planes.append((tuple(float(i == j) for i in range(n)), g.M))
    return planes


def _add_jump_boxes(out, jumps, term, trains, factors, xs, refine):
    n = len(trains)
    ev = _term_symbol(term, n)
    planes = _term_planes(term, n)
    for combo in jumps:
        centers = [factors[j].centers[combo[j]] for j in range(n)]
        shifts = [factors[j].shifts[combo[j]] for j in range(n)]
        bases = [factors[j].base for j in range(n)]
        val = box_integral(ev, planes, centers, shifts, bases, xs, refine=4 * refine, piecewise_constant=False)
        phase = np.prod([factors[j].phases[combo[j]] for j in range(n)])
        out[factors[-1].origin[combo[-1]]] += phase * val


# ---------------------------------------------------------------- frequency route

def _plane_breakpoints(planes, j: int, outer: np.ndarray, edges: Sequence[np.ndarray]) -> np.ndarray:
    """Breakpoints in coordinate j where a plane meets a vertex of the remaining cell grid.

    The integrand is smooth on each cell of the grid spanned by the knots, so the inner
    integral over later coordinates has a kink wherever the plane crosses a grid vertex.
    """
    cols = []
    n = len(edges)
    for normal, offset in planes:
        a = np.asarray(normal, dtype=float)
        if a[j] == 0.0:
            continue
        partial = offset - (outer @ a[:j] if j else np.zeros(len(outer)))
        later = [i for i in range(j + 1, n) if a[i] != 0.0]
        for corner in itertools.product(*[edges[i] for i in later]):
            rest = sum(a[i] * v for i, v in zip(later, corner))
            cols.append((partial - rest) / a[j])
    if not cols:
        return np.zeros((len(outer), 0))
    return np.stack(cols, axis=1)


def _box_points(j, outer, outer_w, lo, hi, knots, planes, qs, weight=None):
    P = len(outer)
    bps = _plane_breakpoints(planes, j, outer, knots)
    inside = (bps > lo[j]) & (bps < hi[j])
    bps = np.clip(bps[:, inside.any(axis=0)], lo[j], hi[j])
    if bps.shape[1]:
        bps = np.unique(bps, axis=1)
    edges = np.sort(np.concatenate([np.broadcast_to(knots[j], (P, len(knots[j]))), bps], axis=1), axis=1)
    a = edges[:, :-1]
    b = edges[:, 1:]
    widths = b - a
    cell = float(np.max(np.diff(knots[j])))
    # qs[j] nodes resolve one knot cell; each panel column gets nodes in proportion to its widest row
    node_cols, wt_cols = [], []
    for col in np.flatnonzero(np.any(widths > 0, axis=0)):
        q = max(4, 2 + int(math.ceil(qs[j] * float(np.max(widths[:, col])) / cell)))
        g, w = gauss(q)
        half = 0.5 * widths[:, col]
        node_cols.append(0.5 * (a[:, col] + b[:, col])[:, None] + half[:, None] * g[None, :])
        wt_cols.append(half[:, None] * w[None, :])
    nodes = np.concatenate(node_cols, axis=1)
    wts = np.concatenate(wt_cols, axis=1)
    if weight is not None:
        wts = wts * weight(nodes)
    per = nodes.shape[1]
    new_outer = np.concatenate([np.repeat(outer, per, axis=0), nodes.reshape(-1, 1)], axis=1)
    new_w = np.repeat(outer_w, per) * wts.reshape(-1)
    return new_outer, new_w


def box_integral(ev: Callable, planes: Sequence, centers: Sequence[float], shifts: Sequence[float],
                 bases: Sequence[Bump], xs: np.ndarray, refine: int = 2, piecewise_constant: bool = False,
                 sup_norm: float | None = None) -> np.ndarray:
    """int_box m(xi) prod_j phi^_j(xi_j - c_j) e^{-2 pi i (xi_j - c_j) s_j} e^{2 pi i x xi_j} dxi for every x."""
    n = len(centers)
    xs = np.asarray(xs, dtype=float)
    c = np.asarray(centers, dtype=float)
    s = np.asarray(shifts, dtype=float)
    h = np.array([b.h for b in bases])
    lo, hi = c - h, c + h
    reach = np.max(np.abs(xs[None, :] - s[:, None]), axis=1)
    qs = [refine * (2 + int(math.ceil(b.w * r))) for b, r in zip(bases, reach)]
    knots = [c[j] + bases[j].knots() for j in range(n)]
    for normal, offset in planes:
        a = np.asarray(normal, dtype=float)
        nz = np.flatnonzero(a)
        if len(nz) == 1:
            i = int(nz[0])
            v = offset / a[i]
            if lo[i] < v < hi[i]:
                knots[i] = np.unique(np.append(knots[i], v))
    phase0 = np.ones(len(xs), dtype=complex)
    for j in range(n):
        phase0 = phase0 * cis(c[j], xs)

    cutting = []
    for normal, offset in planes:
        a = np.asarray(normal, dtype=float)
        if abs(float(a @ c) - offset) < float(np.abs(a) @ h):
            cutting.append((normal, offset))
    cut = bool(cutting)
    if piecewise_constant and not cut:
        # constant symbol on the box: product of one-dimensional transforms
        val = complex(ev(c[None, :])[0])
        if sup_norm is not None and abs(val) > sup_norm * (1 + 1e-9):
            raise SymbolBoundError(f"|m| = {abs(val)} exceeds declared {sup_norm}")
        total = np.full(len(xs), val, dtype=complex)
        for j in range(n):
            g, w = gauss(qs[j])
            kn = knots[j]
            half = 0.5 * np.diff(kn)
            u = ((0.5 * (kn[:-1] + kn[1:]))[:, None] + half[:, None] * g[None, :]).reshape(-1)
            wu = (half[:, None] * w[None, :]).reshape(-1)
            amp = wu * bases[j].spectrum(u - c[j])
            total = total * (np.exp(1j * TWO_PI * np.outer(xs - s[j], u - c[j])) @ amp)
        return total * phase0

    active = cutting
    spec = [(lambda v, j=j: bases[j].spectrum(v - c[j])) for j in range(n)]
    g1, w1 = _box_points(0, np.zeros((1, 0)), np.ones(1), lo, hi, knots, active, qs, spec[0])
    total = np.zeros(len(xs), dtype=complex)
    chunk = max(1, 100_000 // max(1, int(np.prod([3 * len(knots[j]) * qs[j] for j in range(1, n)]))))
    for k in range(0, len(g1), chunk):
        pts, wts = g1[k:k + chunk], w1[k:k + chunk]
        for j in range(1, n):
            pts, wts = _box_points(j, pts, wts, lo, hi, knots, active, qs, spec[j])
        m = ev(pts)
        if sup_norm is not None and np.max(np.abs(m)) > sup_norm * (1 + 1e-9):
            raise SymbolBoundError(f"|m| = {np.max(np.abs(m))} exceeds declared {sup_norm}")
        u = pts - c[None, :]
        amp = wts * m
        keep = amp != 0
        if not keep.any():
            continue
        u, amp = u[keep], amp[keep]
        phase = np.exp(1j * TWO_PI * (u @ (xs[None, :] - s[:, None])))
        total += amp @ phase
    return total * phase0


def _quadrature_apply(m: FrequencySymbol, trains: Sequence[BumpTrain], xs: np.ndarray, refine: int) -> np.ndarray:
    n = len(trains)
    total = np.zeros(len(xs), dtype=complex)
    for combo in itertools.product(*[range(len(t.centers)) for t in trains]):
        centers = [trains[j].centers[combo[j]] for j in range(n)]
        shifts = [trains[j].shifts[combo[j]] for j in range(n)]
        if m.support is not None and any(
                c + tr.h <= lo or c - tr.h >= hi for c, tr, (lo, hi) in zip(centers, trains, m.support)):
            continue
        phase = np.prod([trains[j].phases[combo[j]] for j in range(n)])
        total += phase * box_integral(m, m.hyperplanes, centers, shifts, [t.base for t in trains], xs, refine,
                                      m.piecewise_constant, m.sup_norm)
    return total


# ---------------------------------------------------------------- public operations

def _check_inputs(m: FrequencySymbol, trains: Sequence[BumpTrain]) -> None:
    if len(trains) != m.arity:
        raise ValueError(f"symbol has arity {m.arity} but {len(trains)} functions were given")
    for tr in trains:
        if not isinstance(tr.base, Bump):
            raise ValueError("inputs need compactly supported spectra")


def _sup_check(m: FrequencySymbol, trains: Sequence[BumpTrain], rng_seed: int = 0, count: int = 4096) -> None:
    rng = np.random.default_rng(rng_seed)
    pts = np.stack([rng.choice(tr.centers, count) + rng.uniform(-tr.h, tr.h, count) for tr in trains], axis=1)
    vals = np.abs(m(pts))
    if np.max(vals) > m.sup_norm * (1 + 1e-9):
        raise SymbolBoundError(f"|m| reaches {np.max(vals)} above the declared bound {m.sup_norm}")


def apply_multiplier(m: FrequencySymbol, trains: Sequence[BumpTrain], xs, method: str = "auto",
                     refine: int = 1, threads: int | None = None) -> np.ndarray:
    """T_m(f_1, ..., f_n)(x) for every x in xs."""
    _check_inputs(m, trains)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if method == "auto":
        method = "structured" if m.terms is not None else "quadrature"
    _sup_check(m, trains)
    if method == "structured":
        if m.terms is None:
            raise ValueError("symbol has no term decomposition")

        def run(chunk):
            acc = np.zeros(len(chunk), dtype=complex)
            for term in m.terms:
                acc += _term_contributions(term, trains, chunk, refine)
            return acc
        return _map_chunks(run, xs, threads)
    if method == "quadrature":
        return _map_chunks(lambda chunk: _quadrature_apply(m, trains, chunk, 4 * refine), xs, threads)
    raise ValueError(f"unknown method {method!r}")


def apply_ncarleson(alpha: Sequence[float], trains: Sequence[BumpTrain], xs, M_grid: Iterable[float],
                    part: str = "full", refine: int = 1, threads: int | None = None,
                    return_argmax: bool = False):
    """max over M in M_grid of |T_{1{xi.alpha > 0, xi_n < M}}(f)(x)|.

    part='singular' keeps only the principal-value half of the half-space indicator,
    i.e. the symbol sgn(alpha . xi) / 2 with the same frequency cutoff.
    """
    M_grid = np.asarray(sorted(float(v) for v in M_grid))
    if len(M_grid) == 0:
        raise ValueError("empty M grid")
    if part not in ("full", "singular"):
        raise ValueError("part must be 'full' or 'singular'")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    a = tuple(float(v) for v in alpha)
    n = len(a)
    if part == "full":
        term = Term(1.0, Step(), a, (None,) * n)
    else:
        term = Term(0.5, Sign(), a, (None,) * n)
    last = trains[-1]
    h = last.h
    order = np.argsort(last.centers)
    sorted_c = last.centers[order]

    def run(chunk):
        contrib = _term_contributions(term, trains, chunk, refine, split_last=True)
        csum = np.cumsum(contrib[order], axis=0)
        best = np.zeros(len(chunk))
        arg = np.zeros(len(chunk))
        for M in M_grid:
            below = int(np.searchsorted(sorted_c + h, M, side="right"))
            val = csum[below - 1].copy() if below else np.zeros(len(chunk), dtype=complex)
            straddle = [i for i in range(below, len(sorted_c)) if sorted_c[i] - h < M]
            for i in straddle:
                val += _single_piece_with_cutoff(term, trains, int(order[i]), M, chunk, refine)
            mag = np.abs(val)
            better = mag > best
            best = np.where(better, mag, best)
            arg = np.where(better, M, arg)
        return np.stack([best, arg])

    res = _map_chunks(run, xs, threads)
    return (res[0], res[1]) if return_argmax else res[0]


def _single_piece_with_cutoff(term: Term, trains, piece: int, M: float, xs, refine):
    """Contribution of one straddling piece of the last input under the cutoff xi_n < M."""
    last = trains[-1]
    single = BumpTrain(last.base, (last.indices[piece],), last.A, last.a, last.law, last.slope, last.sign,
                       last.integer_phases, last.offset)
    factors = tuple(term.factors[:-1]) + (Cutoff(M),)
    cut_term = Term(term.coef, term.profile, term.direction, factors)
    return _term_contributions(cut_term, list(trains[:-1]) + [single], xs, refine)


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class KernelSpec:
    """Odd kernel K(s) = kappa(s) / s with kappa even.

    c1: lower bound s K(s) >= c1 for s >= 1; c2: liminf of Im of the inverse transform.
    """

    kind: str = "hilbert"
    kappa: Callable | None = field(default=None, compare=False)
    c1: float = 1.0
    c2: float = math.pi
    d: int = 1

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.even_part(s) / s

    def even_part(self, s):
        s = np.asarray(s, dtype=float)
        if self.kappa is None:
            return np.full(s.shape, self.c1)
        return self.kappa(s)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "c1": self.c1, "c2": self.c2, "d": self.d}


def hilbert_kernel() -> KernelSpec:
    return KernelSpec("hilbert", None, 1.0, math.pi)


def riesz_line_kernel(d: int) -> KernelSpec:
    """K_d integrated over the d - 1 transverse variables: (c_d / pi) / s."""
    from .symbols import riesz_constant

    cd = riesz_constant(d) / math.pi
    return KernelSpec("riesz", None, cd, math.pi * cd, d)


def custom_odd_kernel(kappa: Callable, c1: float | None = None, c2: float | None = None) -> KernelSpec:
    if c1 is None:
        grid = np.geomspace(1.0, 1e4, 4001)
        c1 = float(max(0.0, np.min(kappa(grid))))
    if c2 is None:
        c2 = inverse_transform_im(kappa, 200.0)
    return KernelSpec("custom", kappa, c1, c2)


def inverse_transform_im(kappa: Callable, s: float) -> float:
    """Im int K(xi) e^{2 pi i xi s} dxi = 2 int_0^inf kappa(xi) sin(2 pi xi s) / xi dxi."""
    from scipy import integrate

    head, _ = integrate.quad(lambda u: float(kappa(np.array([u]))[0]) * math.sin(TWO_PI * u * s) / u,
                             0.0, 1.0, limit=400, epsabs=1e-13)
    tail, _ = integrate.quad(lambda u: float(kappa(np.array([u]))[0]) / u, 1.0, math.inf, weight="sin",
                             wvar=TWO_PI * s)
    return 2.0 * (head + tail)


@dataclass(frozen=True)
class BlockIndex:
    k: int
    l: int = 0

    def window(self, A: float):
        return ((A * (self.k - 0.5), A * (self.k + 0.5)), (A * (self.l - 0.5), A * (self.l + 0.5)))


def _train_band(tr: BumpTrain) -> float:
    return float(np.max(np.abs(tr.centers))) + tr.h


def _block_axis_nodes(a: float, b: float, center_block: bool, panel: float, q: int):
    """Nodes/weights on [a, b]; the block around 0 is folded onto [0, b] for p.v. pairing."""
    if center_block:
        t, w = composite(0.0, b, panel, q)
        return t, w
    return composite(a, b, panel, q)


def apply_kernel_blocks(trains: Sequence[BumpTrain], alpha: Sequence[float], beta: Sequence[float] | None,
                        K1: KernelSpec, K2: KernelSpec | None, A: float, x: float,
                        window: Iterable[BlockIndex] | None = None, nodes: int = 16,
                        pv_pairing: bool = True, check: bool = False, tol: float = 1e-6) -> complex:
    """sum over blocks of int prod_j f_j(x - a_j t - b_j s) K1(t) K2(s) (one-parameter when beta is None)."""
    val = _kernel_blocks(trains, alpha, beta, K1, K2, A, x, window, nodes, pv_pairing)
    if check:
        ref = _kernel_blocks(trains, alpha, beta, K1, K2, A, x, window, 2 * nodes, pv_pairing)
        if abs(ref - val) > tol * max(abs(ref), 1e-300):
            raise QuadratureError(f"block quadrature unsettled: {val} vs {ref}")
        return ref
    return val


def blocks_in_play(trains, alpha, A, x) -> list[BlockIndex]:
    """One-parameter blocks whose t-range meets every input's spatial support."""
    lo, hi = -np.inf, np.inf
    for tr, a in zip(trains, alpha):
        if a == 0:
            continue
        R = tr.base.radius()
        ends = sorted(((x - tr.shifts.min() + R) / a, (x - tr.shifts.max() - R) / a))
        lo, hi = max(lo, ends[0]), min(hi, ends[1])
    if lo >= hi:
        return []
    k0 = int(math.floor(lo / A + 0.5))
    k1 = int(math.ceil(hi / A - 0.5))
    return [BlockIndex(k) for k in range(k0, k1 + 1)]


def _kernel_blocks(trains, alpha, beta, K1, K2, A, x, window, nodes, pv_pairing) -> complex:
    alpha = np.asarray(alpha, dtype=float)
    two = beta is not None
    beta = np.asarray(beta if two else np.zeros(len(alpha)), dtype=float)
    if window is None:
        if two:
            raise ValueError("two-parameter sums need an explicit block window")
        window = blocks_in_play(trains, alpha, A, x)
    window = list(window)
    if not pv_pairing and any(b.k == 0 or (two and b.l == 0) for b in window):
        raise ValueError("blocks through the origin need p.v. pairing")
    band_t = sum(abs(a) * _train_band(tr) for a, tr in zip(alpha, trains))
    band_s = sum(abs(b) * _train_band(tr) for b, tr in zip(beta, trains))
    panel_t = min(A, 2.0 / max(band_t, 1e-9))
    panel_s = min(A, 2.0 / max(band_s, 1e-9))

    def integrand(t, s):
        val = np.ones(np.broadcast(t, s).shape, dtype=complex)
        for tr, a, b in zip(trains, alpha, beta):
            val = val * tr(x - a * t - b * s)
        return val

    total = 0.0 + 0.0j
    for blk in window:
        (ta, tb), (sa, sb) = blk.window(A)
        tn, tw = _block_axis_nodes(ta, tb, blk.k == 0, panel_t, nodes)
        kt = K1(tn)
        if not two:
            vals = integrand(tn, 0.0)
            if blk.k == 0:
                vals = vals - integrand(-tn, 0.0)
            total += complex(np.sum(tw * kt * vals))
            continue
        sn, sw = _block_axis_nodes(sa, sb, blk.l == 0, panel_s, nodes)
        ks = K2(sn)
        for i in range(len(tn)):
            t = tn[i]
            vals = integrand(t, sn)
            if blk.k == 0:
                vals = vals - integrand(-t, sn)
            if blk.l == 0:
                vals = vals - integrand(t, -sn)
                if blk.k == 0:
                    vals = vals + integrand(-t, -sn)
            total += tw[i] * kt[i] * complex(np.sum(sw * ks * vals))
    return total


# ---------------------------------------------------------------- kernel lemma

@dataclass
class KernelLemmaRow:
    k: int
    im_value: float
    bound: float
    passes: bool

    def as_dict(self) -> dict:
        return {"k": self.k, "im_value": self.im_value, "bound": self.bound, "pass": self.passes}


@dataclass
class KernelLemmaReport:
    rows: list
    D: float
    theta: float
    k0: int
    halving: list

    @property
    def passes(self) -> bool:
        return all(r.passes for r in self.rows) and all(ok for _, _, ok in self.halving)

    def as_dict(self) -> dict:
        return {"D": self.D, "theta": self.theta, "k0": self.k0, "pass": self.passes,
                "rows": [r.as_dict() for r in self.rows],
                "halving": [{"k": k, "ratio": r, "pass": ok} for k, r, ok in self.halving]}


class _LemmaIntegrator:
    """Im int int prod phi(a_j t + b_j s) e^{2 pi i A k s} Ks(s) Kt(t + A k) ds dt over [-A, A]^2.

    With Ks(s) = kappa(s) / s the imaginary part has no singularity: it equals
    int G(s) sin(omega s) / s ds with G = kappa * H_k and H_k(s) = int g(t, s) Kt(t + A k) dt.
    The s-integral is G(0) 2 Si(omega A) plus a Filon-type sum for (G - G(0)) / s.
    """

    def __init__(self, phi, alpha, beta, A, kernel_s: KernelSpec, kernel_t: KernelSpec,
                 panel: float = 0.5, degree: int = 24, t_nodes: int = 16):
        self.A = float(A)
        self.kernel_s = kernel_s
        self.kernel_t = kernel_t
        self.alpha = np.asarray(alpha, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.phi = phi
        self.t, self.wt = composite(-self.A, self.A, panel, t_nodes)
        npan = int(round(self.A / panel))
        edges = np.linspace(-self.A, self.A, 2 * npan + 1)
        self.edges = edges
        cheb = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        self.cheb = cheb
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        self.s = (mid[:, None] + half[:, None] * cheb[None, :])  # panels x nodes
        flat = self.s.reshape(-1)
        self.g = self._g(self.t[:, None], flat[None, :])  # t x s
        self.g0 = self._g(self.t, 0.0)
        self.kappa_s = kernel_s.even_part(flat)
        self.kappa0 = float(kernel_s.even_part(np.array([0.0]))[0])
        self.degree = degree

    def _g(self, t, s):
        val = 1.0
        for a, b in zip(self.alpha, self.beta):
            val = val * self.phi(a * t + b * s)
        return val

    def value(self, k: int) -> float:
        from scipy.special import sici

        A = self.A
        omega = TWO_PI * A * k
        kt = self.kernel_t(self.t + A * k)
        H = (self.wt * kt) @ self.g
        H0 = float((self.wt * kt) @ self.g0)
        G = self.kappa_s * H
        G0 = self.kappa0 * H0
        flat = self.s.reshape(-1)
        r = ((G - G0) / flat).reshape(self.s.shape)
        total = G0 * 2.0 * sici(omega * A)[0]
        cheb = np.polynomial.chebyshev
        for p in range(self.s.shape[0]):
            a, b = self.edges[p], self.edges[p + 1]
            coef = cheb.chebfit(self.cheb, r[p], self.degree)
            poly = cheb.Chebyshev(coef, domain=[a, b])
            total += _filon_sin(poly, a, b, omega, self.degree)
        return float(total)


def _filon_sin(poly, a: float, b: float, omega: float, degree: int) -> float:
    """int_a^b poly(s) sin(omega s) ds via repeated integration by parts (exact for polynomials)."""
    acc = 0.0 + 0.0j
    ea, eb = np.exp(1j * omega * a), np.exp(1j * omega * b)
    d = poly
    fac = 1.0 / (1j * omega)
    for m in range(degree + 1):
        acc += ((-1) ** m) * fac * (d(b) * eb - d(a) * ea)
        d = d.deriv()
        fac = fac / (1j * omega)
    return float(acc.imag)


def lemma_direct(phi, alpha, beta, A, k, kernel_s: KernelSpec, kernel_t: KernelSpec,
                 t_nodes: int = 16, per_cycle: int = 12) -> float:
    """Brute-force composite Gauss in both variables (reference route)."""
    A = float(A)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    t, wt = composite(-A, A, 0.5, t_nodes)
    cycles = A * k
    s, ws = composite(-A, A, 1.0 / max(1.0, cycles), per_cycle)
    kt = kernel_t(t + A * k)
    total = 0.0
    # sin(omega s) Ks(s) is smooth: Ks = kappa / s and sin(omega s) / s is entire
    ker = kernel_s.even_part(s) * TWO_PI * A * k * np.sinc(2.0 * A * k * s)
    for i in range(len(t)):
        g = np.ones(len(s))
        for a, b in zip(alpha, beta):
            g = g * phi(a * t[i] + b * s)
        total += wt[i] * kt[i] * float(np.sum(ws * g * ker))
    return total


def lemma_D(phi, alpha, A, kernel_s: KernelSpec, kernel_t: KernelSpec) -> float:
    """C1 (of the kernel at t + Ak) * C2 (of the oscillating kernel) * int_{-A}^{A} prod phi(a_j t) dt."""
    t, w = composite(-float(A), float(A), 0.25, 24)
    g = np.ones(len(t))
    for a in alpha:
        g = g * phi(a * t)
    return kernel_t.c1 * kernel_s.c2 * float(np.sum(w * g))


def verify_kernel_lemma(phi, alpha, beta, A, k_range: Iterable[int], kernel_s: KernelSpec | None = None,
                        kernel_t: KernelSpec | None = None, theta: float = 0.5, k0: int = 2) -> KernelLemmaReport:
    """Check Im[...] >= theta D / (A k) for every k in k_range, plus the halving law."""
    kernel_s = kernel_s or hilbert_kernel()
    kernel_t = kernel_t or hilbert_kernel()
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("empty k range")
    if ks[0] < k0:
        raise ValueError(f"k = {ks[0]} lies below k0 = {k0}")
    if ks[0] < 2:
        raise ValueError("k >= 2 keeps t + A k away from the kernel singularity")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    D = lemma_D(phi, alpha, A, kernel_s, kernel_t)
    integ = _LemmaIntegrator(phi, alpha, beta, A, kernel_s, kernel_t)
    values = {k: integ.value(k) for k in ks}
    rows = [KernelLemmaRow(k, v, theta * D / (A * k), bool(v >= theta * D / (A * k))) for k, v in values.items()]
    halving = []
    for k in ks:
        if 2 * k in values:
            ratio = 2.0 * values[2 * k] / values[k]
            halving.append((k, ratio, bool(0.9 <= ratio <= 1.1)))
    return KernelLemmaReport(rows, D, theta, k0, halving)


def calibrate_k0(phi, alpha, beta, A, kernel_s: KernelSpec | None = None, kernel_t: KernelSpec | None = None,
                 theta: float = 0.5, run: int = 8, k_start: int = 2, k_limit: int = 4096) -> int:
    """Smallest k such that the bound holds for ``run`` consecutive k starting there."""
    kernel_s = kernel_s or hilbert_kernel()
    kernel_t = kernel_t or hilbert_kernel()
    D = lemma_D(phi, alpha, A, kernel_s, kernel_t)
    integ = _LemmaIntegrator(phi, alpha, beta, A, kernel_s, kernel_t)
    start, streak = k_start, 0
    for k in range(k_start, k_limit + 1):
        if integ.value(k) >= theta * D / (A * k):
            streak += 1
            if streak == run:
                return start
        else:
            start, streak = k + 1, 0
    raise ValueError(f"no run of {run} passing k below {k_limit}")


# ---------------------------------------------------------------- maximal variants

def default_families(trains: Sequence[BumpTrain]):
    """Low-pass and band-pass families over the scales touched by the inputs' spectra."""
    from .profiles import band_pass, low_pass

    top = max(_train_band(t) for t in trains)
    K = max(1, int(math.ceil(math.log2(max(top, 2.0)))) + 1)
    return {k: low_pass(k) for k in range(1, K + 1)}, {k: band_pass(k) for k in range(1, K + 1)}


def apply_maximal_variant(kind: str, families, f1: BumpTrain, f2: BumpTrain, xs, refine: int = 1,
                          threads: int | None = None) -> np.ndarray:
    """pair: sup_k |H(f1 * g~_k . f2 * g_k)|; partial_sum: sup_l |sum_{k <= l} H(f1 * g~_k . f2 * g_k)|.

    H is the Hilbert transform, the multiplier -i sgn(xi). families = (tilde family, family),
    each a mapping k -> Multiplier1D over the same finite set of scales.
    """
    if kind not in ("pair", "partial_sum"):
        raise ValueError("kind must be 'pair' or 'partial_sum'")
    tilde, plain = families
    tilde = dict(tilde) if not isinstance(tilde, dict) else tilde
    plain = dict(plain) if not isinstance(plain, dict) else plain
    if set(tilde) != set(plain):
        raise ValueError("the two families must share their scale set")
    scales = sorted(plain)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))

    def run(chunk):
        best = np.zeros(len(chunk))
        running = np.zeros(len(chunk), dtype=complex)
        for k in scales:
            term = Term(-1j, Sign(), (1.0, 1.0), (tilde[k], plain[k]))
            val = _term_contributions(term, [f1, f2], chunk, refine)
            if kind == "pair":
                best = np.maximum(best, np.abs(val))
            else:
                running = running + val
                best = np.maximum(best, np.abs(running))
        return best

    return _map_chunks(run, xs, threads)
