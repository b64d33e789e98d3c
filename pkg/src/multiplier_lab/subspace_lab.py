"""Subspace families a_j = 1/(q_j + alpha q_j^2), non-degeneracy certificates, perp distances."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .rational_core import RationalVector, det, nullspace, rank, rref, to_fraction

# |det| / prod(row norms) below this counts as singular for float normals
SINGULAR_REL = 1e-10


def _exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


@dataclass(frozen=True)
class Subspace:
    """Gamma = intersection of {xi . normal = 0} in R^n."""

    n: int
    normals: tuple
    params: dict | None = None

    @property
    def d(self) -> int:
        return len(self.normals)

    @property
    def dim(self) -> int:
        return self.n - self.d

    @property
    def exact(self) -> bool:
        return all(_exact(v) for row in self.normals for v in row)

    def normal_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.normals], dtype=float)

    def contains(self, xi, tol: float = 1e-12) -> bool:
        xi = np.asarray(xi, dtype=float)
        return bool(np.all(np.abs(self.normal_array() @ xi) <= tol * max(1.0, np.linalg.norm(xi))))


def subspace_from_normals(normals: Sequence[Sequence]) -> Subspace:
    rows = tuple(tuple(r) for r in normals)
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValueError("ragged normal list")
    return Subspace(n, rows)


def gamma_scales(q: Sequence, alpha) -> list:
    """a_j = 1 / (q_j + alpha q_j^2); exact when q and alpha are exact."""
    exact = _exact(alpha) and all(_exact(v) or isinstance(v, str) for v in q)
    out = []
    for j, qj in enumerate(q):
        if exact:
            qj = to_fraction(qj)
            denom = qj + Fraction(alpha) * qj * qj
        else:
            qj = float(to_fraction(qj)) if isinstance(qj, str) else float(qj)
            denom = qj + float(alpha) * qj * qj
        if denom == 0:
            raise ValueError(f"pole at j={j + 1}: q_j * alpha = -1")
        out.append(1 / denom)
    return out


def build_gamma_family(q: Sequence, alpha, d: int, n: int | None = None) -> Subspace:
    """Normals alpha^1 = a and alpha^m = a q^m (m = 2..d)."""
    qv = RationalVector(q)
    if n is None:
        n = len(qv)
    if n != len(qv):
        raise ValueError("q must have n entries")
    if any(v == 0 for v in qv) or len(set(qv)) != len(qv):
        raise ValueError("q needs distinct nonzero entries")
    if d >= n:
        raise ValueError("need d < n")
    if d < 1:
        raise ValueError("need d >= 1")
    a = gamma_scales(qv, alpha)
    exact = _exact(alpha)
    normals = [tuple(a)]
    for m in range(2, d + 1):
        if exact:
            normals.append(tuple(aj * qj ** m for aj, qj in zip(a, qv)))
        else:
            normals.append(tuple(aj * float(qj) ** m for aj, qj in zip(a, qv)))
    return Subspace(n, tuple(normals), {"q": qv, "alpha": alpha, "d": d})


def augmented_matrix(gamma: Subspace) -> list[list]:
    """(d+1) x (n+1): a row of ones, then each normal with a trailing zero."""
    zero = Fraction(0) if gamma.exact else 0.0
    one = Fraction(1) if gamma.exact else 1.0
    rows = [[one] * (gamma.n + 1)]
    for nrm in gamma.normals:
        rows.append(list(nrm) + [zero])
    return rows


def _float_singular(block: np.ndarray) -> bool:
    scale = float(np.prod(np.linalg.norm(block, axis=1)))
    if scale == 0.0:
        return True
    return abs(np.linalg.det(block)) / scale <= SINGULAR_REL


@dataclass(frozen=True)
class Certificate:
    passes: bool
    failing_chain: tuple | None
    chains_checked: int
    exact: bool


def check_nondegenerate(gamma: Subspace) -> Certificate:
    """Every choice of n-d coordinates out of n+1 must leave an invertible complement.

    Chains are 1-based and visited in lexicographic order; the first failure is reported.
    """
    M = augmented_matrix(gamma)
    cols = gamma.n + 1
    k = gamma.dim
    exact = gamma.exact
    Mf = None if exact else np.array(M, dtype=float)
    count = 0
    for chain in combinations(range(cols), k):
        keep = [c for c in range(cols) if c not in chain]
        count += 1
        if exact:
            singular = det([[row[c] for c in keep] for row in M]) == 0
        else:
            singular = _float_singular(Mf[:, keep])
        if singular:
            return Certificate(False, tuple(c + 1 for c in chain), count, exact)
    return Certificate(True, None, count, exact)


def brute_force_nondegenerate(gamma: Subspace) -> Certificate:
    """Reference: the augmented subspace is a graph over xi_I iff its basis restricted to I has full rank."""
    if not gamma.exact:
        raise ValueError("the reference route needs exact normals")
    M = augmented_matrix(gamma)
    cols = gamma.n + 1
    basis = nullspace(M, cols)
    k = gamma.dim
    count = 0
    if len(basis) != k:
        return Certificate(False, tuple(range(1, k + 1)), 1, True)
    for chain in combinations(range(cols), k):
        count += 1
        sub = [[vec[c] for vec in basis] for c in chain]
        if rank(sub) < k:
            return Certificate(False, tuple(c + 1 for c in chain), count, True)
    return Certificate(True, None, count, True)


def orthonormal_normals(gamma: Subspace) -> np.ndarray:
    """Rows spanning Gamma-perp, orthonormalized."""
    Q, R = np.linalg.qr(gamma.normal_array().T)
    keep = np.abs(np.diag(R)) > 1e-14 * max(1.0, np.abs(R).max())
    return Q[:, keep].T


def perp_distance(gamma: Subspace, probe) -> float:
    """Euclidean distance from probe to span(normals)."""
    p = np.asarray([float(v) for v in probe], dtype=float)
    if not np.any(p):
        raise ValueError("probe must be nonzero")
    U = orthonormal_normals(gamma)
    resid = p - U.T @ (U @ p)
    return float(np.linalg.norm(resid))


def exact_perp_distance_sq(gamma: Subspace, probe: Sequence) -> Fraction:
    """Squared distance to span(normals) over Q via the normal equations."""
    if not gamma.exact:
        raise ValueError("needs exact normals")
    V = [list(map(to_fraction, row)) for row in gamma.normals]
    p = [to_fraction(v) for v in probe]
    d = len(V)
    G = [[sum(a * b for a, b in zip(V[i], V[j])) for j in range(d)] for i in range(d)]
    rhs = [sum(a * b for a, b in zip(V[i], p)) for i in range(d)]
    aug = [G[i] + [rhs[i]] for i in range(d)]
    red, piv = rref(aug)
    coef = [Fraction(0)] * d
    for row, c in zip(red, piv):
        if c < d:
            coef[c] = row[d]
    proj = [sum(coef[i] * V[i][j] for i in range(d)) for j in range(len(p))]
    return sum((a - b) ** 2 for a, b in zip(p, proj))


def distance_to_subspace(gamma: Subspace, xi: np.ndarray) -> np.ndarray:
    """dist(xi, Gamma) for an array of points (last axis = coordinates)."""
    U = orthonormal_normals(gamma)
    return np.linalg.norm(np.asarray(xi, dtype=float) @ U.T, axis=-1)


def span_rank(vectors: Sequence[Sequence]) -> int:
    return rank([list(map(to_fraction, v)) for v in vectors])


def choose_epsilon(q: Sequence, alphas_rel: Sequence[float], start: float = 1.0, max_halvings: int = 60) -> float:
    """Halve eps from ``start`` until every alpha = r * eps (r in alphas_rel) avoids the poles."""
    qf = [float(to_fraction(v)) for v in q]
    eps = start
    for _ in range(max_halvings):
        ok = all(abs(qj + r * eps * qj * qj) > 1e-9 * abs(qj) for r in alphas_rel for qj in qf)
        if ok:
            return eps
        eps /= 2
    raise ValueError("no pole-free epsilon found")


def distinctness_sample(q: Sequence, d: int, eps: float, k: int = 8) -> list[float]:
    """perp_distance(Gamma(alpha_i, q), a(eps)) for k evenly spaced alpha_i in [0, eps]."""
    qf = [float(to_fraction(v)) for v in q]
    probe = gamma_scales(qf, float(eps))
    out = []
    for alpha in np.linspace(0.0, eps, k):
        g = build_gamma_family([to_fraction(v) for v in q], float(alpha), d)
        out.append(perp_distance(g, probe))
    return out


def adapted_pair_constraints(q: Sequence, alpha, d: int, tilde: Sequence) -> dict:
    """Evaluate the hash constraint families for normals a q^m and the companion beta = a / q.

    Returns exact values when alpha is exact. Keys: 'alpha', 'beta', 'alpha_alpha',
    'beta_beta', 'alpha_beta' (dicts keyed by the normal indices) and 'c'.
    """
    qv = RationalVector(q)
    fam = build_gamma_family(qv, alpha, d)
    a = fam.normals[0]
    t = RationalVector(tilde)
    exact = _exact(alpha)
    if exact:
        h = [tj / aj ** 2 for tj, aj in zip(t, a)]
        beta = [aj / qj for aj, qj in zip(a, qv)]
    else:
        h = [float(tj) / aj ** 2 for tj, aj in zip(t, a)]
        beta = [aj / float(qj) for aj, qj in zip(a, qv)]
    A = fam.normals

    mul = _prod if exact else (lambda vals: float(np.prod(vals)))

    def s(*vecs):
        return sum(mul([v[j] for v in vecs]) * h[j] for j in range(len(h)))

    out = {
        "alpha": {m + 1: s(A[m]) for m in range(d)},
        "beta": {1: s(beta)},
        "alpha_alpha": {(m + 1, l + 1): s(A[m], A[l]) for m in range(d) for l in range(d)},
        "beta_beta": {(1, 1): s(beta, beta)},
        "alpha_beta": {(m + 1, 1): s(A[m], beta) for m in range(d)},
    }
    out["c"] = out["alpha_beta"][(1, 1)]
    return out


def _prod(vals):
    acc = Fraction(1)
    for v in vals:
        acc *= v
    return acc
