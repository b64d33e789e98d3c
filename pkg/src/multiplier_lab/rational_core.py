"""Exact rational vectors and the moment-orthogonality solvers behind the hash vectors.

Everything here runs on ``fractions.Fraction``; floats are refused at the
boundary so that every reported zero is a genuine zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from numbers import Rational
from typing import Iterable, Sequence


class HashSolveError(ValueError):
    """Base class for failures of the moment solver."""


class InvalidNodes(HashSolveError):
    """The node vector q has a repeated or zero entry."""


class InfeasibleSystem(HashSolveError):
    """The moment system has only the trivial solution."""


class ForbiddenMomentUnavoidable(HashSolveError):
    """Every kernel vector annihilates the forbidden moment."""


def to_fraction(value) -> Fraction:
    """Exact conversion; accepts ints, Fractions and strings like ``'3/7'``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"refusing inexact value {value!r}; pass an int, Fraction or string")


class RationalVector(tuple):
    """Immutable tuple of Fractions with exact dot, scaling and componentwise product."""

    def __new__(cls, entries: Iterable):
        items = tuple(to_fraction(v) for v in entries)
        if not items:
            raise ValueError("a rational vector needs at least one entry")
        return super().__new__(cls, items)

    def dot(self, other: Sequence) -> Fraction:
        if len(other) != len(self):
            raise ValueError("length mismatch")
        return sum((a * to_fraction(b) for a, b in zip(self, other)), Fraction(0))

    def scale(self, c) -> "RationalVector":
        c = to_fraction(c)
        return RationalVector(c * v for v in self)

    def wedge(self, other: Sequence) -> "RationalVector":
        """Componentwise product u_j v_j."""
        if len(other) != len(self):
            raise ValueError("length mismatch")
        return RationalVector(a * to_fraction(b) for a, b in zip(self, other))

    def power(self, m: int) -> "RationalVector":
        return RationalVector(v ** m for v in self)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self)

    def normalized(self) -> "RationalVector":
        """Scale so the first nonzero entry is +1."""
        for v in self:
            if v != 0:
                return self.scale(1 / v)
        raise ValueError("cannot normalize the zero vector")

    def integerize(self) -> "RationalVector":
        """Smallest positive multiple with integer entries (sign preserved)."""
        den = lcm(*(v.denominator for v in self))
        ints = [int(v * den) for v in self]
        g = 0
        for k in ints:
            g = gcd(g, k)
        g = g or 1
        return RationalVector(k // g for k in ints)

    def to_floats(self) -> list[float]:
        return [float(v) for v in self]

    def __repr__(self) -> str:
        return "RationalVector(" + ", ".join(str(v) for v in self) + ")"


def moment(tilde: Sequence[Fraction], q: Sequence[Fraction], m: int) -> Fraction:
    """Exact sum_j tilde_j q_j^m (negative m allowed for nonzero q)."""
    return sum((t * qj ** m for t, qj in zip(tilde, q)), Fraction(0))


def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q. Returns (matrix, pivot columns)."""
    mat = [list(r) for r in rows]
    if not mat:
        return [], []
    ncols = len(mat[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def nullspace(rows: list[list[Fraction]], ncols: int) -> list[RationalVector]:
    """Exact kernel basis, one vector per free column, in column order."""
    if not rows:
        return [RationalVector(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * ncols
        vec[fcol] = Fraction(1)
        for row, pcol in zip(red, pivots):
            vec[pcol] = -row[fcol]
        basis.append(RationalVector(vec))
    return basis


def rank(rows: list[list[Fraction]]) -> int:
    return len(rref(rows)[1]) if rows else 0


def det(matrix: list[list[Fraction]]) -> Fraction:
    """Exact determinant by Gaussian elimination over Q."""
    m = [list(map(to_fraction, r)) for r in matrix]
    n = len(m)
    sign = 1
    acc = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            sign = -sign
        acc *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return sign * acc


def moment_matrix(q: Sequence[Fraction], exponents: Iterable[int]) -> list[list[Fraction]]:
    return [[qj ** e for qj in q] for e in sorted(set(exponents))]


def _check_nodes(q: RationalVector) -> None:
    if any(v == 0 for v in q):
        raise InvalidNodes("q has a zero entry")
    if len(set(q)) != len(q):
        raise InvalidNodes("q has repeated entries")


@dataclass(frozen=True)
class HashVector:
    """A solved moment system: tilde vector plus the ledger of what it satisfies."""

    q: RationalVector
    tilde: RationalVector
    satisfied_exponents: frozenset
    forbidden_exponent: int | None = None
    forbidden_value: Fraction | None = None
    lifted: tuple | None = field(default=None, compare=False)

    def checks(self) -> list[tuple[int, Fraction]]:
        """(exponent, exact moment) for every constrained and forbidden exponent."""
        exps = sorted(self.satisfied_exponents)
        if self.forbidden_exponent is not None:
            exps.append(self.forbidden_exponent)
        return [(e, moment(self.tilde, self.q, e)) for e in exps]

    def verify(self) -> bool:
        ok = all(moment(self.tilde, self.q, e) == 0 for e in self.satisfied_exponents)
        if self.forbidden_exponent is not None:
            ok = ok and moment(self.tilde, self.q, self.forbidden_exponent) != 0
        return ok and not self.tilde.is_zero()


def solve_moment_orthogonal(q: Sequence, exponents: Iterable[int], e_star: int | None = None) -> HashVector:
    """Nonzero tilde in Q^n with sum tilde_j q_j^m = 0 for every m in ``exponents``.

    With ``e_star`` the forbidden moment must stay nonzero; the first kernel basis
    vector with a nonzero e*-moment is returned. Output is normalized so the first
    nonzero entry is +1.
    """
    qv = RationalVector(q)
    _check_nodes(qv)
    exps = frozenset(int(e) for e in exponents)
    n = len(qv)
    if len(exps) > n - 1:
        raise InfeasibleSystem(f"{len(exps)} constraints on {n} unknowns leave only the zero vector")
    basis = nullspace(moment_matrix(qv, exps), n)
    if not basis:
        raise InfeasibleSystem("moment matrix has full column rank")

    chosen = None
    if e_star is None:
        chosen = basis[0]
    else:
        for vec in basis:
            if moment(vec, qv, e_star) != 0:
                chosen = vec
                break
        if chosen is None:
            # the forbidden moment is linear, so zero on a basis means zero on the whole kernel
            raise ForbiddenMomentUnavoidable(f"every kernel vector has zero q^{e_star} moment")
    tilde = chosen.normalized()
    fval = moment(tilde, qv, e_star) if e_star is not None else None
    return HashVector(qv, tilde, exps, e_star, fval)


def kernel_dimension(q: Sequence, exponents: Iterable[int]) -> int:
    qv = RationalVector(q)
    return len(nullspace(moment_matrix(qv, exponents), len(qv)))


def lift_hash(tilde, a: Sequence) -> list:
    """#_j = tilde_j / a_j^2.

    Exact Fractions come back when every a_j is exact, floats otherwise.
    """
    t = tilde.tilde if isinstance(tilde, HashVector) else RationalVector(tilde)
    if len(a) != len(t):
        raise ValueError("length mismatch between tilde and scale vector")
    out = []
    exact = all(isinstance(v, (int, Fraction, str)) and not isinstance(v, bool) for v in a)
    for tj, aj in zip(t, a):
        if exact:
            aj = to_fraction(aj)
            if aj == 0:
                raise ValueError("scale vector has a zero entry")
            out.append(tj / aj ** 2)
        else:
            aj = float(aj)
            if aj == 0.0:
                raise ValueError("scale vector has a zero entry")
            out.append(float(tj) / aj ** 2)
    return out


def cross_with_ones(q: Sequence) -> RationalVector:
    """Symbolic determinant of [e1 e2 e3; 1 1 1; q1 q2 q3]; 3-d oracle for E={0,1}."""
    q1, q2, q3 = (to_fraction(v) for v in q)
    return RationalVector([q3 - q2, q1 - q3, q2 - q1])
