"""Dense tableau simplex in exact rational arithmetic with Bland's anti-cycling rule.

Solves ``maximize c.x  subject to  A x <= b, x >= 0`` with ``b >= 0`` so the
slack basis is feasible from the start. Arithmetic runs on ``gmpy2.mpq`` and
results come back as ``fractions.Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq

from .errors import InvalidArgument

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    value: Fraction | None
    x: list[Fraction] | None
    duals: list[Fraction] | None
    pivots: int


def _q(v) -> mpq:
    v = Fraction(v)
    return mpq(v.numerator, v.denominator)


def _f(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def maximize(c, A, b, max_pivots: int = 1_000_000) -> LPResult:
    """Exact simplex; ``duals`` certify optimality via ``A^T y >= c, y >= 0, b.y = value``."""
    m = len(A)
    n = len(c)
    if len(b) != m or any(len(row) != n for row in A):
        raise InvalidArgument("inconsistent LP dimensions")
    if any(Fraction(v) < 0 for v in b):
        raise InvalidArgument("maximize() needs b >= 0 (slack basis feasible)")
    width = n + m
    # row i: [A_i | e_i | b_i]; objective row holds reduced costs z_j - c_j
    T = []
    for i in range(m):
        row = [_q(v) for v in A[i]] + [mpq(0)] * m + [_q(b[i])]
        row[n + i] = mpq(1)
        T.append(row)
    obj = [-_q(v) for v in c] + [mpq(0)] * m + [mpq(0)]
    basis = list(range(n, n + m))
    pivots = 0
    while True:
        enter = next((j for j in range(width) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        leave = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return LPResult(UNBOUNDED, None, None, None, pivots)
        _pivot(T, obj, leave, enter)
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit exceeded")
    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = _f(T[i][-1])
    duals = [_f(obj[n + i]) for i in range(m)]
    return LPResult(OPTIMAL, _f(obj[-1]), x, duals, pivots)


def _pivot(T, obj, r, col):
    prow = T[r]
    inv = 1 / prow[col]
    nz = [j for j, v in enumerate(prow) if v != 0]
    for j in nz:
        prow[j] *= inv
    for i, row in enumerate(T):
        if i != r:
            f = row[col]
            if f != 0:
                for j in nz:
                    row[j] -= f * prow[j]
    f = obj[col]
    if f != 0:
        for j in nz:
            obj[j] -= f * prow[j]
