"""Linear algebra kernels: exact rational rank/solve/nullspace and cyclic Jacobi eigensolvers.

Exact routines take row lists of ints/Fractions. Rank uses a modular fast path
(rank mod a prime never exceeds the rational rank, so full rank mod p is a
certificate) and falls back to sympy's sparse QQ elimination.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import InvalidArgument

_PRIME = 2_147_483_647


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _integer_rows(rows):
    out = []
    for row in rows:
        den = reduce(_lcm, (Fraction(v).denominator for v in row), 1)
        out.append([int(Fraction(v) * den) for v in row])
    return out


def _rank_mod_p(int_rows, ncols: int) -> int:
    if not int_rows or ncols == 0:
        return 0
    A = np.array([[v % _PRIME for v in r] for r in int_rows], dtype=np.int64)
    if A.shape[0] < A.shape[1]:
        A = A.T.copy()
    m, n = A.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        nz = np.nonzero(A[rank:, col])[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, col]), _PRIME - 2, _PRIME)
        A[rank] = (A[rank] * inv) % _PRIME
        below = np.nonzero(A[rank + 1:, col])[0] + rank + 1
        if below.size:
            f = A[below, col][:, None]
            A[below] = (A[below] - (f * A[rank][None, :]) % _PRIME) % _PRIME
        rank += 1
    return rank


def _domain_matrix(rows, ncols: int) -> DomainMatrix:
    d = {}
    for i, row in enumerate(rows):
        entries = {j: QQ(Fraction(v).numerator, Fraction(v).denominator) for j, v in enumerate(row) if v != 0}
        if entries:
            d[i] = entries
    return DomainMatrix(d, (len(rows), ncols), QQ)


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def exact_rank(rows, ncols: int | None = None) -> int:
    """Rank over Q of the matrix whose rows are given (ints or Fractions)."""
    rows = [list(r) for r in rows]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if not rows or ncols == 0:
        return 0
    full = min(len(rows), ncols)
    r = _rank_mod_p(_integer_rows(rows), ncols)
    if r == full:
        return r
    return _domain_matrix(rows, ncols).to_sparse().rank()


def exact_nullspace(rows, ncols: int) -> list[list[Fraction]]:
    """Basis of ``{a : rows @ a = 0}`` as Fraction vectors."""
    rows = [list(r) for r in rows]
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    ns = _domain_matrix(rows, ncols).to_dense().nullspace()
    out = []
    for vec in ns.to_Matrix().tolist():
        out.append([Fraction(v.p, v.q) for v in vec])
    return out


def exact_solve(rows, rhs) -> list[Fraction]:
    """Solve the square nonsingular system ``rows @ x = rhs`` exactly."""
    n = len(rows)
    if any(len(r) != n for r in rows) or len(rhs) != n:
        raise InvalidArgument("exact_solve needs a square system")
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    M = _domain_matrix(aug, n + 1).to_sparse()
    R, pivots = M.rref()
    if tuple(pivots) != tuple(range(n)):
        raise InvalidArgument("singular system")
    sol = [Fraction(0)] * n
    rep = R.to_sdm()
    for i in range(n):
        q = rep.get(i, {}).get(n)
        if q is not None:
            sol[i] = _to_fraction(q)
    return sol


def exact_inverse_apply(G, vectors):
    """Columns ``G^{-1} v`` for each ``v`` in ``vectors`` (exact)."""
    return [exact_solve(G, v) for v in vectors]


def jacobi_eigh(S, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius mass falls below ``tol`` times
    the matrix scale. Returns ``(eigenvalues ascending, eigenvectors as columns)``.
    """
    A = np.array(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgument("jacobi_eigh needs a square matrix")
    A = (A + A.T) / 2.0
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(A, 1) ** 2)) * 2.0)
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], V[:, order]


def generalized_eigh(H, G, tol: float = 1e-12):
    """Solve ``H v = lam G v`` for symmetric ``H`` and positive definite ``G``.

    Reduces with the Cholesky factor ``G = L L^T`` to ``L^{-1} H L^{-T}`` and
    diagonalizes that by Jacobi. Eigenvectors are returned in the original
    coordinates, normalized so ``v^T G v = 1``.
    """
    H = np.array(H, dtype=float)
    G = np.array(G, dtype=float)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgument("Gram matrix is not positive definite") from exc
    Linv = np.linalg.inv(L)
    C = Linv @ H @ Linv.T
    evals, W = jacobi_eigh(C, tol=tol)
    return evals, Linv.T @ W


def psd_power(S, power: float, tol: float = 1e-12):
    """``S**power`` for a symmetric positive definite matrix via Jacobi."""
    evals, V = jacobi_eigh(S, tol=tol)
    if evals[0] <= 0:
        raise InvalidArgument("matrix is not positive definite")
    return (V * evals**power) @ V.T


def rref(rows, ncols: int):
    """Reduced row echelon form in Fractions; returns ``(rows, pivot_columns)``."""
    R = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R[:r], pivots


def small_nullspace(rows, ncols: int) -> list[list[Fraction]]:
    """Nullspace basis by dense Fraction RREF (intended for small matrices)."""
    R, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[fc]
        basis.append(v)
    return basis


class RowEchelon:
    """Incremental exact independence test over sparse rows."""

    def __init__(self):
        self._rows: list[tuple[int, dict]] = []

    def __len__(self):
        return len(self._rows)

    def reduce(self, v) -> dict:
        d = {j: Fraction(x) for j, x in (v.items() if isinstance(v, dict) else enumerate(v)) if x != 0}
        for col, row in self._rows:
            f = d.get(col)
            if f:
                for j, x in row.items():
                    y = d.get(j, 0) - f * x
                    if y:
                        d[j] = y
                    else:
                        d.pop(j, None)
        return d

    def add(self, v) -> bool:
        """Insert ``v`` if it is independent of the stored rows; report whether it was."""
        d = self.reduce(v)
        if not d:
            return False
        col = min(d)
        inv = 1 / d[col]
        self._rows.append((col, {j: x * inv for j, x in d.items()}))
        return True


def exact_solve_any(rows, rhs, ncols: int) -> list[Fraction] | None:
    """Some exact solution of a possibly non-square system (free variables set to 0), or ``None``."""
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    R, pivots = _domain_matrix(aug, ncols + 1).to_sparse().rref()
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    rep = R.to_sdm()
    for i, pc in enumerate(pivots):
        q = rep.get(i, {}).get(ncols)
        if q is not None:
            sol[pc] = _to_fraction(q)
    return sol


def is_psd_exact(Mx) -> bool:
    """Exact positive semidefiniteness of a symmetric rational matrix by symmetric elimination."""
    A = [[Fraction(v) for v in r] for r in Mx]
    n = len(A)
    for k in range(n):
        d = A[k][k]
        if d < 0:
            return False
        if d == 0:
            if any(A[k][j] != 0 for j in range(k, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = A[i][k] / d
            if f:
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    return True


def certify_rational_eigenvalue(H, G, lam: float, side: int):
    """Exact rational extreme eigenvalue near ``lam`` when one exists, else ``None``.

    ``side = -1`` certifies a minimum (``H - rG`` PSD and singular), ``+1`` a
    maximum (``rG - H`` PSD and singular).
    """
    r = Fraction(lam).limit_denominator(10**6)
    if abs(float(r) - lam) > 1e-9 * max(1.0, abs(lam)):
        return None
    N = len(G)
    D = [[Fraction(H[i][j]) - r * Fraction(G[i][j]) for j in range(N)] for i in range(N)]
    if side > 0:
        D = [[-v for v in row] for row in D]
    if exact_rank(D, N) == N or not is_psd_exact(D):
        return None
    return (r.numerator if r.denominator == 1 else r)
