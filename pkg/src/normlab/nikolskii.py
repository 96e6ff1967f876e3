"""Nikol'skii constants ``sup_{x != 0} ||x||_inf / ||x||_p`` of finite-dimensional subspaces.

Point evaluation at cell ``c`` is the linear form ``a -> u_c . a`` where
``u_c`` is row ``c`` of the cell-value matrix. Cells whose rows are
proportional share one optimization problem, so rows are grouped into classes
``u_c = lam_c * rep`` with a primitive integer representative.

* ``p = 1``: per class, ``max rep.a  s.t.  sum_i W_i |rep_i . a| <= 1`` is a
  linear program. Small programs run through the exact simplex; larger ones
  take a floating-point warm start whose active set is then certified exactly
  through the optimality conditions (falling back to the exact simplex when
  the certificate fails).
* ``p = 2``: the value is ``max_c sqrt(u_c^T G^{-1} u_c)`` in exact arithmetic.
* other ``p``: a multi-start ascent returns a witness-backed lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, hstack, identity, vstack

from . import scalar as sc
from . import simplex
from .errors import InternalInconsistency, InvalidArgument
from .linalg import RowEchelon, exact_solve
from .scalar import is_exact
from .stepfn import Subspace, _check_p

EXACT_SIMPLEX_MAX_ENTRIES = 4000
P2_EXACT_MAX_OPS = 2_000_000

EXACT = "exact"
WITNESS = "witness-bound"


@dataclass
class NikolskiiResult:
    """``value`` with the coefficient vector ``witness`` attaining it at ``cell``.

    Unpacks as ``(value, witness)``.
    """

    p: object
    value: object
    kind: str
    witness: list
    cell: int
    method: str
    squared: object = None
    lp_solves: int = 0

    def __iter__(self):
        yield self.value
        yield self.witness

    def to_json(self) -> dict:
        d = {"p": sc.to_json_value(self.p), "value": sc.tagged(self.value), "kind": self.kind,
             "witness": [sc.to_json_value(v) for v in self.witness], "cell": self.cell,
             "method": self.method, "lp_solves": self.lp_solves}
        if self.squared is not None:
            d["squared"] = sc.tagged(self.squared)
        return d


@dataclass
class RowClass:
    rep: tuple            # primitive integer vector (exact) or unit float vector
    W: object             # sum over member cells of w_c * |lam_c|
    lam_max: object       # largest |lam_c|
    cell: int             # a member cell attaining lam_max


def _primitive(row) -> tuple[tuple, Fraction] | None:
    """``row = lam * rep`` with ``rep`` a primitive integer vector, first nonzero positive."""
    if all(isinstance(v, int) for v in row):
        ints = list(row)
        den = 1
    else:
        fr = [Fraction(v) for v in row]
        den = math.lcm(*(v.denominator for v in fr))
        ints = [int(v * den) for v in fr]
    g = 0
    first = None
    for v in ints:
        if v:
            g = math.gcd(g, v)
            if first is None:
                first = v
    if first is None:
        return None
    if first < 0:
        g = -g
    rep = tuple(v // g for v in ints)
    return rep, Fraction(g, den)


def row_classes(X: Subspace) -> list[RowClass]:
    """Group cells by proportional rows (exact data only)."""
    w = X.space.weights
    index: dict[tuple, int] = {}
    out: list[RowClass] = []
    for c, row in enumerate(X.rows):
        pr = _primitive(row)
        if pr is None:
            continue
        rep, lam = pr
        lam = abs(lam)
        k = index.get(rep)
        if k is None:
            index[rep] = len(out)
            out.append(RowClass(rep, w[c] * lam, lam, c))
        else:
            rc = out[k]
            rc.W += w[c] * lam
            if lam > rc.lam_max:
                rc.lam_max, rc.cell = lam, c
    return out


def _float_classes(X: Subspace) -> list[RowClass]:
    U = X.float_matrix
    w = X.space.float_weights
    norms = np.linalg.norm(U, axis=1)
    keep = norms > 0
    out = []
    index = {}
    for c in np.nonzero(keep)[0]:
        u = U[c] / norms[c]
        nz = np.nonzero(np.abs(u) > 1e-14)[0][0]
        if u[nz] < 0:
            u = -u
        key = tuple(np.round(u, 12))
        k = index.get(key)
        if k is None:
            index[key] = len(out)
            out.append(RowClass(tuple(u), float(w[c] * norms[c]), float(norms[c]), int(c)))
        else:
            rc = out[k]
            rc.W += float(w[c] * norms[c])
            if norms[c] > rc.lam_max:
                rc.lam_max, rc.cell = float(norms[c]), int(c)
    return out


# -- p = 1 ---------------------------------------------------------------------

def _dot(u, a):
    return sum(x * y for x, y in zip(u, a) if x)


def _lp_exact_simplex(classes: list[RowClass], target: int, N: int):
    """``max rep_t . a  s.t.  sum W_i |rep_i . a| <= 1`` by the exact simplex."""
    K = len(classes)
    rep_t = classes[target].rep
    c = list(rep_t) + [-v for v in rep_t] + [0] * K
    A = []
    b = []
    for i, rc in enumerate(classes):
        slack = [0] * K
        slack[i] = -1
        A.append(list(rc.rep) + [-v for v in rc.rep] + slack)
        A.append([-v for v in rc.rep] + list(rc.rep) + slack)
        b += [0, 0]
    A.append([0] * (2 * N) + [Fraction(rc.W) for rc in classes])
    b.append(1)
    res = simplex.maximize(c, A, b)
    if res.status != simplex.OPTIMAL:
        raise InternalInconsistency("Nikol'skii LP unbounded on a rank-N subspace")
    a = [res.x[j] - res.x[N + j] for j in range(N)]
    return res.value, a


def _lp_float(classes: list[RowClass], target: int, N: int):
    """``min sum W_i s_i  s.t.  |rep_i . a| <= s_i, rep_t . a = 1`` in floating point.

    Returns the coefficients and the multipliers ``g_i`` of the absolute-value
    constraints (``|g_i| <= 1``, ``g_i = sign(rep_i . a)`` off the active set).
    """
    K = len(classes)
    R = csr_matrix(np.array([[float(v) for v in rc.rep] for rc in classes]))
    I = identity(K, format="csr")
    A_ub = vstack([hstack([R, -I]), hstack([-R, -I])]).tocsr()
    b_ub = np.zeros(2 * K)
    A_eq = np.zeros((1, N + K))
    A_eq[0, :N] = [float(v) for v in classes[target].rep]
    W = np.array([float(rc.W) for rc in classes])
    cost = np.concatenate([np.zeros(N), W])
    bounds = [(None, None)] * N + [(0, None)] * K
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs-ds")
    if res.status != 0:
        return None
    a = res.x[:N]
    mu = res.ineqlin.marginals
    g = (mu[K:] - mu[:K]) / W
    z = R @ a
    off = np.abs(z) > 1e-9 * max(np.max(np.abs(z)), 1e-300)
    if off.any() and np.dot(np.sign(z[off]), g[off]) < 0:
        g = -g
    return a, g


def _certify(classes: list[RowClass], target: int, N: int, a_float: np.ndarray, g_float: np.ndarray):
    """Exact optimum of the min form from a float primal-dual pair, or ``None``.

    The exact vertex comes from ``N - 1`` independent rows vanishing at
    ``a_float``. Optimality is the subgradient condition
    ``sum_i W_i g_i rep_i = lam rep_t`` with ``g_i = sign(rep_i . a)`` off the
    active set and ``|g_i| <= 1`` on it. Active multipliers that the float
    duals put at ``+-1`` stay fixed there; the rest are solved for exactly.
    """
    reps = [rc.rep for rc in classes]
    Rf = np.array([[float(v) for v in r] for r in reps])
    z = np.abs(Rf @ a_float)
    scale = max(float(np.max(z)), 1e-300)
    order = np.argsort(z, kind="stable")
    ech = RowEchelon()
    ech.add(reps[target])
    Z = []
    for i in order:
        if z[i] > 1e-7 * scale:
            break
        if i == target:
            continue
        if ech.add(reps[i]):
            Z.append(int(i))
            if len(Z) == N - 1:
                break
    if len(Z) != N - 1:
        return None
    rows = [list(reps[i]) for i in Z] + [list(reps[target])]
    a = exact_solve(rows, [0] * (N - 1) + [1])
    # basis of multipliers to solve for: active rows deepest inside (-1, 1), independent with rep_t
    active = [i for i in range(len(classes)) if i != target and _dot(reps[i], a) == 0]
    active.sort(key=lambda i: (abs(float(g_float[i])), i))
    ech = RowEchelon()
    ech.add(reps[target])
    basis = []
    for i in active:
        if len(basis) == N - 1:
            break
        if ech.add(reps[i]):
            basis.append(i)
    if len(basis) != N - 1:
        return None
    in_basis = set(basis)
    F = Fraction(0)
    rhs = [Fraction(0)] * N
    for i, rc in enumerate(classes):
        if i in in_basis:
            continue
        d = _dot(rc.rep, a)
        if d:
            s = 1 if d > 0 else -1
            F += rc.W * abs(d)
        else:
            s = Fraction(float(np.clip(g_float[i], -1.0, 1.0))).limit_denominator(10**6)
        if s:
            for j, v in enumerate(rc.rep):
                if v:
                    rhs[j] -= rc.W * s * v
    if F <= 0:
        return None
    # unknowns: g_i (i in basis) and lam;  sum_basis W_i g_i rep_i - lam rep_t = rhs
    B = [[classes[i].W * classes[i].rep[r] for i in basis] + [-reps[target][r]] for r in range(N)]
    try:
        sol = exact_solve(B, rhs)
    except InvalidArgument:
        return None
    g, lam = sol[:-1], sol[-1]
    if any(abs(x) > 1 for x in g) or lam != F:
        return None
    return 1 / F, a


def _class_lp(classes, target, N):
    K = len(classes)
    if (2 * K + 1) * (2 * N + 2 * K + 1) <= EXACT_SIMPLEX_MAX_ENTRIES:
        V, a = _lp_exact_simplex(classes, target, N)
        return V, a, "exact-simplex"
    sol = _lp_float(classes, target, N)
    if sol is not None:
        cert = _certify(classes, target, N, *sol)
        if cert is not None:
            return cert[0], cert[1], "certified-float-lp"
    V, a = _lp_exact_simplex(classes, target, N)
    return V, a, "exact-simplex"


def _nikolskii_p1_exact(X: Subspace, cells: Sequence[int] | None = None) -> NikolskiiResult:
    classes = row_classes(X)
    N = X.dim
    wanted = None
    if cells is not None:
        cell_set = set(cells)
        wanted = set()
        for k, rc in enumerate(classes):
            if rc.cell in cell_set:
                wanted.add(k)
        for c in cell_set:
            pr = _primitive(X.rows[c])
            if pr is not None:
                wanted.add(next(k for k, rc in enumerate(classes) if rc.rep == pr[0]))
    order = sorted(range(len(classes)), key=lambda k: (-(classes[k].lam_max / classes[k].W), k))
    best_val, best_a, best_cell = Fraction(0), [Fraction(0)] * N, 0
    methods = set()
    solves = 0
    for k in order:
        if wanted is not None and k not in wanted:
            continue
        rc = classes[k]
        if solves and rc.lam_max / rc.W <= best_val:
            break
        V, a, how = _class_lp(classes, k, N)
        solves += 1
        methods.add(how)
        val = rc.lam_max * V
        if val > best_val:
            best_val, best_a, best_cell = val, a, rc.cell
    return NikolskiiResult(1, sc.simplify(best_val), EXACT, [sc.simplify(v) for v in best_a], best_cell,
                           "+".join(sorted(methods)) or "none", lp_solves=solves)


def _nikolskii_p1_float(X: Subspace) -> NikolskiiResult:
    classes = _float_classes(X)
    N = X.dim
    best = (0.0, [0.0] * N, 0)
    for k, rc in enumerate(classes):
        sol = _lp_float(classes, k, N)
        if sol is None:
            continue
        a = sol[0]
        F = sum(c.W * abs(float(np.dot(c.rep, a))) for c in classes)
        val = rc.lam_max / F
        if val > best[0]:
            best = (val, [float(v) for v in a], rc.cell)
    return NikolskiiResult(1, best[0], EXACT, best[1], best[2], "float-lp", lp_solves=len(classes))


# -- p = 2 ---------------------------------------------------------------------

def _exact_inverse(G):
    N = len(G)
    cols = []
    for j in range(N):
        e = [0] * N
        e[j] = 1
        cols.append(exact_solve(G, e))
    return [[cols[j][i] for j in range(N)] for i in range(N)]


def _quad(Ginv, u):
    Gu = [sum(r[j] * u[j] for j in range(len(u)) if u[j]) for r in Ginv]
    return sum(x * y for x, y in zip(u, Gu)), Gu


def _nikolskii_p2(X: Subspace) -> NikolskiiResult:
    N = X.dim
    if X.exact:
        classes = row_classes(X)
        G = X.gram()
        Ginv = _exact_inverse(G)
        if len(classes) * N * N > P2_EXACT_MAX_OPS:
            Gf = np.array([[float(v) for v in r] for r in G])
            R = np.array([[float(v) for v in rc.rep] for rc in classes])
            lam = np.array([float(rc.lam_max) for rc in classes])
            q = lam**2 * np.einsum("ij,ij->i", R, np.linalg.solve(Gf, R.T).T)
            window = 1e-9 * np.linalg.cond(Gf) * np.max(q)
            cand = np.nonzero(q >= np.max(q) - window)[0][:4096]
        else:
            cand = range(len(classes))
        best = None
        for k in cand:
            rc = classes[k]
            q, Gu = _quad(Ginv, rc.rep)
            q = q * rc.lam_max**2
            if best is None or q > best[0]:
                best = (q, Gu, rc.cell)
        q, Gu, cell = best
        return NikolskiiResult(2, sc.sqrt(sc.simplify(q)), EXACT, [sc.simplify(v) for v in Gu], cell,
                               "exact-gram", squared=sc.simplify(q))
    U = X.float_matrix
    G = X.gram()
    sol = np.linalg.solve(G, U.T)
    q = np.einsum("ij,ji->i", U, sol)
    c = int(np.argmax(q))
    return NikolskiiResult(2, math.sqrt(float(q[c])), EXACT, [float(v) for v in sol[:, c]], c,
                           "float-gram", squared=float(q[c]))


# -- general p -----------------------------------------------------------------

def _p_ratio(U, w, a, p):
    y = U @ a
    den = float(np.dot(w, np.abs(y) ** p)) ** (1.0 / p)
    return float(np.max(np.abs(y))) / den if den > 0 else 0.0


def _unique_rows(U: np.ndarray, w: np.ndarray):
    """Merge rows equal up to sign (``|u . a|`` is sign blind), summing weights."""
    nz = np.abs(U) > 0
    has = nz.any(axis=1)
    U, w = U[has], w[has]
    first = np.argmax(np.abs(U) > 0, axis=1)
    sgn = np.sign(U[np.arange(len(U)), first])
    V = U * sgn[:, None]
    uniq, inv = np.unique(V, axis=0, return_inverse=True)
    wsum = np.zeros(len(uniq))
    np.add.at(wsum, inv.ravel(), w)
    rep_cell = np.full(len(uniq), -1)
    cells = np.nonzero(has)[0]
    for r, k in zip(cells[::-1], inv.ravel()[::-1]):
        rep_cell[k] = r
    return uniq, wsum, rep_cell


def _nikolskii_search(X: Subspace, p: float, budget: int, seed: int) -> NikolskiiResult:
    """Ascent on ``log |u_c . a| - log ||Ua||_p`` from the ``p = 2`` optimizers of the top cells."""
    U, w, cells = _unique_rows(X.float_matrix, X.space.float_weights)
    N = X.dim
    rng = np.random.default_rng(seed)
    G = (U * w[:, None]).T @ U
    sol = np.linalg.solve(G, U.T)
    q = np.einsum("ij,ji->i", U, sol)
    top = list(np.argsort(-q, kind="stable")[: min(8, len(q))])
    starts = [sol[:, k] for k in top] + [np.ones(N)] + [rng.standard_normal(N) for _ in range(4)]

    def value(a):
        y = U @ a
        den = float(np.dot(w, np.abs(y) ** p)) ** (1.0 / p)
        if den <= 0:
            return 0.0, 0
        k = int(np.argmax(np.abs(y)))
        return float(abs(y[k])) / den, k

    best_v, best_a, best_k = -1.0, None, 0
    for a0 in starts:
        a = a0 / np.linalg.norm(a0)
        v, k = value(a)
        step = 0.1
        for _ in range(budget):
            y = U @ a
            den_p = float(np.dot(w, np.abs(y) ** p))
            if den_p <= 0 or y[k] == 0:
                break
            grad = U[k] / y[k] - (U.T @ (w * np.abs(y) ** (p - 1) * np.sign(y))) / den_p
            trial = a + step * grad / max(np.linalg.norm(grad), 1e-300)
            trial /= np.linalg.norm(trial)
            tv, tk = value(trial)
            if tv > v:
                a, v, k = trial, tv, tk
                step = min(step * 1.5, 1.0)
            else:
                step *= 0.5
                if step < 1e-9:
                    break
        if v > best_v:
            best_v, best_a, best_k = v, a, k
    return NikolskiiResult(p, best_v, WITNESS, [float(x) for x in best_a], int(cells[best_k]), "search")


def nikolskii_constant(X: Subspace, p, budget: int = 200, seed: int = 0,
                       cells: Sequence[int] | None = None) -> NikolskiiResult:
    """``sup_{x in X, x != 0} ||x||_inf / ||x||_p`` with an attaining coefficient vector.

    Exact at ``p = 1`` (exact data) and ``p = 2``; a witness-backed lower bound
    otherwise. ``cells`` restricts the ``p = 1`` maximization to the given
    cells (used when a symmetry makes all cells equivalent).
    """
    p = _check_p(p)
    if p == 1:
        if X.exact:
            return _nikolskii_p1_exact(X, cells)
        return _nikolskii_p1_float(X)
    if p == 2:
        return _nikolskii_p2(X)
    return _nikolskii_search(X, float(p), budget, seed)


def nikolskii_ratio(X: Subspace, a: Sequence, p) -> object:
    """``||sum a_j x_j||_inf / ||sum a_j x_j||_p`` for one coefficient vector."""
    p = _check_p(p)
    cells = X.combination_cells(list(a))
    if not cells:
        return 0
    sup = max(abs(v) for v in cells.values())
    norm_p = X.combination_pth_power(list(a), p)
    if is_exact(sup) and is_exact(norm_p) and p == 1:
        return sc.simplify(Fraction(sup) / Fraction(norm_p))
    return float(sup) / float(sc.pth_root(norm_p, p))
