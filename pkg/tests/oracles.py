"""Independent reference computations used by the tests.

Nothing here calls the solvers under test: ratios are evaluated from raw
cell-value matrices, LPs go through scipy directly, and sign expectations
are enumerated pattern by pattern.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from normlab import PartitionSpace, StepFunction, Subspace
from normlab.discretize import SamplingSet
from normlab.errors import InvalidSubspace


def cell_matrix(X):
    return np.array([[float(v) for v in row] for row in X.rows])


def sampled_matrix(X, S):
    rows = X.rows
    return np.array([[float(v) for v in rows[X.space.locate(t)]] for t in S.points])


def p1_ratios(U, w, V, A):
    """``mean|V a| / sum w|U a|`` for each column ``a`` of ``A``."""
    num = np.abs(V @ A).mean(axis=0)
    den = w @ np.abs(U @ A)
    return num / den


def _sphere(rng, n, d):
    A = rng.standard_normal((d, n))
    return A / np.linalg.norm(A, axis=0)


def sweep_p1_extrema(X, S, total: int = 100_000, seed: int = 0, rounds: int = 10):
    """Min and max of the p=1 sampling ratio over ``total`` sphere directions.

    Half the budget is uniform on the sphere; the other half refines in caps
    of halving radius around the running minimizer and maximizer.
    """
    rng = np.random.default_rng(seed)
    U, V = cell_matrix(X), sampled_matrix(X, S)
    w = X.space.float_weights
    d = X.dim
    half = total // 2
    A = _sphere(rng, half, d)
    r = p1_ratios(U, w, V, A)
    lo_a, lo = A[:, np.argmin(r)], float(r.min())
    hi_a, hi = A[:, np.argmax(r)], float(r.max())
    per = half // (2 * rounds)
    radius = 0.05
    for _ in range(rounds):
        for target in ("lo", "hi"):
            c = lo_a if target == "lo" else hi_a
            B = c[:, None] + radius * rng.standard_normal((d, per))
            B /= np.linalg.norm(B, axis=0)
            rb = p1_ratios(U, w, V, B)
            if target == "lo" and rb.min() < lo:
                lo, lo_a = float(rb.min()), B[:, np.argmin(rb)]
            if target == "hi" and rb.max() > hi:
                hi, hi_a = float(rb.max()), B[:, np.argmax(rb)]
        radius /= 2
    return lo, hi


def random_rational_space(rng, cells: int, den: int = 12) -> PartitionSpace:
    cuts = sorted(set(int(v) for v in rng.integers(1, den * cells, size=cells - 1)))
    while len(cuts) < cells - 1:
        cuts = sorted(set(cuts) | {int(rng.integers(1, den * cells))})
    bps = [Fraction(0)] + [Fraction(c, den * cells) for c in cuts] + [Fraction(1)]
    return PartitionSpace.from_breakpoints(bps)


def random_instance(seed: int, max_dim: int = 3, max_cells: int = 8, max_points: int = 6):
    """Seeded ``(X, S)`` with ``dim <= 3``, ``<= 8`` cells and a valid sampling set of ``<= 6`` points."""
    rng = np.random.default_rng(seed)
    while True:
        d = int(rng.integers(1, max_dim + 1))
        K = int(rng.integers(d, max_cells + 1))
        space = random_rational_space(rng, K)
        vals = rng.integers(-3, 4, size=(d, K))
        try:
            X = Subspace([StepFunction(space, [int(v) for v in row]) for row in vals])
        except InvalidSubspace:
            continue
        M = int(rng.integers(d, max_points + 1))
        mids = space.midpoints()
        S = SamplingSet([mids[int(c)] for c in rng.integers(0, K, size=M)])
        if np.linalg.matrix_rank(sampled_matrix(X, S)) == d:
            return X, S


def nikolskii_p1_linprog(X) -> float:
    """``max_c max {x(c) : ||x||_1 <= 1}`` with variables ``(a, s)``, ``s >= |U a|``, solved by scipy."""
    U = cell_matrix(X)
    w = X.space.float_weights
    K, d = U.shape
    A_ub = np.block([[U, -np.eye(K)], [-U, -np.eye(K)], [np.zeros((1, d)), w[None, :]]])
    b_ub = np.concatenate([np.zeros(2 * K), [1.0]])
    bounds = [(None, None)] * d + [(0, None)] * K
    best = 0.0
    for c in {tuple(r) for r in U}:
        obj = np.concatenate([-np.array(c), np.zeros(K)])
        res = linprog(obj, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        best = max(best, -res.fun)
    return best


def sign_sum_moment(N: int, p) -> Fraction | float:
    """``E|eps_1 + ... + eps_N|**p`` by enumerating all ``2**N`` sign patterns."""
    total = 0
    integer = isinstance(p, int) or (isinstance(p, Fraction) and p.denominator == 1)
    for signs in itertools.product((1, -1), repeat=N):
        s = abs(sum(signs))
        total += s ** int(p) if integer else s ** float(p)
    return Fraction(total, 2**N) if integer else total / 2**N
