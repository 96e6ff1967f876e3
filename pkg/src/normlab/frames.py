"""Finite and partition-weighted frames, real phase retrieval, and the L1/L2 verifiers.

A :class:`FiniteFrame` is a weighted family ``(w_j, x_j)`` in ``R^N`` with
frame operator ``S = sum_j w_j x_j x_j^T``; weights play the role of the
``1/sqrt(M)`` normalizations (effective vectors are ``sqrt(w_j) x_j``). A
:class:`PartitionFrame` attaches one vector to each cell of a probability
partition, so its analysis operator lands in ``L_2`` of that partition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import scalar as sc
from .discretize import SamplingSet
from .errors import InvalidArgument, InvalidSubspace, ResourceBoundError
from .linalg import certify_rational_eigenvalue, exact_rank, jacobi_eigh, psd_power
from .nikolskii import nikolskii_constant
from .scalar import is_exact
from .stepfn import PartitionSpace, StepFunction, Subspace, lp_norm

SUBSET_SCAN_MAX = 22
PARSEVAL_TOL = 1e-10
VERIFY_TOL = 1e-9


def _vec(v):
    return tuple(sc.simplify(Fraction(x)) if is_exact(x) else float(x) for x in v)


class FiniteFrame:
    """Vectors ``x_1..x_M`` of ``R^N`` with positive weights (default 1)."""

    def __init__(self, vectors: Sequence[Sequence], weights: Sequence | None = None):
        vecs = tuple(_vec(v) for v in vectors)
        if not vecs:
            raise InvalidArgument("a frame needs at least one vector")
        N = len(vecs[0])
        if N == 0 or any(len(v) != N for v in vecs):
            raise InvalidArgument("frame vectors must share one positive dimension")
        if weights is None:
            weights = [1] * len(vecs)
        weights = tuple(sc.simplify(Fraction(w)) if is_exact(w) else float(w) for w in weights)
        if len(weights) != len(vecs) or any(not w > 0 for w in weights):
            raise InvalidArgument("need one positive weight per vector")
        self.vectors = vecs
        self.weights = weights
        self.dim = N

    @property
    def M(self) -> int:
        return len(self.vectors)

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for v in self.vectors for x in v) and all(is_exact(w) for w in self.weights)

    def float_vectors(self) -> np.ndarray:
        return np.array(self.vectors, dtype=float)

    def effective(self) -> np.ndarray:
        """Rows ``sqrt(w_j) x_j``."""
        return self.float_vectors() * np.sqrt(np.array(self.weights, dtype=float))[:, None]

    def frame_operator(self):
        """``sum_j w_j x_j x_j^T``, exact on exact data."""
        N = self.dim
        if self.exact:
            S = [[Fraction(0)] * N for _ in range(N)]
            for w, v in zip(self.weights, self.vectors):
                for i in range(N):
                    if v[i]:
                        for j in range(N):
                            S[i][j] += w * v[i] * v[j]
            return [[sc.simplify(x) for x in row] for row in S]
        E = self.effective()
        return E.T @ E

    def subframe(self, idx: Sequence[int]) -> "FiniteFrame":
        return FiniteFrame([self.vectors[i] for i in idx], [self.weights[i] for i in idx])

    def spans(self, idx: Sequence[int] | None = None) -> bool:
        idx = range(self.M) if idx is None else list(idx)
        vs = [self.vectors[i] for i in idx]
        if not vs:
            return False
        if self.exact:
            return exact_rank(vs, self.dim) == self.dim
        return _float_rank(np.array(vs, dtype=float)) == self.dim

    def to_json(self) -> dict:
        return {"dim": self.dim, "weights": [sc.to_json_value(w) for w in self.weights],
                "vectors": [[sc.to_json_value(x) for x in v] for v in self.vectors]}

    @classmethod
    def from_json(cls, d: dict) -> "FiniteFrame":
        return cls([[sc.from_json_value(x) for x in v] for v in d["vectors"]],
                   [sc.from_json_value(w) for w in d["weights"]])

    def __repr__(self):
        return f"FiniteFrame(N={self.dim}, M={self.M})"


def _float_rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > 1e-10 * max(float(s[0]), 1.0)))


class PartitionFrame:
    """One vector ``x_t`` per cell of a probability :class:`PartitionSpace`."""

    def __init__(self, space: PartitionSpace, vectors: Sequence[Sequence]):
        if len(vectors) != space.n_cells:
            raise InvalidArgument("need one vector per cell")
        self.space = space
        self.finite = FiniteFrame(vectors, space.weights)
        self.vectors = self.finite.vectors
        self.dim = self.finite.dim

    @property
    def norm_bound(self):
        """``sup_t ||x_t||`` (the ``beta sqrt(N)`` candidate)."""
        sq = [sum(x * x for x in v) for v in self.vectors]
        return sc.sqrt(max(sq)) if all(is_exact(s) for s in sq) else math.sqrt(max(float(s) for s in sq))

    @property
    def beta(self):
        """``sup_t ||x_t|| / sqrt(N)``."""
        return float(self.norm_bound) / math.sqrt(self.dim)

    def frame_operator(self):
        return self.finite.frame_operator()

    def is_parseval(self, tol: float = PARSEVAL_TOL) -> bool:
        S = self.frame_operator()
        N = self.dim
        if self.finite.exact:
            return all(S[i][j] == (1 if i == j else 0) for i in range(N) for j in range(N))
        return float(np.linalg.norm(np.array(S, dtype=float) - np.eye(N))) <= tol

    def analysis(self, x: Sequence) -> StepFunction:
        return analysis(self, x)

    def to_json(self) -> dict:
        d = self.finite.to_json()
        d["space"] = self.space.to_json()
        return d

    def __repr__(self):
        return f"PartitionFrame(N={self.dim}, cells={self.space.n_cells})"


@dataclass
class FrameBounds:
    A: object
    B: object
    is_frame: bool

    def __iter__(self):
        yield self.A
        yield self.B

    def to_json(self) -> dict:
        return {"A": sc.tagged(self.A), "B": sc.tagged(self.B), "is_frame": self.is_frame}


def _as_finite(F) -> FiniteFrame:
    return F.finite if isinstance(F, PartitionFrame) else F


def frame_bounds(F) -> FrameBounds:
    """Extreme eigenvalues of the frame operator (Jacobi); exact when rational and certified."""
    F = _as_finite(F)
    S = F.frame_operator()
    evals, _ = jacobi_eigh(np.array(S, dtype=float))
    A, B = float(evals[0]), float(evals[-1])
    spanning = F.spans()
    if F.exact:
        I = [[int(i == j) for j in range(F.dim)] for i in range(F.dim)]
        rb = certify_rational_eigenvalue(S, I, B, +1)
        B = rb if rb is not None else B
        if spanning:
            ra = certify_rational_eigenvalue(S, I, A, -1)
            A = ra if ra is not None else A
    if not spanning:
        A = 0
    return FrameBounds(A, B, spanning)


def analysis(F, x: Sequence):
    """``(<x, x_j>)_j`` for a finite frame (times ``sqrt(w_j)`` when weights are not 1),
    or the step function ``t -> <x, x_t>`` for a partition frame."""
    x = list(x)
    if isinstance(F, PartitionFrame):
        if len(x) != F.dim:
            raise InvalidArgument("dimension mismatch")
        vals = [sum(a * b for a, b in zip(x, v)) for v in F.vectors]
        return StepFunction(F.space, [sc.simplify(v) if is_exact(v) else float(v) for v in vals])
    if len(x) != F.dim:
        raise InvalidArgument("dimension mismatch")
    if all(w == 1 for w in F.weights):
        return [sc.simplify(sum(a * b for a, b in zip(x, v))) for v in F.vectors]
    return [float(v) for v in F.effective() @ np.array(x, dtype=float)]


def parseval_normalize(F):
    """Apply ``S^{-1/2}`` to every vector so the frame operator becomes the identity."""
    fin = _as_finite(F)
    if not fin.spans():
        raise InvalidArgument("not a frame: vectors do not span")
    S = np.array(fin.frame_operator(), dtype=float)
    T = psd_power(S, -0.5)
    vecs = [T @ np.array(v, dtype=float) for v in fin.vectors]
    if isinstance(F, PartitionFrame):
        return PartitionFrame(F.space, vecs)
    return FiniteFrame(vecs, fin.weights)


def subspace_frame_correspondence(Y, direction: str = "forward"):
    """Forward: the Parseval partition frame ``x_t = (e_j(t))_j`` of an orthonormal basis of ``Y``.
    Backward: the range of a partition frame's analysis operator (coordinate functions)."""
    if direction == "forward":
        if not isinstance(Y, Subspace):
            raise InvalidArgument("forward correspondence needs a Subspace")
        G = Y.gram()
        N = Y.dim
        if Y.exact and all(G[i][j] == 0 for i in range(N) for j in range(N) if i != j):
            roots = [sc.exact_root(G[i][i], 2) for i in range(N)]
            if all(r is not None and r > 0 for r in roots):
                vecs = [[sc.simplify(Fraction(v) / r) for v, r in zip(row, roots)] for row in Y.rows]
                return PartitionFrame(Y.space, vecs)
        Gf = np.array(G, dtype=float)
        try:
            L = np.linalg.cholesky(Gf)
        except np.linalg.LinAlgError as exc:
            raise InvalidSubspace("rank-deficient subspace") from exc
        E = Y.float_matrix @ np.linalg.inv(L).T
        return PartitionFrame(Y.space, E)
    if direction == "backward":
        if not isinstance(Y, PartitionFrame):
            raise InvalidArgument("backward correspondence needs a PartitionFrame")
        cols = list(zip(*Y.vectors))
        try:
            return Subspace([StepFunction(Y.space, col) for col in cols])
        except InvalidSubspace as exc:
            raise InvalidSubspace("frame vectors do not span: rank deficiency") from exc
    raise InvalidArgument(f"unknown direction {direction!r}")


# -- phase retrieval -------------------------------------------------------------

def _check_scan(M: int):
    if M > SUBSET_SCAN_MAX:
        raise ResourceBoundError(f"subset scan over 2**{M} subsets exceeds the bound 2**{SUBSET_SCAN_MAX}")


def complement_property(F: FiniteFrame) -> tuple[bool, tuple | None]:
    """Real phase retrieval test: every ``S`` or its complement spans ``R^N``.

    A failing ``S`` can always be enlarged to all vectors lying in one
    hyperplane spanned by frame vectors, so only those flats are examined.
    Returns ``(True, None)`` or ``(False, S)`` with 0-based indices.
    """
    F = _as_finite(F)
    _check_scan(F.M)
    N, M = F.dim, F.M
    if not F.spans():
        return False, ()
    if N == 1:
        return True, None
    seen = set()
    vecs = F.vectors if F.exact else F.float_vectors()
    for combo in itertools.combinations(range(M), N - 1):
        if F.exact:
            if exact_rank([vecs[i] for i in combo], N) != N - 1:
                continue
        elif _float_rank(vecs[list(combo)]) != N - 1:
            continue
        flat = tuple(i for i in range(M) if _in_span(F, combo, i))
        if flat in seen:
            continue
        seen.add(flat)
        rest = [i for i in range(M) if i not in flat]
        if not F.spans(rest):
            return False, flat
    return True, None


def _in_span(F: FiniteFrame, combo, i) -> bool:
    rows = [F.vectors[j] for j in combo] + [F.vectors[i]]
    if F.exact:
        return exact_rank(rows, F.dim) == len(combo)
    return _float_rank(np.array(rows, dtype=float)) == len(combo)


def sign_modulus_gap(F: FiniteFrame, x: Sequence, y: Sequence) -> float:
    """``|| |Tx| - |Ty| ||`` with the weighted analysis operator."""
    E = _as_finite(F).effective()
    return float(np.linalg.norm(np.abs(E @ np.asarray(x, float)) - np.abs(E @ np.asarray(y, float))))


def stability_ratio(F: FiniteFrame, x: Sequence, y: Sequence) -> float:
    """``min(||x - y||, ||x + y||) / || |Tx| - |Ty| ||`` (infinite when the gap vanishes)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    top = min(np.linalg.norm(x - y), np.linalg.norm(x + y))
    gap = sign_modulus_gap(F, x, y)
    if gap == 0:
        return math.inf if top > 0 else 0.0
    return float(top / gap)


@dataclass
class PRStabilityBounds:
    C_lower: float
    C_upper: float
    does_pr: bool
    witness_pair: tuple | None
    subset: tuple | None
    failing_subset: tuple | None = None
    surrogate: str = "C_upper = (min_S [lambda_min(Phi_S) + lambda_min(Phi_S^c)])^(-1/2)"

    def to_json(self) -> dict:
        pair = None if self.witness_pair is None else [[float(v) for v in w] for w in self.witness_pair]
        return {"C_lower": sc.tagged(self.C_lower), "C_upper": sc.tagged(self.C_upper), "does_pr": self.does_pr,
                "witness_pair": pair, "subset": None if self.subset is None else list(self.subset),
                "failing_subset": None if self.failing_subset is None else list(self.failing_subset),
                "surrogate": self.surrogate}


def _min_split_eigen(E: np.ndarray, chunk: int = 1 << 15):
    """``min_S lambda_min(Phi_S) + lambda_min(Phi_{S^c})`` over all splits and an argmin ``S``.

    ``S`` and its complement give the same value, so the last vector is
    pinned to the complement and ``2**(M-1)`` splits are scanned in batches.
    """
    M, N = E.shape
    P = np.einsum("ji,jk->jik", E, E).reshape(M, N * N)
    total = P.sum(axis=0)
    best, best_mask = math.inf, 0
    n_masks = 1 << (M - 1)
    shifts = np.arange(M - 1)
    for start in range(0, n_masks, chunk):
        masks = np.arange(start, min(start + chunk, n_masks))
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(float)
        PS = bits @ P[: M - 1]
        lam_s = np.linalg.eigvalsh(PS.reshape(-1, N, N))[:, 0]
        lam_c = np.linalg.eigvalsh((total[None, :] - PS).reshape(-1, N, N))[:, 0]
        vals = lam_s + lam_c
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_mask = float(vals[k]), int(masks[k])
    S = tuple(i for i in range(M - 1) if best_mask >> i & 1)
    return best, S


def pr_stability_bounds(F: FiniteFrame, budget: int = 200, seed: int = 0) -> PRStabilityBounds:
    """Certified ``C_upper`` from the split scan and a witnessed ``C_lower`` from search.

    The scan bound follows from ``|| |Tx| - |Ty| ||**2 = sum_j min(<u, x_j>**2, <v, x_j>**2)``
    with ``u = x - y`` and ``v = x + y``.
    """
    F = _as_finite(F)
    _check_scan(F.M)
    ok, fail = complement_property(F)
    if not ok:
        return PRStabilityBounds(math.inf, math.inf, False, None, None, fail)
    E = F.effective()
    M, N = E.shape
    lam, S = _min_split_eigen(E)
    C_upper = lam ** -0.5 if lam > 0 else math.inf
    Sc = [i for i in range(M) if i not in S]
    candidates = []
    for part_u, part_v in ((list(S), Sc), (Sc, list(S))):
        u = _min_eigvec(E[part_u], N)
        v = _min_eigvec(E[part_v], N)
        candidates.append(((u + v) / 2, (v - u) / 2))
    rng = np.random.default_rng(seed)
    best_r, best_pair = -1.0, None
    for x, y in candidates:
        r = stability_ratio(F, x, y)
        if r > best_r:
            best_r, best_pair = r, (x, y)
    for _ in range(4):
        x, y = rng.standard_normal(N), rng.standard_normal(N)
        r = stability_ratio(F, x, y)
        step = 0.3
        for _ in range(budget):
            tx = x + step * rng.standard_normal(N)
            ty = y + step * rng.standard_normal(N)
            tr = stability_ratio(F, tx, ty)
            if tr > r:
                x, y, r = tx, ty, tr
            else:
                step = max(step * 0.95, 1e-6)
        if r > best_r:
            best_r, best_pair = r, (x, y)
    return PRStabilityBounds(best_r, C_upper, True, best_pair, S)


def _min_eigvec(E: np.ndarray, N: int) -> np.ndarray:
    if len(E) == 0:
        return np.eye(N)[0]
    _, V = jacobi_eigh(E.T @ E)
    return V[:, 0]


# -- sampling partition frames ------------------------------------------------------

@dataclass
class FrameSample:
    sampling: SamplingSet
    cells: list
    frame: FiniteFrame
    A: object
    B: object
    beta: float
    strategy: str

    def __iter__(self):
        yield self.sampling
        yield self.frame
        yield (self.A, self.B)

    def to_json(self) -> dict:
        b2 = self.beta**2
        return {"strategy": self.strategy, "M": self.frame.M, "cells": self.cells,
                "points": [sc.to_json_value(t) for t in self.sampling.points],
                "A": sc.tagged(self.A), "B": sc.tagged(self.B), "beta": sc.tagged(self.beta),
                "A_over_beta2": sc.tagged(float(self.A) / b2), "B_over_beta2": sc.tagged(float(self.B) / b2)}


def sample_partition_frame(F: PartitionFrame, strategy: str, M: int, seed: int = 0) -> FrameSample:
    """Pick ``M`` cells and return the sampled frame ``(x_{t_j} / sqrt(M))`` with its bounds.

    ``uniform`` takes the cells under the points ``(j-1)/M``; ``random`` draws
    cells with probability equal to their mass; ``greedy`` repeatedly adds the
    cell that most increases the smallest eigenvalue of the running frame
    operator, without repeats while ``M`` does not exceed the cell count
    (a heuristic without approximation guarantee).
    """
    if M < 1:
        raise InvalidArgument("M must be positive")
    space = F.space
    K = space.n_cells
    if strategy == "uniform":
        if space.has_geometry:
            L = space.length
            pts = [Fraction(j, M) * L if is_exact(L) else j * L / M for j in range(M)]
            cells = [space.locate(t) for t in pts]
        else:
            cells = [(j * K) // M for j in range(M)]
    elif strategy == "random":
        rng = np.random.default_rng(seed)
        p = space.float_weights / float(np.sum(space.float_weights))
        cells = [int(c) for c in rng.choice(K, size=M, p=p)]
    elif strategy == "greedy":
        cells = _greedy_cells(F, M)
    else:
        raise InvalidArgument(f"unknown strategy {strategy!r}")
    points = space.midpoints() if space.has_geometry else list(range(K))
    S = SamplingSet([points[c] for c in cells])
    frame = FiniteFrame([F.vectors[c] for c in cells], [Fraction(1, M)] * M)
    A, B = frame_bounds(frame)
    return FrameSample(S, cells, frame, A, B, F.beta, strategy)


def _greedy_cells(F: PartitionFrame, M: int) -> list[int]:
    X = F.finite.float_vectors()
    N = F.dim
    S = np.zeros((N, N))
    cells = []
    for _ in range(M):
        best, best_c = None, 0
        for c in range(len(X)):
            if c in cells and M <= len(X):
                continue
            ev = np.linalg.eigvalsh(S + np.outer(X[c], X[c]))
            rank = int(np.sum(ev > 1e-12 * max(ev[-1], 1.0)))
            score = (rank, round(float(ev[0]), 12), round(float(ev.sum()), 12))
            if best is None or score > best:
                best, best_c = score, c
        cells.append(best_c)
        S += np.outer(X[best_c], X[best_c])
    return cells


# -- lemma and theorem verifiers ---------------------------------------------------

def _l1(f: StepFunction) -> float:
    return float(lp_norm(f.to_float(), 1))


def _l2(f: StepFunction) -> float:
    return float(lp_norm(f.to_float(), 2))


@dataclass
class LemmaTrace:
    x: list
    l1: float
    l2: float
    gamma: float
    tail: list
    prob_tail: float
    markov_ok: bool
    companion: int
    companion_tail: float
    companion_ok: bool
    gap: float
    gap_ok: bool
    stability_ok: bool
    bound_value: float
    conclusion_ok: bool
    slack: float

    @property
    def ok(self) -> bool:
        return self.markov_ok and self.companion_ok and self.gap_ok and self.conclusion_ok

    def to_json(self) -> dict:
        return {"x": self.x, "l1": self.l1, "l2": self.l2, "gamma": self.gamma, "tail": self.tail,
                "prob_tail": self.prob_tail, "markov_ok": self.markov_ok, "companion": self.companion,
                "companion_tail": self.companion_tail, "companion_ok": self.companion_ok, "gap": self.gap,
                "gap_ok": self.gap_ok, "stability_ok": self.stability_ok, "bound_value": self.bound_value,
                "conclusion_ok": self.conclusion_ok, "slack": self.slack, "ok": self.ok}


@dataclass
class LemmaReport:
    kappa: float
    beta: float
    N: int
    traces: list = field(default_factory=list)
    preconditions: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(not t.ok for t in self.traces)

    @property
    def markov_violations(self) -> int:
        return sum(not t.markov_ok for t in self.traces)

    @property
    def worst_slack(self) -> float:
        return min((t.slack for t in self.traces), default=math.inf)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self, include_traces: bool = False) -> dict:
        d = {"kappa": sc.tagged(self.kappa), "beta": sc.tagged(self.beta), "N": self.N,
             "probes": len(self.traces), "violations": self.violations,
             "markov_violations": self.markov_violations, "worst_slack": sc.tagged(self.worst_slack),
             "preconditions": self.preconditions, "passed": self.passed}
        if include_traces:
            d["traces"] = [t.to_json() for t in self.traces]
        return d


def _orthonormal_cells(Y: Subspace) -> np.ndarray:
    """Cell values of an orthonormal basis of ``Y`` (columns)."""
    G = np.array(Y.gram(), dtype=float)
    L = np.linalg.cholesky(G)
    return Y.float_matrix @ np.linalg.inv(L).T


def verify_stabpr_lemma(Y: Subspace, kappa, beta, probes=1000, seed: int = 0, tol: float = VERIFY_TOL) -> LemmaReport:
    """Replay the L1/L2 comparison proof on unit probes of ``Y`` (probability space).

    ``probes`` is a count (seeded random unit vectors) or a list of coefficient
    vectors in an orthonormal basis of ``Y``.
    """
    space = Y.space
    if not space.is_probability:
        raise InvalidArgument("the lemma needs a probability space")
    N = Y.dim
    kappa, beta = float(kappa), float(beta)
    w = space.float_weights
    E = _orthonormal_cells(Y)
    report = LemmaReport(kappa, beta, N)
    nik = nikolskii_constant(Y, 2)
    if float(nik.value) > beta * math.sqrt(N) * (1 + tol):
        report.preconditions.append(f"sup ||y||_inf/||y||_2 = {float(nik.value)} exceeds beta*sqrt(N)")
    if isinstance(probes, int):
        rng = np.random.default_rng(seed)
        coeffs = [rng.standard_normal(N) for _ in range(probes)]
    else:
        coeffs = [np.asarray(c, dtype=float) for c in probes]
    factor = (1 + beta**2) ** 1.5
    for c in coeffs:
        c = c / np.linalg.norm(c)
        x = E @ c
        l1 = float(np.dot(w, np.abs(x)))
        l2 = math.sqrt(float(np.dot(w, x * x)))
        gamma = l1 ** (1 / 3)
        tail = np.abs(x) > gamma
        prob = float(np.sum(w[tail]))
        markov_ok = prob <= l1 ** (2 / 3) * (1 + tol) + tol
        tails = [math.sqrt(float(np.sum(w[tail] * E[tail, j] ** 2))) for j in range(N)]
        j = int(np.argmin(tails))
        comp_ok = tails[j] <= math.sqrt(prob) * beta * (1 + tol) + tol
        y = E[:, j]
        f, g = x + y, x - y
        gap = math.sqrt(float(np.dot(w, (np.abs(f) - np.abs(g)) ** 2)))
        gap_ok = gap**3 / 8 <= factor * l1 * (1 + tol) + tol
        top = min(math.sqrt(float(np.dot(w, (f - g) ** 2))), math.sqrt(float(np.dot(w, (f + g) ** 2))))
        stab_ok = top <= kappa * gap * (1 + tol) + tol if math.isfinite(kappa) else True
        if not stab_ok:
            report.preconditions.append(f"kappa={kappa} fails on a probe pair")
        bound = kappa**3 * factor * l1 if math.isfinite(kappa) else math.inf
        concl = l1 <= l2 * (1 + tol) and l2 <= bound * (1 + tol)
        slack = (bound - l2) / l2 if math.isfinite(bound) else math.inf
        report.traces.append(LemmaTrace([float(v) for v in c], l1, l2, gamma, np.nonzero(tail)[0].tolist(),
                                        prob, markov_ok, j, tails[j], comp_ok, gap, gap_ok, stab_ok,
                                        bound, concl, slack))
    return report


@dataclass
class TheoremReport:
    constants: dict
    provenance: dict
    probes: int = 0
    violations_l2: int = 0
    violations_l1: int = 0
    worst_slack_l2: float = math.inf
    worst_slack_l1: float = math.inf
    preconditions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations_l2 == 0 and self.violations_l1 == 0

    def to_json(self) -> dict:
        return {"constants": {k: sc.tagged(v) for k, v in self.constants.items()},
                "provenance": self.provenance, "probes": self.probes,
                "violations_l2": self.violations_l2, "violations_l1": self.violations_l1,
                "worst_slack_l2": sc.tagged(self.worst_slack_l2), "worst_slack_l1": sc.tagged(self.worst_slack_l1),
                "preconditions": self.preconditions, "passed": self.passed}


def verify_pr_discretization_theorem(F: PartitionFrame, S: SamplingSet, probes: int = 1000, seed: int = 0,
                                     budget: int = 200, tol: float = VERIFY_TOL) -> TheoremReport:
    """Check the L2 and L1 sampling inequalities for ``y = Tx`` on unit probes ``x``.

    ``A, B`` are the bounds of ``(x_{t_j} / sqrt(M))``, ``C`` its ``C_upper``,
    ``kappa`` the ``C_upper`` of ``F`` itself and ``beta = sup ||x_t|| / sqrt(N)``.
    """
    N = F.dim
    cells = S.cells(F.space)
    M = S.M
    sampled = FiniteFrame([F.vectors[c] for c in cells], [Fraction(1, M)] * M)
    A, B = frame_bounds(sampled)
    C = pr_stability_bounds(sampled, budget, seed).C_upper
    kappa = pr_stability_bounds(F.finite, budget, seed).C_upper
    beta = F.beta
    consts = {"A": A, "B": B, "C": C, "kappa": kappa, "beta": beta, "M": M, "N": N}
    prov = {"A": "frame_bounds of the sampled frame (x_tj/sqrt(M))",
            "B": "frame_bounds of the sampled frame (x_tj/sqrt(M))",
            "C": "pr_stability_bounds(sampled).C_upper (certified subset-scan surrogate)",
            "kappa": "pr_stability_bounds(continuous frame).C_upper (certified subset-scan surrogate)",
            "beta": "sup_t ||x_t|| / sqrt(N)"}
    rep = TheoremReport(consts, prov)
    if not F.is_parseval():
        rep.preconditions.append("frame is not Parseval")
    Af, Bf, Cf, kf = float(A), float(B), float(C), float(kappa)
    if Af <= 0:
        rep.preconditions.append("sampled family is not a frame")
        return rep
    lo1 = Af**0.5 * Bf**-1.5 * Cf**-3 * (1 + beta**2 / Af) ** -1.5 if math.isfinite(Cf) else 0.0
    hi1 = Bf**0.5 * kf**3 * (1 + beta**2) ** 1.5 if math.isfinite(kf) else math.inf
    consts["L1_lower_factor"] = lo1
    consts["L1_upper_factor"] = hi1
    V = F.finite.float_vectors()
    w = F.space.float_weights
    Vs = V[cells]
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        x = rng.standard_normal(N)
        x /= np.linalg.norm(x)
        y = V @ x
        ys = Vs @ x
        l2sq = float(np.dot(w, y * y))
        l1 = float(np.dot(w, np.abs(y)))
        m2 = float(np.mean(ys * ys))
        m1 = float(np.mean(np.abs(ys)))
        s2 = min(m2 - Af * l2sq, Bf * l2sq - m2) / l2sq
        s1 = min(m1 - lo1 * l1, (hi1 * l1 - m1) if math.isfinite(hi1) else math.inf) / l1
        rep.probes += 1
        if s2 < -tol:
            rep.violations_l2 += 1
        if s1 < -tol:
            rep.violations_l1 += 1
        rep.worst_slack_l2 = min(rep.worst_slack_l2, s2)
        rep.worst_slack_l1 = min(rep.worst_slack_l1, s1)
    return rep


# -- standard examples ----------------------------------------------------------------

def mercedes_frame() -> FiniteFrame:
    """``(1, 0), (-1/2, sqrt(3)/2), (-1/2, -sqrt(3)/2)`` with unit weights."""
    r = math.sqrt(3) / 2
    return FiniteFrame([(1.0, 0.0), (-0.5, r), (-0.5, -r)])


def mercedes_partition_frame() -> PartitionFrame:
    """Three cells of mass 1/3 carrying ``sqrt(2)`` times the Mercedes vectors (Parseval)."""
    from .stepfn import make_uniform_partition

    s = math.sqrt(2)
    vecs = [tuple(s * x for x in v) for v in mercedes_frame().vectors]
    return PartitionFrame(make_uniform_partition(3), vecs)


def random_parseval_partition_frame(N: int, cells: int, seed: int = 0) -> PartitionFrame:
    """Gaussian vectors on a uniform ``cells``-cell partition, Parseval-normalized."""
    from .stepfn import make_uniform_partition

    rng = np.random.default_rng(seed)
    F = PartitionFrame(make_uniform_partition(cells), rng.standard_normal((cells, N)))
    return parseval_normalize(F)
