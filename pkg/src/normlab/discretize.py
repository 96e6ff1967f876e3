"""Sampling sets, empirical p-sums and discretization constants.

For a subspace ``X`` with cell-value matrix ``U`` (weights ``w``) and a
sampling set with evaluation matrix ``V`` (row ``k`` holds ``x_j(t_k)``), the
discretization constants are the extreme values of

    ratio(a) = (1/M) sum_k |(V a)_k|**p / sum_i w_i |(U a)_i|**p.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import scalar as sc
from .constructions import (L1FamilyMeta, _check_p_below_two, rademacher_sign, rademacher_scales,
                            y_coordinate)
from .errors import InternalInconsistency, InvalidArgument, InvalidSamplingSet, InvalidSubspace, ResourceBoundError
from .linalg import certify_rational_eigenvalue, exact_nullspace, exact_rank, generalized_eigh, small_nullspace
from .nikolskii import NikolskiiResult, nikolskii_constant
from .scalar import ScaledRational, is_exact
from .stepfn import PartitionSpace, StepFunction, Subspace, _check_p, lp_norm_pth_power

EXACT = "exact"
WITNESS = "witness-bound"
P1_EXACT_MAX_DIM = 6


class SamplingSet:
    """Points ``t_1..t_M`` of ``[0, L)``, repetitions allowed."""

    def __init__(self, points: Sequence):
        pts = tuple(sc.simplify(Fraction(t)) if is_exact(t) else float(t) for t in points)
        if not pts:
            raise InvalidArgument("a sampling set needs at least one point")
        self.points = pts
        self._cells: dict[int, list[int]] = {}

    @property
    def M(self) -> int:
        return len(self.points)

    def cells(self, space: PartitionSpace) -> list[int]:
        """Cell index of every point (cached per space)."""
        key = id(space)
        hit = self._cells.get(key)
        if hit is None:
            hit = [space.locate(t) for t in self.points]
            self._cells[key] = hit
        return hit

    def __len__(self):
        return self.M

    def __eq__(self, other):
        return isinstance(other, SamplingSet) and self.points == other.points

    def __repr__(self):
        return f"SamplingSet(M={self.M})"

    def to_text(self) -> str:
        return "".join(sc.to_text(t) + "\n" for t in self.points)

    @classmethod
    def from_text(cls, text: str) -> "SamplingSet":
        pts = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                pts.append(sc.parse_scalar(line))
        return cls(pts)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "SamplingSet":
        return cls.from_text(Path(path).read_text())


def uniform_sampling(M: int, L=1) -> SamplingSet:
    """``t_j = (j-1) L / M``."""
    if not isinstance(M, int) or M < 1:
        raise InvalidArgument("M must be a positive integer")
    L = Fraction(L) if is_exact(L) else L
    return SamplingSet([(j * L) / M for j in range(M)])


def random_sampling(M: int, L=1, seed: int = 0, denominator: int = 2**20) -> SamplingSet:
    """``M`` seeded random rational points ``k / denominator * L``."""
    rng = np.random.default_rng(seed)
    ks = rng.integers(0, denominator, size=M)
    return SamplingSet([Fraction(int(k), denominator) * Fraction(L) for k in ks])


def empirical_p_sum(f: StepFunction, S: SamplingSet, p) -> object:
    """``(1/M) sum_j |f(t_j)|**p``; exact for exact values and integer ``p``."""
    p = _check_p(p)
    vals = [f.values[c] for c in S.cells(f.space)]
    k = sc._integer_exponent(p)
    if f.exact and is_exact(p) and k is not None:
        return sc.simplify(Fraction(sum(abs(v) ** k for v in vals), S.M))
    return float(np.mean(np.abs(np.array([float(v) for v in vals])) ** float(p)))


def evaluation_rows(X: Subspace, S: SamplingSet) -> list[tuple]:
    rows = X.rows
    return [rows[c] for c in S.cells(X.space)]


def validity_check(X: Subspace, S: SamplingSet, p=1) -> bool:
    """Whether ``sum_j |x(t_j)|**p > 0`` for every nonzero ``x``: rank of ``[x_j(t_k)]`` is ``N``."""
    rows = evaluation_rows(X, S)
    if X.exact:
        return exact_rank(rows, X.dim) == X.dim
    return int(np.linalg.matrix_rank(np.array(rows, dtype=float))) == X.dim


def annihilated_vector(X: Subspace, S: SamplingSet) -> list | None:
    """A nonzero ``a`` with ``x(t_j) = 0`` at every point, or ``None`` when ``S`` is valid."""
    rows = evaluation_rows(X, S)
    distinct = list(dict.fromkeys(rows))
    if X.exact:
        ns = (small_nullspace(distinct, X.dim) if len(distinct) * X.dim <= 4000
              else exact_nullspace(distinct, X.dim))
        return [sc.simplify(v) for v in ns[0]] if ns else None
    A = np.array(distinct, dtype=float)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    return [float(v) for v in vt[-1]] if rank < X.dim else None


def sampling_ratio(X: Subspace, S: SamplingSet, a: Sequence, p) -> object:
    """``(1/M) sum_j |x(t_j)|**p / ||x||_p**p`` for ``x = sum a_j x_j``."""
    p = _check_p(p)
    a = list(a)
    den = X.combination_pth_power(a, p)
    if den == 0:
        raise InvalidArgument("zero coefficient vector")
    k = sc._integer_exponent(p)
    exact = X.exact and all(is_exact(v) for v in a) and is_exact(p) and k is not None
    num = 0
    for row in evaluation_rows(X, S):
        v = sum(x * y for x, y in zip(row, a) if x)
        num += abs(v) ** k if exact else abs(float(v)) ** float(p)
    if exact:
        return sc.simplify(Fraction(num, S.M) / Fraction(den))
    return float(num) / S.M / float(den)


def _enc_vec(v):
    return None if v is None else [sc.to_json_value(x) for x in v]


@dataclass
class DiscretizationReport:
    p: object
    A_value: object
    B_value: object
    A_kind: str
    B_kind: str
    A_witness: list | None
    B_witness: list | None
    valid: bool
    M: int
    family: str | None = None
    method: str = ""

    def to_json(self) -> dict:
        return {"p": sc.to_json_value(self.p),
                "A": {**sc.tagged(self.A_value), "kind": self.A_kind, "witness": _enc_vec(self.A_witness)},
                "B": {**sc.tagged(self.B_value), "kind": self.B_kind, "witness": _enc_vec(self.B_witness)},
                "valid": self.valid, "M": self.M, "family": self.family, "method": self.method}


def _one_dim_report(X, S, p, family, method):
    a = [1]
    r = sampling_ratio(X, S, a, p)
    return DiscretizationReport(p, r, r, EXACT, EXACT, a, a, r != 0, S.M, family, method)


# -- p = 2: generalized eigenvalues ----------------------------------------------

def _sampling_matrix(X: Subspace, S: SamplingSet):
    N = X.dim
    rows = evaluation_rows(X, S)
    if X.exact:
        H = [[Fraction(0)] * N for _ in range(N)]
        counts: dict[tuple, int] = {}
        for r in rows:
            counts[r] = counts.get(r, 0) + 1
        for r, m in counts.items():
            nz = [(j, v) for j, v in enumerate(r) if v]
            for j, v in nz:
                for k, u in nz:
                    H[j][k] += m * v * u
        return [[sc.simplify(h / S.M) for h in row] for row in H]
    V = np.array(rows, dtype=float)
    return V.T @ V / S.M


def disc_constants_p2(X: Subspace, S: SamplingSet, family: str | None = None) -> DiscretizationReport:
    """Extreme generalized eigenvalues of ``(V^T V / M, Gram(X))``.

    Eigenvalues that are rational and certified exactly (definiteness of
    ``H - rG`` plus singularity) are reported exactly; all others are float64.
    """
    N = X.dim
    G = X.gram()
    Gf = np.array(G, dtype=float)
    try:
        np.linalg.cholesky(Gf)
    except np.linalg.LinAlgError as exc:
        raise InvalidSubspace("Gram matrix is singular") from exc
    if N == 1:
        return _one_dim_report(X, S, 2, family, "p2-one-dim")
    valid = validity_check(X, S, 2)
    H = _sampling_matrix(X, S)
    evals, vecs = generalized_eigh(np.array(H, dtype=float), Gf)
    wa = [float(v) for v in vecs[:, 0]]
    wb = [float(v) for v in vecs[:, -1]]
    A = float(evals[0])
    B = float(evals[-1])
    if X.exact:
        rb = certify_rational_eigenvalue(H, G, B, +1)
        B = rb if rb is not None else B
        if valid:
            ra = certify_rational_eigenvalue(H, G, A, -1)
            A = ra if ra is not None else A
    if not valid:
        A = 0
        wa = annihilated_vector(X, S)
    return DiscretizationReport(2, A, B, EXACT, EXACT, wa, wb, valid, S.M, family, "generalized-eigen")


# -- p = 1: exact ray enumeration ------------------------------------------------

def _projective_key(row) -> tuple | None:
    fr = [Fraction(v) for v in row]
    piv = next((v for v in fr if v != 0), None)
    if piv is None:
        return None
    return tuple(v / piv for v in fr)


def disc_constants_p1_exact(X: Subspace, S: SamplingSet, max_dim: int = P1_EXACT_MAX_DIM,
                            family: str | None = None) -> DiscretizationReport:
    """Exact ``p = 1`` constants by enumerating every ray cut out by ``N - 1`` forms.

    Numerator and denominator are both linear on each cone of the hyperplane
    arrangement given by the sampling rows and the cell rows, so the ratio is
    linear-fractional there and its extremes sit on extreme rays.
    """
    if not X.exact:
        raise InvalidArgument("disc_constants_p1_exact needs exact data")
    N = X.dim
    if N > max_dim:
        raise ResourceBoundError(f"dim {N} exceeds the ray-enumeration bound {max_dim}")
    if N == 1:
        return _one_dim_report(X, S, 1, family, "p1-one-dim")
    valid = validity_check(X, S, 1)
    forms = {}
    for row in list(evaluation_rows(X, S)) + list(X.rows):
        key = _projective_key(row)
        if key is not None:
            forms.setdefault(key, None)
    forms = list(forms)
    rays = {}
    for combo in itertools.combinations(forms, N - 1):
        ns = small_nullspace(list(combo), N)
        if len(ns) != 1:
            continue
        key = _projective_key(ns[0])
        rays.setdefault(key, ns[0])
    best_lo = best_hi = None
    for ray in rays.values():
        r = sampling_ratio(X, S, ray, 1)
        if best_lo is None or r < best_lo[0]:
            best_lo = (r, ray)
        if best_hi is None or r > best_hi[0]:
            best_hi = (r, ray)
    A, wa = best_lo
    B, wb = best_hi
    if not valid:
        A, wa = 0, annihilated_vector(X, S)
    return DiscretizationReport(1, sc.simplify(A), sc.simplify(B), EXACT, EXACT,
                                [sc.simplify(v) for v in wa], [sc.simplify(v) for v in wb],
                                valid, S.M, family, f"ray-enumeration({len(rays)} rays)")


# -- general p: witness search ---------------------------------------------------

def _snap_dyadic(a: np.ndarray, bits: int = 24) -> list:
    m = float(np.max(np.abs(a)))
    q = np.rint(a / m * 2**bits).astype(np.int64)
    if not q.any():
        q[int(np.argmax(np.abs(a)))] = 1
    return [sc.simplify(Fraction(int(v), 2**bits)) for v in q]


def disc_constants_search(X: Subspace, S: SamplingSet, p, budget: int = 200, seed: int = 0,
                          family: str | None = None) -> DiscretizationReport:
    """Multi-start (sub)gradient search on ``log ratio`` over the sphere.

    ``A_value`` is the ratio of the best minimizing witness (an upper bound on
    the true ``A``), ``B_value`` that of the best maximizer (a lower bound on
    ``B``). Witnesses are snapped to dyadic rationals and re-evaluated exactly
    when the data and ``p`` allow it, so reported values reproduce bit-exactly.
    """
    p = _check_p(p)
    N = X.dim
    if N == 1:
        return _one_dim_report(X, S, p, family, "search-one-dim")
    valid = validity_check(X, S, p)
    pf = float(p)
    U = X.float_matrix
    w = X.space.float_weights
    V = np.array(evaluation_rows(X, S), dtype=float)
    M = S.M
    rng = np.random.default_rng(seed)

    def log_ratio(a):
        num = float(np.mean(np.abs(V @ a) ** pf))
        den = float(np.dot(w, np.abs(U @ a) ** pf))
        return (math.log(num) if num > 0 else -math.inf) - math.log(den)

    def grad(a):
        va, ua = V @ a, U @ a
        num = float(np.mean(np.abs(va) ** pf))
        den = float(np.dot(w, np.abs(ua) ** pf))
        gn = pf * (V.T @ (np.abs(va) ** (pf - 1) * np.sign(va))) / M
        gd = pf * (U.T @ (w * np.abs(ua) ** (pf - 1) * np.sign(ua)))
        return (gn / num if num > 0 else np.zeros(N)) - gd / den

    starts = [np.eye(N)[j] for j in range(N)] + [np.ones(N)]
    try:
        G = (U * w[:, None]).T @ U
        evals, vecs = generalized_eigh(V.T @ V / M, G)
        starts += [vecs[:, 0], vecs[:, -1]]
    except InvalidArgument:
        pass
    starts += [rng.standard_normal(N) for _ in range(4)]

    def run(sign):
        best_v, best_a = -math.inf, None
        for a0 in starts:
            a = a0 / np.linalg.norm(a0)
            v = sign * log_ratio(a)
            step = 0.2
            for _ in range(budget):
                g = sign * grad(a)
                gn = np.linalg.norm(g)
                direction = g / gn if gn > 0 else rng.standard_normal(N)
                trial = a + step * direction
                trial /= np.linalg.norm(trial)
                tv = sign * log_ratio(trial)
                if tv > v:
                    a, v = trial, tv
                    step = min(step * 1.5, 1.0)
                else:
                    # kinks stall plain subgradients; try a random nudge at this scale
                    nudge = a + step * rng.standard_normal(N) / math.sqrt(N)
                    nudge /= np.linalg.norm(nudge)
                    nv = sign * log_ratio(nudge)
                    if nv > v:
                        a, v = nudge, nv
                    else:
                        step *= 0.6
                        if step < 1e-10:
                            break
            if v > best_v:
                best_v, best_a = v, a
        return best_a

    a_lo = run(-1)
    a_hi = run(+1)
    exact = X.exact and is_exact(p) and sc._integer_exponent(p) is not None
    wa = _snap_dyadic(a_lo) if exact else [float(v) for v in a_lo]
    wb = _snap_dyadic(a_hi) if exact else [float(v) for v in a_hi]
    A = sampling_ratio(X, S, wa, p)
    B = sampling_ratio(X, S, wb, p)
    if not valid:
        A, wa = 0, annihilated_vector(X, S)
        return DiscretizationReport(p, A, B, EXACT, WITNESS, wa, wb, valid, M, family, "search")
    return DiscretizationReport(p, A, B, WITNESS, WITNESS, wa, wb, valid, M, family, "search")


def disc_constants(X: Subspace, S: SamplingSet, p, budget: int = 200, seed: int = 0,
                   family: str | None = None) -> DiscretizationReport:
    """Dispatch: eigenvalues at ``p = 2``, ray enumeration at ``p = 1`` (small exact ``X``), search otherwise."""
    p = _check_p(p)
    if p == 2:
        return disc_constants_p2(X, S, family)
    if p == 1 and X.exact and X.dim <= P1_EXACT_MAX_DIM:
        return disc_constants_p1_exact(X, S, family=family)
    return disc_constants_search(X, S, p, budget, seed, family)


# -- witnesses from the proofs ---------------------------------------------------

@dataclass
class AdversarialWitness:
    j: int
    tuple: tuple
    ratio: object
    bound: object
    holds: bool
    empirical: object = None
    norm: object = None

    def __iter__(self):
        yield self.j
        yield self.ratio

    def to_json(self) -> dict:
        return {"j": self.j, "tuple": list(self.tuple), "ratio": sc.tagged(self.ratio),
                "bound": sc.tagged(self.bound), "holds": self.holds,
                "empirical": sc.tagged(self.empirical), "norm": sc.tagged(self.norm)}


def l1_adversarial_witness(meta: L1FamilyMeta, X: Subspace, S: SamplingSet) -> AdversarialWitness:
    """The basis vector whose bumps sit under the sampling points of blocks ``1..n``.

    For each ``k <= n`` the first sampling point in block ``k`` selects the bump
    index ``i_k``; ``x_j`` for the tuple ``(i_1, ..., i_n)`` is then sampled on
    its own block and on all ``n`` bumps.
    """
    tup = []
    for k in range(1, meta.n + 1):
        lo, hi = meta.block(k)
        t = next((t for t in S.points if lo <= t < hi), None)
        if t is None:
            raise InternalInconsistency(f"no sampling point in block {k}; the sampling set cannot be valid")
        tup.append(meta.bump_index_of_point(k, t))
    j = meta.index_of_tuple(tup)
    x = X.basis[j - 1]
    emp = empirical_p_sum(x, S, 1)
    norm = lp_norm_pth_power(x, 1)
    ratio = sc.simplify(Fraction(emp) / Fraction(norm))
    bound = sc.simplify(Fraction(meta.n * meta.N) / ((1 + meta.eps) * S.M))
    return AdversarialWitness(j, tuple(tup), ratio, bound, ratio >= bound, emp, norm)


def l1_valid_sampling(meta: L1FamilyMeta, extra: int, seed: int) -> SamplingSet:
    """One random point per block plus ``extra`` uniform points, as exact rationals (valid by construction)."""
    rng = np.random.default_rng(seed)
    den = meta.grid_size * 64
    pts = []
    for j in range(1, meta.N + 1):
        lo = (j - 1) * 64 * meta.radix
        pts.append(Fraction(int(rng.integers(lo, lo + 64 * meta.radix)), den))
    pts += [Fraction(int(k), den) for k in rng.integers(0, den, size=extra)]
    order = rng.permutation(len(pts))
    return SamplingSet([pts[i] for i in order])


@dataclass
class RademacherSamplingReport:
    N: int
    p: Fraction
    M: int
    in_support: int
    p_sum: ScaledRational
    bound: ScaledRational
    holds: bool
    valid: bool = True

    def to_json(self) -> dict:
        return {"N": self.N, "p": sc.to_json_value(self.p), "M": self.M, "in_support": self.in_support,
                "p_sum": self.p_sum.to_json(), "bound": self.bound.to_json(),
                "p_sum_value": sc.tagged(self.p_sum.value()), "bound_value": sc.tagged(self.bound.value()),
                "holds": self.holds, "valid": self.valid}


def rademacher_sampling_bound(N: int, p, S: SamplingSet) -> RademacherSamplingReport:
    """``sum_j |y_1(t_j)|**p >= N**(2 - p/2)`` for a valid sampling set of the rescaled system.

    Only points in the support ``[0, N**(p/2-1))`` see the subspace, each
    contributing ``|y_1|**p = N**(1 - p/2)``; validity forces at least ``N`` of them.
    """
    p = _check_p_below_two(p)
    amplitude, _ = rademacher_scales(N, p)
    rows = []
    for t in S.points:
        if not is_exact(t):
            raise InvalidArgument("exact sampling points required")
        s = y_coordinate(N, p, t)
        if s is not None:
            rows.append([rademacher_sign(j, s) for j in range(1, N + 1)])
    rank = exact_rank(rows, N) if rows else 0
    if rank < N:
        if rows:
            ns = small_nullspace(list(dict.fromkeys(map(tuple, rows))), N)
            witness = [sc.simplify(v) for v in ns[0]]
        else:
            witness = [1] + [0] * (N - 1)
        raise InvalidSamplingSet(f"sampling set has rank {rank} < {N} on the support", witness)
    count = len(rows)
    p_sum = ScaledRational(count, 1 - p / 2, N)
    bound = ScaledRational(1, 2 - p / 2, N)
    return RademacherSamplingReport(N, p, S.M, count, p_sum, bound, p_sum >= bound)


@dataclass
class BetaCheckReport:
    N: int
    p: object
    beta: float
    bound: float
    holds: bool
    nikolskii: NikolskiiResult
    A: object
    B: object
    B_p: object

    def to_json(self) -> dict:
        return {"N": self.N, "p": sc.to_json_value(self.p), "beta": sc.tagged(self.beta),
                "bound": sc.tagged(self.bound), "holds": self.holds, "A": sc.tagged(self.A),
                "B": sc.tagged(self.B), "B_p": sc.tagged(self.B_p), "nikolskii": self.nikolskii.to_json()}


BETA_RTOL = 1e-9


def p_gt_2_beta_check(X: Subspace, p, A, B, B_p, budget: int = 200, seed: int = 0) -> BetaCheckReport:
    """Measured ``beta = nikolskii / N**(1/p)`` against ``(A / (B B_p)) N**(1/2 - 1/p)``."""
    p = _check_p(p)
    if not p > 2:
        raise InvalidArgument(f"p must exceed 2, got {p}")
    N = X.dim
    nik = nikolskii_constant(X, p, budget=budget, seed=seed)
    pf = float(p)
    beta = float(nik.value) / N ** (1 / pf)
    bound = float(A) / (float(B) * float(B_p)) * N ** (0.5 - 1 / pf)
    return BetaCheckReport(N, p, beta, bound, beta >= bound * (1 - BETA_RTOL), nik, A, B, B_p)


@dataclass
class RademacherNikolskiiReport:
    N: int
    p: object
    sup_ratio: object
    kind: str
    witness: list
    amplitude: ScaledRational
    linf_over_lp: object
    bound: float
    A_hat: object
    holds: bool
    probes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"N": self.N, "p": sc.to_json_value(self.p), "sup_ratio": sc.tagged(self.sup_ratio),
                "kind": self.kind, "witness": _enc_vec(self.witness), "amplitude": self.amplitude.to_json(),
                "linf_over_lp": sc.tagged(self.linf_over_lp), "bound": sc.tagged(self.bound),
                "A_hat": sc.tagged(self.A_hat), "holds": self.holds}


def _sign_sum_norm_pth_power(N: int, p):
    """``E|eps_1 + ... + eps_N|**p`` by the binomial distribution (exact for integer ``p``)."""
    k = sc._integer_exponent(p)
    if k is not None:
        return sc.simplify(Fraction(sum(math.comb(N, i) * abs(2 * i - N) ** k for i in range(N + 1)), 2**N))
    return sum(math.comb(N, i) * abs(2 * i - N) ** float(p) for i in range(N + 1)) / 2**N


def rademacher_nikolskii_bound(N: int, p, A_hat, budget: int = 200, seed: int = 0,
                               method: str = "symmetric") -> RademacherNikolskiiReport:
    """``amplitude * sup sum|a_j| / ||sum a_j R_j||_p`` against ``A_hat**-1 N**(1/p)``.

    Flipping the sign of one ``R_j`` permutes dyadic cells, so every cell gives
    the same supremum and only the all-plus cell is examined. There the
    objective ``sum a_j`` and the unit ball are permutation invariant and the
    ball is convex, so averaging an optimizer over permutations shows ``a = 1``
    is optimal: the supremum is ``N / ||R_1 + ... + R_N||_p`` (``method="symmetric"``).
    ``method="lp"`` runs :func:`nikolskii_constant` on that cell instead.
    """
    from .constructions import rademacher_subspace

    p = _check_p_below_two(p)
    X, amplitude, _ = rademacher_subspace(N, p)
    if method == "lp":
        last = X.space.n_cells - 1
        nik = nikolskii_constant(X, p, budget=budget, seed=seed, cells=[last])
        sup, kind, witness = nik.value, nik.kind, nik.witness
    elif method == "symmetric":
        m = _sign_sum_norm_pth_power(N, p)
        root = sc.pth_root(m, p)
        sup = sc.simplify(Fraction(N) / Fraction(root)) if is_exact(root) else N / float(root)
        kind, witness = EXACT, [1] * N
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    linf = (amplitude * sup).value() if is_exact(sup) else float(amplitude) * float(sup)
    bound = N ** (1 / float(p)) / float(A_hat)
    holds = float(linf) <= bound * (1 + 1e-12)
    return RademacherNikolskiiReport(N, p, sup, kind, witness, amplitude, linf, bound, A_hat, holds)
