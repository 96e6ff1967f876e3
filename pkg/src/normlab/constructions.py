"""Explicit function families: the perturbed-indicator L1 basis, Rademacher systems,
Khintchine sign enumeration, and truncations of the disjoint-block infinite subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import scalar as sc
from .errors import InvalidArgument, ResourceBoundError
from .scalar import ScaledRational, is_exact
from .stepfn import PartitionSpace, StepFunction, Subspace, lp_norm, lp_norm_pth_power, make_uniform_partition

L1_MAX_DIM = 5000
RADEMACHER_MAX_LEVEL = 30
RADEMACHER_MAX_DIM = 20
KHINTCHINE_MAX_LEN = 24
TRUNCATION_MAX_K = 16


# -- perturbed indicator basis of L1 ------------------------------------------

@dataclass(frozen=True)
class L1FamilyMeta:
    """Bookkeeping for the ``N = n + (inv_eps*n)**n`` dimensional family.

    Block ``j`` is ``[(j-1)/N, j/N)``; blocks ``k <= n`` are cut into
    ``inv_eps*n`` bump intervals ``I_k(i)``. Index ``j > n`` owns the tuple
    ``(i_1, ..., i_n)`` given by the little-endian base ``inv_eps*n`` digits of
    ``j - n - 1`` (each digit plus one).
    """

    n: int
    inv_eps: int
    N: int

    @property
    def eps(self) -> Fraction:
        return Fraction(1, self.inv_eps)

    @property
    def radix(self) -> int:
        return self.inv_eps * self.n

    @property
    def grid_size(self) -> int:
        """Cells of the common partition: ``inv_eps * n * N``."""
        return self.radix * self.N

    def tuple_of_index(self, j: int) -> tuple[int, ...]:
        if not self.n < j <= self.N:
            raise InvalidArgument(f"index {j} carries no tuple (need {self.n} < j <= {self.N})")
        d = j - self.n - 1
        out = []
        for _ in range(self.n):
            d, r = divmod(d, self.radix)
            out.append(r + 1)
        return tuple(out)

    def index_of_tuple(self, t: Sequence[int]) -> int:
        if len(t) != self.n or any(not 1 <= i <= self.radix for i in t):
            raise InvalidArgument(f"bad tuple {t}")
        return self.n + 1 + sum((i - 1) * self.radix**k for k, i in enumerate(t))

    @property
    def tuple_map(self) -> dict[int, tuple[int, ...]]:
        return {j: self.tuple_of_index(j) for j in range(self.n + 1, self.N + 1)}

    def block(self, j: int) -> tuple[Fraction, Fraction]:
        return Fraction(j - 1, self.N), Fraction(j, self.N)

    def bump_interval(self, k: int, i: int) -> tuple[Fraction, Fraction]:
        width = Fraction(1, self.grid_size)
        lo = Fraction(k - 1, self.N) + (i - 1) * width
        return lo, lo + width

    def bump_cell(self, k: int, i: int) -> int:
        return (k - 1) * self.radix + (i - 1)

    def block_cells(self, j: int) -> range:
        return range((j - 1) * self.radix, j * self.radix)

    def bump_index_of_point(self, k: int, t) -> int:
        """Which ``I_k(i)`` contains ``t`` (right-open); ``t`` must lie in block ``k``."""
        lo, hi = self.block(k)
        if not lo <= t < hi:
            raise InvalidArgument(f"{t} not in block {k}")
        return int((Fraction(t) - lo) * self.grid_size) + 1


def l1_dimension(n: int, inv_eps: int) -> int:
    return n + (inv_eps * n) ** n


def l1_basis(n: int, inv_eps: int, max_dim: int = L1_MAX_DIM):
    """The perturbed block-indicator basis on the grid of width ``eps/(nN)``.

    ``x_j = N 1_{block j}`` for ``j <= n``; for ``j > n`` additionally
    ``N`` on the bumps ``I_k(i_{k,j})``, ``k = 1..n``. All values are integers.
    """
    if not (isinstance(n, int) and isinstance(inv_eps, int)) or n < 1 or inv_eps < 1:
        raise InvalidArgument("n and inv_eps must be positive integers")
    N = l1_dimension(n, inv_eps)
    if N > max_dim:
        raise ResourceBoundError(f"l1_basis(n={n}, inv_eps={inv_eps}) has N={N} > bound {max_dim}")
    meta = L1FamilyMeta(n, inv_eps, N)
    space = make_uniform_partition(meta.grid_size)
    basis = []
    for j in range(1, N + 1):
        vals = [0] * meta.grid_size
        for c in meta.block_cells(j):
            vals[c] = N
        if j > n:
            for k, i in enumerate(meta.tuple_of_index(j), start=1):
                vals[meta.bump_cell(k, i)] = N
        basis.append(StepFunction(space, vals))
    return Subspace(basis), meta


def l1_perturbation_bound(meta: L1FamilyMeta, X: Subspace) -> Fraction:
    """``max_j ||x_j - N 1_{block j}||_1``, which the construction makes equal to ``eps``."""
    worst = Fraction(0)
    N = meta.N
    for j, f in enumerate(X.basis, start=1):
        vals = list(f.values)
        for c in meta.block_cells(j):
            vals[c] -= N
        worst = max(worst, Fraction(lp_norm(StepFunction(X.space, vals), 1)))
    return worst


# -- Rademacher functions -----------------------------------------------------

@lru_cache(maxsize=8)
def _dyadic_partition(m: int) -> PartitionSpace:
    return make_uniform_partition(2**m)


def rademacher(m: int, max_level: int = RADEMACHER_MAX_LEVEL) -> StepFunction:
    """``R_m``: value ``(-1)**j`` on ``[(j-1)/2**m, j/2**m)``."""
    if not isinstance(m, int) or not 1 <= m <= max_level:
        raise ResourceBoundError(f"Rademacher level {m} outside [1, {max_level}]")
    return StepFunction(_dyadic_partition(m), [(-1) ** (c + 1) for c in range(2**m)])


def rademacher_system(N: int, max_dim: int = RADEMACHER_MAX_DIM) -> Subspace:
    """``R_1, ..., R_N`` on the common dyadic partition with ``2**N`` cells."""
    if not isinstance(N, int) or not 1 <= N <= max_dim:
        raise ResourceBoundError(f"Rademacher system size {N} outside [1, {max_dim}]")
    space = _dyadic_partition(N)
    cells = np.arange(2**N)
    basis = []
    for j in range(1, N + 1):
        vals = np.where(((cells >> (N - j)) & 1) == 1, 1, -1)
        basis.append(StepFunction(space, vals.tolist()))
    return Subspace(basis)


def _check_p_below_two(p):
    p = Fraction(sc.parse_scalar(p)) if not isinstance(p, float) else Fraction(p)
    if not 1 <= p < 2:
        raise InvalidArgument(f"p must lie in [1, 2), got {p}")
    return p


def rademacher_scales(N: int, p) -> tuple[ScaledRational, ScaledRational]:
    """Amplitude ``N**(1/p - 1/2)`` and support width ``N**(p/2 - 1)``."""
    p = Fraction(p)
    return (ScaledRational(1, 1 / p - Fraction(1, 2), N),
            ScaledRational(1, p / 2 - 1, N))


def rademacher_subspace(N: int, p, max_dim: int = RADEMACHER_MAX_DIM):
    """The rescaled system ``y_j(t) = N**(1/p-1/2) R_j(N**(1-p/2) t)``.

    The stored subspace is the normalized system ``(R_j)``; the amplitude and
    width come back symbolically. Norms transfer as
    ``||sum a_j y_j||_p = ||sum a_j R_j||_p`` and
    ``||sum a_j y_j||_inf = amplitude * ||sum a_j R_j||_inf``.
    """
    p = _check_p_below_two(p)
    X = rademacher_system(N, max_dim)
    amplitude, width = rademacher_scales(N, p)
    return X, amplitude, width


def rademacher_sign(j: int, s: ScaledRational | Fraction | int) -> int:
    """Exact ``R_j(s)`` for ``0 <= s < 1`` (``s`` may be a scaled rational)."""
    if not isinstance(s, ScaledRational):
        s = Fraction(s)
        if not 0 <= s < 1:
            raise InvalidArgument(f"{s} outside [0, 1)")
        idx = math.floor(s * 2**j)
    else:
        idx = (s * 2**j).floor()
    return 1 if idx % 2 == 1 else -1


def y_coordinate(N: int, p, t) -> ScaledRational | None:
    """Normalized coordinate ``s = N**(1-p/2) t`` when ``t`` lies in the support ``[0, N**(p/2-1))``."""
    t = Fraction(t)
    if t < 0:
        raise InvalidArgument(f"{t} outside [0, 1]")
    _, width = rademacher_scales(N, Fraction(p))
    if ScaledRational.of(t, N) >= width:
        return None
    return ScaledRational(t, 1 - Fraction(p) / 2, N) if t != 0 else ScaledRational.of(0, N)


# -- Khintchine enumeration ---------------------------------------------------

@dataclass
class KhintchineReport:
    p: object
    N: int
    A_hat: float
    B_hat: float
    A_witness: list
    B_witness: list
    evaluations: int = 0

    def to_json(self) -> dict:
        return {"p": sc.to_json_value(self.p), "N": self.N,
                "A_hat": sc.tagged(self.A_hat), "B_hat": sc.tagged(self.B_hat),
                "A_witness": [sc.to_json_value(v) for v in self.A_witness],
                "B_witness": [sc.to_json_value(v) for v in self.B_witness],
                "evaluations": self.evaluations}


def _sign_sums(a: Sequence, dtype) -> np.ndarray:
    """All ``a_1 + sum_{j>1} +-a_j`` (half the sign patterns; the rest are negatives)."""
    sums = np.array([a[0]], dtype=dtype)
    for v in a[1:]:
        sums = np.concatenate((sums + v, sums - v))
    return sums


def khintchine_moment(a: Sequence, p, max_len: int = KHINTCHINE_MAX_LEN):
    """``2**-N sum_eps |sum_j a_j eps_j|**p`` by exhaustive enumeration.

    Exact for exact ``a`` and integer ``p``; float otherwise.
    """
    a = list(a)
    N = len(a)
    if N == 0:
        raise InvalidArgument("empty coefficient vector")
    if N > max_len:
        raise ResourceBoundError(f"sign enumeration over 2**{N} patterns exceeds 2**{max_len}")
    k = sc._integer_exponent(p)
    if all(is_exact(v) for v in a) and is_exact(p) and k is not None:
        fr = [Fraction(v) for v in a]
        den = math.lcm(*(v.denominator for v in fr))
        ints = [int(v * den) for v in fr]
        total = sum(abs(v) for v in ints)
        if (2**N) * max(total, 1) ** k < 2**62:
            s = np.abs(_sign_sums(ints, np.int64))
            acc = int(np.sum(s**k)) if k > 0 else s.size
        else:
            s = _sign_sums([int(v) for v in ints], object)
            acc = sum(abs(int(v)) ** k for v in s)
        return sc.simplify(Fraction(acc, (den**k) * 2 ** (N - 1)))
    s = np.abs(_sign_sums([float(v) for v in a], np.float64))
    return float(np.mean(s ** float(p)))


def khintchine_expectation(a: Sequence, p, max_len: int = KHINTCHINE_MAX_LEN):
    """``(E |sum_j a_j eps_j|**p)**(1/p)`` over uniform random signs."""
    p = sc.parse_scalar(p) if isinstance(p, str) else p
    if not p >= 1:
        raise InvalidArgument(f"p must be >= 1, got {p}")
    return sc.pth_root(khintchine_moment(a, p, max_len), p)


def khintchine_ratio(a: Sequence, p) -> object:
    """``khintchine_expectation(a, p) / ||a||_2``; exactly 1 at ``p = 2`` for exact ``a``."""
    sq = sum(v * v for v in a)
    if sq == 0:
        raise InvalidArgument("zero coefficient vector")
    m = khintchine_moment(a, p)
    if is_exact(m) and is_exact(sq) and sc._integer_exponent(p) == 2:
        return sc.sqrt(Fraction(m) / Fraction(sq))
    return float(sc.pth_root(m, p)) / math.sqrt(float(sq))


def _snap(v: np.ndarray, scale: int = 4096) -> list[int]:
    m = np.max(np.abs(v))
    q = np.rint(v / m * scale).astype(np.int64)
    if not q.any():
        q[int(np.argmax(np.abs(v)))] = 1
    return [int(x) for x in q]


def khintchine_empirical_constants(N: int, p, budget: int = 200, seed: int = 0) -> KhintchineReport:
    """Witness-backed estimates ``A_hat >= A_p(N)`` and ``B_hat <= B_p(N)``.

    Candidates are coordinate, flat and paired vectors, random directions,
    then a random local search of ``budget`` steps per side. Candidates sit on
    an integer lattice so ratios at ``p`` in ``{1, 2}`` come from exact moments.
    """
    if N > KHINTCHINE_MAX_LEN:
        raise ResourceBoundError(f"N={N} exceeds enumeration bound {KHINTCHINE_MAX_LEN}")
    rng = np.random.default_rng(seed)
    cands = [[1] + [0] * (N - 1), [1] * N]
    if N >= 2:
        cands.append([1, 1] + [0] * (N - 2))
    for _ in range(4):
        cands.append(_snap(rng.standard_normal(N)))
    evals = 0
    scored = []
    for c in cands:
        scored.append((khintchine_ratio(c, p), c))
        evals += 1
    lo = min(scored, key=lambda rc: rc[0])
    hi = max(scored, key=lambda rc: rc[0])

    def climb(start, sign):
        nonlocal evals
        best_r, best = start
        step = 0.5
        for _ in range(budget):
            v = np.array(best, dtype=float)
            trial = _snap(v + step * np.max(np.abs(v)) * rng.standard_normal(N))
            r = khintchine_ratio(trial, p)
            evals += 1
            if sign * (r - best_r) > 0:
                best_r, best = r, trial
            else:
                step = max(step * 0.97, 1e-3)
        return best_r, best

    if N > 1 and budget > 0:
        lo = min(lo, climb(lo, -1), key=lambda rc: rc[0])
        hi = max(hi, climb(hi, +1), key=lambda rc: rc[0])
    return KhintchineReport(p, N, lo[0], hi[0], lo[1], hi[1], evals)


# -- truncations of the disjoint-block subspace --------------------------------

@dataclass
class TruncationBlock:
    N: int
    system: Subspace
    offset: object
    length: object
    support_length: object
    amplitude: object

    def to_json(self) -> dict:
        def enc(v):
            return v.to_json() if isinstance(v, ScaledRational) else sc.tagged(v)
        return {"N": self.N, "offset": enc(self.offset), "length": enc(self.length),
                "support_length": enc(self.support_length), "amplitude": enc(self.amplitude)}


@dataclass
class InfiniteTruncation:
    """Blocks ``Y^N = D_N(X^N)``, ``N = 1..K``, laid out on ``[0, M_K + A**-p K)``.

    ``D_N x(t) = A N**(-1/p) x(A**p N**-1 (t - M_N))`` maps the rescaled Rademacher
    subspace onto ``[M_N, M_N + A**-p N)``. Block ``N``'s nonzero part is
    ``[M_N, M_N + A**-p N**(p/2))`` where the functions are
    ``A N**-1/2 * (sum a_j R_j)`` of the normalized coordinate.
    """

    p: Fraction
    K: int
    A_p_param: object
    blocks: list[TruncationBlock] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.p == 1 and is_exact(self.A_p_param)

    @property
    def total_length(self):
        last = self.blocks[-1]
        return last.offset + last.length

    def supports_disjoint(self) -> bool:
        """Block intervals are right-open and consecutive, and each support fits its block."""
        for a, b in zip(self.blocks, self.blocks[1:]):
            if not a.offset + a.length <= b.offset:
                return False
        for blk in self.blocks:
            sl, ln = blk.support_length, blk.length
            if isinstance(sl, ScaledRational):
                if not sl <= ScaledRational.of(ln, sl.base):
                    return False
            elif not float(sl) <= float(ln) * (1 + 1e-12):
                return False
        return True

    def divergence_partial_sum(self):
        """``sum_{N<=K} A**p / N``, the lower bound on the sampled p-sums."""
        Ap = _A_power(self.A_p_param, self.p)
        if is_exact(Ap):
            return sc.simplify(sum(Fraction(Ap) / N for N in range(1, self.K + 1)))
        return float(sum(float(Ap) / N for N in range(1, self.K + 1)))

    def witness_coefficient(self, N: int) -> ScaledRational:
        """``x_N = N**(1/2 - 2/p) y_1`` has ``||x_N||_p**p = N**(p/2 - 2)``."""
        return ScaledRational(1, Fraction(1, 2) - 2 / self.p, N)

    def witness_norm_pth_power(self, N: int):
        """``||y_N||_p**p`` from the block scales and ``||R_1||_p**p`` on the stored system."""
        blk = self.blocks[N - 1]
        base = lp_norm_pth_power(blk.system.basis[0], self.p)
        c = self.witness_coefficient(N)
        if self.exact:
            val = (blk.amplitude * c) * blk.support_length * Fraction(base)
            return val.value()
        amp = float(blk.amplitude) * float(c)
        return abs(amp) ** float(self.p) * float(blk.support_length) * float(base)

    def sampled_sum(self, N: int, normalized_points: Sequence | None = None):
        """``sum_t |y_N(t)|**p`` over a sampling set given in normalized coordinates.

        Default: one point per dyadic cell of the block (a valid set). Returns
        the sum and the matching lower bound ``A**p / N``.
        """
        blk = self.blocks[N - 1]
        pts = normalized_points
        if pts is None:
            pts = blk.system.space.midpoints()
        count = len(pts)
        c = self.witness_coefficient(N)
        if self.exact:
            per_point = blk.amplitude * c
            total = (per_point * count).value()
            bound = Fraction(self.A_p_param) / N
        else:
            per_point = abs(float(blk.amplitude) * float(c)) ** float(self.p)
            total = per_point * count
            bound = float(_A_power(self.A_p_param, self.p)) / N
        return total, sc.simplify(bound) if is_exact(bound) else bound

    def global_space(self):
        """Float realization of all blocks on one partition, for direct norm checks."""
        bps = [0.0]
        owner = []
        for blk in self.blocks:
            off = float(blk.offset)
            sl = float(blk.support_length)
            n_cells = blk.system.space.n_cells
            for c in range(1, n_cells + 1):
                bps.append(off + sl * c / n_cells)
                owner.append((blk.N, c - 1))
            if _shorter(blk.support_length, blk.length):
                bps.append(off + float(blk.length))
                owner.append((blk.N, None))
        return PartitionSpace.from_breakpoints(bps), owner

    def block_function(self, N: int, a: Sequence, space_owner=None) -> StepFunction:
        """``D_N(sum a_j y_j)`` as a float step function on :meth:`global_space`."""
        space, owner = space_owner or self.global_space()
        blk = self.blocks[N - 1]
        comb = blk.system.combine(list(a)).values
        amp = float(blk.amplitude)
        vals = [amp * float(comb[c]) if n == N and c is not None else 0.0 for n, c in owner]
        return StepFunction(space, vals)


def _shorter(support, length) -> bool:
    """``support < length``, exactly when both are exact."""
    if isinstance(support, ScaledRational) and is_exact(length):
        return support.compare(length) < 0
    if is_exact(support) and is_exact(length):
        return support < length
    return float(support) < float(length) * (1 - 1e-12)


def _A_power(A, p):
    if is_exact(A) and Fraction(p).denominator == 1:
        return Fraction(A) ** int(p)
    return float(A) ** float(p)


def infinite_truncation(p, K: int, A_p_param=None) -> InfiniteTruncation:
    """Build the first ``K`` disjoint blocks of the infinite construction.

    Offsets are ``M_1 = 0`` and ``M_{N+1} = M_N + A**-p N``: with right-open
    block intervals this is the least choice keeping blocks disjoint.
    """
    p = _check_p_below_two(p)
    if not isinstance(K, int) or not 1 <= K <= TRUNCATION_MAX_K:
        raise ResourceBoundError(f"K={K} outside [1, {TRUNCATION_MAX_K}]")
    if A_p_param is None:
        rep = khintchine_empirical_constants(min(K, 12), p, budget=100, seed=0)
        A_p_param = Fraction(rep.A_hat).limit_denominator(10**6)
    if not A_p_param > 0:
        raise InvalidArgument("A_p_param must be positive")
    A = A_p_param
    Ap = _A_power(A, p)
    out = InfiniteTruncation(p, K, A)
    offset = 0
    for N in range(1, K + 1):
        system = rademacher_system(N)
        length = sc.simplify(Fraction(N) / Ap) if is_exact(Ap) else N / float(Ap)
        if out.exact:
            support = ScaledRational(1 / Fraction(A), Fraction(1, 2), N)
            amplitude = ScaledRational(Fraction(A), Fraction(-1, 2), N)
        else:
            support = float(N) ** (float(p) / 2) / float(Ap)
            amplitude = float(A) * float(N) ** -0.5
        out.blocks.append(TruncationBlock(N, system, offset, length, support, amplitude))
        offset = offset + length
    return out
