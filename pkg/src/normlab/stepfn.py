"""Step functions over finite weighted partitions and their L_p / L_inf norms.

A :class:`PartitionSpace` is a finite measure space: cells with positive
weights, optionally realized as right-open intervals ``[b_{i-1}, b_i)``.
A :class:`StepFunction` assigns one value per cell, and a :class:`Subspace`
is a linearly independent list of step functions on one space.
"""

from __future__ import annotations

import bisect
import json
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import scalar as sc
from .errors import DomainError, InvalidArgument, InvalidSubspace
from .linalg import exact_rank
from .scalar import Scalar, is_exact


class PartitionSpace:
    """Cells with positive masses; ``breakpoints`` (if given) place them on ``[0, L)``."""

    __slots__ = ("weights", "breakpoints", "__dict__")

    def __init__(self, weights: Sequence[Scalar], breakpoints: Sequence[Scalar] | None = None):
        weights = tuple(sc.simplify(w) if is_exact(w) else float(w) for w in weights)
        if not weights:
            raise InvalidArgument("a partition needs at least one cell")
        if any(not w > 0 for w in weights):
            raise InvalidArgument("cell weights must be positive")
        if breakpoints is not None:
            breakpoints = tuple(sc.simplify(b) if is_exact(b) else float(b) for b in breakpoints)
            if len(breakpoints) != len(weights) + 1:
                raise InvalidArgument("need one more breakpoint than cells")
            if breakpoints[0] != 0:
                raise InvalidArgument("breakpoints must start at 0")
            for i, w in enumerate(weights):
                width = breakpoints[i + 1] - breakpoints[i]
                if not width > 0:
                    raise InvalidArgument("zero-width or decreasing cell")
                if is_exact(width) and is_exact(w) and width != w:
                    raise InvalidArgument(f"cell {i}: weight {w} differs from width {width}")
        self.weights = weights
        self.breakpoints = breakpoints

    @classmethod
    def from_breakpoints(cls, breakpoints: Sequence[Scalar]) -> "PartitionSpace":
        b = list(breakpoints)
        return cls([b[i + 1] - b[i] for i in range(len(b) - 1)], b)

    @property
    def n_cells(self) -> int:
        return len(self.weights)

    @property
    def has_geometry(self) -> bool:
        return self.breakpoints is not None

    @cached_property
    def exact(self) -> bool:
        return all(is_exact(w) for w in self.weights)

    @cached_property
    def total_mass(self) -> Scalar:
        if self.exact:
            return sc.simplify(sum(Fraction(w) for w in self.weights))
        return float(sum(float(w) for w in self.weights))

    @property
    def is_probability(self) -> bool:
        return self.total_mass == 1

    @property
    def length(self) -> Scalar:
        if not self.has_geometry:
            raise InvalidArgument("space carries no geometry")
        return self.breakpoints[-1]

    @cached_property
    def uniform_weight(self):
        w0 = self.weights[0]
        return w0 if all(w == w0 for w in self.weights) else None

    @cached_property
    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def locate(self, t: Scalar) -> int:
        """Index of the cell ``[b_{i-1}, b_i)`` containing ``t`` (right-open cells)."""
        if not self.has_geometry:
            raise DomainError("point location needs a geometry-carrying space")
        b = self.breakpoints
        if not (b[0] <= t < b[-1]):
            raise DomainError(f"point {t} outside [0, {b[-1]})")
        if self.uniform_weight is not None and is_exact(t) and self.exact:
            i = int(Fraction(t) / Fraction(self.uniform_weight))
            return min(i, self.n_cells - 1)
        return bisect.bisect_right(b, t) - 1

    def midpoints(self) -> list[Scalar]:
        b = self.breakpoints
        return [sc.simplify((Fraction(b[i]) + Fraction(b[i + 1])) / 2) if is_exact(b[i]) and is_exact(b[i + 1])
                else (float(b[i]) + float(b[i + 1])) / 2 for i in range(self.n_cells)]

    def to_float(self) -> "PartitionSpace":
        bps = None if self.breakpoints is None else [float(x) for x in self.breakpoints]
        return PartitionSpace([float(w) for w in self.weights], bps)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PartitionSpace):
            return NotImplemented
        return self.weights == other.weights and self.breakpoints == other.breakpoints

    def __hash__(self):
        return hash((self.n_cells, self.weights[0], self.breakpoints is None))

    def __repr__(self):
        geo = "" if self.has_geometry else ", no geometry"
        return f"PartitionSpace({self.n_cells} cells, mass={self.total_mass}{geo})"

    def to_json(self) -> dict:
        d = {"weights": [sc.to_json_value(w) for w in self.weights],
             "backend": sc.EXACT if self.exact else sc.FLOAT64}
        d["breakpoints"] = None if self.breakpoints is None else [sc.to_json_value(b) for b in self.breakpoints]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PartitionSpace":
        if d.get("breakpoints") is not None:
            return cls.from_breakpoints([sc.from_json_value(v) for v in d["breakpoints"]])
        return cls([sc.from_json_value(v) for v in d["weights"]])


def make_uniform_partition(K: int, L: Scalar = 1) -> PartitionSpace:
    """Partition ``[0, L)`` into ``K`` cells of exact width ``L/K``."""
    if not isinstance(K, int) or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K!r}")
    if is_exact(L):
        L = Fraction(L)
        return PartitionSpace([L / K] * K, [L * i / K for i in range(K + 1)])
    return PartitionSpace([float(L) / K] * K, [float(L) * i / K for i in range(K + 1)])


class StepFunction:
    """One value per cell of ``space``. Immutable."""

    __slots__ = ("space", "values")

    def __init__(self, space: PartitionSpace, values: Sequence[Scalar]):
        values = tuple(values)
        if len(values) != space.n_cells:
            raise InvalidArgument(f"{len(values)} values for {space.n_cells} cells")
        self.space = space
        self.values = values

    @classmethod
    def constant(cls, space: PartitionSpace, c: Scalar) -> "StepFunction":
        return cls(space, [c] * space.n_cells)

    @property
    def exact(self) -> bool:
        return self.space.exact and all(is_exact(v) for v in self.values)

    def _check(self, other: "StepFunction"):
        if not (self.space is other.space or self.space == other.space):
            raise InvalidArgument("step functions live on different spaces; use common_refinement")

    def __add__(self, other):
        if isinstance(other, StepFunction):
            self._check(other)
            return StepFunction(self.space, [a + b for a, b in zip(self.values, other.values)])
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            self._check(other)
            return StepFunction(self.space, [a - b for a, b in zip(self.values, other.values)])
        return NotImplemented

    def __neg__(self):
        return StepFunction(self.space, [-v for v in self.values])

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            self._check(other)
            return StepFunction(self.space, [a * b for a, b in zip(self.values, other.values)])
        return StepFunction(self.space, [other * v for v in self.values])

    __rmul__ = __mul__

    def __abs__(self):
        return StepFunction(self.space, [abs(v) for v in self.values])

    def __call__(self, t: Scalar) -> Scalar:
        return evaluate(self, t)

    def integral(self) -> Scalar:
        return sc.simplify(sum(w * v for w, v in zip(self.space.weights, self.values)))

    def support(self) -> list[int]:
        return [i for i, v in enumerate(self.values) if v != 0]

    def equals(self, other: "StepFunction") -> bool:
        return (self.space is other.space or self.space == other.space) and self.values == other.values

    def to_float(self) -> "StepFunction":
        return StepFunction(self.space.to_float(), [float(v) for v in self.values])

    def __repr__(self):
        head = ", ".join(map(str, self.values[:6]))
        more = ", ..." if len(self.values) > 6 else ""
        return f"StepFunction([{head}{more}] on {self.space!r})"

    def to_json(self) -> dict:
        d = self.space.to_json()
        d["values"] = [sc.to_json_value(v) for v in self.values]
        d["backend"] = sc.EXACT if self.exact else sc.FLOAT64
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "StepFunction":
        space = PartitionSpace.from_json(d)
        return cls(space, [sc.from_json_value(v) for v in d["values"]])


def evaluate(f: StepFunction, t: Scalar) -> Scalar:
    """Value of ``f`` at ``t``; breakpoints belong to the cell on their right."""
    return f.values[f.space.locate(t)]


def _check_p(p):
    if isinstance(p, str):
        p = sc.parse_scalar(p)
    if not p >= 1:
        raise InvalidArgument(f"p must be >= 1, got {p}")
    return p


def lp_norm_pth_power(f: StepFunction, p: Scalar) -> Scalar:
    """``sum_i w_i |v_i|**p``; exact for exact data and integer ``p``."""
    p = _check_p(p)
    space = f.space
    k = sc._integer_exponent(p)
    if f.exact and is_exact(p) and k is not None:
        w = space.uniform_weight
        if w is not None:
            return sc.simplify(w * sum(abs(v) ** k for v in f.values))
        return sc.simplify(sum(wi * abs(v) ** k for wi, v in zip(space.weights, f.values)))
    vals = np.abs(np.array([float(v) for v in f.values]))
    return float(np.dot(space.float_weights, vals ** float(p)))


def lp_norm(f: StepFunction, p: Scalar) -> Scalar:
    """``(sum_i w_i |v_i|**p)**(1/p)``; exact at ``p = 1`` and whenever the root is rational."""
    p = _check_p(p)
    return sc.pth_root(lp_norm_pth_power(f, p), p)


def linf_norm(f: StepFunction) -> Scalar:
    """``max_i |v_i|`` (every cell has positive mass, so this is the essential sup)."""
    return max(abs(v) for v in f.values)


def common_refinement(fs: Sequence[StepFunction]):
    """Coarsest common refinement of geometry-carrying spaces and the inputs lifted onto it."""
    fs = list(fs)
    if not fs:
        raise InvalidArgument("need at least one step function")
    for f in fs:
        if not f.space.has_geometry:
            raise InvalidArgument("common_refinement needs geometry-carrying spaces")
    L = fs[0].space.length
    if any(f.space.length != L for f in fs):
        raise InvalidArgument("step functions live on different intervals")
    if all(f.space is fs[0].space or f.space == fs[0].space for f in fs):
        return fs[0].space, fs
    pts = sorted(set().union(*(f.space.breakpoints for f in fs)))
    space = PartitionSpace.from_breakpoints(pts)
    lifted = []
    for f in fs:
        b = f.space.breakpoints
        vals = []
        j = 0
        for left in pts[:-1]:
            while b[j + 1] <= left:
                j += 1
            vals.append(f.values[j])
        lifted.append(StepFunction(space, vals))
    return space, lifted


def merge_adjacent(f: StepFunction) -> StepFunction:
    """Explicit normalization pass: fuse neighbouring cells that carry equal values."""
    if not f.space.has_geometry:
        raise InvalidArgument("merging needs geometry")
    b = f.space.breakpoints
    bps = [b[0]]
    vals = []
    for i, v in enumerate(f.values):
        if vals and vals[-1] == v:
            bps[-1] = b[i + 1]
        else:
            vals.append(v)
            bps.append(b[i + 1])
    return StepFunction(PartitionSpace.from_breakpoints(bps), vals)


class Subspace:
    """Span of linearly independent step functions sharing one space."""

    def __init__(self, basis: Sequence[StepFunction], check_rank: bool = True):
        basis = tuple(basis)
        if not basis:
            raise InvalidSubspace("empty basis")
        space = basis[0].space
        for f in basis[1:]:
            if not (f.space is space or f.space == space):
                raise InvalidSubspace("basis functions live on different spaces")
        self.space = space
        self.basis = basis
        if check_rank:
            r = self.rank()
            if r != self.dim:
                raise InvalidSubspace(f"basis has rank {r} < {self.dim}")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def exact(self) -> bool:
        return all(f.exact for f in self.basis)

    @cached_property
    def rows(self) -> list[tuple]:
        """Cell-value matrix: row ``i`` is ``(x_1(cell i), ..., x_N(cell i))``."""
        return list(zip(*(f.values for f in self.basis)))

    @cached_property
    def float_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in f.values] for f in self.basis]).T

    @cached_property
    def columns_sparse(self) -> list[list[tuple[int, Scalar]]]:
        return [[(i, v) for i, v in enumerate(f.values) if v != 0] for f in self.basis]

    def rank(self) -> int:
        if self.exact:
            return exact_rank(self.rows, self.dim)
        return int(np.linalg.matrix_rank(self.float_matrix))

    def combination_cells(self, a: Sequence[Scalar]) -> dict[int, Scalar]:
        """Nonzero cells of ``sum_j a_j x_j`` as ``{cell: value}`` (sparse path)."""
        if len(a) != self.dim:
            raise InvalidArgument(f"coefficient vector has length {len(a)}, expected {self.dim}")
        out: dict[int, Scalar] = {}
        for aj, col in zip(a, self.columns_sparse):
            if aj == 0:
                continue
            for i, v in col:
                out[i] = out.get(i, 0) + aj * v
        return out

    def combination_pth_power(self, a: Sequence[Scalar], p: Scalar) -> Scalar:
        """``||sum_j a_j x_j||_p**p`` summed over touched cells only."""
        p = _check_p(p)
        cells = self.combination_cells(a)
        k = sc._integer_exponent(p)
        w = self.space.weights
        exact = self.exact and all(is_exact(x) for x in a) and is_exact(p) and k is not None
        if exact:
            uw = self.space.uniform_weight
            if uw is not None:
                return sc.simplify(uw * sum(abs(v) ** k for v in cells.values()))
            return sc.simplify(sum(w[i] * abs(v) ** k for i, v in cells.items()))
        return float(sum(float(w[i]) * abs(float(v)) ** float(p) for i, v in cells.items()))

    def combine(self, a: Sequence[Scalar]) -> StepFunction:
        return linear_combination(self, a)

    def gram(self):
        """``G_jk = integral of x_j x_k`` (exact on exact data)."""
        N = self.dim
        w = self.space.weights
        if self.exact:
            G = [[0] * N for _ in range(N)]
            cols = self.columns_sparse
            for j in range(N):
                dj = dict(cols[j])
                for k in range(j, N):
                    s = sum(w[i] * v * dj[i] for i, v in cols[k] if i in dj)
                    G[j][k] = G[k][j] = sc.simplify(Fraction(s))
            return G
        U = self.float_matrix
        return (U * self.space.float_weights[:, None]).T @ U

    def to_float(self) -> "Subspace":
        space = self.space.to_float()
        return Subspace([StepFunction(space, [float(v) for v in f.values]) for f in self.basis], check_rank=False)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, {self.space!r})"


def linear_combination(X: Subspace, a: Sequence[Scalar]) -> StepFunction:
    """Cell-wise ``sum_j a_j basis_j``."""
    cells = X.combination_cells(a)
    vals = [0] * X.space.n_cells
    for i, v in cells.items():
        vals[i] = v
    return StepFunction(X.space, vals)
