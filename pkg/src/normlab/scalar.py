"""Scalars: exact rationals, float64 values, and rationals scaled by a rational power of an integer.

Exact scalars are Python ``int`` and ``fractions.Fraction`` objects (always in
lowest terms with positive denominator); the float64 backend uses ``float``.
Mixed arithmetic promotes to ``float`` exactly as Python does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

from .errors import InvalidArgument

Scalar = Union[int, Fraction, float]

EXACT = "exact"
FLOAT64 = "float64"


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def backend_of(x) -> str:
    return EXACT if is_exact(x) else FLOAT64


def parse_scalar(text) -> Scalar:
    """Parse ``"p/q"``, integers and decimals exactly; ``float`` inputs stay float."""
    if isinstance(text, float):
        return text
    if is_exact(text):
        return Fraction(text)
    s = str(text).strip()
    if s.lower() in ("inf", "+inf", "-inf", "nan") or "e" in s.lower():
        return float(s)
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"cannot parse scalar {text!r}") from exc


def as_exact(x) -> Fraction:
    """Exact rational value of ``x``; floats convert to their dyadic value."""
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidArgument(f"non-finite value {x!r} has no exact form")
        return Fraction(x)
    return Fraction(x)


def to_text(x) -> str:
    """Bit-exact text form: ``"p/q"`` for rationals, ``repr`` for floats."""
    if is_exact(x):
        return str(Fraction(x))
    return repr(float(x))


def to_json_value(x):
    if is_exact(x):
        return str(Fraction(x))
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    return x


def from_json_value(v) -> Scalar:
    if isinstance(v, str):
        return parse_scalar(v)
    if isinstance(v, int):
        return v
    return float(v)


def tagged(x) -> dict:
    """A reported number with its backend label."""
    return {"value": to_json_value(x), "backend": backend_of(x)}


def simplify(x):
    """Collapse integral Fractions to ``int``; leave everything else untouched."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def integer_root(n: int, k: int):
    """Exact ``k``-th root of a non-negative integer, or ``None``."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = int(round(n ** (1.0 / k))) if n < 2**1000 else _iroot_newton(n, k)
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**k == n:
            return c
    r = _iroot_newton(n, k)
    return r if r**k == n else None


def _iroot_newton(n: int, k: int) -> int:
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def exact_root(x, k: int):
    """``x**(1/k)`` as a Fraction when it is rational, else ``None``."""
    x = Fraction(x)
    if x < 0:
        return None
    a = integer_root(x.numerator, k)
    b = integer_root(x.denominator, k)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _integer_exponent(p):
    if is_exact(p):
        p = Fraction(p)
        if p.denominator == 1:
            return p.numerator
        return None
    if float(p).is_integer():
        return int(p)
    return None


def abs_power(x, p) -> Scalar:
    """``|x|**p``, exact when ``x`` is exact and ``p`` is a non-negative integer."""
    k = _integer_exponent(p)
    if is_exact(x) and is_exact(p) and k is not None and k >= 0:
        return abs(x) ** k
    return abs(float(x)) ** float(p)


def pth_root(x, p) -> Scalar:
    """``x**(1/p)`` for ``x >= 0``; exact when ``p`` is an integer and the root is rational."""
    k = _integer_exponent(p)
    if is_exact(x) and is_exact(p) and k is not None and k >= 1:
        if k == 1:
            return x
        r = exact_root(x, k)
        if r is not None:
            return simplify(r)
    return float(x) ** (1.0 / float(p))


def sqrt(x) -> Scalar:
    return pth_root(x, 2)


@dataclass(frozen=True, eq=False)
class ScaledRational:
    """The real number ``r * base**e`` with exact rational ``r >= 0`` and ``e``.

    Products and integer powers stay inside the type; sums of different
    exponents do not, so no addition is provided.
    """

    r: Fraction
    e: Fraction
    base: int

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "e", Fraction(self.e))
        if not isinstance(self.base, int) or self.base < 1:
            raise InvalidArgument(f"base must be a positive integer, got {self.base!r}")
        if self.r < 0:
            raise InvalidArgument("ScaledRational requires r >= 0")
        if self.r == 0:
            object.__setattr__(self, "e", Fraction(0))

    @classmethod
    def of(cls, x, base: int) -> "ScaledRational":
        return cls(Fraction(x), Fraction(0), base)

    @property
    def is_zero(self) -> bool:
        return self.r == 0

    def _coerce(self, other) -> "ScaledRational":
        if isinstance(other, ScaledRational):
            if other.base != self.base:
                raise InvalidArgument(f"base mismatch: {self.base} vs {other.base}")
            return other
        if is_exact(other):
            return ScaledRational.of(other, self.base)
        return NotImplemented

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return ScaledRational(self.r * o.r, self.e + o.e, self.base)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.is_zero:
            raise ZeroDivisionError("division by zero ScaledRational")
        return ScaledRational(self.r / o.r, self.e - o.e, self.base)

    def __pow__(self, k):
        if not isinstance(k, int):
            return self.pow_rational(k)
        if k < 0 and self.is_zero:
            raise ZeroDivisionError("zero to a negative power")
        return ScaledRational(self.r**k, self.e * k, self.base)

    def pow_rational(self, q) -> "ScaledRational":
        """Rational power; requires ``r**q`` to be rational (always true when ``r == 1``)."""
        q = Fraction(q)
        if q.denominator == 1:
            return self ** q.numerator
        root = exact_root(self.r, q.denominator)
        if root is None:
            raise InvalidArgument(f"r={self.r} has no exact {q} power")
        return ScaledRational(root**q.numerator, self.e * q, self.base)

    def exact_value(self):
        """The value as a Fraction when ``base**e`` is rational, else ``None``."""
        if self.is_zero:
            return Fraction(0)
        num, den = self.e.numerator, self.e.denominator
        root = integer_root(self.base, den)
        if root is None:
            return None
        return self.r * Fraction(root) ** num

    def value(self) -> Scalar:
        v = self.exact_value()
        if v is not None:
            return simplify(v)
        return float(self)

    def __float__(self):
        if self.is_zero:
            return 0.0
        return float(self.r) * float(self.base) ** float(self.e)

    def compare(self, other) -> int:
        return scaled_compare(self, self._coerce(other))

    def __eq__(self, other):
        o = self._coerce(other) if isinstance(other, (ScaledRational, int, Fraction)) else None
        if o is None or o is NotImplemented:
            return NotImplemented
        return scaled_compare(self, o) == 0

    def __hash__(self):
        v = self.exact_value()
        if v is not None:
            return hash(v)
        return hash((self.r, self.e, self.base))

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def floor(self) -> int:
        """Exact ``floor(r * base**e)``."""
        if self.is_zero:
            return 0
        m = math.floor(float(self))
        while ScaledRational.of(m + 1, self.base) <= self:
            m += 1
        while ScaledRational.of(m, self.base) > self:
            m -= 1
        return m

    def __repr__(self):
        return f"ScaledRational({self.r}*{self.base}^({self.e}))"

    def to_json(self) -> dict:
        return {"r": str(self.r), "e": str(self.e), "base": self.base, "approx": float(self)}


def scaled_compare(u: ScaledRational, v: ScaledRational) -> int:
    """Exact trichotomy of ``u.r * N**u.e`` against ``v.r * N**v.e``.

    Both sides are raised to the common denominator ``q`` of the exponent
    difference, leaving an integer power of ``N``.
    """
    if u.base != v.base:
        raise InvalidArgument(f"base mismatch: {u.base} vs {v.base}")
    if u.is_zero or v.is_zero:
        return (u.r > v.r) - (u.r < v.r)
    d = v.e - u.e
    q, k = d.denominator, d.numerator
    left = u.r**q
    right = v.r**q
    if k >= 0:
        right *= Fraction(u.base) ** k
    else:
        left *= Fraction(u.base) ** (-k)
    return (left > right) - (left < right)
