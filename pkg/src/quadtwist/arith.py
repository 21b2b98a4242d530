"""Exact arithmetic in Q and in quadratic extensions K = Q(t), t^2 = alpha.

Rationals are ``gmpy2.mpq`` throughout (``fractions.Fraction`` and ``int`` are
accepted on input and compare/hash equal).  Both keep lowest terms with a
positive denominator, the canonical form structural equality relies on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from gmpy2 import mpq

Rational = type(mpq(0))
RationalLike = Union[int, Fraction, Rational, str]
RATIONAL_TYPES = (int, Fraction, Rational)

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


class QuadFieldError(ValueError):
    """Base class for errors raised by the arithmetic layer."""


class DiscriminantError(QuadFieldError):
    pass


class FieldMismatchError(QuadFieldError):
    pass


class NotOnTorusError(QuadFieldError):
    def __init__(self, value: "QuadElem", norm: Rational) -> None:
        super().__init__(f"{value} has norm {format_rational(norm)}, not 1")
        self.value = value
        self.norm = norm


def as_rational(q: RationalLike) -> Rational:
    if isinstance(q, Rational):
        return q
    if isinstance(q, (int, Fraction)):
        return mpq(q)
    if isinstance(q, str):
        return parse_rational(q)
    raise TypeError(f"cannot interpret {q!r} as a rational")


def parse_rational(text: str, *, strict: bool = False) -> Rational:
    """Parse ``"p/q"`` or ``"p"``.

    With ``strict=True`` the text must already be canonical: reduced, positive
    denominator, and no ``/1``.
    """
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"malformed rational {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ZeroDivisionError(f"zero denominator in {text!r}")
    value = mpq(num, den)
    if strict and format_rational(value) != text.strip():
        raise ValueError(f"non-canonical rational {text!r}")
    return value


def format_rational(q: RationalLike) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def is_square_rational(q: RationalLike) -> bool:
    """True iff ``q`` is the square of a rational number.

    For reduced p/q this is p >= 0 with p*q a perfect square.
    """
    q = as_rational(q)
    p, d = q.numerator, q.denominator
    if p < 0:
        return False
    n = int(p * d)
    return math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class Discriminant:
    """The field K = Q[t]/(t^2 - alpha) for a rational non-square alpha.

    Calling the instance builds elements: ``K(3, 2)`` is ``3 + 2t``.
    """

    alpha: Rational

    def __init__(self, alpha: RationalLike, *, validate: bool = True) -> None:
        value = as_rational(alpha)
        if validate and is_square_rational(value):
            raise DiscriminantError(f"alpha is a square: {format_rational(value)}")
        object.__setattr__(self, "alpha", value)

    def __call__(self, x: RationalLike = 0, y: RationalLike = 0) -> "QuadElem":
        return QuadElem(as_rational(x), as_rational(y), self)

    @property
    def zero(self) -> "QuadElem":
        return QuadElem(mpq(0), mpq(0), self)

    @property
    def one(self) -> "QuadElem":
        return QuadElem(mpq(1), mpq(0), self)

    @property
    def t(self) -> "QuadElem":
        return QuadElem(mpq(0), mpq(1), self)

    # j only needs sigma(j) = -j; t is the canonical choice.
    j = t

    def coerce(self, value: "QuadElem | RationalLike") -> "QuadElem":
        if isinstance(value, QuadElem):
            if value.disc != self:
                raise FieldMismatchError(f"element of {value.disc} used in {self}")
            return value
        return QuadElem(as_rational(value), mpq(0), self)

    def parse(self, text: str) -> "QuadElem":
        return parse_quad(text, self)

    def __str__(self) -> str:
        return f"Q(t), t^2 = {format_rational(self.alpha)}"

    def __repr__(self) -> str:
        return f"Discriminant({format_rational(self.alpha)!r})"


@dataclass(frozen=True)
class QuadElem:
    """x + t*y in K. Immutable; components are canonical rationals."""

    x: Rational
    y: Rational
    disc: Discriminant

    def _other(self, other: object) -> "QuadElem | None":
        if isinstance(other, QuadElem):
            if other.disc != self.disc:
                raise FieldMismatchError(
                    f"mismatched discriminants {format_rational(self.disc.alpha)} "
                    f"and {format_rational(other.disc.alpha)}"
                )
            return other
        if isinstance(other, RATIONAL_TYPES):
            return QuadElem(mpq(other), mpq(0), self.disc)
        return None

    def __add__(self, other: object) -> "QuadElem":
        o = self._other(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.x + o.x, self.y + o.y, self.disc)

    __radd__ = __add__

    def __neg__(self) -> "QuadElem":
        return QuadElem(-self.x, -self.y, self.disc)

    def __sub__(self, other: object) -> "QuadElem":
        o = self._other(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.x - o.x, self.y - o.y, self.disc)

    def __rsub__(self, other: object) -> "QuadElem":
        return (-self) + other

    def __mul__(self, other: object) -> "QuadElem":
        o = self._other(other)
        if o is None:
            return NotImplemented
        if not self.y and not o.y:
            return QuadElem(self.x * o.x, mpq(0), self.disc)
        alpha = self.disc.alpha
        return QuadElem(
            self.x * o.x + alpha * self.y * o.y,
            self.x * o.y + self.y * o.x,
            self.disc,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "QuadElem":
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other: object) -> "QuadElem":
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> "QuadElem":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.disc.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, QuadElem):
            return self.disc == other.disc and self.x == other.x and self.y == other.y
        if isinstance(other, RATIONAL_TYPES):
            return self.y == 0 and self.x == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.x, self.y, self.disc.alpha))

    def __bool__(self) -> bool:
        return bool(self.x) or bool(self.y)

    def conjugate(self) -> "QuadElem":
        return QuadElem(self.x, -self.y, self.disc)

    def norm(self) -> Rational:
        return self.x * self.x - self.disc.alpha * self.y * self.y

    def trace(self) -> Rational:
        return 2 * self.x

    def inverse(self) -> "QuadElem":
        n = self.norm()
        if n == 0:
            # only reachable for z = 0 since alpha is a non-square
            raise ZeroDivisionError(f"{self} is not invertible")
        return QuadElem(self.x / n, -self.y / n, self.disc)

    @property
    def is_rational(self) -> bool:
        return self.y == 0

    def __str__(self) -> str:
        if not self.y:
            return format_rational(self.x)
        ys = format_rational(abs(self.y))
        sign = "-" if self.y < 0 else "+"
        return f"{format_rational(self.x)} {sign} {ys}*t"

    def __repr__(self) -> str:
        return f"QuadElem({self}; alpha={format_rational(self.disc.alpha)})"


_QUAD_RE = re.compile(
    r"^\s*(-?\d+(?:/\d+)?)\s*(?:([+-])\s*(\d+(?:/\d+)?)\s*\*\s*t)?\s*$"
)


def parse_quad(text: str, disc: Discriminant) -> QuadElem:
    """Inverse of ``str(QuadElem)``: ``"3"``, ``"3/5 - 4/5*t"``."""
    m = _QUAD_RE.match(text)
    if m is None:
        raise ValueError(f"malformed element {text!r}")
    x = parse_rational(m.group(1))
    y = mpq(0)
    if m.group(2):
        y = parse_rational(m.group(3))
        if m.group(2) == "-":
            y = -y
    return QuadElem(x, y, disc)


def quad_mul(a: QuadElem, b: QuadElem) -> QuadElem:
    return a * b


def quad_inv(a: QuadElem) -> QuadElem:
    return a.inverse()


def conjugate(a: QuadElem) -> QuadElem:
    return a.conjugate()


def norm(a: QuadElem) -> Rational:
    return a.norm()


def trace(a: QuadElem) -> Rational:
    return a.trace()


@dataclass(frozen=True)
class TorusPoint:
    """A point of the norm-one torus S = {z : z * sigma(z) = 1}."""

    value: QuadElem

    def __post_init__(self) -> None:
        n = self.value.norm()
        if n != 1:
            raise NotOnTorusError(self.value, n)

    def __mul__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(self.value * other.value)

    def inverse(self) -> "TorusPoint":
        return TorusPoint(self.value.conjugate())

    def matrix(self) -> tuple[tuple[Rational, Rational], tuple[Rational, Rational]]:
        return torus_matrix(self)

    def __str__(self) -> str:
        return str(self.value)


def make_torus_point(z: QuadElem) -> TorusPoint:
    return TorusPoint(z)


def torus_point_from(z: QuadElem) -> TorusPoint:
    """z / sigma(z), which always has norm 1 (z != 0)."""
    return TorusPoint(z * z.conjugate().inverse())


def torus_matrix(p: TorusPoint) -> tuple[tuple[Rational, Rational], tuple[Rational, Rational]]:
    x, y, alpha = p.value.x, p.value.y, p.value.disc.alpha
    return ((x, alpha * y), (y, x))


def matmul2(m, n):
    return tuple(
        tuple(sum(m[i][k] * n[k][j] for k in range(2)) for j in range(2)) for i in range(2)
    )


def det2(m) -> Rational:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]
