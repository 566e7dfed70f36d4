"""Exact arithmetic in the number field Q(i, sqrt 2).

An element is stored as four rationals ``(r0, r1, r2, r3)`` standing for
``r0 + r1*i + r2*sqrt2 + r3*i*sqrt2``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

from gmpy2 import mpq

Rational = Union[int, Fraction, "mpq"]

_ZERO = mpq(0)
_ONE = mpq(1)


def _q(value) -> mpq:
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


_SCALAR_TYPES = (int, Fraction, type(mpq(0)))


class FieldScalar:
    __slots__ = ("r",)

    def __init__(self, r0: Rational = 0, r1: Rational = 0, r2: Rational = 0, r3: Rational = 0):
        self.r = (_q(r0), _q(r1), _q(r2), _q(r3))

    @classmethod
    def _raw(cls, r: tuple) -> "FieldScalar":
        obj = object.__new__(cls)
        obj.r = r
        return obj

    @classmethod
    def coerce(cls, value) -> "FieldScalar":
        if isinstance(value, FieldScalar):
            return value
        return cls(value)

    # constants -----------------------------------------------------------
    @classmethod
    def zero(cls) -> "FieldScalar":
        return cls._raw((_ZERO, _ZERO, _ZERO, _ZERO))

    @classmethod
    def one(cls) -> "FieldScalar":
        return cls._raw((_ONE, _ZERO, _ZERO, _ZERO))

    @classmethod
    def i(cls) -> "FieldScalar":
        return cls._raw((_ZERO, _ONE, _ZERO, _ZERO))

    @classmethod
    def sqrt2(cls) -> "FieldScalar":
        return cls._raw((_ZERO, _ZERO, _ONE, _ZERO))

    # predicates ----------------------------------------------------------
    def is_zero(self) -> bool:
        a0, a1, a2, a3 = self.r
        return not (a0 or a1 or a2 or a3)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return not (self.r[1] or self.r[2] or self.r[3])

    # arithmetic ----------------------------------------------------------
    def __add__(self, other) -> "FieldScalar":
        if not isinstance(other, (FieldScalar, *_SCALAR_TYPES)):
            return NotImplemented
        b = FieldScalar.coerce(other).r
        a = self.r
        return FieldScalar._raw((a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]))

    __radd__ = __add__

    def __neg__(self) -> "FieldScalar":
        a = self.r
        return FieldScalar._raw((-a[0], -a[1], -a[2], -a[3]))

    def __sub__(self, other) -> "FieldScalar":
        if not isinstance(other, (FieldScalar, *_SCALAR_TYPES)):
            return NotImplemented
        return self + (-FieldScalar.coerce(other))

    def __rsub__(self, other) -> "FieldScalar":
        return FieldScalar.coerce(other) - self

    def __mul__(self, other) -> "FieldScalar":
        if not isinstance(other, FieldScalar):
            if not isinstance(other, _SCALAR_TYPES):
                return NotImplemented
            q = _q(other)
            a = self.r
            return FieldScalar._raw((a[0] * q, a[1] * q, a[2] * q, a[3] * q))
        return FieldScalar._raw(mul_tuple(self.r, other.r))

    __rmul__ = __mul__

    def conjugate_i(self) -> "FieldScalar":
        """Image under i -> -i."""
        a = self.r
        return FieldScalar._raw((a[0], -a[1], a[2], -a[3]))

    def inverse(self) -> "FieldScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero field element")
        # x * conj_i(x) lies in Q(sqrt2); invert that by its sqrt2-conjugate.
        n = mul_tuple(self.r, self.conjugate_i().r)
        p, q = n[0], n[2]
        denom = p * p - 2 * q * q
        inv_n = (p / denom, _ZERO, -q / denom, _ZERO)
        return FieldScalar._raw(mul_tuple(self.conjugate_i().r, inv_n))

    def __truediv__(self, other) -> "FieldScalar":
        return self * FieldScalar.coerce(other).inverse()

    def __rtruediv__(self, other) -> "FieldScalar":
        return FieldScalar.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "FieldScalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = FieldScalar.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison / hashing -----------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldScalar):
            try:
                other = FieldScalar.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.r == other.r

    def __hash__(self) -> int:
        return hash(self.r)

    # serialization ------------------------------------------------------
    def to_json(self) -> list[int]:
        out: list[int] = []
        for c in self.r:
            out.extend((int(c.numerator), int(c.denominator)))
        return out

    @classmethod
    def from_json(cls, data: Iterable[int]) -> "FieldScalar":
        vals = list(data)
        if len(vals) != 8:
            raise ValueError("field scalar needs 8 integers (four numerator/denominator pairs)")
        if any(not isinstance(v, int) or isinstance(v, bool) for v in vals):
            raise ValueError("field scalar entries must be integers")
        if any(vals[k] == 0 for k in (1, 3, 5, 7)):
            raise ValueError("zero denominator")
        return cls(*(mpq(vals[2 * k], vals[2 * k + 1]) for k in range(4)))

    def __repr__(self) -> str:
        names = ("", "i", "r2", "i*r2")
        parts = [f"{c}{('*' + n) if n else ''}" for c, n in zip(self.r, names) if c]
        return "FieldScalar(" + (" + ".join(parts) if parts else "0") + ")"


def mul_tuple(a: tuple, b: tuple) -> tuple:
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    if not (a1 or a2 or a3 or b1 or b2 or b3):
        return (a0 * b0, _ZERO, _ZERO, _ZERO)
    return (
        a0 * b0 - a1 * b1 + 2 * (a2 * b2 - a3 * b3),
        a0 * b1 + a1 * b0 + 2 * (a2 * b3 + a3 * b2),
        a0 * b2 + a2 * b0 - a1 * b3 - a3 * b1,
        a0 * b3 + a3 * b0 + a1 * b2 + a2 * b1,
    )


I = FieldScalar.i()
SQRT2 = FieldScalar.sqrt2()
