"""Finite Grassmann algebra over Q(i, sqrt 2).

Elements are sparse maps from generator subsets (bitmasks; bit ``j-1`` stands
for generator ``zeta_j``) to field scalars.  The hot loops operate on "raw"
dictionaries ``mask -> (r0, r1, r2, r3)`` so the series layer can reuse them
with extra generators appended for the odd variables.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator, Mapping

from gmpy2 import mpq

from .errors import GeneratorCountMismatch, NonInvertible, NonNilpotent, OddArgument
from .field import FieldScalar, mul_tuple

DEFAULT_GENERATORS = 4

_Z = mpq(0)
ZERO_T = (_Z, _Z, _Z, _Z)
ONE_T = (mpq(1), _Z, _Z, _Z)


class Parity(enum.Enum):
    EVEN = 0
    ODD = 1

    def __mul__(self, other: "Parity") -> "Parity":
        return Parity(self.value ^ other.value)


# ---------------------------------------------------------------------------
# raw helpers


def popcount(m: int) -> int:
    return bin(m).count("1")


def _sign_of(m1: int, m2: int) -> int:
    """Sign from reordering zeta_{m1} zeta_{m2} into increasing order (0 if they overlap)."""
    if m1 & m2:
        return 0
    swaps = 0
    rest = m2
    while rest:
        low = rest & -rest
        swaps += popcount(m1 & ~((low << 1) - 1))
        rest ^= low
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def sign_table(n: int) -> tuple:
    size = 1 << n
    return tuple(tuple(_sign_of(a, b) for b in range(size)) for a in range(size))


def t_add(a: tuple, b: tuple) -> tuple:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def t_neg(a: tuple) -> tuple:
    return (-a[0], -a[1], -a[2], -a[3])


def t_scale(a: tuple, q) -> tuple:
    return (a[0] * q, a[1] * q, a[2] * q, a[3] * q)


def t_nonzero(a: tuple) -> bool:
    return bool(a[0] or a[1] or a[2] or a[3])


def raw_mul(a: Mapping[int, tuple], b: Mapping[int, tuple], n: int) -> dict:
    """Product of two raw elements on ``n`` generators."""
    if not a or not b:
        return {}
    table = sign_table(n) if n <= 9 else None
    out: dict = {}
    for m1, c1 in a.items():
        row = table[m1] if table is not None else None
        for m2, c2 in b.items():
            s = row[m2] if row is not None else _sign_of(m1, m2)
            if not s:
                continue
            p = mul_tuple(c1, c2)
            if s < 0:
                p = (-p[0], -p[1], -p[2], -p[3])
            m = m1 | m2
            prev = out.get(m)
            out[m] = p if prev is None else (prev[0] + p[0], prev[1] + p[1], prev[2] + p[2], prev[3] + p[3])
    return {m: c for m, c in out.items() if c[0] or c[1] or c[2] or c[3]}


def raw_add(a: Mapping[int, tuple], b: Mapping[int, tuple], sign: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        if sign < 0:
            c = t_neg(c)
        prev = out.get(m)
        if prev is None:
            out[m] = c
        else:
            s = t_add(prev, c)
            if t_nonzero(s):
                out[m] = s
            else:
                del out[m]
    return out


def raw_add_into(out: dict, b: Mapping[int, tuple], factor=None) -> None:
    """In-place ``out += factor * b`` (factor is a rational or ``None`` for 1)."""
    for m, c in b.items():
        if factor is not None:
            c = t_scale(c, factor)
        prev = out.get(m)
        if prev is None:
            if t_nonzero(c):
                out[m] = c
        else:
            s = t_add(prev, c)
            if t_nonzero(s):
                out[m] = s
            else:
                del out[m]


def raw_scale(a: Mapping[int, tuple], value: tuple) -> dict:
    out = {}
    for m, c in a.items():
        p = mul_tuple(c, value)
        if t_nonzero(p):
            out[m] = p
    return out


def raw_parity(a: Mapping[int, tuple]) -> Parity | None:
    """Common parity of all stored subsets, ``None`` when mixed; zero counts as even."""
    parities = {popcount(m) & 1 for m in a}
    if len(parities) > 1:
        return None
    return Parity.ODD if parities == {1} else Parity.EVEN


# ---------------------------------------------------------------------------


class GrassmannElement:
    """Immutable element of the Grassmann algebra on ``L`` generators."""

    __slots__ = ("L", "c")

    def __init__(self, L: int, coeffs: Mapping[int, object] | None = None):
        if L < 0:
            raise ValueError("generator count must be nonnegative")
        self.L = L
        clean: dict = {}
        limit = 1 << L
        for m, v in (coeffs or {}).items():
            if not 0 <= m < limit:
                raise ValueError(f"subset mask {m} out of range for L={L}")
            t = v if isinstance(v, tuple) else FieldScalar.coerce(v).r
            if t_nonzero(t):
                clean[m] = t
        self.c = clean

    @classmethod
    def _raw(cls, L: int, c: dict) -> "GrassmannElement":
        obj = object.__new__(cls)
        obj.L = L
        obj.c = c
        return obj

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, L: int = DEFAULT_GENERATORS) -> "GrassmannElement":
        return cls._raw(L, {})

    @classmethod
    def scalar(cls, value, L: int = DEFAULT_GENERATORS) -> "GrassmannElement":
        return cls(L, {0: value})

    @classmethod
    def one(cls, L: int = DEFAULT_GENERATORS) -> "GrassmannElement":
        return cls._raw(L, {0: ONE_T})

    @classmethod
    def generator(cls, j: int, L: int = DEFAULT_GENERATORS) -> "GrassmannElement":
        if not 1 <= j <= L:
            raise ValueError(f"generator index {j} outside 1..{L}")
        return cls._raw(L, {1 << (j - 1): ONE_T})

    @classmethod
    def from_subsets(cls, L: int, terms: Mapping[tuple, object]) -> "GrassmannElement":
        """Build from ``{(j1, j2, ...): value}`` with 1-based strictly increasing indices."""
        out: dict = {}
        for gens, value in terms.items():
            gens = tuple(gens)
            if list(gens) != sorted(set(gens)):
                raise ValueError(f"generator tuple {gens} is not strictly increasing")
            mask = 0
            for j in gens:
                if not 1 <= j <= L:
                    raise ValueError(f"generator index {j} outside 1..{L}")
                mask |= 1 << (j - 1)
            raw_add_into(out, {mask: FieldScalar.coerce(value).r})
        return cls._raw(L, out)

    def coerce(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            if other.L != self.L:
                raise GeneratorCountMismatch(f"L={self.L} vs L={other.L}")
            return other
        return GrassmannElement.scalar(other, self.L)

    # accessors --------------------------------------------------------------
    def items(self) -> Iterator[tuple[int, FieldScalar]]:
        for m in sorted(self.c):
            yield m, FieldScalar._raw(self.c[m])

    def coefficient(self, mask: int) -> FieldScalar:
        return FieldScalar._raw(self.c.get(mask, ZERO_T))

    def body(self) -> FieldScalar:
        return self.coefficient(0)

    def soul(self) -> "GrassmannElement":
        return GrassmannElement._raw(self.L, {m: v for m, v in self.c.items() if m})

    def body_element(self) -> "GrassmannElement":
        return GrassmannElement._raw(self.L, {0: self.c[0]} if 0 in self.c else {})

    def is_zero(self) -> bool:
        return not self.c

    def __bool__(self) -> bool:
        return bool(self.c)

    def parity(self) -> Parity | None:
        return raw_parity(self.c)

    def is_even(self) -> bool:
        return all(not popcount(m) & 1 for m in self.c)

    def is_odd(self) -> bool:
        return all(popcount(m) & 1 for m in self.c)

    def min_degree(self) -> int:
        """Smallest subset size among stored terms (L+1 for zero)."""
        return min((popcount(m) for m in self.c), default=self.L + 1)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other) -> "GrassmannElement":
        other = self.coerce(other)
        return GrassmannElement._raw(self.L, raw_add(self.c, other.c))

    __radd__ = __add__

    def __neg__(self) -> "GrassmannElement":
        return GrassmannElement._raw(self.L, {m: t_neg(v) for m, v in self.c.items()})

    def __sub__(self, other) -> "GrassmannElement":
        other = self.coerce(other)
        return GrassmannElement._raw(self.L, raw_add(self.c, other.c, -1))

    def __rsub__(self, other) -> "GrassmannElement":
        return self.coerce(other) - self

    def __mul__(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            if other.L != self.L:
                raise GeneratorCountMismatch(f"L={self.L} vs L={other.L}")
            return GrassmannElement._raw(self.L, raw_mul(self.c, other.c, self.L))
        return GrassmannElement._raw(self.L, raw_scale(self.c, FieldScalar.coerce(other).r))

    def __rmul__(self, other) -> "GrassmannElement":
        # scalars are central
        return GrassmannElement._raw(self.L, raw_scale(self.c, FieldScalar.coerce(other).r))

    def __truediv__(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            return self * other.inverse()
        return self * FieldScalar.coerce(other).inverse()

    def __pow__(self, n: int) -> "GrassmannElement":
        if n < 0:
            return self.inverse() ** (-n)
        out = GrassmannElement.one(self.L)
        for _ in range(n):
            out = out * self
        return out

    def inverse(self) -> "GrassmannElement":
        body = self.body()
        if body.is_zero():
            raise NonInvertible("element has zero body")
        inv_body = body.inverse()
        u = self.soul() * inv_body
        # (b(1+u))^{-1} = b^{-1} sum (-u)^n, finite since u^{L+1} = 0
        total = GrassmannElement.one(self.L)
        term = GrassmannElement.one(self.L)
        for _ in range(self.L):
            term = -(term * u)
            if term.is_zero():
                break
            total = total + term
        return total * inv_body

    def exp_nilpotent(self) -> "GrassmannElement":
        if not self.body().is_zero():
            raise NonNilpotent("exponential needs an element with zero body")
        if not self.is_even():
            raise OddArgument("exponential needs an even element")
        total = GrassmannElement.one(self.L)
        term = GrassmannElement.one(self.L)
        for n in range(1, self.L + 1):
            term = term * self
            if term.is_zero():
                break
            total = total + term * FieldScalar(mpq(1, factorial(n)))
        return total

    # comparison -------------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, GrassmannElement):
            return self.L == other.L and self.c == other.c
        try:
            return self.c == GrassmannElement.scalar(other, self.L).c
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self) -> int:
        return hash((self.L, frozenset(self.c.items())))

    # serialization ----------------------------------------------------------
    def to_json(self) -> list:
        out = []
        for m in sorted(self.c, key=lambda m: (popcount(m), m)):
            gens = [j + 1 for j in range(self.L) if m >> j & 1]
            out.append({"gens": gens, "coef": FieldScalar._raw(self.c[m]).to_json()})
        return out

    @classmethod
    def from_json(cls, data: Iterable[Mapping], L: int = DEFAULT_GENERATORS) -> "GrassmannElement":
        if not isinstance(data, list):
            raise ValueError("Grassmann element must be a JSON list")
        terms: dict = {}
        for entry in data:
            if not isinstance(entry, dict) or set(entry) != {"gens", "coef"}:
                raise ValueError(f"bad Grassmann term {entry!r}")
            gens = tuple(entry["gens"])
            if gens in terms:
                raise ValueError(f"duplicate subset {gens}")
            terms[gens] = FieldScalar.from_json(entry["coef"])
        return cls.from_subsets(L, terms)

    def __repr__(self) -> str:
        if not self.c:
            return "0"
        parts = []
        for m, v in self.items():
            gens = "".join(f"z{j + 1}" for j in range(self.L) if m >> j & 1)
            parts.append(f"{v!r}{('*' + gens) if gens else ''}")
        return " + ".join(parts)


# functional aliases ------------------------------------------------------------


def gr_mul(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    return a * b


def gr_inv(a: GrassmannElement) -> GrassmannElement:
    return a.inverse()


def gr_exp_nilpotent(a: GrassmannElement) -> GrassmannElement:
    return a.exp_nilpotent()
