"""The N=2 Neveu-Schwarz superalgebra with a formal central symbol ``d``.

Basis symbols reuse :class:`BasisDerivation` so that abstract elements line up
with derivation sums: ``Gp(j)`` and ``Gm(j)`` are the modes ``j - 1/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from gmpy2 import mpq

from .derivations import FAMILIES, BasisDerivation, DerivationSum, der_bracket
from .errors import IndexOutOfWindow
from .field import FieldScalar
from .grassmann import GrassmannElement, Parity

CENTRAL = "d"
DEFAULT_NS_WINDOW = 32


def _key_order(key) -> tuple:
    if key == CENTRAL:
        return (1, "", 0)
    return (0, key.family, key.j)


class NsElement:
    """Sparse combination of L_n, J_n, G+-_{n+1/2} and the central symbol d over Q(i, sqrt 2)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for key, c in items:
            if key != CENTRAL and not isinstance(key, BasisDerivation):
                raise TypeError(f"not a basis symbol: {key!r}")
            c = FieldScalar.coerce(c)
            acc[key] = acc[key] + c if key in acc else c
        self.terms = {k: acc[k] for k in sorted(acc, key=_key_order) if not acc[k].is_zero()}

    @classmethod
    def basis(cls, key, coef=1) -> "NsElement":
        return cls({key: coef})

    @classmethod
    def central(cls, coef=1) -> "NsElement":
        return cls({CENTRAL: coef})

    def __add__(self, other: "NsElement") -> "NsElement":
        return NsElement(list(self.terms.items()) + list(other.terms.items()))

    def __neg__(self) -> "NsElement":
        return NsElement({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "NsElement") -> "NsElement":
        return self + (-other)

    def scale(self, c) -> "NsElement":
        c = FieldScalar.coerce(c)
        return NsElement({k: c * v for k, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, NsElement) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def central_part(self) -> FieldScalar:
        return self.terms.get(CENTRAL, FieldScalar.zero())

    def without_central(self) -> "NsElement":
        return NsElement({k: c for k, c in self.terms.items() if k != CENTRAL})

    def parity(self) -> Parity | None:
        pars = {Parity.EVEN if k == CENTRAL else k.parity for k in self.terms}
        if len(pars) > 1:
            return None
        return pars.pop() if pars else Parity.EVEN

    def to_derivation_sum(self, L: int) -> DerivationSum:
        """Image under the representation at central charge zero."""
        return DerivationSum(L, [(k, GrassmannElement.scalar(c, L)) for k, c in self.terms.items() if k != CENTRAL])

    def __repr__(self) -> str:
        parts = []
        for k, c in self.terms.items():
            parts.append(f"{c!r}*{'d' if k == CENTRAL else k.label()}")
        return " + ".join(parts) or "0"

    def to_json(self) -> dict:
        out = []
        for k, c in self.terms.items():
            if k == CENTRAL:
                out.append({"family": "d", "j": 0, "coef": c.to_json()})
            else:
                out.append({"family": k.family, "j": k.j, "coef": c.to_json()})
        return {"terms": out}


def _check_window(b: BasisDerivation, window: int) -> None:
    if abs(b.j) > window:
        raise IndexOutOfWindow(f"{b.label()} lies outside the index window {window}")


def basis_bracket(a: BasisDerivation, b: BasisDerivation) -> NsElement:
    """The relation table on two basis symbols."""
    fa, fb = a.family, b.family
    m, n = a.j, b.j
    if fa == "L" and fb == "L":
        out = {BasisDerivation("L", m + n): m - n}
        if m + n == 0:
            out[CENTRAL] = mpq(m ** 3 - m, 12)
        return NsElement(out)
    if fa == "J" and fb == "J":
        return NsElement({CENTRAL: mpq(m, 3)} if m + n == 0 else {})
    if fa == "L" and fb == "J":
        return NsElement({BasisDerivation("J", m + n): -n})
    if fa == "J" and fb == "L":
        return -basis_bracket(b, a)
    if fa == "L" and fb in ("Gp", "Gm"):
        # G_{n' + 1/2} with n' = n - 1
        return NsElement({BasisDerivation(fb, m + n): mpq(m, 2) - n + mpq(1, 2)})
    if fa == "J" and fb in ("Gp", "Gm"):
        return NsElement({BasisDerivation(fb, m + n): 1 if fb == "Gp" else -1})
    if fa in ("Gp", "Gm") and fb in ("L", "J"):
        return -basis_bracket(b, a)
    if fa == fb:
        return NsElement()
    if fa == "Gm":
        return basis_bracket(b, a)
    # [G+_{m'+1/2}, G-_{n'-1/2}] with m' = m - 1, n' = n
    mp = m - 1
    out = {BasisDerivation("L", mp + n): 2, BasisDerivation("J", mp + n): mp - n + 1}
    if mp + n == 0:
        out[CENTRAL] = mpq(mp * mp + mp, 3)
    return NsElement(out)


def ns_bracket(u: NsElement, v: NsElement, window: int = DEFAULT_NS_WINDOW) -> NsElement:
    """Bilinear extension of the relation table; d is central."""
    acc = NsElement()
    for a, ca in u.terms.items():
        if a == CENTRAL:
            continue
        _check_window(a, window)
        for b, cb in v.terms.items():
            if b == CENTRAL:
                continue
            _check_window(b, window)
            res = basis_bracket(a, b)
            for key in res.terms:
                if key != CENTRAL:
                    _check_window(key, window)
            acc = acc + res.scale(ca * cb)
    return acc


def basis_window(window: int, families: Iterable[str] = FAMILIES) -> list[BasisDerivation]:
    return [BasisDerivation(f, j) for f in families for j in range(-window, window + 1)]


@dataclass
class NsReport:
    window: int
    pairs_checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "pairs_checked": self.pairs_checked,
            "passed": self.passed,
            "mismatches": [{"left": a.label(), "right": b.label(), "table": t, "derivations": r}
                           for a, b, t, r in self.mismatches],
        }


def ns_verify_representation(window: int, L: int = 1,
                             bracket: Callable[[BasisDerivation, BasisDerivation], NsElement] = basis_bracket,
                             ) -> NsReport:
    """Compare the derivation bracket with the relation table (d -> 0) on every basis pair.

    ``bracket`` is the table used on the abstract side; passing a corrupted
    table is how the check is mutation-tested.
    """
    report = NsReport(window)
    basis = basis_window(window)
    for a, b in itertools.product(basis, basis):
        expected = bracket(a, b).to_derivation_sum(L)
        got = der_bracket(DerivationSum.basis(a, L), DerivationSum.basis(b, L))
        report.pairs_checked += 1
        if got != expected:
            report.mismatches.append((a, b, repr(expected), repr(got)))
    return report


def is_skew_supersymmetric(a: BasisDerivation, b: BasisDerivation) -> bool:
    sign = -1 if (a.parity is Parity.ODD and b.parity is Parity.ODD) else 1
    return basis_bracket(a, b) == basis_bracket(b, a).scale(-sign)


def jacobi_defect(a: BasisDerivation, b: BasisDerivation, c: BasisDerivation) -> NsElement:
    """(-1)^{ac}[a,[b,c]] + (-1)^{ba}[b,[c,a]] + (-1)^{cb}[c,[a,b]]."""

    def eta(x: BasisDerivation) -> int:
        return x.parity.value

    def br(x, y: NsElement) -> NsElement:
        return ns_bracket(NsElement.basis(x), y)

    total = NsElement()
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        sign = -1 if eta(x) * eta(z) else 1
        total = total + br(x, basis_bracket(y, z)).scale(sign)
    return total
