"""Basis superderivations L_j, J_j, G+-_{j-1/2} and finite sums of them.

Conventions (all with an overall minus sign):

* ``L_n = -(x^{n+1} d/dx + (n+1)/2 x^n (phi+ d/dphi+ + phi- d/dphi-))``
* ``J_n = -x^n (phi+ d/dphi+ - phi- d/dphi-)``
* ``G+-_{n-1/2} = -(x^n (d/dphi+- - phi-+ d/dx) +- n x^{n-1} phi+ phi- d/dphi+-)``

A G-family basis element is indexed by ``j`` and denotes the mode ``j - 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from gmpy2 import mpq

from .errors import NonInvertible, NonTerminating, NotInSpan, ParityMismatch
from .grassmann import (
    DEFAULT_GENERATORS,
    GrassmannElement,
    Parity,
    popcount,
    raw_add_into,
    raw_mul,
    t_scale,
)
from .superseries import AT_INFINITY, AT_ZERO, DEFAULT_ORDER, SuperPoint, SuperSeries

FAMILIES = ("L", "J", "Gp", "Gm")


@dataclass(frozen=True, order=True)
class BasisDerivation:
    family: str
    j: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown derivation family {self.family!r}")

    @property
    def parity(self) -> Parity:
        return Parity.ODD if self.family in ("Gp", "Gm") else Parity.EVEN

    @property
    def weight(self) -> Fraction:
        if self.parity is Parity.ODD:
            return Fraction(2 * self.j - 1, 2)
        return Fraction(self.j)

    def x_shifts(self) -> tuple[int, int]:
        """Smallest and largest change of the x-exponent under this operator."""
        if self.parity is Parity.ODD:
            return (self.j - 1, self.j)
        return (self.j, self.j)

    def label(self) -> str:
        if self.parity is Parity.ODD:
            sign = "+" if self.family == "Gp" else "-"
            return f"G{sign}_{self.j}-1/2"
        return f"{self.family}_{self.j}"


def L(j: int) -> BasisDerivation:
    return BasisDerivation("L", j)


def J(j: int) -> BasisDerivation:
    return BasisDerivation("J", j)


def Gp(j: int) -> BasisDerivation:
    """G+ with mode j - 1/2."""
    return BasisDerivation("Gp", j)


def Gm(j: int) -> BasisDerivation:
    """G- with mode j - 1/2."""
    return BasisDerivation("Gm", j)


class DerivationSum:
    """Finite combination sum_B c_B B with Grassmann coefficients on the left."""

    __slots__ = ("L", "pairs")

    def __init__(self, L: int, pairs: Mapping[BasisDerivation, GrassmannElement] | Iterable = ()):
        self.L = L
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        acc: dict = {}
        for basis, coef in items:
            if not isinstance(coef, GrassmannElement):
                coef = GrassmannElement.scalar(coef, L)
            if coef.L != L:
                raise ValueError("coefficient generator count mismatch")
            acc[basis] = acc[basis] + coef if basis in acc else coef
        self.pairs = {b: c for b, c in sorted(acc.items()) if not c.is_zero()}
        for b, c in self.pairs.items():
            if c.parity() is None:
                raise ParityMismatch(f"coefficient of {b.label()} is not homogeneous")

    @classmethod
    def basis(cls, b: BasisDerivation, L: int = DEFAULT_GENERATORS, coef=None) -> "DerivationSum":
        return cls(L, {b: GrassmannElement.one(L) if coef is None else coef})

    def __add__(self, other: "DerivationSum") -> "DerivationSum":
        return DerivationSum(self.L, list(self.pairs.items()) + list(other.pairs.items()))

    def __neg__(self) -> "DerivationSum":
        return DerivationSum(self.L, {b: -c for b, c in self.pairs.items()})

    def __sub__(self, other: "DerivationSum") -> "DerivationSum":
        return self + (-other)

    def scale(self, g) -> "DerivationSum":
        """Left-multiply every coefficient by ``g``."""
        if not isinstance(g, GrassmannElement):
            g = GrassmannElement.scalar(g, self.L)
        return DerivationSum(self.L, {b: g * c for b, c in self.pairs.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, DerivationSum) and self.L == other.L and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash((self.L, tuple(self.pairs.items())))

    def is_zero(self) -> bool:
        return not self.pairs

    def parity(self) -> Parity | None:
        """Total parity eta(c) + eta(B) when homogeneous, else ``None``."""
        seen = set()
        for b, c in self.pairs.items():
            pc = c.parity()
            if pc is None:
                return None
            seen.add(pc.value ^ b.parity.value)
        if len(seen) > 1:
            return None
        return Parity.ODD if seen == {1} else Parity.EVEN

    def __repr__(self) -> str:
        return " + ".join(f"({c!r}){b.label()}" for b, c in self.pairs.items()) or "0"

    def to_json(self) -> dict:
        return {"terms": [{"family": b.family, "j": b.j, "coef": c.to_json()} for b, c in self.pairs.items()]}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "DerivationSum":
        if not isinstance(data, dict) or not isinstance(data.get("terms"), list):
            raise ValueError("derivation sum needs a terms list")
        pairs = []
        for entry in data["terms"]:
            pairs.append((BasisDerivation(entry["family"], int(entry["j"])),
                          GrassmannElement.from_json(entry["coef"], L)))
        return cls(L, pairs)


# ---------------------------------------------------------------------------
# action on raw term maps


def _add_to(out: dict, k: int, m: int, c: tuple) -> None:
    raw = out.setdefault(k, {})
    raw_add_into(raw, {m: c})
    if not raw:
        del out[k]


def basis_apply_raw(b: BasisDerivation, t: Mapping[int, dict], L: int) -> dict:
    P, M = 1 << L, 1 << (L + 1)
    j = b.j
    out: dict = {}
    fam = b.family
    if fam == "L":
        half = mpq(j + 1, 2)
        for k, raw in t.items():
            for m, c in raw.items():
                nphi = (1 if m & P else 0) + (1 if m & M else 0)
                f = -(k + half * nphi)
                if f:
                    _add_to(out, k + j, m, t_scale(c, f))
    elif fam == "J":
        for k, raw in t.items():
            for m, c in raw.items():
                f = (1 if m & M else 0) - (1 if m & P else 0)
                if f:
                    _add_to(out, k + j, m, t_scale(c, f))
    else:
        bit, other = (P, M) if fam == "Gp" else (M, P)
        pm_sign = 1 if fam == "Gp" else -1
        for k, raw in t.items():
            for m, c in raw.items():
                if m & bit:
                    s = -1 if popcount(m & (bit - 1)) & 1 else 1
                    # -x^j d/dphi
                    _add_to(out, k + j, m ^ bit, t_scale(c, -s))
                    # -(+-) j x^{j-1} phi+ phi- d/dphi  (phi+phi- is even, so no further sign)
                    if j and not m & other:
                        _add_to(out, k + j - 1, (m ^ bit) | P | M, t_scale(c, -pm_sign * j * s))
                if k and not m & other:
                    s = -1 if popcount(m & (other - 1)) & 1 else 1
                    # +x^j phi-+ d/dx
                    _add_to(out, k - 1 + j, m | other, t_scale(c, k * s))
    return out


def _apply_raw(pairs: list, t: Mapping[int, dict], L: int, keep=None) -> dict:
    n = L + 2
    out: dict = {}
    for b, coef in pairs:
        part = basis_apply_raw(b, t, L)
        for k, raw in part.items():
            if keep is not None and not keep(k):
                continue
            prod = raw_mul(coef.c, raw, n)
            if prod:
                cur = out.setdefault(k, {})
                raw_add_into(cur, prod)
                if not cur:
                    del out[k]
    return out


def der_apply(T: DerivationSum, s: SuperSeries) -> SuperSeries:
    """Apply a derivation sum to a series; the known window shrinks by the operator's shifts."""
    if T.L != s.L:
        raise ValueError("generator count mismatch")
    trunc = s.trunc
    if trunc is not None and T.pairs:
        shifts = [b.x_shifts() for b in T.pairs]
        if s.kind == AT_ZERO:
            trunc = trunc + min(lo for lo, _ in shifts)
        else:
            trunc = trunc + max(hi for _, hi in shifts)
    return SuperSeries(s.L, s.kind, _apply_raw(list(T.pairs.items()), s.t, s.L), trunc)


def der_apply_point(T: DerivationSum, p: SuperPoint) -> SuperPoint:
    return p.map(lambda s: der_apply(T, s))


# ---------------------------------------------------------------------------
# bracket via probes


def _probe_series(L: int, krange: range) -> list[SuperSeries]:
    probes = []
    for k in krange:
        for jp in (0, 1):
            for jm in (0, 1):
                probes.append(SuperSeries.monomial(k, jp, jm, L=L))
    return probes


def operator_bracket_apply(S: DerivationSum, T: DerivationSum, s: SuperSeries) -> SuperSeries:
    ps, pt = S.parity(), T.parity()
    if ps is None or pt is None:
        raise ParityMismatch("bracket needs homogeneous derivation sums")
    sign = -1 if (ps is Parity.ODD and pt is Parity.ODD) else 1
    st = der_apply(S, der_apply(T, s))
    ts = der_apply(T, der_apply(S, s))
    return st + ts if sign < 0 else st - ts


def der_bracket(S: DerivationSum, T: DerivationSum, probe_range: range = range(-3, 4)) -> DerivationSum:
    """Super-bracket [S, T] re-expressed in the L/J/G basis."""
    L_ = S.L
    apply = lambda s: operator_bracket_apply(S, T, s)
    img_x = apply(SuperSeries.x(L_))
    img_p = apply(SuperSeries.phi(1, L_))
    pairs: dict = {}
    for k, jp, jm, c in img_x.terms():
        if (jp, jm) == (0, 0):
            pairs[BasisDerivation("L", k - 1)] = -c
        elif (jp, jm) == (0, 1):
            pairs[BasisDerivation("Gp", k)] = c
        elif (jp, jm) == (1, 0):
            pairs[BasisDerivation("Gm", k)] = c
        else:
            raise NotInSpan("image of x has a phi+phi- component")
    # J_k is what remains of the phi+ x^k coefficient after removing L_k's share
    phi_coefs = {k: c for k, jp, jm, c in img_p.terms() if (jp, jm) == (1, 0)}
    l_keys = [b.j for b in pairs if b.family == "L"]
    for k in set(phi_coefs) | set(l_keys):
        c = phi_coefs.get(k, GrassmannElement.zero(L_))
        lcoef = pairs.get(BasisDerivation("L", k), GrassmannElement.zero(L_))
        jcoef = -c - lcoef * mpq(k + 1, 2)
        if not jcoef.is_zero():
            pairs[BasisDerivation("J", k)] = jcoef
    candidate = DerivationSum(L_, pairs)
    for probe in _probe_series(L_, probe_range):
        if not der_apply(candidate, probe).agrees(apply(probe)):
            raise NotInSpan(f"bracket differs from its basis expansion on probe {probe!r}")
    return candidate


# ---------------------------------------------------------------------------
# exponential action


def check_termination(T: DerivationSum, kind: str) -> None:
    for b, c in T.pairs.items():
        if c.body().is_zero():
            continue
        w = b.weight
        if (kind == AT_ZERO and w <= 0) or (kind == AT_INFINITY and w >= 0):
            raise NonTerminating(
                f"{b.label()} has weight {w} and a coefficient with nonzero body; "
                f"the exponential does not terminate on an {kind} series")


def _nilpotent_budget(T: DerivationSum, kind: str) -> tuple[int, int]:
    """(max number of offending nilpotent factors, worst x-shift against the truncation direction)."""
    masks = []
    worst = 0
    for b, c in T.pairs.items():
        lo, hi = b.x_shifts()
        bad = lo < 0 if kind == AT_ZERO else hi > 0
        if bad or b.weight == 0:
            masks.extend(c.c)
        if bad:
            worst = max(worst, -lo if kind == AT_ZERO else hi)
    K = _coef_bound(T.L, masks)
    return K, worst


def _coef_bound(L: int, masks: list) -> int:
    if not masks:
        return 0
    d = min(popcount(m) for m in masks)
    return L // d if d else 0


def der_exp_series(T: DerivationSum, s: SuperSeries, order: int | None = None) -> SuperSeries:
    """e^T . s summed exactly within the truncation window."""
    kind = s.kind
    if T.pairs and T.parity() is not Parity.EVEN:
        raise ParityMismatch("only even derivation sums can be exponentiated")
    check_termination(T, kind)
    if not T.pairs:
        return s
    K, worst = _nilpotent_budget(T, kind)
    if kind == AT_ZERO:
        target = DEFAULT_ORDER if order is None else order
        if s.trunc is not None:
            target = min(target, s.trunc - K * worst)
        work = target + K * worst
        keep = lambda k: k <= work
        lowest = s.min_key() if s.t else 0
        span = work - lowest
    else:
        target = -DEFAULT_ORDER if order is None else order
        if s.trunc is not None:
            target = max(target, s.trunc + K * worst)
        work = target - K * worst
        keep = lambda k: k >= work
        highest = s.max_key() if s.t else 0
        span = highest - work
    pairs = list(T.pairs.items())
    L_ = s.L
    max_wdrop = max((abs(b.weight) for b in T.pairs), default=0)
    limit = int(2 * (span + 2) + K * (2 * max_wdrop + 2) + 2 * K + 8)
    term = {k: dict(v) for k, v in s.t.items() if keep(k)}
    total = {k: dict(v) for k, v in term.items()}
    n = 0
    while term:
        n += 1
        if n > limit:
            raise NonTerminating("exponential series did not terminate within the weight bound")
        nxt = _apply_raw(pairs, term, L_, keep)
        inv = mpq(1, n)
        term = {k: {m: t_scale(c, inv) for m, c in raw.items()} for k, raw in nxt.items()}
        for k, raw in term.items():
            cur = total.setdefault(k, {})
            raw_add_into(cur, raw)
            if not cur:
                del total[k]
    return SuperSeries(L_, kind, total, target)


def der_exp_apply(T: DerivationSum, p: SuperPoint, order: int | None = None) -> SuperPoint:
    return p.map(lambda s: der_exp_series(T, s, order))


# ---------------------------------------------------------------------------
# zero-mode scaling


def der_scale_apply(a0: GrassmannElement, b0: GrassmannElement, p: SuperPoint) -> SuperPoint:
    """Substitute (a0^2 x, a0 b0 phi+, a0 b0^{-1} phi-) into ``p``."""
    if a0.body().is_zero() or b0.body().is_zero():
        raise NonInvertible("scale parameters need invertible bodies")
    alpha = a0 * a0
    alpha_inv = alpha.inverse()
    beta = a0 * b0
    gamma = a0 * b0.inverse()
    L_ = a0.L
    n = L_ + 2
    P, M = 1 << L_, 1 << (L_ + 1)
    cache: dict = {}

    def factor(k: int, jp: int, jm: int) -> dict:
        key = (k, jp, jm)
        if key not in cache:
            f = (alpha if k >= 0 else alpha_inv) ** abs(k)
            if jp:
                f = f * beta
            if jm:
                f = f * gamma
            cache[key] = f.c
        return cache[key]

    def scale(s: SuperSeries) -> SuperSeries:
        out = {}
        for k, raw in s.t.items():
            acc: dict = {}
            for m, c in raw.items():
                f = factor(k, 1 if m & P else 0, 1 if m & M else 0)
                raw_add_into(acc, raw_mul({m: c}, f, n))
            if acc:
                out[k] = acc
        return SuperSeries(s.L, s.kind, out, s.trunc)

    return p.map(scale)
