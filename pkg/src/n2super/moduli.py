"""Moduli data, the maps E, E~, E^ and the group laws built on them.

A ``ModuliData`` value ``(a0, b0, A+, A-, M+, M-)`` stands for the coordinate
transformation

    H = exp(T) . a0^{-2 L0} b0^{-J0} . (x, phi+, phi-)
      = (a0^2 x~, a0 b0 phi~+, a0 b0^{-1} phi~-),

with ``T = -sum_j (A+_j L_j + A-_j J_j + M+_j G+_{j-1/2} + M-_j G-_{j-1/2})``
and ``(x~, phi~+, phi~-) = exp(T) . (x, phi+, phi-)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from gmpy2 import mpq

from .derivations import BasisDerivation, DerivationSum, der_exp_apply, der_exp_series
from .errors import (
    ExtractionFailed,
    FlavorMismatch,
    IndexOutOfWindow,
    InvalidSphere,
    NonInvertible,
    ParityError,
)
from .field import FieldScalar, I as FIELD_I
from .grassmann import DEFAULT_GENERATORS, GrassmannElement
from .superseries import (
    AT_INFINITY,
    AT_ZERO,
    NumPoint,
    SuperPoint,
    SuperSeries,
    inversion_point,
    ss_compose,
)

DEFAULT_WEIGHT = 5


def _sign_of_quadratic_surd(p, q) -> int:
    """Sign of p + q*sqrt(2) for rationals p, q."""
    if p >= 0 and q >= 0:
        return 0 if (p == 0 and q == 0) else 1
    if p <= 0 and q <= 0:
        return -1
    # opposite signs: compare p^2 with 2 q^2
    if p > 0:
        return 1 if p * p > 2 * q * q else -1
    return 1 if 2 * q * q > p * p else -1


def _needs_flip(body: FieldScalar) -> bool:
    r0, r1, r2, r3 = body.r
    re = _sign_of_quadratic_surd(r0, r2)
    if re:
        return re < 0
    return _sign_of_quadratic_surd(r1, r3) < 0


def _zeros(L: int, W: int) -> tuple:
    return tuple(GrassmannElement.zero(L) for _ in range(W))


@dataclass(frozen=True)
class ModuliData:
    """Scale pair plus coefficient sequences A+-_j, M+-_{j-1/2} for j = 1..W."""

    a0: GrassmannElement
    b0: GrassmannElement
    Ap: tuple
    Am: tuple
    Mp: tuple
    Mm: tuple

    def __post_init__(self):
        W = len(self.Ap)
        if not (len(self.Am) == len(self.Mp) == len(self.Mm) == W):
            raise ValueError("all four sequences need the same length")
        for name in ("Ap", "Am", "Mp", "Mm"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for seq in (self.Ap, self.Am):
            if any(not g.is_even() for g in seq):
                raise ParityError("A-sequences must be even")
        for seq in (self.Mp, self.Mm):
            if any(not g.is_odd() for g in seq):
                raise ParityError("M-sequences must be odd")
        if not (self.a0.is_even() and self.b0.is_even()):
            raise ParityError("scale pair must be even")
        if self.a0.body().is_zero() or self.b0.body().is_zero():
            raise NonInvertible("scale pair needs invertible bodies")

    # construction ------------------------------------------------------------
    @property
    def L(self) -> int:
        return self.a0.L

    @property
    def weight(self) -> int:
        return len(self.Ap)

    @classmethod
    def identity(cls, L: int = DEFAULT_GENERATORS, W: int = DEFAULT_WEIGHT) -> "ModuliData":
        one = GrassmannElement.one(L)
        z = _zeros(L, W)
        return cls(one, one, z, z, z, z)

    @classmethod
    def from_sequences(cls, Ap: Sequence, Am: Sequence, Mp: Sequence, Mm: Sequence,
                       a0: GrassmannElement | None = None, b0: GrassmannElement | None = None,
                       L: int | None = None) -> "ModuliData":
        seqs = [list(s) for s in (Ap, Am, Mp, Mm)]
        if L is None:
            L = next((g.L for s in seqs for g in s), a0.L if a0 is not None else DEFAULT_GENERATORS)
        W = max(len(s) for s in seqs)
        seqs = [tuple(s) + _zeros(L, W - len(s)) for s in seqs]
        one = GrassmannElement.one(L)
        return cls(a0 or one, b0 or one, *seqs)

    def canonical(self) -> "ModuliData":
        """Representative of the (a0, b0) ~ (-a0, -b0) class with Re(body a0) > 0 (or Im > 0)."""
        if _needs_flip(self.a0.body()):
            return replace(self, a0=-self.a0, b0=-self.b0)
        return self

    def sequences(self) -> tuple:
        return (self.Ap, self.Am, self.Mp, self.Mm)

    def with_sequences(self, Ap, Am, Mp, Mp_minus) -> "ModuliData":
        return replace(self, Ap=tuple(Ap), Am=tuple(Am), Mp=tuple(Mp), Mm=tuple(Mp_minus))

    def unscaled(self) -> "ModuliData":
        one = GrassmannElement.one(self.L)
        return replace(self, a0=one, b0=one)

    def is_unscaled(self) -> bool:
        return self.a0 == 1 and self.b0 == 1

    def truncated(self, W: int) -> "ModuliData":
        seqs = [tuple(s[:W]) + _zeros(self.L, W - len(s[:W])) for s in self.sequences()]
        return replace(self, Ap=seqs[0], Am=seqs[1], Mp=seqs[2], Mm=seqs[3])

    def scaled(self, t: GrassmannElement) -> "ModuliData":
        """The sequence tuple t * (A+, A-, M+, M-) for an even scalar t."""
        return self.with_sequences(*([t * g for g in seq] for seq in self.sequences()))

    def map_sequences(self, fn: Callable[[str, int, GrassmannElement], GrassmannElement]) -> "ModuliData":
        names = ("Ap", "Am", "Mp", "Mm")
        new = [[fn(name, j + 1, g) for j, g in enumerate(seq)] for name, seq in zip(names, self.sequences())]
        return self.with_sequences(*new)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModuliData):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return (a.a0, a.b0, a.Ap, a.Am, a.Mp, a.Mm) == (b.a0, b.b0, b.Ap, b.Am, b.Mp, b.Mm)

    def __hash__(self) -> int:
        c = self.canonical()
        return hash((c.a0, c.b0, c.Ap, c.Am, c.Mp, c.Mm))

    # serialization -------------------------------------------------------------
    def to_json(self) -> dict:
        c = self.canonical()
        return {
            "a0": c.a0.to_json(),
            "b0": c.b0.to_json(),
            "Ap": [g.to_json() for g in c.Ap],
            "Am": [g.to_json() for g in c.Am],
            "Mp": [g.to_json() for g in c.Mp],
            "Mm": [g.to_json() for g in c.Mm],
            "weight": c.weight,
        }

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "ModuliData":
        if not isinstance(data, dict):
            raise ValueError("moduli data must be a JSON object")
        W = data.get("weight")
        seqs = []
        for key in ("Ap", "Am", "Mp", "Mm"):
            raw = data.get(key, [])
            if not isinstance(raw, list):
                raise ValueError(f"{key} must be a list")
            seqs.append([GrassmannElement.from_json(g, L) for g in raw])
        if W is None:
            W = max(len(s) for s in seqs)
        if not isinstance(W, int) or W < 0 or any(len(s) > W for s in seqs):
            raise ValueError("weight must be a nonnegative integer bounding every sequence")
        seqs = [tuple(s) + _zeros(L, W - len(s)) for s in seqs]
        one = [{"gens": [], "coef": [1, 1, 0, 1, 0, 1, 0, 1]}]
        a0 = GrassmannElement.from_json(data.get("a0", one), L)
        b0 = GrassmannElement.from_json(data.get("b0", one), L)
        return cls(a0, b0, *seqs)


@dataclass(frozen=True)
class ESequences:
    """The data E+-_j (even) and E+-_{j-1/2} (odd) for j = 1..W, read off phi-+ phi~+-."""

    Ep: tuple
    Em: tuple
    Ehp: tuple
    Ehm: tuple

    @property
    def weight(self) -> int:
        return len(self.Ep)

    def to_json(self) -> dict:
        return {key: [g.to_json() for g in getattr(self, key)] for key in ("Ep", "Em", "Ehp", "Ehm")}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "ESequences":
        if not isinstance(data, dict):
            raise ValueError("E-sequences must be a JSON object")
        seqs = []
        for key in ("Ep", "Em", "Ehp", "Ehm"):
            raw = data.get(key)
            if not isinstance(raw, list):
                raise ValueError(f"{key} must be a list")
            seqs.append(tuple(GrassmannElement.from_json(g, L) for g in raw))
        if len({len(s) for s in seqs}) != 1:
            raise ValueError("E-sequences need equal lengths")
        return cls(*seqs)


# ---------------------------------------------------------------------------
# derivation sums attached to data


def derivation_at_zero(d: ModuliData) -> DerivationSum:
    """T = -sum_j (A+_j L_j + A-_j J_j + M+_j G+_{j-1/2} + M-_j G-_{j-1/2})."""
    pairs = []
    for j in range(1, d.weight + 1):
        pairs.append((BasisDerivation("L", j), -d.Ap[j - 1]))
        pairs.append((BasisDerivation("J", j), -d.Am[j - 1]))
        pairs.append((BasisDerivation("Gp", j), -d.Mp[j - 1]))
        pairs.append((BasisDerivation("Gm", j), -d.Mm[j - 1]))
    return DerivationSum(d.L, pairs)


def derivation_at_infinity(d: ModuliData) -> DerivationSum:
    """sum_j (A+_j L_{-j} + A-_j J_{-j} + M+_j G+_{-j+1/2} + M-_j G-_{-j+1/2}).

    Rewriting this in the infinity normal form exp(sum A'+ L_{-j} - A'- J_{-j}
    + i M'+- G+-_{-j+1/2}) . I gives A' = twist(d), which is the tuple read
    off by E~^{-1}(H o I^{-1}).
    """
    pairs = []
    for j in range(1, d.weight + 1):
        pairs.append((BasisDerivation("L", -j), d.Ap[j - 1]))
        pairs.append((BasisDerivation("J", -j), d.Am[j - 1]))
        pairs.append((BasisDerivation("Gp", 1 - j), d.Mp[j - 1]))
        pairs.append((BasisDerivation("Gm", 1 - j), d.Mm[j - 1]))
    return DerivationSum(d.L, pairs)


def _require_unscaled(d: ModuliData) -> None:
    if not d.is_unscaled():
        raise ValueError("this operation takes data with a0 = b0 = 1")


# ---------------------------------------------------------------------------
# E, E~ and E^


def _odd_images(d: ModuliData, order: int) -> tuple[SuperSeries, SuperSeries]:
    T = derivation_at_zero(d)
    L = d.L
    return (der_exp_series(T, SuperSeries.phi(1, L), order),
            der_exp_series(T, SuperSeries.phi(-1, L), order))


def read_e_data(phip: SuperSeries, phim: SuperSeries, W: int) -> ESequences:
    """Extract E-data from the odd components of a normalized triple vanishing at zero."""
    for s in (phip, phim):
        if s.kind != AT_ZERO or not s.is_known(W):
            raise ExtractionFailed(f"odd components are not known up to x^{W}")
    return ESequences(
        tuple(phip.coef(j, 1, 0) for j in range(1, W + 1)),
        tuple(phim.coef(j, 0, 1) for j in range(1, W + 1)),
        tuple(phip.coef(j, 0, 0) for j in range(1, W + 1)),
        tuple(phim.coef(j, 0, 0) for j in range(1, W + 1)),
    )


def e_map(d: ModuliData, weight: int | None = None) -> ESequences:
    _require_unscaled(d)
    W = d.weight if weight is None else weight
    phip, phim = _odd_images(d.truncated(W), W)
    return read_e_data(phip, phim, W)


def e_inverse(e: ESequences, L: int | None = None) -> ModuliData:
    """Solve e_map(d) = e for d in order M_{1/2}, A_1, M_{3/2}, A_2, ..."""
    W = e.weight
    if L is None:
        L = next((g.L for seq in (e.Ep, e.Em, e.Ehp, e.Ehm) for g in seq), DEFAULT_GENERATORS)
    zero = GrassmannElement.zero(L)
    Ap, Am, Mp, Mm = ([zero] * W for _ in range(4))

    def current(j: int) -> ESequences:
        d = ModuliData.from_sequences(Ap[:j], Am[:j], Mp[:j], Mm[:j], L=L)
        return e_map(d, j)

    for j in range(1, W + 1):
        # odd step: E+-_{j-1/2} = M+-_{j-1/2} + r+-; repeat until the nilpotent corrections die out
        for _ in range(L + 2):
            got = current(j)
            dp = e.Ehp[j - 1] - got.Ehp[j - 1]
            dm = e.Ehm[j - 1] - got.Ehm[j - 1]
            if dp.is_zero() and dm.is_zero():
                break
            Mp[j - 1] = Mp[j - 1] + dp
            Mm[j - 1] = Mm[j - 1] + dm
        else:
            raise AssertionError("odd solve did not converge")
        # even step: E+-_j = (j+1)/2 A+_j +- A-_j + r+-
        for _ in range(L + 2):
            got = current(j)
            dp = e.Ep[j - 1] - got.Ep[j - 1]
            dm = e.Em[j - 1] - got.Em[j - 1]
            if dp.is_zero() and dm.is_zero():
                break
            Ap[j - 1] = Ap[j - 1] + (dp + dm) * mpq(1, j + 1)
            Am[j - 1] = Am[j - 1] + (dp - dm) * mpq(1, 2)
        else:
            raise AssertionError("even solve did not converge")
    return ModuliData.from_sequences(Ap, Am, Mp, Mm, L=L)


def e_tilde(d: ModuliData, order: int | None = None) -> SuperPoint:
    _require_unscaled(d)
    return der_exp_apply(derivation_at_zero(d), SuperPoint.identity(d.L), order)


def scale_output(a0: GrassmannElement, b0: GrassmannElement, p: SuperPoint) -> SuperPoint:
    """(a0^2 x~, a0 b0 phi~+, a0 b0^{-1} phi~-)."""
    return SuperPoint(p.x.scale_left(a0 * a0), p.p.scale_left(a0 * b0), p.m.scale_left(a0 * b0.inverse()))


def e_hat(d: ModuliData, order: int | None = None) -> SuperPoint:
    return scale_output(d.a0, d.b0, e_tilde(d.unscaled(), order))


def e_tilde_inverse(H: SuperPoint, W: int) -> ModuliData:
    """Data of a normalized superconformal triple vanishing at zero (unit phi-coefficients)."""
    for s, (jp, jm) in ((H.p, (1, 0)), (H.m, (0, 1))):
        if s.coef(0, jp, jm) != 1:
            raise ValueError("triple is not normalized: leading phi coefficient differs from 1")
    return e_inverse(read_e_data(H.p, H.m, W), H.L)


def e_hat_inverse(H: SuperPoint, a0: GrassmannElement, b0: GrassmannElement, W: int) -> ModuliData:
    """Recover full data given the scale pair (the square root a0 is never computed)."""
    if H.p.coef(0, 1, 0) != a0 * b0 or H.m.coef(0, 0, 1) != a0 * b0.inverse():
        raise ValueError("scale pair does not match the leading coefficients")
    unscaled = scale_output(a0.inverse(), b0.inverse(), H)
    d = e_tilde_inverse(unscaled, W)
    return replace(d, a0=a0, b0=b0).canonical()


# ---------------------------------------------------------------------------
# group laws


def compose_zero(d1: ModuliData, d2: ModuliData, order: int | None = None) -> ModuliData:
    """E^^{-1}(H_{d2} o H_{d1}): the triple of ``d1`` is substituted into that of ``d2``."""
    W = max(d1.weight, d2.weight)
    d1, d2 = d1.truncated(W), d2.truncated(W)
    N = W if order is None else order
    h1 = e_hat(d1, N)
    h2 = e_hat(d2, N)
    composed = ss_compose(h2, h1)
    return e_hat_inverse(composed, d1.a0 * d2.a0, d1.b0 * d2.b0, W)


def twist(d: ModuliData) -> ModuliData:
    """(A+, A-, M+, M-) -> (A+, -A-, -i M+, -i M-)."""
    i = FIELD_I
    return d.with_sequences(d.Ap, [-g for g in d.Am], [g * (-i) for g in d.Mp], [g * (-i) for g in d.Mm])


def untwist(d: ModuliData) -> ModuliData:
    i = FIELD_I
    return d.with_sequences(d.Ap, [-g for g in d.Am], [g * i for g in d.Mp], [g * i for g in d.Mm])


def infinity_triple(d: ModuliData, order: int | None = None) -> SuperPoint:
    """exp(derivation_at_infinity(d)) . I, vanishing at infinity with phi x^{-1} coefficient i."""
    _require_unscaled(d)
    target = None if order is None else -order
    return der_exp_apply(derivation_at_infinity(d), inversion_point(d.L), target)


def infinity_chart_data(H: SuperPoint, W: int) -> ModuliData:
    """Inverse of ``infinity_triple``: untwist E~^{-1}(H o I^{-1})."""
    moved = ss_compose(H, inversion_point(H.L, inverse=True))
    return untwist(e_tilde_inverse(moved, W))


def compose_infinity(d1: ModuliData, d2: ModuliData, order: int | None = None) -> ModuliData:
    """(C+, -C-, -iP+, -iP-) = E~^{-1}(H o I^{-1} o H' o I^{-1})."""
    _require_unscaled(d1)
    _require_unscaled(d2)
    W = max(d1.weight, d2.weight)
    d1, d2 = d1.truncated(W), d2.truncated(W)
    # substituting I^{-1} costs two orders of the known window
    N = W + 2 if order is None else order
    i_inv = inversion_point(d1.L, inverse=True)
    left = ss_compose(infinity_triple(d1, N), i_inv)
    right = ss_compose(infinity_triple(d2, N), i_inv)
    return untwist(e_tilde_inverse(ss_compose(left, right), W))


def compose_infinity_via_zero(d1: ModuliData, d2: ModuliData) -> ModuliData:
    """The same law written through the composition at zero of the twisted tuples."""
    return untwist(compose_zero(twist(d2), twist(d1)))


def invert_data(d: ModuliData) -> ModuliData:
    """Closed-form inverse: (a0^-1, b0^-1, -a0^{-2j} A+-_j, -a0^{-2j+1} b0^{+-1} M+-_{j-1/2})."""
    a_inv = d.a0.inverse()
    b = d.b0
    b_inv = b.inverse()
    powers = {}

    def a_pow(n: int) -> GrassmannElement:
        if n not in powers:
            powers[n] = d.a0 ** n if n >= 0 else a_inv ** (-n)
        return powers[n]

    Ap = [-(a_pow(-2 * j) * g) for j, g in enumerate(d.Ap, 1)]
    Am = [-(a_pow(-2 * j) * g) for j, g in enumerate(d.Am, 1)]
    Mp = [-(a_pow(1 - 2 * j) * b * g) for j, g in enumerate(d.Mp, 1)]
    Mm = [-(a_pow(1 - 2 * j) * b_inv * g) for j, g in enumerate(d.Mm, 1)]
    return ModuliData(a_inv, b_inv, tuple(Ap), tuple(Am), tuple(Mp), tuple(Mm)).canonical()


def rescale_sequences(d: ModuliData, a_plus: GrassmannElement, a_minus: GrassmannElement) -> ModuliData:
    """{a+^{2j} B+-_j, a+^{2j-1} a-^{-1} N+, a+^{2j-1} a- N-}: conjugation by a scale pair."""
    am_inv = a_minus.inverse()

    def fn(name: str, j: int, g: GrassmannElement) -> GrassmannElement:
        if name in ("Ap", "Am"):
            return (a_plus ** (2 * j)) * g
        if name == "Mp":
            return (a_plus ** (2 * j - 1)) * am_inv * g
        return (a_plus ** (2 * j - 1)) * a_minus * g

    return d.map_sequences(fn)


# ---------------------------------------------------------------------------
# one-tube spheres


def sequence_constraints_zero(d: ModuliData) -> list[str]:
    """Violated constraints among A+_1 = M+_1/2 = M-_1/2 = 0; empty when d describes a one-tube sphere."""
    out = []
    if not d.is_unscaled():
        out.append("scale pair must be (1, 1)")
    for name, seq in (("A+_1", d.Ap), ("M+_1/2", d.Mp), ("M-_1/2", d.Mm)):
        if seq and not seq[0].is_zero():
            out.append(f"{name} = 0")
    return out


def one_tube_defects(H: SuperPoint) -> list[str]:
    """Normal-form conditions for the coordinate at infinity of a one-tube sphere that H violates.

    H is a triple in the chart at infinity; the conditions are read off the coefficients with no
    odd variables (vanishing at infinity, x~ = 1/x + O(x^-3), x rho~(x,0,0) -> 0) and the linear
    odd coefficients (x d/drho+- rho~+- -> i).
    """
    if H.x.kind != AT_INFINITY:
        raise ValueError("one-tube conditions are stated in the chart at infinity")
    L = H.L
    one, ii = GrassmannElement.one(L), GrassmannElement.scalar(FIELD_I, L)
    out = []

    def nonneg_terms(s: SuperSeries, jp: int, jm: int, below: int = 0) -> bool:
        return any(not c.is_zero() for k, a, b, c in s.terms() if (a, b) == (jp, jm) and k >= below)

    if any(nonneg_terms(s, 0, 0) for s in H):
        out.append("H(w,0,0) -> 0")
    for s, (jp, jm), label in ((H.p, (1, 0), "+"), (H.m, (0, 1), "-")):
        if nonneg_terms(s, jp, jm) or s.coef(-1, jp, jm) != ii or nonneg_terms(s, 1, 1, -1):
            out.append(f"w d/drho{label} rho~{label} -> i")
    if H.x.coef(-1, 0, 0) != one or not H.x.coef(-2, 0, 0).is_zero():
        out.append("w^2 (w~(w,0,0) - 1/w) -> 0")
    if not (H.p.coef(-1, 0, 0).is_zero() and H.m.coef(-1, 0, 0).is_zero()):
        out.append("w rho~(w,0,0) -> 0")
    return out


# ---------------------------------------------------------------------------
# generalized spheres


def _body_key(g: GrassmannElement) -> tuple:
    return g.body().r


@dataclass(frozen=True)
class SphereData:
    """Punctures 1..n (the n-th at the origin), data at infinity and at each puncture.

    ``infinity`` holds only the sequence part (its scale pair is 1, 1).
    """

    punctures: tuple
    infinity: ModuliData
    locals: tuple

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(self.punctures))
        object.__setattr__(self, "locals", tuple(d.canonical() for d in self.locals))
        if not self.punctures:
            raise InvalidSphere("a sphere needs at least one finite puncture")
        if len(self.locals) != len(self.punctures):
            raise InvalidSphere("one local coordinate per puncture")
        last = self.punctures[-1]
        if any(not g.is_zero() for g in last):
            raise InvalidSphere("the last puncture must sit at (0, 0, 0)")
        bodies = [_body_key(p.z) for p in self.punctures]
        if len(set(bodies)) != len(bodies):
            raise InvalidSphere("puncture bodies must be pairwise distinct")
        for p in self.punctures:
            if not (p.z.is_even() and p.tp.is_odd() and p.tm.is_odd()):
                raise ParityError("punctures need an even z and odd theta+-")
        if not self.infinity.is_unscaled():
            raise InvalidSphere("the coordinate at infinity carries no scale pair")
        weights = {self.infinity.weight} | {d.weight for d in self.locals}
        if len(weights) != 1:
            raise InvalidSphere("all coordinate data must share one truncation weight")

    @property
    def n(self) -> int:
        return len(self.punctures)

    @property
    def L(self) -> int:
        return self.infinity.L

    @property
    def weight(self) -> int:
        return self.infinity.weight

    @classmethod
    def trivial(cls, n: int = 1, L: int = DEFAULT_GENERATORS, W: int = DEFAULT_WEIGHT,
                punctures: Sequence[NumPoint] | None = None) -> "SphereData":
        if punctures is None:
            punctures = [NumPoint(GrassmannElement.scalar(n - k, L), GrassmannElement.zero(L), GrassmannElement.zero(L))
                         for k in range(1, n)] + [NumPoint.origin(L)]
        ident = ModuliData.identity(L, W)
        return cls(tuple(punctures), ident, (ident,) * n)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "punctures": [p.to_json() for p in self.punctures],
            "infinity": self.infinity.to_json(),
            "locals": [d.to_json() for d in self.locals],
        }

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "SphereData":
        if not isinstance(data, dict):
            raise ValueError("sphere data must be a JSON object")
        punctures = [NumPoint.from_json(p, L) for p in data.get("punctures", [])]
        if "n" in data and data["n"] != len(punctures):
            raise InvalidSphere("n disagrees with the puncture list")
        infinity = ModuliData.from_json(data["infinity"], L)
        locs = [ModuliData.from_json(d, L) for d in data.get("locals", [])]
        return cls(tuple(punctures), infinity, tuple(locs))


def _is_trivial_local(d: ModuliData) -> bool:
    return d == ModuliData.identity(d.L, d.weight)


def sew(q1: SphereData, k: int, q2: SphereData) -> SphereData:
    """Sew the infinity puncture of ``q2`` to puncture ``k`` (1-based) of ``q1``.

    Flavor A (q2 has zero infinity data): the k-th local coordinate becomes
    its composition with q2's puncture coordinate. Flavor B (q2 has a trivial
    puncture coordinate): the infinity data becomes q1's composed at infinity
    with q2's.
    """
    if q2.n != 1:
        raise FlavorMismatch("only one-puncture spheres can be sewn in")
    if not 1 <= k <= q1.n:
        raise IndexOutOfWindow(f"puncture index {k} outside 1..{q1.n}")
    zero_inf = q2.infinity == ModuliData.identity(q2.L, q2.weight)
    if zero_inf:
        locs = list(q1.locals)
        locs[k - 1] = compose_zero(locs[k - 1], q2.locals[0])
        return replace(q1, locals=tuple(locs))
    if _is_trivial_local(q2.locals[0]):
        return replace(q1, infinity=compose_infinity(q1.infinity, q2.infinity))
    raise FlavorMismatch("q2 needs zero infinity data or a trivial puncture coordinate")


def _normalize_perm(sigma: Sequence[int], n: int) -> tuple:
    """1-based images of 1..n-1; a trailing fixed n is accepted."""
    s = tuple(int(v) for v in sigma)
    if len(s) == n and s[-1] == n:
        s = s[:-1]
    if sorted(s) != list(range(1, n)):
        raise ValueError(f"not a permutation of 1..{n - 1}: {list(sigma)}")
    return s


def act_permutation(sigma: Sequence[int], q: SphereData) -> SphereData:
    """Slot i of the result holds the old slot sigma^{-1}(i); the last slot and infinity stay put."""
    s = _normalize_perm(sigma, q.n)
    inv = [0] * len(s)
    for i, image in enumerate(s, 1):
        inv[image - 1] = i
    punctures = [q.punctures[inv[i] - 1] for i in range(len(s))] + [q.punctures[-1]]
    locs = [q.locals[inv[i] - 1] for i in range(len(s))] + [q.locals[-1]]
    return replace(q, punctures=tuple(punctures), locals=tuple(locs))


def translate_puncture(p: NumPoint, c: NumPoint) -> NumPoint:
    """s_c(p) = (z - z_c - theta+ theta-_c - theta- theta+_c, theta+ - theta+_c, theta- - theta-_c)."""
    return NumPoint(p.z - c.z - p.tp * c.tm - p.tm * c.tp, p.tp - c.tp, p.tm - c.tm)


def translation_generator(c: NumPoint) -> DerivationSum:
    """-z L_{-1} - theta+ G+_{-1/2} - theta- G-_{-1/2}: its exponential substitutes the inverse translation."""
    return DerivationSum(c.z.L, [
        (BasisDerivation("L", -1), -c.z),
        (BasisDerivation("Gp", 0), -c.tp),
        (BasisDerivation("Gm", 0), -c.tm),
    ])


def transport_infinity_data(d: ModuliData, c: NumPoint) -> ModuliData:
    """Infinity data after moving the puncture ``c`` to the origin."""
    W = d.weight
    H = infinity_triple(d, W + 2)
    moved = der_exp_apply(translation_generator(c), H, -(W + 2))
    return infinity_chart_data(moved, W)


def act_transpose_last(q: SphereData) -> SphereData:
    """The transposition (n-1 n), followed by the translation restoring canonical form."""
    if q.n < 2:
        raise ValueError("the transposition needs at least two punctures")
    c = q.punctures[-2]
    moved = [translate_puncture(p, c) for p in q.punctures[:-2]]
    moved += [translate_puncture(q.punctures[-1], c), NumPoint.origin(q.L)]
    locs = q.locals[:-2] + (q.locals[-1], q.locals[-2])
    return SphereData(tuple(moved), transport_infinity_data(q.infinity, c), locs)
