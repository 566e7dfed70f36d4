"""The nonhomogeneous frame (z, theta, theta*).

    theta  = (theta+ + theta-) / sqrt 2,     theta* = -i (theta+ - theta-) / sqrt 2
    theta+- = (theta +- i theta*) / sqrt 2

Nonhomogeneous series reuse :class:`SuperSeries`: the odd variable in the
phi+ slot is read as phi and the phi- slot as phi*.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from gmpy2 import mpq

from .errors import IndexOutOfWindow
from .field import FieldScalar, I as FIELD_I
from .grassmann import DEFAULT_GENERATORS, GrassmannElement, Parity
from .projective import ProjectiveParams, RationalTriple, _lin, _phi, _phiphi, _const
from .superconformal import ScReport, _first_term, _parity_ok
from .superseries import AT_ZERO, NumPoint, SuperPoint, SuperSeries, ss_compose

SQRT2 = FieldScalar.sqrt2()
INV_SQRT2 = SQRT2.inverse()
HOMOGENEOUS = "homogeneous"
NONHOMOGENEOUS = "nonhomogeneous"
NH_FAMILIES = ("L", "J", "G", "Gstar")


# ---------------------------------------------------------------------------
# points and triples


@dataclass(frozen=True)
class NonhomoPoint:
    z: GrassmannElement
    t: GrassmannElement
    ts: GrassmannElement

    def __iter__(self):
        return iter((self.z, self.t, self.ts))

    def to_json(self) -> dict:
        return {"frame": NONHOMOGENEOUS, "point": [self.z.to_json(), self.t.to_json(), self.ts.to_json()]}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "NonhomoPoint":
        if not isinstance(data, dict) or data.get("frame") != NONHOMOGENEOUS:
            raise ValueError("expected a point in the nonhomogeneous frame")
        return cls(*NumPoint.from_json(data.get("point"), L))


@dataclass(frozen=True)
class NonhomoTriple:
    """(z~, theta~, theta~*) as series in (x, phi, phi*)."""

    z: SuperSeries
    t: SuperSeries
    ts: SuperSeries

    def __iter__(self):
        return iter((self.z, self.t, self.ts))

    def as_point(self) -> SuperPoint:
        return SuperPoint(self.z, self.t, self.ts)

    def agrees(self, other: "NonhomoTriple", limit: int | None = None) -> bool:
        return self.as_point().agrees(other.as_point(), limit)

    def to_json(self) -> dict:
        return {"frame": NONHOMOGENEOUS, **self.as_point().to_json()}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "NonhomoTriple":
        if isinstance(data, dict) and data.get("frame", NONHOMOGENEOUS) != NONHOMOGENEOUS:
            raise ValueError("expected a triple in the nonhomogeneous frame")
        return cls(*SuperPoint.from_json(data, L))


def _odd_mix(u, v, to_nonhomo: bool):
    """Linear change of the odd pair; works on Grassmann elements and series alike."""
    if to_nonhomo:
        return (u + v) * INV_SQRT2, (u - v) * (-FIELD_I * INV_SQRT2)
    return (u + v * FIELD_I) * INV_SQRT2, (u - v * FIELD_I) * INV_SQRT2


def _input_change(L: int, to_nonhomo: bool) -> SuperPoint:
    """Old odd variables written in the new ones (the inner map of the bridge)."""
    x = SuperSeries.x(L)
    a, b = SuperSeries.phi(1, L), SuperSeries.phi(-1, L)
    # expressing the old variables needs the opposite linear map
    u, v = _odd_mix(a, b, not to_nonhomo)
    return SuperPoint(x, u, v)


def to_nonhomo(p):
    """Bridge a homogeneous point (NumPoint) or triple (SuperPoint) to the nonhomogeneous frame."""
    if isinstance(p, NumPoint):
        t, ts = _odd_mix(p.tp, p.tm, True)
        return NonhomoPoint(p.z, t, ts)
    inner = _input_change(p.L, True)
    x, u, v = ss_compose(p, inner)
    t, ts = _odd_mix(u, v, True)
    return NonhomoTriple(x, t, ts)


def to_homo(p):
    """Inverse of :func:`to_nonhomo`."""
    if isinstance(p, NonhomoPoint):
        tp, tm = _odd_mix(p.t, p.ts, False)
        return NumPoint(p.z, tp, tm)
    inner = _input_change(p.z.L, False)
    x, u, v = ss_compose(p.as_point(), inner)
    tp, tm = _odd_mix(u, v, False)
    return SuperPoint(x, tp, tm)


def transport_function(s: SuperSeries, to_nonhomo_frame: bool = True) -> SuperSeries:
    """Rewrite a single function in the other frame's variables."""
    zero = SuperSeries.zero(s.L)
    return ss_compose(SuperPoint(s, zero, zero), _input_change(s.L, to_nonhomo_frame)).x


# ---------------------------------------------------------------------------
# superconformal conditions


def nh_D(s: SuperSeries) -> SuperSeries:
    """D = d/dphi + phi d/dx."""
    return s.dphi(1) + s.dx().mul_phi(1)


def nh_Dstar(s: SuperSeries) -> SuperSeries:
    """D* = -(d/dphi* + phi* d/dx)."""
    return -(s.dphi(-1) + s.dx().mul_phi(-1))


def nh_conditions(H: NonhomoTriple) -> list[tuple[str, SuperSeries]]:
    z, t, ts = H
    return [
        ("D theta~ + D* theta~* = 0", nh_D(t) + nh_Dstar(ts)),
        ("D theta~* - D* theta~ = 0", nh_D(ts) - nh_Dstar(t)),
        ("D z~ - theta~ D theta~ - theta~* D theta~* = 0", nh_D(z) - t * nh_D(t) - ts * nh_D(ts)),
        ("D* z~ - theta~ D* theta~ - theta~* D* theta~* = 0", nh_Dstar(z) - t * nh_Dstar(t) - ts * nh_Dstar(ts)),
    ]


def nh_check(H: NonhomoTriple) -> ScReport:
    z, t, ts = H
    for name, s, want in (("z~", z, Parity.EVEN), ("theta~", t, Parity.ODD), ("theta~*", ts, Parity.ODD)):
        if not _parity_ok(s, want):
            return ScReport(False, f"parity: {name} must be {want.name.lower()}")
    for name, s in nh_conditions(H):
        term = _first_term(s)
        if term is not None:
            return ScReport(False, name, term)
    return ScReport(True)


# ---------------------------------------------------------------------------
# nonhomogeneous derivations


@dataclass(frozen=True, order=True)
class NhBasis:
    """L_j, J_j, or G_{j-1/2}, G*_{j-1/2} (families "G" and "Gstar")."""

    family: str
    j: int

    def __post_init__(self):
        if self.family not in NH_FAMILIES:
            raise ValueError(f"unknown nonhomogeneous family {self.family!r}")

    @property
    def parity(self) -> Parity:
        return Parity.ODD if self.family in ("G", "Gstar") else Parity.EVEN

    def label(self) -> str:
        if self.parity is Parity.ODD:
            return f"{'G' if self.family == 'G' else 'G*'}_{self.j}-1/2"
        return f"{self.family}_{self.j}"


def _xpow(s: SuperSeries, n: int) -> SuperSeries:
    return s.shift(n)


def nh_apply(b: NhBasis, s: SuperSeries) -> SuperSeries:
    """Apply a nonhomogeneous basis derivation to a series in (x, phi, phi*)."""
    j = b.j
    if b.family == "L":
        euler = s.dphi(1).mul_phi(1) + s.dphi(-1).mul_phi(-1)
        return -(_xpow(s.dx(), j + 1) + _xpow(euler, j) * FieldScalar(mpq(j + 1, 2)))
    if b.family == "J":
        rot = s.dphi(-1).mul_phi(1) - s.dphi(1).mul_phi(-1)
        return _xpow(rot, j) * FIELD_I
    if b.family == "G":
        core = s.dphi(1) - s.dx().mul_phi(1)
        tail = s.dphi(-1).mul_phi(-1).mul_phi(1)
        return -(_xpow(core, j) - _xpow(tail, j - 1) * j)
    core = s.dphi(-1) - s.dx().mul_phi(-1)
    tail = s.dphi(1).mul_phi(-1).mul_phi(1)
    return _xpow(core, j) + _xpow(tail, j - 1) * j


NH_CENTRAL = "d"


def nh_basis_bracket(a: NhBasis, b: NhBasis) -> dict:
    """Relation table of the nonhomogeneous algebra: {NhBasis or "d": FieldScalar}."""
    fa, fb, m, n = a.family, b.family, a.j, b.j
    F = FieldScalar.coerce
    neg = lambda d: {k: -v for k, v in d.items()}
    if fa == "L" and fb == "L":
        out = {NhBasis("L", m + n): F(m - n)}
        if m + n == 0:
            out[NH_CENTRAL] = F(mpq(m ** 3 - m, 12))
        return out
    if fa == "J" and fb == "J":
        return {NH_CENTRAL: F(mpq(m, 3))} if m + n == 0 else {}
    if fa == "L" and fb == "J":
        return {NhBasis("J", m + n): F(-n)}
    if fa == "J" and fb == "L":
        return neg(nh_basis_bracket(b, a))
    if fa == "L" and fb in ("G", "Gstar"):
        return {NhBasis(fb, m + n): F(mpq(m, 2) - n + mpq(1, 2))}
    if fa == "J" and fb == "G":
        return {NhBasis("Gstar", m + n): FIELD_I}
    if fa == "J" and fb == "Gstar":
        return {NhBasis("G", m + n): -FIELD_I}
    if fa in ("G", "Gstar") and fb in ("L", "J"):
        return neg(nh_basis_bracket(b, a))
    # both odd: a has mode m' + 1/2 with m' = m - 1, b has mode n - 1/2
    mp = m - 1
    if fa == fb:
        out = {NhBasis("L", mp + n): F(2)}
        if mp + n == 0:
            out[NH_CENTRAL] = F(mpq(mp * mp + mp, 3))
        return out
    if fa == "Gstar":
        return nh_basis_bracket(b, a)
    return {NhBasis("J", mp + n): FIELD_I * (mp - n + 1)}


def _nh_probes(L: int, krange: range) -> list[SuperSeries]:
    out = []
    for k in krange:
        for jp, jm in itertools.product((0, 1), repeat=2):
            out.append(SuperSeries.monomial(k, jp, jm, L=L))
    return out


@dataclass
class NhReport:
    window: int
    pairs_checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {"window": self.window, "pairs_checked": self.pairs_checked, "passed": self.passed,
                "mismatches": [{"left": a.label(), "right": b.label()} for a, b in self.mismatches]}


def nh_verify_table(window: int = 3, L: int = 1,
                    bracket: Callable[[NhBasis, NhBasis], dict] = nh_basis_bracket) -> NhReport:
    """Operator super-commutators against the table (d -> 0) on probe monomials."""
    if window < 0:
        raise IndexOutOfWindow("window must be nonnegative")
    basis = [NhBasis(f, j) for f in NH_FAMILIES for j in range(-window, window + 1)]
    probes = _nh_probes(L, range(-3, 4))
    report = NhReport(window)
    for a, b in itertools.product(basis, basis):
        table = bracket(a, b)
        report.pairs_checked += 1
        for s in probes:
            got = nh_operator_bracket(a, b, s)
            want = SuperSeries.zero(L)
            for key, c in table.items():
                if key != NH_CENTRAL:
                    want = want + nh_apply(key, s) * c
            if got != want:
                report.mismatches.append((a, b))
                break
    return report


def homogeneous_combination(b: NhBasis) -> list[tuple[str, FieldScalar]]:
    """Homogeneous families and weights with nh(b) = sum w * homogeneous(family, j)."""
    if b.family in ("L", "J"):
        return [(b.family, FieldScalar.one())]
    if b.family == "G":
        return [("Gp", INV_SQRT2), ("Gm", INV_SQRT2)]
    return [("Gp", -FIELD_I * INV_SQRT2), ("Gm", FIELD_I * INV_SQRT2)]


def bridge_operator_defect(b: NhBasis, s: SuperSeries) -> SuperSeries:
    """nh(b) s minus the transported homogeneous combination applied to s; zero when the frames agree."""
    from .derivations import BasisDerivation, DerivationSum, der_apply

    L = s.L
    pairs = [(BasisDerivation(f, b.j), GrassmannElement.scalar(w, L)) for f, w in homogeneous_combination(b)]
    T = DerivationSum(L, pairs)
    s_h = transport_function(s, to_nonhomo_frame=False)
    back = transport_function(der_apply(T, s_h), to_nonhomo_frame=True)
    return nh_apply(b, s) - back


# ---------------------------------------------------------------------------
# superprojective transformations


NH_PARAM_KEYS = ("a", "b", "c", "d", "e", "es", "g", "gs", "dl", "dls")


@dataclass(frozen=True)
class NhProjectiveParams:
    a: GrassmannElement
    b: GrassmannElement
    c: GrassmannElement
    d: GrassmannElement
    e: GrassmannElement
    es: GrassmannElement
    g: GrassmannElement
    gs: GrassmannElement
    dl: GrassmannElement
    dls: GrassmannElement

    @property
    def L(self) -> int:
        return self.a.L

    def values(self) -> tuple:
        return tuple(getattr(self, k) for k in NH_PARAM_KEYS)

    def determinant_defect(self) -> GrassmannElement:
        return self.a * self.d - self.b * self.c - 1

    def phase_defect(self) -> GrassmannElement:
        return self.e * self.e + self.es * self.es - (1 - self.g * self.dl + self.dls * self.gs)

    def is_valid(self) -> bool:
        return self.determinant_defect().is_zero() and self.phase_defect().is_zero()

    def to_json(self) -> dict:
        return {"frame": NONHOMOGENEOUS, **{k: getattr(self, k).to_json() for k in NH_PARAM_KEYS}}


def nh_projective_convert(p: ProjectiveParams) -> NhProjectiveParams:
    g, gs = _odd_mix(p.gp, p.gm, True)
    dl, dls = _odd_mix(p.dp, p.dm, True)
    half = FieldScalar(mpq(1, 2))
    e = (p.ep + p.em) * half
    es = (p.ep - p.em) * (-FIELD_I * half)
    return NhProjectiveParams(p.a, p.b, p.c, p.d, e, es, g, gs, dl, dls)


def nh_rational(q: NhProjectiveParams) -> RationalTriple:
    """The nonhomogeneous superprojective map (simplified form) as an exact rational triple."""
    L = q.L
    a, b, c, d, e, es, g, gs, dl, dls = q.values()
    dd = dl * dls
    sx = g * dls - gs * dl
    two = GrassmannElement.scalar(2, L)
    D = _lin(c, d, L)
    w = {
        1: _lin(a, b, L),
        2: (_phi(1, _lin(e * g + es * gs, e * dl + es * dls + es * dd * g - e * dd * gs, L))
            + _phi(-1, _lin(e * gs - es * g, e * dls - es * dl + es * dd * gs + e * dd * g, L))),
        3: -_phiphi(_lin(two * g * gs * d, 0, L) - _lin(sx * c, -(sx * d), L) - _const(two * dd * c)),
    }
    core = dd * c - sx * d
    quad = dd * g * gs * d
    first = _lin(-(es * g * gs * d), es * core + e * quad, L)  # f w + h
    second = _lin(e * g * gs * d, -(e * core) + es * quad, L)  # f* w + h*
    t = {1: _lin(g, dl, L) + _phi(1, _const(e)) - _phi(-1, _const(es)),
         2: _phi(1, first) - _phi(-1, second) + _phiphi(_const(gs * d - dls * c))}
    ts = {1: _lin(gs, dls, L) + _phi(1, _const(es)) + _phi(-1, _const(e)),
          2: _phi(1, second) + _phi(-1, first) - _phiphi(_const(g * d - dl * c))}
    return RationalTriple(D, (w, t, ts))


def nh_to_map(q: NhProjectiveParams, order: int | None = None, kind: str = AT_ZERO) -> NonhomoTriple:
    return NonhomoTriple(*nh_rational(q).series(kind, order))


def restricted_block_map(a, b, c, d, t: tuple, order: int | None = None) -> NonhomoTriple:
    """(aw+b)/(cw+d) with the odd pair rotated by the constant matrix t over cw + d."""
    L = a.L
    D = _lin(c, d, L)
    (t11, t12), (t21, t22) = t
    sc = lambda v: v if isinstance(v, GrassmannElement) else GrassmannElement.scalar(v, L)
    parts = (
        {1: _lin(a, b, L)},
        {1: _phi(1, _const(sc(t11))) + _phi(-1, _const(sc(t12)))},
        {1: _phi(1, _const(sc(t21))) + _phi(-1, _const(sc(t22)))},
    )
    return NonhomoTriple(*RationalTriple(D, parts).series(AT_ZERO, order))


DEFAULT_NH_WINDOW = 32


@dataclass(frozen=True)
class NhDerivation:
    """A nonhomogeneous basis derivation as a callable operator on series in (x, phi, phi*)."""

    basis: NhBasis

    def __call__(self, s: SuperSeries) -> SuperSeries:
        return nh_apply(self.basis, s)

    def apply_point(self, H: NonhomoTriple) -> NonhomoTriple:
        return NonhomoTriple(*(nh_apply(self.basis, s) for s in H))


def nh_derivation(family: str, j: int, window: int = DEFAULT_NH_WINDOW) -> NhDerivation:
    if abs(j) > window:
        raise IndexOutOfWindow(f"index {j} lies outside the window {window}")
    return NhDerivation(NhBasis(family, j))


def nh_operator_bracket(a: NhBasis, b: NhBasis, s: SuperSeries) -> SuperSeries:
    """Super-commutator [a, b] applied to s."""
    sign = 1 if (a.parity is Parity.ODD and b.parity is Parity.ODD) else -1
    return nh_apply(a, nh_apply(b, s)) + nh_apply(b, nh_apply(a, s)) * sign
