"""N=2 superprojective transformations.

A transformation is stored through ten parameters (a, b, c, d, e+, e-, gamma+-,
delta+-) subject to ad - bc = 1 and e+ e- = 1 - gamma+ delta- + delta+ gamma-.
Every component of the map is a sum  N_k(x, phi) / (cx + d)^k  with polynomial
numerators, which is kept exactly as a :class:`RationalTriple`; series and
point evaluations are derived from that.

Charts: ``U0`` uses the coordinate w of the finite chart, ``U1`` the coordinate
u with w = I(u), where I(w, rho+, rho-) = (1/w, i rho+/w, i rho-/w).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields, replace
from typing import Mapping

from gmpy2 import mpq

from .derivations import BasisDerivation, DerivationSum, der_bracket
from .errors import (
    ExtractionFailed,
    NonInvertible,
    NonInvertibleDenominator,
    OutOfSpan,
    ParityError,
    ParityMismatch,
)
from .field import FieldScalar, I as FIELD_I
from .grassmann import DEFAULT_GENERATORS, GrassmannElement, Parity
from .moduli import _needs_flip
from .superseries import (
    AT_INFINITY,
    AT_ZERO,
    DEFAULT_ORDER,
    NumPoint,
    SuperPoint,
    SuperSeries,
    inversion_point,
    ss_compose,
    ss_inversion_I,
)
from .superconformal import component

CHART_FINITE = "U0"
CHART_INVERTED = "U1"
CHARTS = (CHART_FINITE, CHART_INVERTED)

PARAM_KEYS = ("a", "b", "c", "d", "ep", "em", "gp", "gm", "dp", "dm")


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ProjectiveParams:
    a: GrassmannElement
    b: GrassmannElement
    c: GrassmannElement
    d: GrassmannElement
    ep: GrassmannElement
    em: GrassmannElement
    gp: GrassmannElement
    gm: GrassmannElement
    dp: GrassmannElement
    dm: GrassmannElement

    def __post_init__(self):
        L = self.a.L
        for f in fields(self):
            g = getattr(self, f.name)
            if not isinstance(g, GrassmannElement):
                object.__setattr__(self, f.name, GrassmannElement.scalar(g, L))
            elif g.L != L:
                raise ValueError("all parameters need the same generator count")
        for name in ("a", "b", "c", "d", "ep", "em"):
            if not getattr(self, name).is_even():
                raise ParityError(f"{name} must be even")
        for name in ("gp", "gm", "dp", "dm"):
            if not getattr(self, name).is_odd():
                raise ParityError(f"{name} must be odd")

    @property
    def L(self) -> int:
        return self.a.L

    @classmethod
    def identity(cls, L: int = DEFAULT_GENERATORS) -> "ProjectiveParams":
        one, zero = GrassmannElement.one(L), GrassmannElement.zero(L)
        return cls(one, zero, zero, one, one, one, zero, zero, zero, zero)

    @classmethod
    def build(cls, L: int = DEFAULT_GENERATORS, **kw) -> "ProjectiveParams":
        """Start from the identity and override the named parameters."""
        base = cls.identity(L)
        kw = {k: (v if isinstance(v, GrassmannElement) else GrassmannElement.scalar(v, L)) for k, v in kw.items()}
        return replace(base, **kw)

    def values(self) -> tuple:
        return tuple(getattr(self, k) for k in PARAM_KEYS)

    # derived quantities ------------------------------------------------------
    @property
    def s(self) -> GrassmannElement:
        """gamma+ delta- + delta+ gamma-."""
        return self.gp * self.dm + self.dp * self.gm

    @property
    def q(self) -> GrassmannElement:
        """delta+ delta- gamma+ gamma-."""
        return self.dp * self.dm * self.gp * self.gm

    def _k(self, sign: int) -> GrassmannElement:
        # h+- = e+- * K+-
        core = self.dp * self.dm * self.c - self.s * self.d
        q_d = self.q * self.d
        return core - q_d if sign > 0 else -(core + q_d)

    @property
    def fp(self) -> GrassmannElement:
        return -(self.ep * self.gp * self.gm * self.d)

    @property
    def fm(self) -> GrassmannElement:
        return self.em * self.gp * self.gm * self.d

    @property
    def hp(self) -> GrassmannElement:
        return self.ep * self._k(1)

    @property
    def hm(self) -> GrassmannElement:
        return self.em * self._k(-1)

    def determinant_defect(self) -> GrassmannElement:
        return self.a * self.d - self.b * self.c - 1

    def phase_defect(self) -> GrassmannElement:
        return self.ep * self.em - (1 - self.gp * self.dm + self.dp * self.gm)

    def is_valid(self) -> bool:
        return self.determinant_defect().is_zero() and self.phase_defect().is_zero()

    def require_valid(self) -> "ProjectiveParams":
        if not self.determinant_defect().is_zero():
            raise ExtractionFailed("ad - bc != 1")
        if not self.phase_defect().is_zero():
            raise ExtractionFailed("e+ e- != 1 - gamma+ delta- + delta+ gamma-")
        return self

    # normalization -------------------------------------------------------------
    def negated(self) -> "ProjectiveParams":
        return ProjectiveParams(*(-g for g in self.values()))

    def odd_flipped(self) -> "ProjectiveParams":
        """Conjugate by phi+- -> -phi+-."""
        return replace(self, gp=-self.gp, gm=-self.gm, dp=-self.dp, dm=-self.dm)

    def canonical(self) -> "ProjectiveParams":
        """Representative of the overall sign class (every parameter negated gives the same map)."""
        for g in (self.d, self.a, self.b, self.c):
            body = g.body()
            if not body.is_zero():
                return self.negated() if _needs_flip(body) else self
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectiveParams):
            return NotImplemented
        return self.canonical().values() == other.canonical().values()

    def __hash__(self) -> int:
        return hash(self.canonical().values())

    # serialization ---------------------------------------------------------------
    def to_json(self) -> dict:
        c = self.canonical()
        return {k: getattr(c, k).to_json() for k in PARAM_KEYS}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "ProjectiveParams":
        if not isinstance(data, dict):
            raise ValueError("projective parameters must be a JSON object")
        missing = [k for k in PARAM_KEYS if k not in data]
        if missing:
            raise ValueError(f"missing parameters: {', '.join(missing)}")
        return cls(*(GrassmannElement.from_json(data[k], L) for k in PARAM_KEYS))


# ---------------------------------------------------------------------------
# exact rational triples


def _lin(u, v, L: int) -> SuperSeries:
    """u x + v as an exact series."""
    u = u if isinstance(u, GrassmannElement) else GrassmannElement.scalar(u, L)
    v = v if isinstance(v, GrassmannElement) else GrassmannElement.scalar(v, L)
    return SuperSeries.monomial(1, coef=u) + SuperSeries.constant(v)


def _phi(sign: int, s: SuperSeries) -> SuperSeries:
    return s.mul_phi(sign)


def _phiphi(s: SuperSeries) -> SuperSeries:
    return s.mul_phi(-1).mul_phi(1)


def _const(g: GrassmannElement) -> SuperSeries:
    return SuperSeries.constant(g)


def _substitute_one(s: SuperSeries, inner: SuperPoint, order: int | None) -> SuperSeries:
    zero = SuperSeries.zero(s.L)
    return ss_compose(SuperPoint(s, zero, zero), inner, order).x


@dataclass(frozen=True)
class RationalTriple:
    """Components  sum_k N_k / D^k  with exact polynomial N_k and an even linear D."""

    denom: SuperSeries
    parts: tuple  # three dicts {k: SuperSeries}

    @property
    def L(self) -> int:
        return self.denom.L

    def _power(self) -> int:
        return max((k for comp in self.parts for k in comp), default=0)

    def cleared(self) -> tuple:
        """Numerators over the common denominator D^K (exact polynomials)."""
        K = self._power()
        out = []
        for comp in self.parts:
            acc = SuperSeries.zero(self.L)
            for k, N in comp.items():
                acc = acc + N * (self.denom ** (K - k))
            out.append(acc)
        return K, tuple(out)

    def same_map(self, other: "RationalTriple") -> bool:
        """Exact equality as rational functions, by cross-multiplication."""
        K1, n1 = self.cleared()
        K2, n2 = other.cleared()
        d1, d2 = self.denom ** K1, other.denom ** K2
        return all(a * d2 == b * d1 for a, b in zip(n1, n2))

    def series(self, kind: str = AT_ZERO, order: int | None = None) -> SuperPoint:
        order = DEFAULT_ORDER if order is None else order
        D = self.denom.with_kind(kind)
        lead = D.coef(0) if kind == AT_ZERO else D.coef(max(D.t, default=0))
        if lead.body().is_zero():
            raise NonInvertibleDenominator(f"denominator cannot be expanded {kind.replace('_', ' ')}")
        Dinv = D.inverse(order if kind == AT_ZERO else -order)
        powers = {1: Dinv}
        for k in range(2, self._power() + 1):
            powers[k] = powers[k - 1] * Dinv
        comps = []
        for comp in self.parts:
            acc = SuperSeries.zero(self.L, kind, order if kind == AT_ZERO else -order)
            for k, N in comp.items():
                acc = acc + N.with_kind(kind) * powers[k]
            comps.append(acc)
        return SuperPoint(*comps)

    def compose(self, inner: SuperPoint, order: int | None = None) -> SuperPoint:
        """self(inner) as a series of the inner kind; D(inner) must be invertible there."""
        order = DEFAULT_ORDER if order is None else order
        kind = inner.x.kind
        D = _substitute_one(self.denom, inner, order)
        lead = D.coef(min(D.t, default=0)) if kind == AT_ZERO else D.coef(max(D.t, default=0))
        if D.is_zero() or lead.body().is_zero():
            raise NonInvertibleDenominator("denominator vanishes on the inner map")
        Dinv = D.inverse(order if kind == AT_ZERO else -order)
        comps = []
        for comp in self.parts:
            acc = None
            for k, N in comp.items():
                term = _substitute_one(N, inner, order) * (Dinv ** k)
                acc = term if acc is None else acc + term
            comps.append(acc if acc is not None else SuperSeries.zero(self.L, kind))
        return SuperPoint(*comps)

    def evaluate(self, point: NumPoint) -> NumPoint:
        inner = SuperPoint(*(SuperSeries.constant(g) for g in point))
        Dval = _substitute_one(self.denom, inner, None).coef(0)
        if Dval.body().is_zero():
            raise NonInvertibleDenominator("denominator has zero body at this point")
        Dinv = Dval.inverse()
        vals = []
        for comp in self.parts:
            acc = GrassmannElement.zero(self.L)
            for k, N in comp.items():
                acc = acc + _substitute_one(N, inner, None).coef(0) * Dinv ** k
            vals.append(acc)
        return NumPoint(*vals)


def pp_rational(p: ProjectiveParams, long_form: bool = False) -> RationalTriple:
    """The map of ``p`` as an exact rational triple (short form unless ``long_form``)."""
    L = p.L
    a, b, c, d = p.a, p.b, p.c, p.d
    ep, em, gp, gm, dp, dm = p.ep, p.em, p.gp, p.gm, p.dp, p.dm
    s = p.s
    D = _lin(c, d, L)
    psi_p, psi_m = _lin(gp, dp, L), _lin(gm, dm, L)
    two = GrassmannElement.scalar(2, L)
    mixed = (_lin(two * gp * gm * d, 0, L)
             - _lin(s * c, -(s * d), L)
             - _const(two * dp * dm * c))
    x_parts = {1: _lin(a, b, L), 3: _phiphi(mixed)}
    if long_form:
        x_parts[2] = _phi(1, psi_m.scale_left(ep)) + _phi(-1, psi_p.scale_left(em))
        x_parts[3] = (x_parts[3]
                      + _phi(1, _lin(p.fp, p.hp, L) * psi_m)
                      + _phi(-1, _lin(p.fm, p.hm, L) * psi_p))
        p_second = _phi(1, _lin(p.fp, p.hp, L))
        m_second = _phi(-1, _lin(p.fm, p.hm, L))
    else:
        dd = dp * dm
        x_parts[2] = (_phi(1, _lin(ep * gm, ep * (dm + dd * gm), L))
                      + _phi(-1, _lin(em * gp, em * (dp - dd * gp), L)))
        p_second = _phi(1, _lin(-(ep * gp * gm * d), ep * p._k(1), L))
        m_second = _phi(-1, _lin(em * gp * gm * d, em * p._k(-1), L))
    p_parts = {1: psi_p + _phi(1, _const(ep)),
               2: p_second + _phiphi(_const(gp * d - dp * c))}
    m_parts = {1: psi_m + _phi(-1, _const(em)),
               2: m_second - _phiphi(_const(gm * d - dm * c))}
    return RationalTriple(D, (x_parts, p_parts, m_parts))


def pp_to_map(p: ProjectiveParams, order: int | None = None, kind: str = AT_ZERO,
              long_form: bool = False) -> SuperPoint:
    """Series form of the transformation, expanding 1/(cx + d) at zero or at infinity."""
    return pp_rational(p, long_form).series(kind, order)


def long_short_agree(p: ProjectiveParams) -> bool:
    """The f+-, h+- form and the simplified form are the same rational triple."""
    return pp_rational(p, True).same_map(pp_rational(p, False))


# ---------------------------------------------------------------------------
# the inversion I and the second chart


def pp_conjugate_by_I(p: ProjectiveParams) -> ProjectiveParams:
    """Parameters of I^-1 o T o I (the map in the inverted chart).

    The phases pick up a factor: e^+- (1 -+ s - q) with s, q as on the params.
    """
    mi = -FIELD_I
    s, q = p.s, p.q
    return ProjectiveParams(
        a=p.d, b=p.c, c=p.b, d=p.a,
        ep=p.ep * (1 - s - q), em=p.em * (1 + s - q),
        gp=p.dp * mi, gm=p.dm * mi, dp=p.gp * mi, dm=p.gm * mi,
    )


def pp_unconjugate_by_I(p: ProjectiveParams) -> ProjectiveParams:
    """Inverse of :func:`pp_conjugate_by_I` (I^2 flips the odd coordinates)."""
    return pp_conjugate_by_I(p.odd_flipped())


def _case_maps(p: ProjectiveParams) -> tuple[RationalTriple, RationalTriple]:
    """(T o I, I^-1 o T): maps between the two charts, for the points on neither overlap."""
    L = p.L
    a, b, c, d = p.a, p.b, p.c, p.d
    ep, em, gp, gm, dp, dm = p.ep, p.em, p.gp, p.gm, p.dp, p.dm
    s, q = p.s, p.q
    i = GrassmannElement.scalar(FIELD_I, L)
    two = GrassmannElement.scalar(2, L)
    # T o I: coordinates in U1 to coordinates in U0, denominator c + d w
    D2 = _lin(d, c, L)
    x2 = {
        1: _lin(b, a, L),
        2: _phi(1, _lin(i * ep * dm, i * ep * gm, L)) + _phi(-1, _lin(i * em * dp, i * em * gp, L)),
        3: (_phi(1, _lin(i * p.hp, i * p.fp, L) * _lin(dm, gm, L))
            + _phi(-1, _lin(i * p.hm, i * p.fm, L) * _lin(dp, gp, L))
            - _phiphi(_const(two * gp * gm * d) - _lin(-(s * d), s * c, L) - _lin(two * dp * dm * c, 0, L))),
    }
    p2 = {1: _lin(dp, gp, L) + _phi(1, _const(i * ep)),
          2: _phi(1, _lin(i * p.hp, i * p.fp, L)) - _phiphi(_const(gp * d - dp * c))}
    m2 = {1: _lin(dm, gm, L) + _phi(-1, _const(i * em)),
          2: _phi(-1, _lin(i * p.hm, i * p.fm, L)) + _phiphi(_const(gm * d - dm * c))}
    to_u0 = RationalTriple(D2, (x2, p2, m2))
    # I^-1 o T: coordinates in U0 to coordinates in U1, denominator a w + b
    D3 = _lin(a, b, L)
    dd = dp * dm
    x3 = {
        1: _lin(c, d, L),
        2: -(_phi(1, _lin(ep * gm, ep * (dm + dd * gm), L)) + _phi(-1, _lin(em * gp, em * (dp - dd * gp), L))),
        3: -_phiphi(_lin(two * gp * gm * b, 0, L) - _lin(s * a, -(s * b), L) - _const(two * dd * a)),
    }
    hat_p = ep * (1 - s - q)
    hat_m = em * (1 + s - q)
    p3 = {
        1: _lin(-i * gp, -i * dp, L) + _phi(1, _const(-i * hat_p)),
        2: (_phi(1, _lin(-i * ep * (-(gp * gm * b) + s * a + q * a), -i * ep * dd * a, L))
            - _phiphi(_const(i * (gp * b - dp * a)))),
    }
    m3 = {
        1: _lin(-i * gm, -i * dm, L) + _phi(-1, _const(-i * hat_m)),
        2: (_phi(-1, _lin(-i * em * (gp * gm * b - s * a + q * a), -i * em * (-(dd * a)), L))
            + _phiphi(_const(i * (gm * b - dm * a)))),
    }
    to_u1 = RationalTriple(D3, (x3, p3, m3))
    return to_u0, to_u1


def pp_apply_point(p: ProjectiveParams, point: NumPoint, chart: str = CHART_FINITE) -> tuple[str, NumPoint]:
    """Act on a point of the supersphere given in ``chart``; returns (chart, image)."""
    if chart not in CHARTS:
        raise ValueError(f"unknown chart {chart!r}")
    z = point.z
    if chart == CHART_FINITE:
        if not (p.c * z + p.d).body().is_zero():
            return CHART_FINITE, pp_rational(p).evaluate(point)
        if not z.body().is_zero():
            return pp_apply_point(p, ss_inversion_I(point, inverse=True), CHART_INVERTED)
        return CHART_INVERTED, _case_maps(p)[1].evaluate(point)
    hat = pp_conjugate_by_I(p)
    if not (hat.c * z + hat.d).body().is_zero():
        return CHART_INVERTED, pp_rational(hat).evaluate(point)
    if not z.body().is_zero():
        return pp_apply_point(p, ss_inversion_I(point), CHART_FINITE)
    return CHART_FINITE, _case_maps(p)[0].evaluate(point)


def to_chart(point: NumPoint, src: str, dst: str) -> NumPoint:
    """Change coordinates of a point lying in both charts."""
    if src == dst:
        return point
    return ss_inversion_I(point, inverse=(src == CHART_FINITE))


# ---------------------------------------------------------------------------
# composition by coefficient extraction


def _sqrt_near_one(u: GrassmannElement) -> GrassmannElement:
    """Square root of 1 + n with n nilpotent (binomial series)."""
    n = u - 1
    if not n.body().is_zero():
        raise NonInvertible("square root needs body 1")
    total = GrassmannElement.one(u.L)
    term = GrassmannElement.one(u.L)
    coef = mpq(1)
    for k in range(1, u.L + 1):
        coef = coef * (mpq(1, 2) - (k - 1)) / k
        term = term * n
        if term.is_zero():
            break
        total = total + term * FieldScalar(coef)
    return total


def pp_extract(H: SuperPoint, d_body: FieldScalar) -> ProjectiveParams:
    """Read parameters off a series at zero of a superprojective map.

    ``d_body`` fixes the square root; its sign only selects the representative.
    """
    x, pp_, pm = H
    L = x.L
    for s in H:
        if s.kind != AT_ZERO or not s.is_known(2):
            raise ExtractionFailed("need a series at zero known through x^2")
    if d_body.is_zero():
        raise ExtractionFailed("d has zero body; use the other chart")
    f = component(x, 0, 0)
    f1 = f.coef(1)
    if f1.body().is_zero():
        raise ExtractionFailed("x~ has no invertible linear term")
    u = f1.inverse()  # d^2
    beta = GrassmannElement.scalar(d_body, L)
    if not (u.body() - d_body * d_body).is_zero():
        raise ExtractionFailed("body of d does not match the series")
    d = beta * _sqrt_near_one(u * (beta * beta).inverse())
    d_inv = d.inverse()
    b = f.coef(0) * d
    c = -(f.coef(2) * d * d * d)
    a = (1 + b * c) * d_inv
    psi_p, psi_m = component(pp_, 0, 0), component(pm, 0, 0)
    dp = d * psi_p.coef(0)
    dm = d * psi_m.coef(0)
    gp = d * psi_p.coef(1) + dp * c * d_inv
    gm = d * psi_m.coef(1) + dm * c * d_inv
    probe = ProjectiveParams(a, b, c, d, GrassmannElement.one(L), GrassmannElement.one(L), gp, gm, dp, dm)
    ep = pp_.coef(0, 1, 0) * d * d * (d + probe._k(1)).inverse()
    em = pm.coef(0, 0, 1) * d * d * (d + probe._k(-1)).inverse()
    out = replace(probe, ep=ep, em=em)
    out.require_valid()
    return out


def _validate_against(p: ProjectiveParams, H: SuperPoint) -> None:
    order = min(s.trunc for s in H if s.trunc is not None) if any(s.trunc is not None for s in H) else DEFAULT_ORDER
    if not pp_to_map(p, order).agrees(H):
        raise ExtractionFailed("recovered parameters do not reproduce the series")


def _compose_u0(p1: ProjectiveParams, p2: ProjectiveParams, order: int) -> ProjectiveParams:
    inner = pp_to_map(p2, order)
    H = pp_rational(p1).compose(inner, order)
    d_body = p1.c.body() * p2.b.body() + p1.d.body() * p2.d.body()
    out = pp_extract(H, d_body)
    _validate_against(out, H)
    return out


def pp_compose(p1: ProjectiveParams, p2: ProjectiveParams, order: int = DEFAULT_ORDER,
               _depth: int = 0) -> ProjectiveParams:
    """Parameters of p1 o p2 (apply p2 first)."""
    bodies = lambda p: (p.a.body(), p.b.body(), p.c.body(), p.d.body())
    a1, b1, c1, d1 = bodies(p1)
    a2, b2, c2, d2 = bodies(p2)
    if not d2.is_zero() and not (c1 * b2 + d1 * d2).is_zero():
        return _compose_u0(p1, p2, order).canonical()
    if not a2.is_zero() and not (b1 * c2 + a1 * a2).is_zero():
        h = _compose_u0(pp_conjugate_by_I(p1), pp_conjugate_by_I(p2), order)
        return pp_unconjugate_by_I(h).canonical()
    if _depth == 0:
        # move p2's pole with a translation t: p1 o p2 = (p1 o (p2 o t)) o t^-1
        L = p1.L
        for y in range(1, 6):
            t = ProjectiveParams.build(L, b=GrassmannElement.scalar(y, L))
            t_inv = ProjectiveParams.build(L, b=GrassmannElement.scalar(-y, L))
            try:
                inner = pp_compose(p2, t, order, _depth=1)
                return pp_compose(pp_compose(p1, inner, order, _depth=1), t_inv, order, _depth=1)
            except NonInvertibleDenominator:
                continue
    raise NonInvertibleDenominator("composition needs an invertible denominator in one chart")


def pp_inverse(p: ProjectiveParams, order: int = DEFAULT_ORDER) -> ProjectiveParams:
    """Inverse transformation.

    Start from the inverse of the body and remove the nilpotent defect
    r = q o p by q <- r~ o q, where r~ negates r's deviation from the identity
    (constraints restored); each round squares the defect.
    """
    L = p.L
    sc = lambda v: GrassmannElement.scalar(v, L)
    zero = GrassmannElement.zero(L)
    q = ProjectiveParams(sc(p.d.body()), sc(-p.b.body()), sc(-p.c.body()), sc(p.a.body()),
                         sc(p.ep.body().inverse()), sc(p.em.body().inverse()), zero, zero, zero, zero)
    ident = ProjectiveParams.identity(L)
    for _ in range(2 * L + 4):
        r = pp_compose(q, p, order)
        if r == ident:
            return q.canonical()
        r = r.canonical()
        dev = [g - h for g, h in zip(r.values(), ident.values())]
        back = ProjectiveParams(*(h - g for g, h in zip(dev, ident.values())))
        back = replace(back, a=(1 + back.b * back.c) * back.d.inverse())
        back = replace(back, em=(1 - back.gp * back.dm + back.dp * back.gm) * back.ep.inverse())
        q = pp_compose(back, q, order)
    raise ExtractionFailed("inverse correction did not converge")


# ---------------------------------------------------------------------------
# one-parameter subgroups


_GENERATORS = {
    ("L", -1), ("L", 0), ("L", 1), ("J", 0), ("Gp", 0), ("Gp", 1), ("Gm", 0), ("Gm", 1),
}


def _require_generator(gen: BasisDerivation) -> None:
    if (gen.family, gen.j) not in _GENERATORS:
        raise OutOfSpan(f"{gen.label()} is not one of the eight superprojective generators")


def pp_generator_exp(gen: BasisDerivation, param: GrassmannElement) -> ProjectiveParams:
    """Parameters of exp(-param * gen) acting on (x, phi+, phi-).

    L0 and J0 need a nilpotent parameter (their exponentials are transcendental
    otherwise); use :func:`pp_dilation` or :func:`pp_phase` for the multiplier form.
    """
    _require_generator(gen)
    want = Parity.ODD if gen.family in ("Gp", "Gm") else Parity.EVEN
    ok = param.is_zero() or (param.is_odd() if want is Parity.ODD else param.is_even())
    if not ok:
        raise ParityMismatch(f"{gen.label()} needs an {want.name.lower()} parameter")
    L = param.L
    if gen == BasisDerivation("L", -1):
        return ProjectiveParams.build(L, b=param)
    if gen == BasisDerivation("L", 1):
        return ProjectiveParams.build(L, c=-param)
    if gen == BasisDerivation("L", 0):
        return pp_dilation((param * mpq(1, 2)).exp_nilpotent())
    if gen == BasisDerivation("J", 0):
        return pp_phase(param.exp_nilpotent())
    slot = {("Gp", 0): "dp", ("Gp", 1): "gp", ("Gm", 0): "dm", ("Gm", 1): "gm"}[(gen.family, gen.j)]
    return ProjectiveParams.build(L, **{slot: param})


def pp_dilation(t: GrassmannElement) -> ProjectiveParams:
    """(t^2 x, t phi+, t phi-), i.e. exp(-y L0) with t = e^{y/2}."""
    return ProjectiveParams.build(t.L, a=t, d=t.inverse())


def pp_phase(t: GrassmannElement) -> ProjectiveParams:
    """(x, t phi+, t^-1 phi-), i.e. exp(-y J0) with t = e^y."""
    return ProjectiveParams.build(t.L, ep=t, em=t.inverse())


def generator_closed_form(gen: BasisDerivation, param: GrassmannElement) -> SuperPoint:
    """The displayed one-parameter action written out directly (exact series)."""
    _require_generator(gen)
    L = param.L
    x, p, m = SuperPoint.identity(L)
    one = GrassmannElement.one(L)
    key = (gen.family, gen.j)
    if key == ("L", -1):
        return SuperPoint(x + _const(param), p, m)
    if key == ("L", 0):
        t = (param * mpq(1, 2)).exp_nilpotent()
        return SuperPoint(x.scale_left(t * t), p.scale_left(t), m.scale_left(t))
    if key == ("L", 1):
        # x / (1 - y x) and phi / (1 - y x) only terminate for nilpotent y
        inv = (_const(one) - x.scale_left(param)).inverse()
        return SuperPoint(x * inv, p * inv, m * inv)
    if key == ("J", 0):
        t = param.exp_nilpotent()
        return SuperPoint(x, p.scale_left(t), m.scale_left(t.inverse()))
    xi = _const(param)
    xxi = SuperSeries.monomial(1, coef=param)
    if key == ("Gp", 0):
        return SuperPoint(x + _phi(-1, xi), xi + p, m)
    if key == ("Gp", 1):
        return SuperPoint(x + _phi(-1, xxi), xxi + p + _phiphi(xi), m)
    if key == ("Gm", 0):
        return SuperPoint(x + _phi(1, xi), p, xi + m)
    return SuperPoint(x + _phi(1, xxi), p, xxi + m - _phiphi(xi))


# ---------------------------------------------------------------------------
# Example: exp(-A_{-1} L_{-1}) exp(-(A_1 L_1 + M+ G+_{1/2} + M- G-_{1/2}))


def three_factor_params(A1, Am1, Mp, Mm) -> ProjectiveParams:
    mm = Mp * Mm
    return ProjectiveParams(
        a=GrassmannElement.one(A1.L), b=Am1, c=-A1, d=1 - A1 * Am1,
        ep=1 + mm * Am1, em=1 - mm * Am1,
        gp=Mp, gm=Mm, dp=Mp * Am1, dm=Mm * Am1,
    )


def three_factor_closed_form(A1, Am1, Mp, Mm, rewritten: bool = True) -> RationalTriple:
    """The closed form of the example, before or after rewriting into the parameter template."""
    L = A1.L
    one = GrassmannElement.one(L)
    mm = Mp * Mm
    D = _lin(-A1, 1 - A1 * Am1, L)
    shifted = _lin(one, Am1, L)
    x_parts = {
        1: shifted,
        2: _phi(1, shifted.scale_left(Mm)) + _phi(-1, shifted.scale_left(Mp)),
        3: _phiphi(shifted.scale_left(mm * 2)),
    }
    if rewritten:
        tail = _lin(1 - A1 * Am1, 2 * Am1 - A1 * Am1 * Am1, L)
        p_parts = {1: shifted.scale_left(Mp) + _phi(1, _const(1 + mm * Am1)),
                   2: _phi(1, (-tail).scale_left(mm)) + _phiphi(_const(Mp))}
        m_parts = {1: shifted.scale_left(Mm) + _phi(-1, _const(1 - mm * Am1)),
                   2: _phi(-1, tail.scale_left(mm)) - _phiphi(_const(Mm))}
    else:
        p_parts = {1: shifted.scale_left(Mp) + _phi(1, _const(one)),
                   2: _phi(1, (-shifted).scale_left(mm)) + _phiphi(_const(Mp))}
        m_parts = {1: shifted.scale_left(Mm) + _phi(-1, _const(one)),
                   2: _phi(-1, shifted.scale_left(mm)) - _phiphi(_const(Mm))}
    return RationalTriple(D, (x_parts, p_parts, m_parts))


def three_factor_factors(A1, Am1, Mp, Mm) -> tuple[ProjectiveParams, ProjectiveParams, ProjectiveParams]:
    """(T1, T2, T3) with T = T1 o T2 o T3: the L1 flow, the odd flow, the translation."""
    L = A1.L
    t1 = pp_generator_exp(BasisDerivation("L", 1), A1)
    t2 = ProjectiveParams.build(L, gp=Mp, gm=Mm)
    t3 = pp_generator_exp(BasisDerivation("L", -1), Am1)
    return t1, t2, t3


def three_factor_default(L: int = DEFAULT_GENERATORS) -> tuple:
    """A generic assignment: even A+-1 with bodies and souls, M+- the last two generators."""
    if L < 4:
        raise ValueError("the default assignment needs at least four generators")
    g = lambda j: GrassmannElement.generator(j, L)
    A1 = 2 + g(1) * g(2)
    Am1 = -3 + 5 * g(1) * g(2)
    return A1, Am1, g(L - 1), g(L)


def _product_series(factors, order: int) -> SuperPoint:
    """Series at zero of f1 o f2 o ... o fn, substituting into exact rational forms."""
    H = pp_to_map(factors[-1], order)
    for f in reversed(factors[:-1]):
        H = pp_rational(f).compose(H, order)
    return H


def three_factor_compare(A1, Am1, Mp, Mm, order: int = 6) -> dict:
    """Check the factor product against the closed form as parameters, rationally, and in both charts."""
    params = three_factor_params(A1, Am1, Mp, Mm)
    t1, t2, t3 = three_factor_factors(A1, Am1, Mp, Mm)
    out = {"params": pp_compose(t1, pp_compose(t2, t3, order), order) == params}
    closed = three_factor_closed_form(A1, Am1, Mp, Mm)
    out["closed_forms"] = (closed.same_map(pp_rational(params))
                           and three_factor_closed_form(A1, Am1, Mp, Mm, rewritten=False).same_map(closed))
    out["chart_U0"] = _product_series((t1, t2, t3), order).agrees(closed.series(AT_ZERO, order), order)
    # U1: hatted factors against I^-1 o T o I taken from the closed form at infinity
    hats = tuple(pp_conjugate_by_I(t) for t in (t1, t2, t3))
    L = A1.L
    direct = ss_compose(inversion_point(L, inverse=True),
                        ss_compose(closed.series(AT_INFINITY, order + 5), inversion_point(L)))
    out["chart_U1"] = _product_series(hats, order).agrees(direct, order)
    out["equal"] = all(out.values())
    return out


def reduce_with_invertible_d(p: ProjectiveParams) -> tuple[SuperSeries, SuperSeries]:
    """The phi+- coefficients g+- of phi~+- rewritten with 1/d (only valid for invertible d).

    Returns the two x-only series at zero; raises when d has zero body, which is
    exactly where this reduction cannot describe the transformation.
    """
    if p.d.body().is_zero():
        raise NonInvertibleDenominator("d has zero body")
    L = p.L
    d_inv = p.d.inverse()
    D = _lin(p.c, p.d, L)
    Dinv = D.inverse()
    s, q = p.s, p.q
    out = []
    for sign, e in ((1, p.ep), (-1, p.em)):
        first = e * (1 + (p.dp * p.dm * p.c * d_inv - s - q * sign) * sign)
        cross = (p.gp * p.d - p.dp * p.c) * (p.gm * p.d - p.dm * p.c) - q * p.c * p.d * sign
        second = -(e * cross * d_inv) * sign
        out.append(Dinv.scale_left(first) + (SuperSeries.x(L) * Dinv * Dinv).scale_left(second))
    return tuple(out)


# ---------------------------------------------------------------------------
# osp(2|2)

# coordinate parities making the displayed form invariant: the first two
# coordinates carry the symmetric block
COORD_PARITY = (1, 1, 0, 0)
BETA = ((0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, -1, 0))


@dataclass(frozen=True)
class OspMatrix:
    """4x4 matrix with Grassmann entries; ``parity`` is that of the matrix as a whole."""

    rows: tuple
    parity: Parity = Parity.EVEN

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("an osp matrix is 4x4")
        object.__setattr__(self, "rows", rows)

    @property
    def L(self) -> int:
        return self.rows[0][0].L

    @classmethod
    def from_entries(cls, entries: Mapping[tuple, object], parity: Parity = Parity.EVEN,
                     L: int = DEFAULT_GENERATORS) -> "OspMatrix":
        """Build from {(row, col): value} with 1-based positions."""
        rows = [[GrassmannElement.zero(L) for _ in range(4)] for _ in range(4)]
        for (i, j), v in entries.items():
            rows[i - 1][j - 1] = v if isinstance(v, GrassmannElement) else GrassmannElement.scalar(v, L)
        return cls(tuple(map(tuple, rows)), parity)

    @classmethod
    def identity(cls, L: int = DEFAULT_GENERATORS) -> "OspMatrix":
        return cls.from_entries({(k, k): 1 for k in range(1, 5)}, L=L)

    def __getitem__(self, ij) -> GrassmannElement:
        return self.rows[ij[0]][ij[1]]

    def __add__(self, other: "OspMatrix") -> "OspMatrix":
        return OspMatrix(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)), self.parity)

    def __sub__(self, other: "OspMatrix") -> "OspMatrix":
        return self + other.scale(-1)

    def __matmul__(self, other: "OspMatrix") -> "OspMatrix":
        L = self.L
        rows = []
        for i in range(4):
            row = []
            for j in range(4):
                acc = GrassmannElement.zero(L)
                for k in range(4):
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            rows.append(tuple(row))
        par = Parity.ODD if (self.parity is Parity.ODD) != (other.parity is Parity.ODD) else Parity.EVEN
        return OspMatrix(tuple(rows), par)

    def scale(self, g) -> "OspMatrix":
        """g * X entrywise; an odd g flips the parity of the matrix."""
        if not isinstance(g, GrassmannElement):
            g = GrassmannElement.scalar(g, self.L)
        par = self.parity
        if g.is_odd() and not g.is_zero():
            par = Parity.EVEN if par is Parity.ODD else Parity.ODD
        return OspMatrix(tuple(tuple(g * a for a in r) for r in self.rows), par)

    def to_json(self) -> dict:
        return {"parity": self.parity.name.lower(), "rows": [[a.to_json() for a in r] for r in self.rows]}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "OspMatrix":
        if not isinstance(data, dict) or "rows" not in data:
            raise ValueError("an osp matrix needs rows")
        parity = data.get("parity", "even")
        if parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")
        rows = data["rows"]
        if not isinstance(rows, list):
            raise ValueError("rows must be a list")
        return cls(tuple(tuple(GrassmannElement.from_json(a, L) for a in r) for r in rows), Parity[parity.upper()])


_OSP_TABLE = {
    ("L", -1): ({(3, 4): 1}, Parity.EVEN),
    ("L", 0): ({(3, 3): mpq(1, 2), (4, 4): mpq(-1, 2)}, Parity.EVEN),
    ("L", 1): ({(4, 3): -1}, Parity.EVEN),
    ("J", 0): ({(1, 1): 1, (2, 2): -1}, Parity.EVEN),
    ("Gp", 0): ({(1, 4): 1, (3, 2): 1}, Parity.ODD),
    ("Gp", 1): ({(1, 3): 1, (4, 2): -1}, Parity.ODD),
    ("Gm", 0): ({(2, 4): 1, (3, 1): 1}, Parity.ODD),
    ("Gm", 1): ({(2, 3): 1, (4, 1): -1}, Parity.ODD),
}


def osp_correspondence(gen: BasisDerivation, L: int = DEFAULT_GENERATORS) -> OspMatrix:
    key = (gen.family, gen.j)
    if key not in _OSP_TABLE:
        raise OutOfSpan(f"{gen.label()} lies outside the osp(2|2) span")
    entries, parity = _OSP_TABLE[key]
    return OspMatrix.from_entries(entries, parity, L)


def osp_of_sum(T: DerivationSum) -> OspMatrix:
    """Linear extension to derivation sums with scalar coefficients on the eight generators."""
    L = T.L
    acc = None
    for b, c in T.pairs.items():
        if c.soul():
            raise ValueError("only scalar coefficients have a matrix image")
        term = osp_correspondence(b, L).scale(c)
        acc = term if acc is None else acc + term
    return acc if acc is not None else OspMatrix.from_entries({}, L=L)


def supercommutator(X: OspMatrix, Y: OspMatrix) -> OspMatrix:
    sign = -1 if (X.parity is Parity.ODD and Y.parity is Parity.ODD) else 1
    res = (X @ Y) - (Y @ X).scale(sign)
    return OspMatrix(res.rows, (X @ Y).parity)


def _det2(m00, m01, m10, m11) -> GrassmannElement:
    return m00 * m11 - m01 * m10


def sdet(g: OspMatrix) -> GrassmannElement:
    """det(A - B D^-1 C) / det D for the 2x2 blocks of an even matrix."""
    A = [[g[i, j] for j in (0, 1)] for i in (0, 1)]
    B = [[g[i, j] for j in (2, 3)] for i in (0, 1)]
    C = [[g[i, j] for j in (0, 1)] for i in (2, 3)]
    D = [[g[i, j] for j in (2, 3)] for i in (2, 3)]
    detD = _det2(D[0][0], D[0][1], D[1][0], D[1][1])
    inv = detD.inverse()
    Dinv = [[D[1][1] * inv, -D[0][1] * inv], [-D[1][0] * inv, D[0][0] * inv]]
    BDC = [[sum((B[i][k] * Dinv[k][l] * C[l][j] for k in (0, 1) for l in (0, 1)), GrassmannElement.zero(g.L))
            for j in (0, 1)] for i in (0, 1)]
    S = [[A[i][j] - BDC[i][j] for j in (0, 1)] for i in (0, 1)]
    return _det2(S[0][0], S[0][1], S[1][0], S[1][1]) * inv


def osp_exp(X: OspMatrix, param: GrassmannElement, max_terms: int = 32) -> OspMatrix:
    """exp(-param X) by its power series, which must terminate."""
    Y = X.scale(-param)
    total = OspMatrix.identity(X.L)
    term = OspMatrix.identity(X.L)
    for n in range(1, max_terms + 1):
        term = (term @ Y).scale(FieldScalar(mpq(1, n)))
        if all(a.is_zero() for r in term.rows for a in r):
            return OspMatrix(total.rows, Parity.EVEN)
        total = total + term
    raise NonInvertible("matrix exponential did not terminate; use a nilpotent parameter")


@dataclass
class OspReport:
    passed: bool
    beta_invariant: bool | None = None
    sdet_one: bool | None = None
    detail: str | None = None

    def to_json(self) -> dict:
        return {"passed": self.passed, "beta_invariant": self.beta_invariant,
                "sdet_one": self.sdet_one, "detail": self.detail}


def _beta_invariant(X: OspMatrix) -> tuple[bool, str | None]:
    eta = 1 if X.parity is Parity.ODD else 0
    for k, l in itertools.product(range(4), repeat=2):
        left = sum((X[i, k] * BETA[i][l] for i in range(4)), GrassmannElement.zero(X.L))
        right = sum((X[j, l] * BETA[k][j] for j in range(4)), GrassmannElement.zero(X.L))
        sign = -1 if eta * COORD_PARITY[k] else 1
        if not (left + right * sign).is_zero():
            return False, f"beta(X e{k + 1}, e{l + 1}) fails"
    return True, None


def osp_check(m: OspMatrix, group_element: bool = False) -> OspReport:
    """beta-invariance for algebra elements; superdeterminant 1 for group elements."""
    if group_element:
        try:
            ok = sdet(m) == 1
        except NonInvertible:
            return OspReport(False, sdet_one=False, detail="D block is not invertible")
        return OspReport(ok, sdet_one=ok, detail=None if ok else "superdeterminant differs from 1")
    ok, why = _beta_invariant(m)
    return OspReport(ok, beta_invariant=ok, detail=why)


def osp_bracket_table(L: int = 1) -> list[tuple[BasisDerivation, BasisDerivation, bool]]:
    """Compare matrix super-commutators with der_bracket on all pairs of the eight generators."""
    gens = [BasisDerivation(f, j) for f, j in _OSP_TABLE]
    rows = []
    for a, b in itertools.product(gens, gens):
        mat = supercommutator(osp_correspondence(a, L), osp_correspondence(b, L))
        der = der_bracket(DerivationSum.basis(a, L), DerivationSum.basis(b, L))
        rows.append((a, b, mat.rows == osp_of_sum(der).rows))
    return rows
