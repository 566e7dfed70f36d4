"""Recognizing and building formal N=2 superconformal triples.

A triple (x~, phi~+, phi~-) is superconformal exactly when

    D+ phi~- = D- phi~+ = D+ x~ - phi~- D+ phi~+ = D- x~ - phi~+ D- phi~- = 0,

and then it is fixed by five x-only series through

    x~     = f + phi+ g+ psi- + phi- g- psi+ + phi+ phi- (psi+ psi-)'
    phi~+  = psi+ + phi+ g+ + phi+ phi- (psi+)'
    phi~-  = psi- + phi- g- - phi+ phi- (psi-)'
    f'     = (psi+)' psi- - psi+ (psi-)' + g+ g-.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq

from .errors import DegenerateLeadingCoefficient, NotSuperconformal, ParityError
from .field import FieldScalar, I as FIELD_I
from .grassmann import GrassmannElement, Parity, raw_scale
from .superseries import AT_INFINITY, AT_ZERO, SuperPoint, SuperSeries


def component(s: SuperSeries, jp: int, jm: int) -> SuperSeries:
    """The x-only series multiplying phi+^jp phi-^jm (coefficient-left)."""
    L = s.L
    bits = (jp << L) | (jm << (L + 1))
    mask = 3 << L
    out = {k: {m & ~mask: c for m, c in v.items() if m & mask == bits} for k, v in s.t.items()}
    return SuperSeries(L, s.kind, out, s.trunc)


def integrate(s: SuperSeries) -> SuperSeries:
    """Formal antiderivative with zero constant term; an x^-1 term has none."""
    out = {}
    for k, v in s.t.items():
        if k == -1:
            raise ValueError("x^-1 term has no formal antiderivative")
        out[k + 1] = raw_scale(v, FieldScalar(mpq(1, k + 1)).r)
    trunc = None if s.trunc is None else s.trunc + 1
    return SuperSeries(s.L, s.kind, out, trunc)


def _has_phi(s: SuperSeries) -> bool:
    mask = 3 << s.L
    return any(m & mask for v in s.t.values() for m in v)


@dataclass(frozen=True)
class ComponentForm:
    """The five x-only series (f, g+, g-, psi+, psi-) describing a superconformal triple."""

    f: SuperSeries
    gplus: SuperSeries
    gminus: SuperSeries
    psiplus: SuperSeries
    psiminus: SuperSeries

    def compatibility_defect(self) -> SuperSeries:
        """f' - ((psi+)' psi- - psi+ (psi-)' + g+ g-); zero on the window for a valid form."""
        pp, pm = self.psiplus, self.psiminus
        return self.f.dx() - (pp.dx() * pm - pp * pm.dx() + self.gplus * self.gminus)

    def nondegeneracy(self) -> tuple[SuperSeries, SuperSeries]:
        return (self.gplus + self.psiplus.dx(), self.gminus + self.psiminus.dx())

    def to_point(self) -> SuperPoint:
        return _assemble(self.f, self.gplus, self.gminus, self.psiplus, self.psiminus)

    def to_json(self) -> dict:
        return {
            "f": self.f.to_json(),
            "gplus": self.gplus.to_json(),
            "gminus": self.gminus.to_json(),
            "psiplus": self.psiplus.to_json(),
            "psiminus": self.psiminus.to_json(),
        }


def _assemble(f, gp, gm, pp, pm) -> SuperPoint:
    x = f + (gp * pm).mul_phi(1) + (gm * pp).mul_phi(-1) + (pp * pm).dx().mul_phi(-1).mul_phi(1)
    p = pp + gp.mul_phi(1) + pp.dx().mul_phi(-1).mul_phi(1)
    m = pm + gm.mul_phi(-1) - pm.dx().mul_phi(-1).mul_phi(1)
    return SuperPoint(x, p, m)


@dataclass
class ScReport:
    passed: bool
    condition: Optional[str] = None
    coefficient: Optional[tuple] = None
    warnings: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"passed": self.passed, "condition": self.condition, "warnings": list(self.warnings)}
        if self.coefficient is not None:
            k, jp, jm, g = self.coefficient
            out["coefficient"] = {"k": k, "jp": jp, "jm": jm, "coef": g.to_json()}
        else:
            out["coefficient"] = None
        return out


def _parity_ok(s: SuperSeries, want: Parity) -> bool:
    return s.is_zero() or s.parity() is want


def _first_term(s: SuperSeries):
    for term in s.terms():
        return term
    return None


def sc_conditions(H: SuperPoint) -> list[tuple[str, SuperSeries]]:
    x, p, m = H
    return [
        ("D+phi~- = 0", m.D(1)),
        ("D-phi~+ = 0", p.D(-1)),
        ("D+x~ - phi~- D+phi~+ = 0", x.D(1) - m * p.D(1)),
        ("D-x~ - phi~+ D-phi~- = 0", x.D(-1) - p * m.D(-1)),
    ]


def _nondegenerate_part(s: SuperSeries, sign: int) -> SuperSeries:
    """g +- (psi)' read off D+-phi~+- = g + 2 phi-+ (psi)' + ... (x-only part plus half the phi-+ part)."""
    d = s.D(sign)
    base = component(d, 0, 0)
    cross = component(d, 0, 1) if sign > 0 else component(d, 1, 0)
    half = GrassmannElement.scalar(mpq(1, 2), s.L)
    return base + cross.scale_left(half)


def sc_check(H: SuperPoint) -> ScReport:
    """Check the four superconformal conditions on the known window plus nondegeneracy."""
    x, p, m = H
    for name, s, want in (("x~", x, Parity.EVEN), ("phi~+", p, Parity.ODD), ("phi~-", m, Parity.ODD)):
        if not _parity_ok(s, want):
            return ScReport(False, f"parity: {name} must be {want.name.lower()}")
    for name, s in sc_conditions(H):
        term = _first_term(s)
        if term is not None:
            return ScReport(False, name, term)
    warnings = []
    for sign, s, label in ((1, p, "g+ + (psi+)'"), (-1, m, "g- + (psi-)'")):
        nd = _nondegenerate_part(s, sign)
        if nd.is_zero():
            return ScReport(False, f"nondegeneracy: {label} vanishes on the window")
        if all(g.body().is_zero() for _, _, _, g in nd.terms()):
            warnings.append(f"{label} has only soul coefficients on the window")
    return ScReport(True, warnings=warnings)


def _validate_components(series: tuple, kind: str) -> None:
    L = series[0].L
    for s in series:
        if s.L != L:
            raise ValueError("components need a common generator count")
        if _has_phi(s):
            raise ValueError("components must be series in x alone")
        if s.kind != kind and s.trunc is not None:
            raise ValueError(f"components must be {kind} series")
    gp, gm, pp, pm = series
    if not (_parity_ok(gp, Parity.EVEN) and _parity_ok(gm, Parity.EVEN)):
        raise ParityError("g+- must be even")
    if not (_parity_ok(pp, Parity.ODD) and _parity_ok(pm, Parity.ODD)):
        raise ParityError("psi+- must be odd")


def _f_from(gp, gm, pp, pm) -> SuperSeries:
    return integrate(pp.dx() * pm - pp * pm.dx() + gp * gm)


def sc_build_at_zero(gp: SuperSeries, gm: SuperSeries, pp: SuperSeries, pm: SuperSeries) -> SuperPoint:
    """The superconformal triple vanishing at zero with the given g+-, psi+- (f is integrated)."""
    comps = tuple(s.with_kind(AT_ZERO) if s.trunc is None else s for s in (gp, gm, pp, pm))
    _validate_components(comps, AT_ZERO)
    gp, gm, pp, pm = comps
    for s in comps:
        if s.t and min(s.t) < 0:
            raise ValueError("components at zero must be power series")
    for name, ps in (("psi+", pp), ("psi-", pm)):
        if not ps.coef(0).is_zero():
            raise ValueError(f"{name}(0) must vanish")
    for name, g in (("g+", gp), ("g-", gm)):
        if g.coef(0).body().is_zero():
            raise DegenerateLeadingCoefficient(f"{name}(0) needs an invertible body")
    return _assemble(_f_from(gp, gm, pp, pm), gp, gm, pp, pm)


def sc_build_at_infinity(gp: SuperSeries, gm: SuperSeries, pp: SuperSeries, pm: SuperSeries) -> SuperPoint:
    """The triple vanishing at infinity with phi x^-1 coefficient i in phi~+-.

    g+- = i/x + sum_j i a+-_j x^{-j-1} and psi+- = sum_j m+-_{j-1/2} x^{-j}, j >= 1.
    """
    comps = tuple(s.with_kind(AT_INFINITY) if s.trunc is None else s for s in (gp, gm, pp, pm))
    _validate_components(comps, AT_INFINITY)
    gp, gm, pp, pm = comps
    for name, s in (("g+", gp), ("g-", gm)):
        if s.t and max(s.t) > -1:
            raise ValueError(f"{name} must start at x^-1")
        if s.coef(-1) != GrassmannElement.scalar(FIELD_I, s.L):
            raise DegenerateLeadingCoefficient(f"{name} needs leading coefficient i at x^-1")
    for name, s in (("psi+", pp), ("psi-", pm)):
        if s.t and max(s.t) > -1:
            raise ValueError(f"{name} must vanish at infinity")
    return _assemble(_f_from(gp, gm, pp, pm), gp, gm, pp, pm)


def sc_extract(H: SuperPoint) -> ComponentForm:
    report = sc_check(H)
    if not report:
        raise NotSuperconformal(f"{report.condition} fails at {report.coefficient}")
    x, p, m = H
    return ComponentForm(
        component(x, 0, 0),
        component(p, 1, 0),
        component(m, 0, 1),
        component(p, 0, 0),
        component(m, 0, 0),
    )
