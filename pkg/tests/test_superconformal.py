import random

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from n2super.derivations import DerivationSum, L as Lb, der_exp_apply
from n2super.errors import DegenerateLeadingCoefficient, NotSuperconformal
from n2super.field import I
from n2super.grassmann import GrassmannElement
from n2super.moduli import e_tilde, e_tilde_inverse
from n2super.superconformal import (
    integrate,
    sc_build_at_infinity,
    sc_build_at_zero,
    sc_check,
    sc_extract,
)
from n2super.superseries import AT_INFINITY, SuperPoint, SuperSeries, inversion_point, ss_compose

from conftest import rand_elem

N = 3
zeta = lambda j: GrassmannElement.generator(j, N)
one = GrassmannElement.one(N)
x = SuperSeries.x(N)
pp, pm = SuperSeries.phi(1, N), SuperSeries.phi(-1, N)
ident = SuperPoint.identity(N)
seeds = st.integers(0, 10 ** 6)
ORDER = 7


def xs(coefs, kind="at_zero", trunc=ORDER):
    """x-only series from {k: GrassmannElement}."""
    return SuperSeries.from_terms(N, kind, {(k, 0, 0): g for k, g in coefs.items()}, trunc)


def random_components(rng, unit=False):
    body = (lambda: mpq(1)) if unit else (lambda: mpq(rng.choice([1, 2, -1, 3])))
    gp = {0: rand_elem(rng, N, 0, body())}
    gm = {0: rand_elem(rng, N, 0, body())}
    if unit:
        gp[0] = gm[0] = one
    for k in range(1, 4):
        gp[k] = rand_elem(rng, N, 0, mpq(rng.randint(-2, 2)))
        gm[k] = rand_elem(rng, N, 0, mpq(rng.randint(-2, 2)))
    psp = {k: rand_elem(rng, N, 1) for k in range(1, 4)}
    psm = {k: rand_elem(rng, N, 1) for k in range(1, 4)}
    return xs(gp), xs(gm), xs(psp), xs(psm)


class TestCheck:
    def test_identity(self):
        assert sc_check(ident)

    def test_inversion(self):
        assert sc_check(inversion_point(N))

    def test_rescaled_odd_coordinate_fails(self):
        report = sc_check(SuperPoint(x, pp, pm * 2))
        assert not report
        assert report.condition == "D+x~ - phi~- D+phi~+ = 0"
        k, jp, jm, g = report.coefficient
        # phi- - 2 phi- leaves -phi-
        assert (k, jp, jm) == (0, 0, 1) and g == -one

    def test_parity_violation(self):
        assert not sc_check(SuperPoint(x + pp, pp, pm))

    def test_degenerate(self):
        report = sc_check(SuperPoint(x * 0, pp * 0, pm * 0))
        assert not report and report.condition.startswith("nondegeneracy")

    def test_not_closed_under_addition(self):
        doubled = SuperPoint(*(a + a for a in ident))
        assert sc_check(ident) and not sc_check(doubled)

    def test_report_json(self):
        data = sc_check(SuperPoint(x, pp, pm * 2)).to_json()
        assert data["passed"] is False and data["coefficient"]["k"] == 0


class TestBuildAtZero:
    def test_unit_components(self):
        got = sc_build_at_zero(xs({0: one}), xs({0: one}), xs({}), xs({}))
        assert got.agrees(ident)

    def test_special_conformal_flow(self):
        t = 3
        g = xs({k: GrassmannElement.scalar(t ** k, N) for k in range(ORDER + 1)})
        got = sc_build_at_zero(g, g, xs({}), xs({}))
        flow = der_exp_apply(DerivationSum(N, {Lb(1): GrassmannElement.scalar(-t, N)}), ident, order=ORDER)
        assert got.agrees(flow, limit=ORDER - 1)

    def test_odd_component(self):
        mu = zeta(1)
        got = sc_build_at_zero(xs({0: one}), xs({0: one}), xs({1: mu}), xs({}))
        mux = SuperSeries.monomial(1, coef=mu, L=N)
        # the phi~+ component carries phi+ phi- (psi+)' = phi+ phi- mu as well
        expected = SuperPoint(x + pm * mux, mux + pp + pp * pm * SuperSeries.constant(mu), pm)
        assert got.agrees(expected, limit=ORDER - 1)
        assert sc_check(got)

    def test_degenerate_leading(self):
        with pytest.raises(DegenerateLeadingCoefficient):
            sc_build_at_zero(xs({0: zeta(1) * zeta(2)}), xs({0: one}), xs({}), xs({}))

    def test_psi_must_vanish_at_zero(self):
        with pytest.raises(ValueError):
            sc_build_at_zero(xs({0: one}), xs({0: one}), xs({0: zeta(1)}), xs({}))

    @given(seeds)
    def test_round_trip(self, seed):
        gp, gm, psp, psm = random_components(random.Random(seed))
        H = sc_build_at_zero(gp, gm, psp, psm)
        assert sc_check(H)
        form = sc_extract(H)
        lim = ORDER - 1
        assert form.gplus.agrees(gp, lim) and form.gminus.agrees(gm, lim)
        assert form.psiplus.agrees(psp, lim) and form.psiminus.agrees(psm, lim)
        assert form.compatibility_defect().agrees(SuperSeries.zero(N), lim - 1)
        assert form.f.coef(0).is_zero()

    @given(seeds)
    def test_matches_moduli_route(self, seed):
        H = sc_build_at_zero(*random_components(random.Random(seed), unit=True))
        W = 4
        rebuilt = e_tilde(e_tilde_inverse(H, W), order=W)
        assert rebuilt.agrees(H, limit=W - 1)

    @given(seeds)
    def test_closed_under_composition(self, seed):
        rng = random.Random(seed)
        H1 = sc_build_at_zero(*random_components(rng))
        H2 = sc_build_at_zero(*random_components(rng))
        assert sc_check(ss_compose(H1, H2))


class TestBuildAtInfinity:
    def inf(self, coefs):
        return xs(coefs, AT_INFINITY, -ORDER)

    def test_minimal_is_inversion(self):
        g = self.inf({-1: GrassmannElement.scalar(I, N)})
        got = sc_build_at_infinity(g, g, self.inf({}), self.inf({}))
        assert got.agrees(inversion_point(N))

    def test_leading_coefficient_enforced(self):
        with pytest.raises(DegenerateLeadingCoefficient):
            sc_build_at_infinity(self.inf({-1: one}), self.inf({-1: one}), self.inf({}), self.inf({}))

    def test_conjugated_flow(self):
        t = 2
        ii = GrassmannElement.scalar(I, N)
        g = self.inf({-1 - k: ii * (t ** k) for k in range(ORDER)})
        H = sc_build_at_infinity(g, g, self.inf({}), self.inf({}))
        assert sc_check(H)
        # removing the inversion leaves an at-zero triple with unit leading coefficients
        back = ss_compose(H, inversion_point(N, inverse=True))
        form = sc_extract(back)
        assert form.gplus.coef(0) == one and form.gminus.coef(0) == one

    def test_round_trip_via_inversion(self, rng):
        gp, gm, psp, psm = random_components(rng, unit=True)
        H0 = sc_build_at_zero(gp, gm, psp, psm)
        Hinf = ss_compose(H0, inversion_point(N))
        assert sc_check(Hinf)
        assert ss_compose(Hinf, inversion_point(N, inverse=True)).agrees(H0, limit=ORDER - 3)


class TestExtract:
    def test_identity(self):
        form = sc_extract(ident)
        assert form.f == x and form.gplus == SuperSeries.constant(one) and form.psiplus.is_zero()

    def test_rejects_non_superconformal(self):
        with pytest.raises(NotSuperconformal):
            sc_extract(SuperPoint(x, pp, pm * 2))

    def test_flow_components(self):
        t = 2
        flow = der_exp_apply(DerivationSum(N, {Lb(1): GrassmannElement.scalar(-t, N)}), ident, order=ORDER)
        form = sc_extract(flow)
        geo = xs({k: GrassmannElement.scalar(t ** k, N) for k in range(ORDER + 1)})
        assert form.gplus.agrees(geo, ORDER - 1)

    def test_to_point_rebuilds(self, rng):
        H = sc_build_at_zero(*random_components(rng))
        assert sc_extract(H).to_point().agrees(H)


def test_integrate():
    assert integrate(xs({0: one, 2: one * 3})) == xs({1: one, 3: one}, trunc=ORDER + 1)
    with pytest.raises(ValueError):
        integrate(xs({-1: one}, AT_INFINITY, -3))
