import random

import pytest
from gmpy2 import mpq
from hypothesis import assume, given, settings, strategies as st

from n2super.derivations import DerivationSum, Gm, Gp, J, L as Lb, der_bracket, der_exp_apply
from n2super.errors import NonInvertibleDenominator, OutOfSpan, ParityMismatch
from n2super.grassmann import GrassmannElement
from n2super.projective import (
    CHART_FINITE,
    CHART_INVERTED,
    OspMatrix,
    ProjectiveParams,
    three_factor_closed_form,
    three_factor_compare,
    three_factor_default,
    three_factor_params,
    generator_closed_form,
    long_short_agree,
    osp_bracket_table,
    osp_check,
    osp_correspondence,
    osp_exp,
    osp_of_sum,
    pp_apply_point,
    pp_compose,
    pp_conjugate_by_I,
    pp_dilation,
    pp_generator_exp,
    pp_inverse,
    pp_phase,
    pp_rational,
    pp_to_map,
    pp_unconjugate_by_I,
    reduce_with_invertible_d,
    sdet,
    supercommutator,
    to_chart,
)
from n2super.superconformal import component, sc_check
from n2super.superseries import AT_INFINITY, NumPoint, SuperPoint, SuperSeries, inversion_point, ss_compose

from conftest import rand_elem, random_params

N = 4
zeta = lambda j: GrassmannElement.generator(j, N)
one = GrassmannElement.one(N)
zero = GrassmannElement.zero(N)
sc = lambda v: GrassmannElement.scalar(v, N)
x = SuperSeries.x(N)
pp, pm = SuperSeries.phi(1, N), SuperSeries.phi(-1, N)
ident = SuperPoint.identity(N)
seeds = st.integers(0, 10 ** 6)
slow = settings(max_examples=10, deadline=None)
EIGHT = [Lb(-1), Lb(0), Lb(1), J(0), Gp(0), Gp(1), Gm(0), Gm(1)]


def nilpotent_param(gen, k=1):
    return zeta(k) if gen.family in ("Gp", "Gm") else zeta(k) * zeta(k + 1)


class TestParams:
    def test_constraints(self, rng):
        p = random_params(rng)
        assert p.is_valid()
        bad = ProjectiveParams(p.a + 1, p.b, p.c, p.d, p.ep, p.em, p.gp, p.gm, p.dp, p.dm)
        assert not bad.is_valid()

    def test_derived_f(self, rng):
        p = random_params(rng)
        assert p.fp == -(p.ep * p.gp * p.gm * p.d)
        assert p.fm == p.em * p.gp * p.gm * p.d

    def test_json_round_trip(self, rng):
        p = random_params(rng)
        assert ProjectiveParams.from_json(p.to_json(), N) == p


class TestToMap:
    def test_identity(self):
        assert pp_to_map(ProjectiveParams.identity(N)).agrees(ident)

    def test_translation(self):
        y = 3 + zeta(1) * zeta(2)
        got = pp_to_map(ProjectiveParams.build(N, b=y))
        assert got.agrees(SuperPoint(x + SuperSeries.constant(y), pp, pm))

    @given(seeds)
    def test_superconformal(self, seed):
        assert sc_check(pp_to_map(random_params(random.Random(seed))))

    @given(seeds)
    def test_long_form_equals_short_form(self, seed):
        assert long_short_agree(random_params(random.Random(seed)))

    def test_denominator_needs_body(self):
        p = ProjectiveParams.build(N, a=zeta(1) * zeta(2) + 0, b=-one, c=one, d=zeta(3) * zeta(4))
        with pytest.raises(NonInvertibleDenominator):
            pp_to_map(p)


class TestThreeFactorProduct:
    def test_reproduced(self):
        got = three_factor_compare(*three_factor_default(N))
        assert got == {"params": True, "closed_forms": True, "chart_U0": True, "chart_U1": True, "equal": True}

    def test_params_give_closed_form(self, rng):
        for _ in range(5):
            vals = (rand_elem(rng, N, 0, mpq(rng.randint(1, 3))), rand_elem(rng, N, 0, mpq(rng.randint(-3, -1))),
                    rand_elem(rng, N, 1), rand_elem(rng, N, 1))
            assert pp_rational(three_factor_params(*vals)).same_map(three_factor_closed_form(*vals))

    def test_perturbed_input_rejected(self):
        A1, Am1, Mp, Mm = three_factor_default(N)
        closed = three_factor_closed_form(A1, Am1, Mp, Mm)
        assert not closed.same_map(pp_rational(three_factor_params(A1, Am1 + zeta(1) * zeta(3), Mp, Mm)))
        assert not closed.same_map(pp_rational(three_factor_params(A1, Am1, Mp, Mm + zeta(1))))

    def test_zero_body_d(self):
        # (A1 A-1)_B = 1 makes d = 1 - A1 A-1 nilpotent
        A1, Am1 = 2 + zeta(1) * zeta(2), mpq(1, 2) + zeta(1) * zeta(3)
        p = three_factor_params(A1, Am1, zeta(3), zeta(4))
        assert p.d.body().is_zero() and p.is_valid()
        with pytest.raises(NonInvertibleDenominator):
            reduce_with_invertible_d(p)
        # the point action is still defined away from c z + d having zero body
        chart, image = pp_apply_point(p, NumPoint(sc(5), zeta(1), zeta(2)))
        assert chart == CHART_FINITE
        assert image == pp_rational(p).evaluate(NumPoint(sc(5), zeta(1), zeta(2)))

    def test_reduction_when_d_invertible(self, rng):
        p = random_params(rng)
        gp, gm = reduce_with_invertible_d(p)
        H = pp_to_map(p)
        assert gp.agrees(component(H.p, 1, 0), 6)
        assert gm.agrees(component(H.m, 0, 1), 6)


class TestCompose:
    def test_identity(self, rng):
        p = random_params(rng)
        assert pp_compose(p, ProjectiveParams.identity(N)) == p
        assert pp_compose(ProjectiveParams.identity(N), p) == p

    def test_translations(self):
        t = lambda y: ProjectiveParams.build(N, b=sc(y))
        assert pp_compose(t(2), t(5)) == t(7)

    @slow
    @given(seeds)
    def test_matches_series(self, seed):
        rng = random.Random(seed)
        p1, p2 = random_params(rng), random_params(rng)
        got = pp_compose(p1, p2)
        assert got.is_valid()
        # a composite with a pole at the origin has no series there
        assume(not got.d.body().is_zero())
        assert pp_to_map(got, 5).agrees(pp_rational(p1).compose(pp_to_map(p2, 5), 5))

    @slow
    @given(seeds)
    def test_associative(self, seed):
        rng = random.Random(seed)
        a, b, c = (random_params(rng) for _ in range(3))
        assert pp_compose(pp_compose(a, b), c) == pp_compose(a, pp_compose(b, c))

    @slow
    @given(seeds)
    def test_inverse(self, seed):
        p = random_params(random.Random(seed))
        q = pp_inverse(p)
        assert pp_compose(q, p) == ProjectiveParams.identity(N)
        assert pp_compose(p, q) == ProjectiveParams.identity(N)

    def test_inner_map_with_a_and_d_nilpotent(self):
        # neither chart expands the inner map directly, so a translation moves its pole
        swap = ProjectiveParams.build(N, a=zero, b=-one, c=one, d=zero)
        shift = ProjectiveParams.build(N, b=sc(3))
        got = pp_compose(shift, swap)
        assert got == ProjectiveParams.build(N, a=sc(3), b=-one, c=one, d=zero)


class TestConjugation:
    def test_identity(self):
        assert pp_conjugate_by_I(ProjectiveParams.identity(N)) == ProjectiveParams.identity(N)

    def test_translation_swaps_b_and_c(self):
        y = sc(2)
        hat = pp_conjugate_by_I(ProjectiveParams.build(N, b=y))
        assert hat == ProjectiveParams.build(N, c=y)

    @given(seeds)
    def test_series_identity(self, seed):
        p = random_params(random.Random(seed))
        order = 4
        direct = ss_compose(inversion_point(N, inverse=True),
                            ss_compose(pp_rational(p).series(AT_INFINITY, order + 5), inversion_point(N)))
        assert pp_to_map(pp_conjugate_by_I(p), order).agrees(direct, order)

    @given(seeds)
    def test_round_trip(self, seed):
        p = random_params(random.Random(seed))
        assert pp_unconjugate_by_I(pp_conjugate_by_I(p)) == p
        assert pp_conjugate_by_I(pp_conjugate_by_I(p)) == p.odd_flipped()


class TestGenerators:
    def test_translation(self):
        assert pp_generator_exp(Lb(-1), sc(4)) == ProjectiveParams.build(N, b=sc(4))

    def test_odd_special(self):
        xi = zeta(2)
        got = pp_to_map(pp_generator_exp(Gm(1), xi))
        xxi = SuperSeries.monomial(1, coef=xi, L=N)
        expected = SuperPoint(x + pp * xxi, pp, xxi + pm - pp * pm * SuperSeries.constant(xi))
        assert got.agrees(expected)

    @pytest.mark.parametrize("gen", EIGHT, ids=lambda g: g.label())
    def test_closed_form_and_derivation_route(self, gen):
        y = nilpotent_param(gen)
        params = pp_generator_exp(gen, y)
        assert params.is_valid()
        closed = generator_closed_form(gen, y)
        assert pp_to_map(params).agrees(closed)
        flow = der_exp_apply(DerivationSum(N, {gen: -y}), ident)
        assert flow.agrees(closed)

    def test_dilation_and_phase(self):
        assert pp_to_map(pp_dilation(sc(2))).agrees(SuperPoint(x * 4, pp * 2, pm * 2))
        assert pp_to_map(pp_phase(sc(3))).agrees(SuperPoint(x, pp * 3, pm * mpq(1, 3)))

    def test_parity_mismatch(self):
        with pytest.raises(ParityMismatch):
            pp_generator_exp(Gp(0), sc(1))
        with pytest.raises(ParityMismatch):
            pp_generator_exp(Lb(1), zeta(1))

    def test_out_of_span(self):
        with pytest.raises(OutOfSpan):
            pp_generator_exp(Lb(2), sc(1))


class TestPointAction:
    def test_same_in_both_charts(self, rng):
        p = random_params(rng)
        pt = NumPoint(sc(7) + zeta(1) * zeta(2), zeta(3), zeta(4))
        chart0, img0 = pp_apply_point(p, pt, CHART_FINITE)
        chart1, img1 = pp_apply_point(p, to_chart(pt, CHART_FINITE, CHART_INVERTED), CHART_INVERTED)
        assert to_chart(img1, chart1, chart0) == img0

    def test_pole_lands_in_second_chart(self):
        p = ProjectiveParams.build(N, a=zero, b=-one, c=one, d=zero)
        chart, img = pp_apply_point(p, NumPoint.origin(N))
        assert chart == CHART_INVERTED

    def test_unknown_chart(self):
        with pytest.raises(ValueError):
            pp_apply_point(ProjectiveParams.identity(N), NumPoint.origin(N), "U7")


class TestOsp:
    def test_translation_matrix(self):
        m = osp_correspondence(Lb(-1), N)
        nonzero = [(i, j) for i in range(4) for j in range(4) if not m[i, j].is_zero()]
        assert nonzero == [(2, 3)] and m[2, 3] == one

    @pytest.mark.parametrize("gen", EIGHT, ids=lambda g: g.label())
    def test_beta_invariant(self, gen):
        assert osp_check(osp_correspondence(gen, N)).passed

    def test_non_member_fails(self):
        assert not osp_check(OspMatrix.from_entries({(1, 2): 1}, L=N)).passed

    def test_bracket_matches_derivations(self):
        table = osp_bracket_table(1)
        assert len(table) == 64 and all(ok for _, _, ok in table)

    def test_special_bracket(self):
        X = supercommutator(osp_correspondence(Lb(1), N), osp_correspondence(Lb(-1), N))
        der = der_bracket(DerivationSum.basis(Lb(1), N), DerivationSum.basis(Lb(-1), N))
        assert X.rows == osp_of_sum(der).rows == osp_correspondence(Lb(0), N).scale(2).rows

    @pytest.mark.parametrize("gen", EIGHT, ids=lambda g: g.label())
    def test_group_elements_have_sdet_one(self, gen):
        g = osp_exp(osp_correspondence(gen, N), nilpotent_param(gen))
        assert osp_check(g, group_element=True).passed

    def test_scaled_identity_fails_sdet(self):
        g = OspMatrix.from_entries({(1, 1): 2, (2, 2): 1, (3, 3): 1, (4, 4): 1}, L=N)
        assert sdet(g) == 2 and not osp_check(g, group_element=True).passed

    def test_json_round_trip(self):
        m = osp_correspondence(Gp(1), N).scale(zeta(1))
        assert OspMatrix.from_json(m.to_json(), N) == m

    def test_out_of_span(self):
        with pytest.raises(OutOfSpan):
            osp_correspondence(J(1), N)
