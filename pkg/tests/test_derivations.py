import random

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from n2super.derivations import (
    DerivationSum,
    Gm,
    Gp,
    J,
    L,
    der_apply,
    der_apply_point,
    der_bracket,
    der_exp_apply,
    der_exp_series,
    der_scale_apply,
)
from n2super.errors import NonInvertible, NonTerminating, ParityMismatch
from n2super.grassmann import GrassmannElement, Parity
from n2super.superseries import AT_INFINITY, SuperPoint, SuperSeries, ss_compose

from conftest import rand_elem

N = 4
zeta = lambda j: GrassmannElement.generator(j, N)
one = GrassmannElement.one(N)
x = SuperSeries.x(N)
pp, pm = SuperSeries.phi(1, N), SuperSeries.phi(-1, N)
ident = SuperPoint.identity(N)
seeds = st.integers(0, 10 ** 6)


def D(*pairs):
    return DerivationSum(N, {b: (c if isinstance(c, GrassmannElement) else GrassmannElement.scalar(c, N)) for b, c in pairs})


def random_series(rng, kmin=0, kmax=4, parity=None, kind="at_zero"):
    terms = {}
    for k in range(kmin, kmax + 1):
        for jp in (0, 1):
            for jm in (0, 1):
                if rng.random() < 0.5:
                    p = rng.randint(0, 1) if parity is None else (parity + jp + jm) % 2
                    terms[(k, jp, jm)] = rand_elem(rng, N, p, mpq(rng.randint(-2, 2)) if p == 0 else None, 0.2)
    return SuperSeries.from_terms(N, kind, terms)


class TestBasis:
    def test_parity_and_weight(self):
        assert L(3).parity is Parity.EVEN and J(-1).parity is Parity.EVEN
        assert Gp(0).parity is Parity.ODD
        assert Gm(1).weight == mpq(1, 2)
        assert L(-2).weight == -2

    def test_mixed_coefficient_rejected(self):
        with pytest.raises(ParityMismatch):
            D((L(1), 1 + zeta(1)))

    def test_total_parity(self):
        assert D((Gp(0), zeta(1)), (L(2), one)).parity() is Parity.EVEN
        assert DerivationSum.basis(Gp(0), N).parity() is Parity.ODD
        assert D((Gp(0), one), (L(2), one)).parity() is None

    def test_exp_needs_even_sum(self):
        with pytest.raises(ParityMismatch):
            der_exp_apply(DerivationSum.basis(Gp(1), N), ident)

    def test_zero_coefficients_dropped(self):
        assert D((L(1), 0)).is_zero()

    def test_json_round_trip(self):
        T = D((L(1), 2 + zeta(1) * zeta(2)), (Gm(-1), zeta(3)))
        assert DerivationSum.from_json(T.to_json(), N) == T


class TestApply:
    def test_L1_on_x(self):
        assert der_apply(D((L(1), 1)), x) == -(x * x)

    def test_G_minus_half(self):
        T = DerivationSum.basis(Gp(0), N)
        assert der_apply(T, x) == pm
        assert der_apply(T, pp) == SuperSeries.constant(-one)

    def test_J0_on_odd_variables(self):
        T = DerivationSum.basis(J(0), N)
        assert der_apply(T, pp) == -pp
        assert der_apply(T, pm) == pm

    def test_linear(self, rng):
        S = D((L(1), 2), (J(0), -1))
        T = D((Gm(1), zeta(1)), (L(-1), zeta(2) * zeta(3)))
        s = random_series(rng)
        assert der_apply(S + T, s) == der_apply(S, s) + der_apply(T, s)

    @given(seeds, st.sampled_from([L(-1), L(2), J(1), Gp(0), Gm(2)]))
    def test_derivation_rule(self, seed, b):
        # an even derivation sum in the envelope obeys the plain Leibniz rule
        rng = random.Random(seed)
        coef = zeta(4) if b.parity is Parity.ODD else GrassmannElement.scalar(3, N)
        T = D((b, coef))
        u, v = random_series(rng), random_series(rng)
        assert der_apply(T, u * v) == der_apply(T, u) * v + u * der_apply(T, v)


class TestBracket:
    def test_virasoro(self):
        assert der_bracket(D((L(1), 1)), D((L(-1), 1))) == D((L(0), 2))

    def test_G_plus_G_minus(self):
        got = der_bracket(DerivationSum.basis(Gp(1), N), DerivationSum.basis(Gm(0), N))
        assert got == D((L(0), 2), (J(0), 1))

    def test_G_plus_G_plus(self):
        assert der_bracket(DerivationSum.basis(Gp(1), N), DerivationSum.basis(Gp(0), N)).is_zero()

    def test_antisymmetry_even(self):
        S, T = D((L(2), 1)), D((J(-1), 1))
        assert der_bracket(S, T) == -der_bracket(T, S)

    def test_symmetry_odd(self):
        S, T = DerivationSum.basis(Gp(2), N), DerivationSum.basis(Gm(-1), N)
        assert der_bracket(S, T) == der_bracket(T, S)


class TestExp:
    def test_translation(self):
        y = zeta(1) * zeta(2)
        got = der_exp_apply(D((L(-1), -y)), ident)
        assert got.agrees(SuperPoint(x + SuperSeries.constant(y), pp, pm))

    def test_special_conformal(self):
        y = 2
        got = der_exp_apply(D((L(1), -y)), ident, order=7)
        geo = sum((SuperSeries.monomial(k, L=N) * (y ** k) for k in range(8)), SuperSeries.zero(N)).truncate(7)
        assert got.agrees(SuperPoint(x * geo, pp * geo, pm * geo).truncate(7))

    def test_odd_translation(self):
        xi = zeta(1)
        got = der_exp_apply(D((Gp(0), -xi)), ident)
        expected = SuperPoint(x + pm * SuperSeries.constant(xi), pp + SuperSeries.constant(xi), pm)
        assert got.agrees(expected)

    def test_zero_mode_rejected(self):
        with pytest.raises(NonTerminating):
            der_exp_apply(D((L(0), 1)), ident)

    def test_wrong_direction_rejected(self):
        with pytest.raises(NonTerminating):
            der_exp_apply(D((L(-1), 1)), ident)
        inf = SuperPoint.identity(N, kind=AT_INFINITY)
        with pytest.raises(NonTerminating):
            der_exp_apply(D((L(1), 1)), inf)

    def test_nilpotent_coefficient_any_direction(self):
        y = zeta(1) * zeta(2)
        got = der_exp_apply(D((L(0), y)), ident)
        # exp(y L0) with y^2 = 0 is 1 + y L0
        step = der_apply_point(D((L(0), y)), ident)
        assert got.agrees(SuperPoint(*(a + b for a, b in zip(ident, step))))

    @given(seeds)
    def test_automorphism(self, seed):
        rng = random.Random(seed)
        T = D((L(1), rand_elem(rng, N, 0, mpq(rng.randint(-2, 2)))),
              (Gp(1), rand_elem(rng, N, 1)), (J(2), rand_elem(rng, N, 0, mpq(1))),
              (Gm(-1), rand_elem(rng, N, 1)))
        u, v = random_series(rng).truncate(6), random_series(rng).truncate(6)
        lhs = der_exp_series(T, u * v)
        rhs = der_exp_series(T, u) * der_exp_series(T, v)
        assert lhs.agrees(rhs)

    @given(seeds)
    def test_substitution_commutes(self, seed):
        rng = random.Random(seed)
        T = D((L(1), rand_elem(rng, N, 0, mpq(rng.randint(-2, 2)))), (Gm(1), rand_elem(rng, N, 1)),
              (J(1), rand_elem(rng, N, 0, mpq(rng.randint(-1, 1)))))
        H = SuperPoint(random_series(rng, 1, 4, 0).truncate(6), random_series(rng, 1, 4, 1).truncate(6),
                       random_series(rng, 1, 4, 1).truncate(6))
        lhs = ss_compose(H, der_exp_apply(T, ident))
        rhs = der_exp_apply(T, H)
        assert lhs.agrees(rhs)


class TestScale:
    def test_identity(self):
        assert der_scale_apply(one, one, ident) == ident

    def test_closed_form(self):
        got = der_scale_apply(GrassmannElement.scalar(2, N), GrassmannElement.scalar(3, N), ident)
        assert got == SuperPoint(x * 4, pp * 6, pm * mpq(2, 3))

    def test_sign_ambiguity(self):
        s = lambda a, b: der_scale_apply(GrassmannElement.scalar(a, N), GrassmannElement.scalar(b, N), ident)
        assert s(-2, -3) == s(2, 3)

    def test_rejects_soul_only(self):
        with pytest.raises(NonInvertible):
            der_scale_apply(zeta(1) * zeta(2), one, ident)
