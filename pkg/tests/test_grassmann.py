import pytest
from gmpy2 import mpq
from hypothesis import given

from n2super.errors import GeneratorCountMismatch, NonInvertible, NonNilpotent, OddArgument
from n2super.field import FieldScalar, I
from n2super.grassmann import GrassmannElement, Parity, gr_exp_nilpotent, gr_inv, gr_mul

from conftest import field_scalars, grassmann

L = 4
z = lambda j: GrassmannElement.generator(j, L)
one = GrassmannElement.one(L)


class TestFieldScalar:
    def test_units(self):
        assert I * I == -1
        assert FieldScalar.sqrt2() * FieldScalar.sqrt2() == 2
        assert FieldScalar(0, 0, 0, 1) == I * FieldScalar.sqrt2()

    @given(field_scalars, field_scalars, field_scalars)
    def test_ring_laws(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a

    @given(field_scalars)
    def test_inverse(self, a):
        if a.is_zero():
            with pytest.raises(ZeroDivisionError):
                a.inverse()
        else:
            assert a * a.inverse() == 1

    def test_json_round_trip(self):
        a = FieldScalar(mpq(1, 2), -3, mpq(5, 7), 0)
        assert FieldScalar.from_json(a.to_json()) == a


class TestProduct:
    def test_anticommuting_generators(self):
        assert gr_mul(z(2), z(1)) == -gr_mul(z(1), z(2))

    def test_square_of_generator(self):
        assert gr_mul(z(1), z(1)).is_zero()

    def test_absorbed_soul(self):
        assert gr_mul(1 + z(1) * z(2), z(1)) == z(1)

    def test_mismatched_generator_count(self):
        with pytest.raises(GeneratorCountMismatch):
            z(1) * GrassmannElement.generator(1, 3)

    @given(grassmann(L, 0), grassmann(L, 1), grassmann(L, 1))
    def test_supercommutative(self, e, o1, o2):
        assert e * o1 == o1 * e
        assert o1 * o2 == -(o2 * o1)

    @given(grassmann(L, 1))
    def test_odd_squares_vanish(self, o):
        assert (o * o).is_zero()

    @given(grassmann(L), grassmann(L), grassmann(L))
    def test_associative(self, a, b, c):
        assert (a * b) * c == a * (b * c)

    def test_parity(self):
        assert (z(1) * z(2)).parity() is Parity.EVEN
        assert z(3).parity() is Parity.ODD
        assert (z(1) + z(1) * z(2)).parity() is None


class TestInverse:
    def test_one(self):
        assert gr_inv(one) == one

    def test_geometric_series(self):
        a = 2 + z(1) * z(2)
        got = gr_inv(a)
        assert got == mpq(1, 2) - mpq(1, 4) * z(1) * z(2)
        assert got * a == one

    def test_pure_soul_is_not_invertible(self):
        with pytest.raises(NonInvertible):
            gr_inv(z(1))

    @given(grassmann(L, None, nonzero_body=True))
    def test_inverse_property(self, a):
        assert a * gr_inv(a) == one
        assert gr_inv(a) * a == one


class TestBodySoul:
    @given(grassmann(L))
    def test_split(self, a):
        assert a == a.soul() + a.body_element()
        assert a.soul().body().is_zero()
        assert (a.soul() ** (L + 1)).is_zero()


class TestExpNilpotent:
    def test_zero(self):
        assert gr_exp_nilpotent(GrassmannElement.zero(L)) == one

    def test_single_pair(self):
        assert gr_exp_nilpotent(z(1) * z(2)) == 1 + z(1) * z(2)

    def test_two_pairs(self):
        a, b = z(1) * z(2), z(3) * z(4)
        expected = one + a + b + a * b
        # oracle: product of the two commuting single-pair exponentials
        assert gr_exp_nilpotent(a + b) == expected
        assert gr_exp_nilpotent(a) * gr_exp_nilpotent(b) == expected

    def test_rejects_body(self):
        with pytest.raises(NonNilpotent):
            gr_exp_nilpotent(1 + z(1) * z(2))

    def test_rejects_odd(self):
        with pytest.raises(OddArgument):
            gr_exp_nilpotent(z(1))

    @given(grassmann(L, 0), grassmann(L, 0))
    def test_homomorphism(self, a, b):
        a, b = a.soul(), b.soul()
        assert gr_exp_nilpotent(a + b) == gr_exp_nilpotent(a) * gr_exp_nilpotent(b)


def test_json_round_trip():
    a = 3 + I * z(1) * z(2) - mpq(1, 2) * z(2) * z(3) * z(4)
    assert GrassmannElement.from_json(a.to_json(), L) == a


def test_json_rejects_bad_terms():
    with pytest.raises(ValueError):
        GrassmannElement.from_json([{"gens": [2, 1], "coef": [1, 1, 0, 1, 0, 1, 0, 1]}], L)
    with pytest.raises(ValueError):
        GrassmannElement.from_json({"gens": []}, L)
