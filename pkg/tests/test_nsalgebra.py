import itertools

import pytest
from gmpy2 import mpq

from n2super.derivations import BasisDerivation, Gm, Gp, J, L
from n2super.errors import IndexOutOfWindow
from n2super.field import FieldScalar
from n2super.grassmann import Parity
from n2super.nsalgebra import (
    NsElement,
    basis_bracket,
    basis_window,
    is_skew_supersymmetric,
    jacobi_defect,
    ns_bracket,
    ns_verify_representation,
)

B = NsElement.basis


class TestTable:
    def test_virasoro_with_central_term(self):
        assert ns_bracket(B(L(2)), B(L(-2))) == B(L(0), 4) + NsElement.central(mpq(1, 2))

    def test_J_central_term(self):
        assert ns_bracket(B(J(1)), B(J(-1))) == NsElement.central(mpq(1, 3))

    def test_zero_mode_self_bracket(self):
        assert ns_bracket(B(L(0)), B(L(0))).is_zero()

    def test_G_plus_G_minus(self):
        # [G+_{1/2}, G-_{-1/2}] = 2 L0 + J0
        assert basis_bracket(Gp(1), Gm(0)) == B(L(0), 2) + B(J(0))

    def test_G_plus_G_plus(self):
        assert basis_bracket(Gp(1), Gp(0)).is_zero()

    def test_J_charges(self):
        assert basis_bracket(J(1), Gp(0)) == B(Gp(1))
        assert basis_bracket(J(1), Gm(0)) == B(Gm(1), -1)

    @pytest.mark.parametrize("m", range(-4, 5))
    def test_central_isolation(self, m):
        assert basis_bracket(L(m), L(-m)).central_part() == FieldScalar(mpq(m ** 3 - m, 12))
        assert basis_bracket(J(m), J(-m)).central_part() == FieldScalar(mpq(m, 3))

    def test_central_symbol_is_central(self):
        u = B(L(1)) + NsElement.central(5)
        assert ns_bracket(u, B(L(-1))) == ns_bracket(B(L(1)), B(L(-1)))

    def test_window(self):
        with pytest.raises(IndexOutOfWindow):
            ns_bracket(B(L(3)), B(L(1)), window=3)

    def test_parity(self):
        assert (B(Gp(0)) + B(Gm(2))).parity() is Parity.ODD
        assert (B(L(1)) + NsElement.central()).parity() is Parity.EVEN
        assert (B(L(1)) + B(Gp(0))).parity() is None

    def test_json(self):
        data = (B(L(1), 2) + NsElement.central(mpq(1, 3))).to_json()
        assert [t["family"] for t in data["terms"]] == ["L", "d"]


class TestIdentities:
    def test_skew_supersymmetry(self):
        basis = basis_window(4)
        assert all(is_skew_supersymmetric(a, b) for a, b in itertools.product(basis, basis))

    def test_jacobi(self):
        basis = basis_window(2)
        for a, b, c in itertools.product(basis, repeat=3):
            assert jacobi_defect(a, b, c).is_zero(), (a, b, c)


class TestRepresentation:
    def test_window_one(self):
        assert ns_verify_representation(1).passed

    def test_window_four(self):
        report = ns_verify_representation(4)
        assert report.passed and report.pairs_checked == 36 ** 2
        assert report.to_json()["mismatches"] == []

    def test_mutated_J_G_sign_detected(self):
        def corrupted(a: BasisDerivation, b: BasisDerivation) -> NsElement:
            res = basis_bracket(a, b)
            if {a.family, b.family} in ({"J", "Gp"}, {"J", "Gm"}):
                return -res
            return res

        report = ns_verify_representation(2, bracket=corrupted)
        assert not report.passed
        hit = {frozenset((a.family, b.family)) for a, b, _, _ in report.mismatches}
        assert hit == {frozenset(("J", "Gp")), frozenset(("J", "Gm"))}
        # every J-G pair disagrees once the sign flips
        assert len(report.mismatches) == 4 * 5 * 5
