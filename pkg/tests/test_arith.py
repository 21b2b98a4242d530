from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from conftest import NON_SQUARES, quad_elems, rationals
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from quadtwist.arith import (
    Discriminant,
    DiscriminantError,
    FieldMismatchError,
    NotOnTorusError,
    TorusPoint,
    det2,
    format_rational,
    is_square_rational,
    matmul2,
    parse_quad,
    parse_rational,
    torus_matrix,
    torus_point_from,
)

K = Discriminant(2)
elems = quad_elems(K)


# oracle: sympy's own algebraic field Q(sqrt(2))
QS = sympy.QQ.algebraic_field(sympy.sqrt(2))
GEN = QS.from_sympy(sympy.sqrt(2))


def to_sympy(z):
    x = QS.convert(sympy.Rational(int(z.x.numerator), int(z.x.denominator)))
    y = QS.convert(sympy.Rational(int(z.y.numerator), int(z.y.denominator)))
    return x + y * GEN


class TestRationals:
    def test_parse_and_format(self):
        assert parse_rational("3/6") == mpq(1, 2)
        assert format_rational(parse_rational("-4/2")) == "-2"
        assert format_rational(mpq(7, 3)) == "7/3"

    def test_strict_parse_rejects_noncanonical(self):
        for bad in ("2/4", "1/1", "-3/-1", "3/-1"):
            with pytest.raises(ValueError):
                parse_rational(bad, strict=True)
        assert parse_rational("-3/4", strict=True) == mpq(-3, 4)

    def test_zero_denominator(self):
        with pytest.raises(ZeroDivisionError):
            parse_rational("1/0")

    @given(rationals(1000))
    def test_format_round_trip(self, q):
        assert parse_rational(format_rational(mpq(q)), strict=True) == q

    @pytest.mark.parametrize("q,expected", [(4, True), (Fraction(9, 4), True), (0, True), (2, False), (-1, False), (Fraction(8, 2), True), (Fraction(3, 4), False)])
    def test_is_square(self, q, expected):
        assert is_square_rational(q) is expected

    @given(rationals(200))
    def test_square_of_rational_is_square(self, q):
        assert is_square_rational(q * q)

    @given(st.integers(1, 10**6))
    def test_is_square_matches_sympy(self, n):
        assert is_square_rational(n) == sympy.sqrt(n).is_Integer


class TestDiscriminant:
    def test_rejects_square(self):
        with pytest.raises(DiscriminantError, match="alpha is a square: 9/4"):
            Discriminant(Fraction(9, 4))

    def test_validation_can_be_bypassed(self):
        K1 = Discriminant(1, validate=False)
        assert K1.t * K1.t == K1.one

    @pytest.mark.parametrize("alpha", NON_SQUARES)
    def test_t_squared(self, alpha):
        F = Discriminant(alpha)
        assert F.t * F.t == F(alpha)
        assert F.j.conjugate() == -F.j

    def test_fields_do_not_mix(self):
        with pytest.raises(FieldMismatchError):
            K.one + Discriminant(3).one


class TestQuadElem:
    def test_examples(self):
        a = K(1, 1)
        assert a * a == K(3, 2)
        assert a.norm() == -1
        assert a.inverse() == K(-1, 1)
        assert a ** -2 == K(3, -2)
        assert K(3, 2).norm() == 1
        assert str(K(mpq(3, 5), mpq(-4, 5))) == "3/5 - 4/5*t"
        assert str(K(7)) == "7"

    def test_zero_is_not_invertible(self):
        with pytest.raises(ZeroDivisionError):
            K.zero.inverse()

    def test_mixed_scalars(self):
        assert K(1, 2) + 1 == K(2, 2)
        assert 2 * K(1, 2) == K(2, 4)
        assert K(1, 2) * Fraction(1, 2) == K(Fraction(1, 2), 1)
        assert K(3) == 3 and K(3) == Fraction(3)

    @given(elems)
    def test_parse_round_trip(self, a):
        assert parse_quad(str(a), K) == a

    @given(elems, elems)
    def test_product_matches_sympy(self, a, b):
        assert to_sympy(a * b) == to_sympy(a) * to_sympy(b)

    @given(elems.filter(bool))
    def test_inverse_matches_sympy(self, a):
        assert to_sympy(a.inverse()) == QS.one / to_sympy(a)

    @given(elems, elems)
    def test_norm_multiplicative(self, a, b):
        assert (a * b).norm() == a.norm() * b.norm()

    @given(elems, elems)
    def test_sigma_is_ring_involution(self, a, b):
        assert (a * b).conjugate() == a.conjugate() * b.conjugate()
        assert (a + b).conjugate() == a.conjugate() + b.conjugate()
        assert a.conjugate().conjugate() == a
        assert a * a.conjugate() == a.norm()

    @pytest.mark.parametrize("alpha", NON_SQUARES)
    @given(data=st.data())
    def test_anisotropy(self, alpha, data):
        F = Discriminant(alpha)
        a = data.draw(quad_elems(F).filter(bool))
        assert a.norm() != 0


class TestTorus:
    def test_membership(self):
        TorusPoint(K(3, 2))
        TorusPoint(-K.one)
        with pytest.raises(NotOnTorusError):
            TorusPoint(K(1, 1))

    def test_minus_one_has_order_two(self):
        m = TorusPoint(-K.one)
        assert (m * m).value == K.one

    @given(elems.filter(bool), elems.filter(bool))
    def test_matrix_is_homomorphism(self, a, b):
        p, q = torus_point_from(a), torus_point_from(b)
        assert torus_matrix(p * q) == matmul2(torus_matrix(p), torus_matrix(q))
        assert det2(torus_matrix(p)) == 1
        assert (p * p.inverse()).value == K.one

    def test_matrix_example(self):
        assert torus_matrix(TorusPoint(K(3, 2))) == ((3, 4), (2, 3))
