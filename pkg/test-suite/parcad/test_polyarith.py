"""Algebra kernel: resultants, discriminants, root isolation and exact signs."""

import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from parcad.errors import DegreeTooLow, DegreeZero, ZeroPolynomial
from parcad.formula import Polynomial
from parcad.polyarith import (
    AlgebraicNumber,
    UnivariateView,
    as_coordinate,
    compare_coordinates,
    discriminant,
    factorization,
    merge_roots,
    principal_subresultant_coefficients,
    rational_between,
    real_roots_at,
    refine,
    resultant,
    sign_at,
    square_free_part,
    sturm_isolate,
)

import oracles

X = Polynomial.variable(3, 0)
Y = Polynomial.variable(3, 1)
Z = Polynomial.variable(3, 2)


def univariate(coeffs: list[int]) -> Polynomial:
    """Polynomial in one variable from coefficients, lowest degree first."""
    return Polynomial.from_dict(1, {(k,): c for k, c in enumerate(coeffs)})


def bivariate(draw_coeffs: dict[tuple[int, int], int]) -> Polynomial:
    return Polynomial.from_dict(2, draw_coeffs)


small_coefficients = st.integers(min_value=-9, max_value=9)
bivariate_polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda m: sum(m) <= 3),
    small_coefficients.filter(bool),
    min_size=1,
    max_size=5,
).map(bivariate).filter(lambda p: p.degree(0) >= 1)


def sqrt2() -> AlgebraicNumber:
    return sturm_isolate(univariate([-2, 0, 1])).roots[1]


class ResultantTest(unittest.TestCase):
    def test_linear_pair(self) -> None:
        value = resultant(UnivariateView.of(X - Y, 0), UnivariateView.of(X - Z, 0))

        self.assertEqual(value, Y - Z)

    def test_monic_linear_divisor_evaluates(self) -> None:
        value = resultant(UnivariateView.of(X * X - 2, 0), UnivariateView.of(X - Y, 0))

        self.assertEqual(value, Y * Y - 2)

    def test_constant_operand_is_rejected(self) -> None:
        with self.assertRaises(DegreeZero):
            resultant(UnivariateView.of(X - Y, 0), UnivariateView.of(Y + 1, 0))

    @settings(max_examples=200, deadline=None)
    @given(p=bivariate_polys, q=bivariate_polys)
    def test_matches_sylvester_determinant(self, p: Polynomial, q: Polynomial) -> None:
        expected = oracles.sylvester_resultant(p, q, 0)

        self.assertEqual(resultant(UnivariateView.of(p, 0), UnivariateView.of(q, 0)), expected)

    @settings(max_examples=50, deadline=None)
    @given(p=bivariate_polys, q=bivariate_polys)
    def test_antisymmetry(self, p: Polynomial, q: Polynomial) -> None:
        sign = -1 if (p.degree(0) * q.degree(0)) % 2 else 1
        forward = resultant(UnivariateView.of(p, 0), UnivariateView.of(q, 0))
        backward = resultant(UnivariateView.of(q, 0), UnivariateView.of(p, 0))

        self.assertEqual(forward, backward * sign)

    @settings(max_examples=40, deadline=None)
    @given(p=bivariate_polys, q1=bivariate_polys, q2=bivariate_polys)
    def test_multiplicative_in_second_argument(self, p: Polynomial, q1: Polynomial, q2: Polynomial) -> None:
        whole = resultant(UnivariateView.of(p, 0), UnivariateView.of(q1 * q2, 0))
        parts = resultant(UnivariateView.of(p, 0), UnivariateView.of(q1, 0)) * resultant(
            UnivariateView.of(p, 0), UnivariateView.of(q2, 0)
        )

        self.assertEqual(whole, parts)


class DiscriminantTest(unittest.TestCase):
    def test_monic_quadratic(self) -> None:
        b, c = Y, Z

        self.assertEqual(discriminant(UnivariateView.of(X * X + b * X + c, 0)), b * b - c * 4)

    def test_constant_discriminant(self) -> None:
        self.assertEqual(discriminant(UnivariateView.of(X * X - 2, 0)), Polynomial.constant(3, 8))

    def test_linear_has_no_discriminant(self) -> None:
        with self.assertRaises(DegreeTooLow):
            discriminant(UnivariateView.of(X + Y, 0))

    @settings(max_examples=30, deadline=None)
    @given(p=bivariate_polys.filter(lambda p: p.degree(0) == 3))
    def test_cubic_agrees_with_resultant_of_derivative(self, p: Polynomial) -> None:
        # disc = (-1)^(n(n-1)/2) res(p, p') / lc(p) with n = 3
        lead = p.coefficients_in(0)[-1]
        res = resultant(UnivariateView.of(p, 0), UnivariateView.of(p.derivative(0), 0))
        disc = discriminant(UnivariateView.of(p, 0))

        self.assertEqual(disc * lead, -res)


class SubresultantTest(unittest.TestCase):
    def test_last_coefficient_is_the_resultant(self) -> None:
        p = X * X + Y * X + Z
        q = X * 2 + Y

        coefficients = principal_subresultant_coefficients(p, q, 0)
        res = resultant(UnivariateView.of(p, 0), UnivariateView.of(q, 0))

        self.assertTrue(coefficients)
        self.assertIn(res.primitive(), [c.primitive() for c in coefficients])


class FactorTest(unittest.TestCase):
    def test_square_free_part_keeps_every_factor(self) -> None:
        p = (X - Y) * (X - Y) * (X + Z)

        self.assertEqual(square_free_part(p), ((X - Y) * (X + Z)).primitive())

    def test_sign_bookkeeping(self) -> None:
        unit, factors = factorization((X - Y) * (Y - X) * 3)

        self.assertEqual(unit, -1)
        self.assertEqual(factors, [((X - Y).canonical()[1], 2)])


class IsolationTest(unittest.TestCase):
    def test_sqrt_two(self) -> None:
        roots = sturm_isolate(univariate([-2, 0, 1])).roots

        self.assertEqual(len(roots), 2)
        self.assertLessEqual(roots[0].hi, 0)
        self.assertTrue(roots[0].hi ** 2 < 2 < roots[0].lo ** 2)
        self.assertGreaterEqual(roots[1].lo, 0)
        self.assertTrue(roots[1].lo ** 2 < 2 < roots[1].hi ** 2)

    def test_no_real_roots(self) -> None:
        self.assertEqual(sturm_isolate(univariate([1, 0, 1])).count, 0)

    def test_three_integer_roots(self) -> None:
        p = univariate([-1, 1]) * univariate([-2, 1]) * univariate([-3, 1])
        roots = sturm_isolate(p).roots

        self.assertEqual(len(roots), 3)
        for expected, root in zip((1, 2, 3), roots):
            self.assertLessEqual(root.lo, expected)
            self.assertGreaterEqual(root.hi, expected)

    def test_zero_polynomial_is_rejected(self) -> None:
        with self.assertRaises(ZeroPolynomial):
            sturm_isolate(Polynomial(1))

    @settings(max_examples=200, deadline=None)
    @given(
        roots=st.lists(st.integers(-40, 40), min_size=0, max_size=4),
        doubled=st.booleans(),
        complex_pair=st.integers(0, 5),
    )
    def test_count_matches_grid_scan(self, roots: list[int], doubled: bool, complex_pair: int) -> None:
        # roots at halves so that every root sits on the 1/8 grid
        p = univariate([1])
        for r in roots:
            p = p * univariate([-r, 2])
        if doubled and roots:
            p = p * univariate([-roots[0], 2])
        if complex_pair:
            p = p * univariate([complex_pair, 0, 1])

        self.assertEqual(sturm_isolate(p).count, oracles.grid_root_count(p))

    @settings(max_examples=50, deadline=None)
    @given(coeffs=st.lists(small_coefficients, min_size=2, max_size=7).filter(lambda c: c[-1] != 0))
    def test_intervals_are_disjoint_and_bracket_a_sign_change(self, coeffs: list[int]) -> None:
        roots = sturm_isolate(univariate(coeffs)).roots

        for left, right in zip(roots, roots[1:]):
            self.assertLessEqual(left.hi, right.lo)
        for root in roots:
            if not root.is_rational:
                self.assertEqual(root.sign_of_defining(root.lo) * root.sign_of_defining(root.hi), -1)


class CoordinateTest(unittest.TestCase):
    def test_refine_narrows(self) -> None:
        refined = refine(sqrt2(), Fraction(1, 16))

        self.assertLessEqual(refined.width, Fraction(1, 16))
        self.assertTrue(refined.lo ** 2 < 2 < refined.hi ** 2)

    def test_refine_keeps_rational_points(self) -> None:
        three = AlgebraicNumber((1, -3), Fraction(3), Fraction(3))

        self.assertIs(refine(three, Fraction(1, 100)), three)
        self.assertEqual(as_coordinate(three), Fraction(3))

    def test_compare_and_separate(self) -> None:
        root = sqrt2()

        self.assertEqual(compare_coordinates(root, Fraction(3, 2)), -1)
        self.assertEqual(compare_coordinates(Fraction(7, 5), root), -1)
        between = rational_between(Fraction(7, 5), root)
        self.assertTrue(Fraction(7, 5) < between and between * between < 2)

    def test_merge_roots_drops_duplicates(self) -> None:
        a = sturm_isolate(univariate([-2, 0, 1])).roots
        b = sturm_isolate(univariate([-2, 0, 1]) * univariate([-1, 1])).roots

        self.assertEqual(len(merge_roots([a, b])), 3)


class SignTest(unittest.TestCase):
    def test_defining_polynomial_vanishes(self) -> None:
        self.assertEqual(sign_at(univariate([-2, 0, 1]), [sqrt2()]), 0)

    def test_positive_shift(self) -> None:
        self.assertEqual(sign_at(univariate([1, 1]), [sqrt2()]), 1)

    def test_product_of_two_algebraic_coordinates(self) -> None:
        xy_minus_one = Polynomial.from_dict(2, {(1, 1): 1, (0, 0): -1})

        self.assertEqual(sign_at(xy_minus_one, [sqrt2(), sqrt2()]), 1)

    def test_hidden_zero(self) -> None:
        xy_minus_two = Polynomial.from_dict(2, {(1, 1): 1, (0, 0): -2})

        self.assertEqual(sign_at(xy_minus_two, [sqrt2(), sqrt2()]), 0)

    @settings(max_examples=60, deadline=None)
    @given(
        p=bivariate_polys,
        x=st.fractions(min_value=-4, max_value=4, max_denominator=5),
        y=st.fractions(min_value=-4, max_value=4, max_denominator=5),
    )
    def test_rational_points_match_direct_evaluation(self, p: Polynomial, x: Fraction, y: Fraction) -> None:
        value = p.evaluate([x, y])

        self.assertEqual(sign_at(p, [x, y]), (value > 0) - (value < 0))


class RootsAtTest(unittest.TestCase):
    def test_roots_over_an_algebraic_point(self) -> None:
        # x1 - x0 at x0 = sqrt(2)
        p = Polynomial.from_dict(2, {(0, 1): 1, (1, 0): -1})
        roots = real_roots_at(p, 1, [sqrt2()])

        self.assertEqual(len(roots), 1)
        self.assertEqual(sign_at(p, [sqrt2(), roots[0]]), 0)

    def test_identically_vanishing(self) -> None:
        p = Polynomial.from_dict(2, {(1, 1): 1, (0, 1): -1})

        self.assertIsNone(real_roots_at(p, 1, [Fraction(1)]))


if __name__ == "__main__":
    unittest.main()
