"""Exact polynomial algebra for the CAD engine.

sympy does the symbolic heavy lifting (resultants, discriminants, scalar
subresultant sequences, Sturm sequences, gcds, square-free parts). Real roots
are represented by a square-free integer polynomial and an isolating rational
interval, and signs at algebraic points are decided exactly: interval
evaluation certifies nonzero signs, an annihilating polynomial of the value
(iterated resultants) certifies zero.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import sympy
from sympy import ZZ, Poly
from sympy.polys.densebasic import dmp_to_dict
from sympy.polys.euclidtools import dmp_inner_subresultants

from .errors import DegreeTooLow, DegreeZero, LiftingDegeneracy, ZeroPolynomial
from .formula import Polynomial

logger = logging.getLogger(__name__)

# Refinement rounds tried before falling back to the exact zero test.
QUICK_SIGN_ROUNDS = 6

_X = sympy.Symbol("_x")
_Z = sympy.Symbol("_z")


@functools.lru_cache(maxsize=None)
def _symbol(index: int) -> sympy.Symbol:
    return sympy.Symbol(f"v{index}")


def to_sympy(p: Polynomial, order: Sequence[int]) -> Poly:
    """sympy Poly over the generators ``v{i}`` for ``i`` in ``order``."""
    position = {var: slot for slot, var in enumerate(order)}
    rep: dict[tuple[int, ...], int] = {}
    for monomial, coeff in p.terms:
        exponents = [0] * len(order)
        for var, exp in enumerate(monomial):
            if exp:
                exponents[position[var]] = exp
        rep[tuple(exponents)] = coeff
    return Poly.from_dict(rep, *[_symbol(var) for var in order], domain=ZZ)


def from_sympy(value: Poly | sympy.Expr | int, order: Sequence[int], nvars: int) -> Polynomial:
    if not isinstance(value, Poly):
        return Polynomial.constant(nvars, int(value))
    acc: dict[tuple[int, ...], int] = {}
    for exponents, coeff in value.terms():
        monomial = [0] * nvars
        for slot, exp in enumerate(exponents):
            if exp:
                monomial[order[slot]] = exp
        acc[tuple(monomial)] = int(coeff)
    return Polynomial.from_dict(nvars, acc)


def _main_first(var: int, *polys: Polynomial) -> list[int]:
    others = sorted(frozenset().union(*(p.variables() for p in polys)) - {var})
    return [var, *others]


@dataclass(frozen=True, slots=True)
class UnivariateView:
    """A polynomial read as univariate in ``main_var``; index is the degree."""

    coefficients: tuple[Polynomial, ...]
    main_var: int

    @classmethod
    def of(cls, p: Polynomial, var: int) -> UnivariateView:
        return cls(tuple(p.coefficients_in(var)), var)

    @property
    def degree(self) -> int:
        if len(self.coefficients) == 1 and self.coefficients[0].is_zero:
            return -1
        return len(self.coefficients) - 1

    @property
    def leading_coefficient(self) -> Polynomial:
        return self.coefficients[-1]

    def polynomial(self) -> Polynomial:
        nvars = self.coefficients[0].nvars
        x = Polynomial.variable(nvars, self.main_var)
        total = Polynomial(nvars)
        for k, coeff in enumerate(self.coefficients):
            if not coeff.is_zero:
                total = total + coeff * x**k
        return total


def reducta(p: Polynomial, var: int) -> list[Polynomial]:
    """``p, red(p), red^2(p), ...`` down to (and excluding) the zero polynomial."""
    result = []
    coeffs = p.coefficients_in(var)
    while coeffs and not all(c.is_zero for c in coeffs):
        while coeffs[-1].is_zero:
            coeffs.pop()
        result.append(UnivariateView(tuple(coeffs), var).polynomial())
        coeffs = coeffs[:-1]
    return result


def resultant(p: UnivariateView, q: UnivariateView) -> Polynomial:
    if p.main_var != q.main_var:
        raise ValueError("resultant needs a shared main variable")
    if p.degree < 1 or q.degree < 1:
        raise DegreeZero()
    left, right = p.polynomial(), q.polynomial()
    order = _main_first(p.main_var, left, right)
    value = to_sympy(left, order).resultant(to_sympy(right, order))
    return from_sympy(value, order[1:], left.nvars)


def discriminant(p: UnivariateView) -> Polynomial:
    if p.degree < 2:
        raise DegreeTooLow()
    poly = p.polynomial()
    order = _main_first(p.main_var, poly)
    return from_sympy(to_sympy(poly, order).discriminant(), order[1:], poly.nvars)


def principal_subresultant_coefficients(p: Polynomial, q: Polynomial, var: int) -> list[Polynomial]:
    """Nonzero principal subresultant coefficients of ``p`` and ``q`` in ``var``.

    Taken from the scalar subresultant sequence of sympy's subresultant PRS;
    the last entry is the resultant when the gcd is constant.
    """
    if p.degree(var) < 1 or q.degree(var) < 1:
        raise DegreeZero()
    order = _main_first(var, p, q)
    level = len(order) - 1
    f = to_sympy(p, order).rep.to_list()
    g = to_sympy(q, order).rep.to_list()
    _, scalars = dmp_inner_subresultants(f, g, level, ZZ)
    result = []
    for scalar in scalars:
        if level == 0:
            value = Polynomial.constant(p.nvars, int(scalar))
        else:
            rep = dmp_to_dict(scalar, level - 1)
            value = Polynomial.from_dict(
                p.nvars,
                {_spread(exponents, order[1:], p.nvars): int(coeff) for exponents, coeff in rep.items()},
            )
        if not value.is_zero:
            result.append(value)
    return result


def _spread(exponents: Sequence[int], order: Sequence[int], nvars: int) -> tuple[int, ...]:
    monomial = [0] * nvars
    for slot, exp in enumerate(exponents):
        if exp:
            monomial[order[slot]] = exp
    return tuple(monomial)


def factorization(p: Polynomial) -> tuple[int, list[tuple[Polynomial, int]]]:
    """``(unit, [(factor, multiplicity), ...])`` with ``sign(p) = unit * prod(sign(factor)^m)``.

    Factors are irreducible over the integers, primitive and positive on
    their leading term, so equal factors of different inputs compare equal.
    """
    if p.is_zero:
        raise ZeroPolynomial()
    if p.is_constant:
        return _sign(p.constant_value), []
    order = sorted(p.variables())
    coeff, pieces = to_sympy(p, order).factor_list()
    unit = _sign(int(coeff))
    factors = []
    for piece, multiplicity in pieces:
        if piece.is_ground:
            unit *= _sign(int(piece.LC())) ** multiplicity
            continue
        sign, canonical = from_sympy(piece, order, p.nvars).canonical()
        unit *= sign**multiplicity
        factors.append((canonical, multiplicity))
    return unit, factors


def irreducible_factors(p: Polynomial) -> list[Polynomial]:
    if p.is_constant:
        return []
    return [factor for factor, _ in factorization(p)[1]]


def square_free_part(p: Polynomial) -> Polynomial:
    """Primitive square-free part, positive on its leading term."""
    if p.is_constant:
        return p.primitive()
    product = Polynomial.constant(p.nvars, 1)
    for factor in irreducible_factors(p):
        product = product * factor
    return product.primitive()


# ---------------------------------------------------------------------------
# Univariate dense helpers (coefficients highest degree first)
# ---------------------------------------------------------------------------

Dense = tuple[int, ...]


def dense_of(p: Polynomial, var: int) -> Dense:
    coeffs = [c.constant_value for c in p.coefficients_in(var)]
    return tuple(reversed(coeffs))


def _horner(coeffs: Sequence[int | Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for coeff in coeffs:
        acc = acc * x + coeff
    return acc


def _sign(value: Fraction | int) -> int:
    return (value > 0) - (value < 0)


def _dense_poly(coeffs: Sequence[int]) -> Poly:
    return Poly(list(coeffs), _X, domain=ZZ)


def _dense_ints(poly: Poly) -> Dense:
    return tuple(int(c) for c in poly.all_coeffs())


def _rational(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def cauchy_bound(coeffs: Sequence[int]) -> Fraction:
    lead = abs(coeffs[0])
    return 1 + Fraction(max((abs(c) for c in coeffs[1:]), default=0), lead)


def _count_roots(coeffs: Sequence[int], lo: Fraction, hi: Fraction) -> int:
    """Distinct real roots in the closed interval ``[lo, hi]``."""
    return int(_dense_poly(coeffs).count_roots(_rational(lo), _rational(hi)))


# ---------------------------------------------------------------------------
# Algebraic numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class AlgebraicNumber:
    """The unique root of ``defining_poly`` in ``[lo, hi]``.

    ``defining_poly`` is square-free with integer coefficients, highest degree
    first. Either ``lo == hi`` or the polynomial changes sign strictly between
    the endpoints.
    """

    defining_poly: Dense
    lo: Fraction
    hi: Fraction

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return (self.lo, self.hi)

    @property
    def is_rational(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def sign_of_defining(self, x: Fraction) -> int:
        return _sign(_horner(self.defining_poly, x))

    def bisect(self) -> AlgebraicNumber:
        if self.is_rational:
            return self
        mid = (self.lo + self.hi) / 2
        at_mid = self.sign_of_defining(mid)
        if at_mid == 0:
            return AlgebraicNumber(self.defining_poly, mid, mid)
        if at_mid == self.sign_of_defining(self.lo):
            return AlgebraicNumber(self.defining_poly, mid, self.hi)
        return AlgebraicNumber(self.defining_poly, self.lo, mid)

    def as_rational(self) -> Fraction | None:
        if self.is_rational:
            return self.lo
        if len(self.defining_poly) == 2:
            a, b = self.defining_poly
            return Fraction(-b, a)
        return None

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)


Coordinate = Union[Fraction, AlgebraicNumber]


@dataclass(frozen=True, slots=True)
class IsolationResult:
    roots: tuple[AlgebraicNumber, ...]

    @property
    def count(self) -> int:
        return len(self.roots)


def as_coordinate(value: Coordinate | int) -> Coordinate:
    """Rational when the value is known to be rational, otherwise unchanged."""
    if isinstance(value, AlgebraicNumber):
        rational = value.as_rational()
        return value if rational is None else rational
    return Fraction(value)


def refine(a: Coordinate, width: Fraction) -> Coordinate:
    if not isinstance(a, AlgebraicNumber):
        return a
    while not a.is_rational and a.width > width:
        a = a.bisect()
    return a


def bounds(c: Coordinate) -> tuple[Fraction, Fraction]:
    if isinstance(c, AlgebraicNumber):
        return c.lo, c.hi
    return c, c


def _sturm_sequence(coeffs: Dense) -> list[list[Fraction]]:
    sequence = sympy.sturm(_dense_poly(coeffs))
    return [[Fraction(int(c.p), int(c.q)) for c in poly.all_coeffs()] for poly in sequence]


def _variations(sequence: list[list[Fraction]], x: Fraction) -> int:
    signs = [s for s in (_sign(_horner(poly, x)) for poly in sequence) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def square_free_dense(coeffs: Dense) -> Dense:
    poly = _dense_poly(coeffs).sqf_part()
    _, primitive = poly.primitive()
    dense = _dense_ints(primitive)
    return dense if dense[0] > 0 else tuple(-c for c in dense)


def isolate_dense(coeffs: Dense) -> IsolationResult:
    if not any(coeffs):
        raise ZeroPolynomial()
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) <= 1:
        return IsolationResult(())
    sqf = square_free_dense(coeffs)
    if len(sqf) == 2:
        return IsolationResult((AlgebraicNumber(sqf, Fraction(-sqf[1], sqf[0]), Fraction(-sqf[1], sqf[0])),))
    sequence = _sturm_sequence(sqf)
    bound = cauchy_bound(sqf)
    roots: list[AlgebraicNumber] = []
    _isolate(sqf, sequence, -bound, bound, roots)
    return IsolationResult(tuple(roots))


def _isolate(
    sqf: Dense, sequence: list[list[Fraction]], lo: Fraction, hi: Fraction, out: list[AlgebraicNumber]
) -> None:
    """Append the roots inside ``(lo, hi)`` in increasing order; endpoints are not roots."""
    count = _variations(sequence, lo) - _variations(sequence, hi)
    if count == 0:
        return
    if count == 1:
        out.append(AlgebraicNumber(sqf, lo, hi))
        return
    mid = (lo + hi) / 2
    if _horner(sqf, mid) != 0:
        _isolate(sqf, sequence, lo, mid, out)
        _isolate(sqf, sequence, mid, hi, out)
        return
    delta = (hi - lo) / 4
    while True:
        left, right = mid - delta, mid + delta
        if (
            _horner(sqf, left) != 0
            and _horner(sqf, right) != 0
            and _variations(sequence, left) - _variations(sequence, right) == 1
        ):
            break
        delta /= 2
    _isolate(sqf, sequence, lo, left, out)
    out.append(AlgebraicNumber(sqf, mid, mid))
    _isolate(sqf, sequence, right, hi, out)


def sturm_isolate(p: Polynomial) -> IsolationResult:
    """Isolate the distinct real roots of a univariate polynomial."""
    if p.is_zero:
        raise ZeroPolynomial()
    used = p.variables()
    if not used:
        return IsolationResult(())
    if len(used) > 1:
        raise ValueError("sturm_isolate needs a univariate polynomial")
    (var,) = used
    return isolate_dense(dense_of(p, var))


def _gcd_dense(a: Dense, b: Dense) -> Dense:
    return _dense_ints(_dense_poly(a).gcd(_dense_poly(b)))


def _same_algebraic(a: AlgebraicNumber, b: AlgebraicNumber) -> bool:
    if a.hi < b.lo or b.hi < a.lo:
        return False
    common = _gcd_dense(a.defining_poly, b.defining_poly)
    if len(common) < 2:
        return False
    if _count_roots(common, a.lo, a.hi) == 0 or _count_roots(common, b.lo, b.hi) == 0:
        return False
    while True:
        if a.hi < b.lo or b.hi < a.lo:
            return False
        if _count_roots(common, min(a.lo, b.lo), max(a.hi, b.hi)) == 1:
            return True
        a, b = a.bisect(), b.bisect()


def _rational_is(a: AlgebraicNumber, x: Fraction) -> bool:
    return a.lo <= x <= a.hi and a.sign_of_defining(x) == 0


def compare_coordinates(a: Coordinate, b: Coordinate) -> int:
    a, b = as_coordinate(a), as_coordinate(b)
    if not isinstance(a, AlgebraicNumber) and not isinstance(b, AlgebraicNumber):
        return _sign(a - b)
    if not isinstance(a, AlgebraicNumber):
        return -compare_coordinates(b, a)
    if not isinstance(b, AlgebraicNumber):
        if _rational_is(a, b):
            return 0
        while a.lo <= b <= a.hi:
            a = a.bisect()
        return -1 if a.hi < b else 1
    if _same_algebraic(a, b):
        return 0
    while not (a.hi < b.lo or b.hi < a.lo):
        a, b = a.bisect(), b.bisect()
    return -1 if a.hi < b.lo else 1


def merge_roots(groups: Iterable[Iterable[Coordinate]]) -> list[Coordinate]:
    """Sorted distinct union of several root lists."""
    everything = [as_coordinate(root) for group in groups for root in group]
    everything.sort(key=functools.cmp_to_key(compare_coordinates))
    merged: list[Coordinate] = []
    for root in everything:
        if not merged or compare_coordinates(merged[-1], root) != 0:
            merged.append(root)
    return merged


def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """A short rational strictly inside ``(lo, hi)``: 0, else an integer, else the midpoint."""
    if lo < 0 < hi:
        return Fraction(0)
    if hi <= 0:
        candidate = Fraction(math.ceil(hi) - 1)
        if candidate > lo:
            return candidate
    else:
        candidate = Fraction(math.floor(lo) + 1)
        if candidate < hi:
            return candidate
    return (lo + hi) / 2


def rational_between(a: Coordinate, b: Coordinate) -> Fraction:
    """Rational strictly between ``a < b``."""
    a, b = as_coordinate(a), as_coordinate(b)
    while bounds(a)[1] >= bounds(b)[0]:
        if isinstance(a, AlgebraicNumber):
            a = a.bisect()
        if isinstance(b, AlgebraicNumber):
            b = b.bisect()
    return _simplest_between(bounds(a)[1], bounds(b)[0])


def rational_below(a: Coordinate) -> Fraction:
    return Fraction(math.floor(bounds(as_coordinate(a))[0]) - 1)


def rational_above(a: Coordinate) -> Fraction:
    return Fraction(math.ceil(bounds(as_coordinate(a))[1]) + 1)


# ---------------------------------------------------------------------------
# Interval evaluation and exact signs
# ---------------------------------------------------------------------------

Interval = tuple[Fraction, Fraction]


def _interval_power(box: Interval, exp: int) -> Interval:
    lo, hi = box
    a, b = lo**exp, hi**exp
    if exp % 2 == 0 and lo < 0 < hi:
        return Fraction(0), max(a, b)
    return min(a, b), max(a, b)


def _interval_mul(x: Interval, y: Interval) -> Interval:
    products = (x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
    return min(products), max(products)


def interval_eval(p: Polynomial, boxes: Mapping[int, Interval]) -> Interval:
    lo_total, hi_total = Fraction(0), Fraction(0)
    for monomial, coeff in p.terms:
        term: Interval = (Fraction(coeff), Fraction(coeff))
        for var, exp in enumerate(monomial):
            if exp:
                term = _interval_mul(term, _interval_power(boxes[var], exp))
        lo_total += term[0]
        hi_total += term[1]
    return lo_total, hi_total


def _specialize_rationals(
    p: Polynomial, point: Sequence[Coordinate], skip: int | None = None
) -> tuple[Polynomial, dict[int, AlgebraicNumber]]:
    """Substitute rational coordinates (positive scaling); return the algebraic rest."""
    algebraic: dict[int, AlgebraicNumber] = {}
    for var in sorted(p.variables() - {skip}):
        coordinate = as_coordinate(point[var])
        if isinstance(coordinate, AlgebraicNumber):
            algebraic[var] = coordinate
        else:
            p = p.specialize(var, coordinate)
    return p, {var: a for var, a in algebraic.items() if var in p.variables()}


def _eliminate(value: Poly, var: int, a: AlgebraicNumber) -> Poly:
    """Resultant of ``value`` and the defining polynomial of ``a`` with respect to ``v{var}``."""
    gen = _symbol(var)
    others = [g for g in value.gens if g != gen]
    reordered = value.reorder(gen, *others)
    degree = len(a.defining_poly) - 1
    defining = Poly.from_dict(
        {(degree - k, *([0] * len(others))): c for k, c in enumerate(a.defining_poly) if c},
        gen,
        *others,
        domain=ZZ,
    )
    result = reordered.resultant(defining)
    if not isinstance(result, Poly):
        return Poly(result, *others, domain=ZZ)
    return result


def _annihilator(q: Polynomial, algebraic: Mapping[int, AlgebraicNumber]) -> Dense:
    """Nonzero polynomial in ``z`` vanishing at the value of ``q`` at the algebraic point."""
    order = sorted(algebraic)
    body = to_sympy(q, order)
    rep = {(0, *exponents): -coeff for exponents, coeff in body.as_dict(native=True).items()}
    rep[(1, *([0] * len(order)))] = rep.get((1, *([0] * len(order))), 0) + 1
    value = Poly.from_dict(rep, _Z, *[_symbol(var) for var in order], domain=ZZ)
    for var in reversed(order):
        value = _eliminate(value, var, algebraic[var])
    dense = tuple(int(c) for c in Poly(value.as_expr(), _Z, domain=ZZ).all_coeffs())
    if not any(dense):
        raise LiftingDegeneracy("value annihilator vanished identically")
    return dense


def _refine_all(algebraic: dict[int, AlgebraicNumber]) -> dict[int, AlgebraicNumber]:
    return {var: a.bisect() for var, a in algebraic.items()}


def _boxes(algebraic: Mapping[int, AlgebraicNumber]) -> dict[int, Interval]:
    return {var: a.interval for var, a in algebraic.items()}


def _vanishes(q: Polynomial, algebraic: dict[int, AlgebraicNumber]) -> bool:
    if len(algebraic) == 1:
        ((var, a),) = algebraic.items()
        common = _gcd_dense(dense_of(q, var), a.defining_poly)
        return len(common) > 1 and _count_roots(common, a.lo, a.hi) > 0
    annihilator = _annihilator(q, algebraic)
    if annihilator[-1] != 0:
        return False
    stripped = list(annihilator)
    while stripped[-1] == 0:
        stripped.pop()
    if len(stripped) == 1:
        return True
    constant = abs(stripped[-1])
    delta = Fraction(constant, constant + max(abs(c) for c in stripped[:-1]))
    while True:
        lo, hi = interval_eval(q, _boxes(algebraic))
        if -delta < lo and hi < delta:
            return True
        if lo > 0 or hi < 0:
            return False
        algebraic = _refine_all(algebraic)


def sign_at(p: Polynomial, point: Sequence[Coordinate]) -> int:
    """Exact sign of ``p`` at ``point`` (indexed by variable)."""
    q, algebraic = _specialize_rationals(p, point)
    if q.is_constant:
        return _sign(q.constant_value)
    for _ in range(QUICK_SIGN_ROUNDS):
        lo, hi = interval_eval(q, _boxes(algebraic))
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        algebraic = _refine_all(algebraic)
    if _vanishes(q, algebraic):
        return 0
    while True:
        lo, hi = interval_eval(q, _boxes(algebraic))
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        algebraic = _refine_all(algebraic)


def real_roots_at(p: Polynomial, var: int, point: Sequence[Coordinate]) -> list[Coordinate] | None:
    """Real roots in ``var`` of ``p`` with the other variables at ``point``.

    Returns ``None`` when ``p`` vanishes identically over the point.
    """
    q, algebraic = _specialize_rationals(p, point, skip=var)
    if q.is_zero:
        return None
    if not algebraic:
        if var not in q.variables():
            return []
        return [as_coordinate(root) for root in isolate_dense(dense_of(q, var)).roots]
    coeffs = q.coefficients_in(var)
    surviving = [k for k, coeff in enumerate(coeffs) if not coeff.is_zero and sign_at(coeff, point) != 0]
    if not surviving:
        return None
    if surviving == [0]:
        return []
    x = Polynomial.variable(q.nvars, var)
    trimmed = Polynomial(q.nvars)
    for k in surviving:
        trimmed = trimmed + coeffs[k] * x**k
    order = sorted(algebraic)
    value = to_sympy(trimmed, [var, *order])
    for other in reversed(order):
        value = _eliminate(value, other, algebraic[other])
    dense = tuple(int(c) for c in Poly(value.as_expr(), _symbol(var), domain=ZZ).all_coeffs())
    if not any(dense):
        raise LiftingDegeneracy(f"candidate polynomial in variable {var} vanished identically")
    roots: list[Coordinate] = []
    for candidate in isolate_dense(dense).roots:
        extended = list(point)[:var] + [None] * max(0, var - len(point))
        extended.append(as_coordinate(candidate))
        if sign_at(trimmed, extended) == 0:
            roots.append(as_coordinate(candidate))
    return roots

