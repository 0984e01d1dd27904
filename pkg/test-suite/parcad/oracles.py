"""Slow, independent reference computations the tests compare the engine against."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import sympy

from parcad.formula import Atom, Polynomial, PrenexFormula, Quantifier, evaluate
from parcad.polyarith import AlgebraicNumber, sign_at


def symbols(nvars: int) -> list[sympy.Symbol]:
    return [sympy.Symbol(f"s{index}") for index in range(nvars)]


def as_expr(p: Polynomial) -> sympy.Expr:
    gens = symbols(p.nvars)
    total = sympy.Integer(0)
    for monomial, coeff in p.terms:
        term = sympy.Integer(coeff)
        for var, exp in enumerate(monomial):
            term *= gens[var] ** exp
        total += term
    return total


def from_expr(expr: sympy.Expr, nvars: int) -> Polynomial:
    expanded = sympy.expand(expr)
    if expanded == 0:
        return Polynomial(nvars)
    poly = sympy.Poly(expanded, *symbols(nvars))
    return Polynomial.from_dict(nvars, {monomial: int(coeff) for monomial, coeff in poly.terms()})


def sylvester_resultant(p: Polynomial, q: Polynomial, var: int) -> Polynomial:
    """Determinant of the Sylvester matrix, expanded by brute force."""
    f = [as_expr(c) for c in reversed(p.coefficients_in(var))]
    g = [as_expr(c) for c in reversed(q.coefficients_in(var))]
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    rows = []
    for shift in range(n):
        rows.append([0] * shift + f + [0] * (size - m - 1 - shift))
    for shift in range(m):
        rows.append([0] * shift + g + [0] * (size - n - 1 - shift))
    return from_expr(sympy.Matrix(rows).det(method="berkowitz"), p.nvars)


def grid_root_count(p: Polynomial, *, step: Fraction = Fraction(1, 8), radius: int = 64) -> int:
    """Distinct real roots of a univariate polynomial whose roots lie on or away from a fine grid.

    Zeros on grid points are counted directly; each sign change between
    consecutive nonzero grid values counts one more root.
    """
    count = 0
    previous = 0
    x = Fraction(-radius)
    while x <= radius:
        value = p.evaluate([x] * p.nvars)
        sign = (value > 0) - (value < 0)
        if sign == 0:
            count += 1
        elif previous and sign != previous:
            count += 1
        if sign:
            previous = sign
        elif previous:
            previous = 0
        x += step
    return count


def sympy_roots(polys: Sequence[Polynomial], var: int) -> list[AlgebraicNumber | Fraction]:
    """Sorted distinct real roots of univariate polynomials, isolated by sympy."""
    gen = symbols(max(p.nvars for p in polys))[var]
    product = sympy.Integer(1)
    for p in polys:
        if var in p.variables():
            product *= as_expr(p)
    if product == 1:
        return []
    poly = sympy.Poly(product, gen).sqf_part()
    dense = tuple(int(c) for c in poly.all_coeffs())
    roots: list[AlgebraicNumber | Fraction] = []
    for (lo, hi), _ in poly.intervals():
        lo, hi = Fraction(int(lo.p), int(lo.q)), Fraction(int(hi.p), int(hi.q))
        roots.append(lo if lo == hi else AlgebraicNumber(dense, lo, hi))
    return roots


def _upper(root: AlgebraicNumber | Fraction) -> Fraction:
    return root.hi if isinstance(root, AlgebraicNumber) else root


def _lower(root: AlgebraicNumber | Fraction) -> Fraction:
    return root.lo if isinstance(root, AlgebraicNumber) else root


def line_points(polys: Sequence[Polynomial], var: int) -> list[AlgebraicNumber | Fraction]:
    """One point in every sign-invariant piece of the line for the given polynomials."""
    roots = sympy_roots(polys, var)
    if not roots:
        return [Fraction(0)]
    points: list[AlgebraicNumber | Fraction] = [_lower(roots[0]) - 1]
    for index, root in enumerate(roots):
        points.append(root)
        if index + 1 < len(roots):
            points.append((_upper(root) + _lower(roots[index + 1])) / 2)
    points.append(_upper(roots[-1]) + 1)
    return points


def holds_at(f: PrenexFormula, point: Sequence[AlgebraicNumber | Fraction]) -> bool:
    return evaluate(f.matrix, lambda atom: atom.relation.holds(sign_at(atom.poly, point)))


def naive_closed_truth_1d(f: PrenexFormula) -> bool:
    """Truth of a closed formula in one quantified variable, by exhaustive sign-invariant sampling."""
    used = sorted(f.matrix_variables())
    if not used:
        return holds_at(f, [Fraction(0)] * f.nvars)
    if len(used) != 1 or f.free_vars:
        raise ValueError("naive 1-D oracle needs one quantified variable and no free ones")
    (var,) = used
    quantifier = next(q for q, v in f.block if v.index == var)
    truths = []
    for x in line_points([atom.poly for atom in f.atoms()], var):
        point: list[AlgebraicNumber | Fraction] = [Fraction(0)] * f.nvars
        point[var] = x
        truths.append(holds_at(f, point))
    return any(truths) if quantifier is Quantifier.EXISTS else all(truths)


def witness_2d(f: PrenexFormula, *, radius: int = 4, step: Fraction = Fraction(1, 2)) -> bool | None:
    """One-sided 2-D check for homogeneous prefixes.

    For an existential prefix a satisfying point proves the formula true; for
    a universal prefix a falsifying point proves it false. The outer variable
    runs over a rational grid, the inner one over an exact sign-invariant
    sampling. Returns the proven truth value or ``None`` when nothing was found.
    """
    quantifiers = {q for q, _ in f.block}
    used = sorted(f.matrix_variables())
    if len(quantifiers) != 1 or len(used) != 2 or f.free_vars:
        raise ValueError("witness_2d needs two variables under one quantifier kind")
    (quantifier,) = quantifiers
    outer, inner = used
    seeking = quantifier is Quantifier.EXISTS
    x = Fraction(-radius)
    while x <= radius:
        specialized = [atom.poly.specialize(outer, x) for atom in f.atoms()]
        varying = [p for p in specialized if inner in p.variables()]
        for y in line_points(varying, inner) if varying else [Fraction(0)]:
            point: list[AlgebraicNumber | Fraction] = [Fraction(0)] * f.nvars
            point[outer], point[inner] = x, y
            if holds_at(f, point) == seeking:
                return seeking
        x += step
    return None


def atom_at(atom: Atom, point: Sequence[Fraction]) -> bool:
    value = atom.poly.evaluate(point)
    return atom.relation.holds((value > 0) - (value < 0))
