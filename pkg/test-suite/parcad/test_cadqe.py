"""CAD construction and quantifier elimination against hand-worked cases and naive oracles."""

import unittest
from fractions import Fraction
from pathlib import Path

from hypothesis import given, settings
from hypothesis import strategies as st

from parcad.cadqe import (
    Cell,
    CellKind,
    Deadline,
    base_decompose,
    build_cad,
    evaluate_and_propagate,
    lift,
    project,
    qe,
    solution_formula,
)
from parcad.errors import ClauseTimeout, ResourceLimit
from parcad.expgen import GeneratorParams, formulas_agree, gen_formula, sample_points
from parcad.formula import (
    FALSE,
    TRUE,
    Atom,
    Polynomial,
    PrenexFormula,
    Quantifier,
    Relation,
    evaluate,
    iter_atoms,
    map_atoms,
    parse_formula,
)
from parcad.polyarith import compare_coordinates, irreducible_factors, sign_at, sturm_isolate

import oracles

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def fixture(name: str) -> PrenexFormula:
    return parse_formula((FIXTURES / name).read_text(encoding="utf-8"))


def poly2(terms: dict) -> Polynomial:
    return Polynomial.from_dict(2, terms)


def univariate(coeffs: list[int]) -> Polynomial:
    return Polynomial.from_dict(1, {(k,): c for k, c in enumerate(coeffs)})


def existential(f: PrenexFormula) -> PrenexFormula:
    block = tuple((Quantifier.EXISTS, var) for _, var in f.block)
    return PrenexFormula(f.variables, block, f.free_vars, f.matrix)


def closed_truth(f: PrenexFormula) -> bool:
    formula = qe(f).formula
    assert formula in (TRUE, FALSE)
    return formula == TRUE


CIRCLE_LEVELS = poly2({(2, 0): 1, (0, 2): 1, (0, 0): -1})

bivariate = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)), st.integers(-5, 5).filter(bool), min_size=1, max_size=4
).map(poly2).filter(lambda p: p.degree(1) >= 1)


class ProjectTest(unittest.TestCase):
    def test_circle_discriminant(self) -> None:
        projection = project([CIRCLE_LEVELS], 2)

        self.assertEqual(projection.levels[1], (CIRCLE_LEVELS,))
        self.assertEqual(set(projection.levels[0]), {poly2({(1, 0): 1, (0, 0): -1}), poly2({(1, 0): 1, (0, 0): 1})})

    def test_linear_coefficient(self) -> None:
        projection = project([poly2({(0, 1): 1, (1, 0): -1})], 2)

        self.assertEqual(projection.levels[0], (poly2({(1, 0): 1}),))

    def test_levels_only_use_their_variables(self) -> None:
        f = fixture("quadratic.pf")
        projection = build_cad(f).projection

        for level, polys in enumerate(projection.levels, start=1):
            for p in polys:
                self.assertEqual(max(p.variables()), level - 1)

    @settings(max_examples=40, deadline=None)
    @given(p=bivariate, q=bivariate)
    def test_resultant_factors_reach_level_one(self, p: Polynomial, q: Polynomial) -> None:
        res = oracles.sylvester_resultant(p, q, 1)
        if res.is_zero:
            return
        level1 = set(project([p, q], 2).levels[0])

        for factor in irreducible_factors(res):
            self.assertIn(factor, level1)


class BaseDecomposeTest(unittest.TestCase):
    def test_sqrt_two(self) -> None:
        cells = base_decompose([univariate([-2, 0, 1])])

        self.assertEqual([cell.kind for cell in cells], [CellKind.SECTOR, CellKind.SECTION] * 2 + [CellKind.SECTOR])
        signs = [sign_at(univariate([-2, 0, 1]), cell.sample_point) for cell in cells]
        self.assertEqual(signs, [1, 0, -1, 0, 1])

    def test_empty_basis_is_the_whole_line(self) -> None:
        cells = base_decompose([])

        self.assertEqual(len(cells), 1)
        self.assertEqual(cells[0].sample_point, (Fraction(0),))
        self.assertEqual(cells[0].index_path, (1,))

    def test_two_rational_roots(self) -> None:
        cells = base_decompose([univariate([0, 1]), univariate([-1, 1])])

        self.assertEqual([cell.index_path for cell in cells], [(1,), (2,), (3,), (4,), (5,)])
        self.assertEqual(cells[1].sample_point, (Fraction(0),))
        self.assertEqual(cells[2].sample_point, (Fraction(1, 2),))
        self.assertEqual(cells[3].sample_point, (Fraction(1),))
        self.assertLess(cells[0].sample_point[0], 0)
        self.assertGreater(cells[4].sample_point[0], 1)


class LiftTest(unittest.TestCase):
    def test_sector_over_zero(self) -> None:
        base = Cell(1, (3,), CellKind.SECTOR, (Fraction(0),))
        p = poly2({(0, 2): 1, (1, 0): 1, (0, 0): -1})

        stack = lift(base, [p])

        self.assertEqual(len(stack.cells), 5)
        sections = [cell for cell in stack.cells if cell.kind is CellKind.SECTION]
        self.assertEqual(compare_coordinates(sections[0].sample_point[1], Fraction(-1)), 0)
        self.assertEqual(compare_coordinates(sections[1].sample_point[1], Fraction(1)), 0)
        self.assertEqual([cell.index_path for cell in stack.cells], [(3, position) for position in range(1, 6)])

    def test_outside_the_circle(self) -> None:
        base = Cell(1, (5,), CellKind.SECTOR, (Fraction(2),))

        stack = lift(base, [CIRCLE_LEVELS])

        self.assertEqual(len(stack.cells), 1)
        self.assertEqual(stack.cells[0].signs[CIRCLE_LEVELS], 1)

    def test_over_an_algebraic_section(self) -> None:
        root = sturm_isolate(univariate([-2, 0, 1])).roots[1]
        base = Cell(1, (4,), CellKind.SECTION, (root,))
        diagonal = poly2({(0, 1): 1, (1, 0): -1})

        stack = lift(base, [diagonal])

        self.assertEqual([cell.kind for cell in stack.cells], [CellKind.SECTOR, CellKind.SECTION, CellKind.SECTOR])
        section = stack.cells[1]
        self.assertEqual(sign_at(diagonal, section.sample_point), 0)
        self.assertEqual(section.signs[diagonal], 0)

    def test_vanishing_polynomial_is_counted(self) -> None:
        base = Cell(1, (2,), CellKind.SECTION, (Fraction(1),))
        p = poly2({(1, 1): 1, (0, 1): -1})

        stack = lift(base, [p])

        self.assertEqual(stack.vanishing, 1)
        self.assertEqual(len(stack.cells), 1)
        self.assertEqual(stack.cells[0].signs[p], 0)


class BuildCadTest(unittest.TestCase):
    def test_single_quadratic(self) -> None:
        cad = build_cad(parse_formula("(E x0)[x0^2 - 2 = 0]"))

        self.assertEqual(cad.stats.cells_per_level, [5])
        self.assertEqual(cad.stats.total_cells, 5)

    def test_circle(self) -> None:
        cad = build_cad(fixture("circle.pf"))

        self.assertEqual(cad.stats.cells_per_level, [5, 13])
        self.assertEqual(cad.stats.total_cells, 18)
        self.assertEqual([len(cad.stacks[(i,)]) for i in range(1, 6)], [1, 3, 5, 3, 1])

    def test_constant_matrix_has_no_levels(self) -> None:
        cad = build_cad(parse_formula("(E x)[TRUE]"))

        self.assertEqual(cad.stats.cells_per_level, [])
        self.assertEqual(cad.stats.total_cells, 0)

    def test_cells_are_cylindrical_and_sign_invariant(self) -> None:
        cad = build_cad(fixture("circle.pf"))

        for path, cell in cad.cells.items():
            if not path:
                continue
            self.assertIn(path[:-1], cad.cells)
            self.assertIn(path, cad.stacks[path[:-1]])
            self.assertEqual(cell.kind is CellKind.SECTOR, path[-1] % 2 == 1)
            for p in cad.projection.levels[cell.level - 1]:
                self.assertEqual(cell.signs[p], sign_at(p, cell.sample_point))
        for children in cad.stacks.values():
            self.assertEqual(len(children) % 2, 1)

    def test_cell_cap(self) -> None:
        with self.assertRaises(ResourceLimit):
            build_cad(fixture("circle.pf"), cell_cap=3)

    def test_expired_deadline(self) -> None:
        with self.assertRaises(ClauseTimeout):
            build_cad(fixture("circle.pf"), deadline=Deadline(-1))


class PropagateTest(unittest.TestCase):
    def test_existential_root(self) -> None:
        f = parse_formula("(E x0)[x0^2 - 2 = 0]")

        self.assertTrue(evaluate_and_propagate(build_cad(f), f).root.truth)

    def test_universal_root(self) -> None:
        f = parse_formula("(A x0)[x0^2 - 2 = 0]")

        self.assertFalse(evaluate_and_propagate(build_cad(f), f).root.truth)

    def test_circle_shadow(self) -> None:
        f = fixture("circle.pf")
        cad = evaluate_and_propagate(build_cad(f), f)

        self.assertEqual([cell.truth for cell in cad.level(1)], [False, True, True, True, False])

    def test_order_mismatch(self) -> None:
        with self.assertRaises(ValueError):
            evaluate_and_propagate(build_cad(fixture("circle.pf")), parse_formula("(E x0)[x0^2 - 2 = 0]"))


class SolutionFormulaTest(unittest.TestCase):
    def test_circle(self) -> None:
        f = fixture("circle.pf")
        formula = solution_formula(evaluate_and_propagate(build_cad(f), f), 1)

        x0 = Polynomial.variable(2, f.names.index("x0"))
        expected = Atom(x0 * x0 - 1, Relation.LE)
        self.assertTrue(formulas_agree(formula, expected, 2))

    def test_closed_false(self) -> None:
        f = parse_formula("(E x0)[x0^2 + 1 = 0]")

        self.assertEqual(solution_formula(evaluate_and_propagate(build_cad(f), f), 0), FALSE)

    def test_hyperbola(self) -> None:
        f = fixture("hyperbola.pf")
        formula = solution_formula(evaluate_and_propagate(build_cad(f), f), 1)

        a = f.names.index("a")
        self.assertTrue(formulas_agree(formula, Atom(Polynomial.variable(2, a), Relation.NE), 2))


class QeTest(unittest.TestCase):
    def test_quadratic_discriminant(self) -> None:
        f = fixture("quadratic.pf")
        result = qe(f)

        b, c = (Polynomial.variable(3, f.names.index(name)) for name in ("b", "c"))
        self.assertFalse(result.extended)
        self.assertTrue(formulas_agree(result.formula, Atom(b * b - c * 4, Relation.GE), 3))

    def test_positive_definite(self) -> None:
        self.assertEqual(qe(fixture("positive.pf")).formula, TRUE)

    def test_linear_sign(self) -> None:
        f = fixture("linear_sign.pf")
        a = Polynomial.variable(2, f.names.index("a"))

        self.assertTrue(formulas_agree(qe(f).formula, Atom(a, Relation.LT), 2))

    def test_stats_and_truth_table(self) -> None:
        result = qe(fixture("circle.pf"))

        self.assertEqual(result.stats.cells_per_level, [5, 13])
        self.assertEqual([row.truth for row in result.truth_table], [False, True, True, True, False])
        self.assertIn("total", result.stats.per_phase_time)
        # x0 is free and comes first even though x1 is declared first
        self.assertEqual(result.order, (1, 0))

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**32),
        clauses=st.integers(1, 2),
        polys=st.integers(1, 2),
        flip=st.booleans(),
    )
    def test_closed_one_variable_matches_sampling(self, seed: int, clauses: int, polys: int, flip: bool) -> None:
        f = gen_formula(
            GeneratorParams(
                n_vars=1,
                clauses=clauses,
                polys_per_clause=polys,
                max_terms=3,
                max_exponent=3,
                seed=seed,
                relation="mixed",
            )
        )
        f = existential(f) if flip else f

        self.assertEqual(closed_truth(f), oracles.naive_closed_truth_1d(f))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32), flip=st.booleans())
    def test_closed_two_variables_agree_with_witnesses(self, seed: int, flip: bool) -> None:
        f = gen_formula(
            GeneratorParams(
                n_vars=2, clauses=1, polys_per_clause=2, max_terms=2, max_exponent=2, seed=seed, relation="mixed"
            )
        )
        f = existential(f) if flip else f
        if len(f.matrix_variables()) != 2:
            return
        proven = oracles.witness_2d(f)

        if proven is not None:
            self.assertEqual(closed_truth(f), proven)

    @settings(max_examples=8, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32))
    def test_one_free_variable_solution_is_equivalent(self, seed: int) -> None:
        f = gen_formula(
            GeneratorParams(
                n_vars=2,
                clauses=1,
                polys_per_clause=2,
                max_terms=2,
                max_exponent=2,
                seed=seed,
                relation="mixed",
                free_vars=1,
            )
        )
        result = qe(f)
        if result.extended:
            return
        free = f.free_vars[0].index
        boundaries = [atom.poly for atom in iter_atoms(result.formula)]
        points = [
            x for x in sample_points(boundaries, free) if (2 * x).denominator == 1 or 10 % x.denominator != 0
        ]

        for x in points:
            point = [Fraction(0)] * f.nvars
            point[free] = x
            expected = evaluate(result.formula, lambda atom: oracles.atom_at(atom, point))
            specialized = map_atoms(f.matrix, lambda atom: Atom(atom.poly.specialize(free, x), atom.relation))
            self.assertEqual(oracles.naive_closed_truth_1d(f.restricted(specialized)), expected, msg=f"at {x}")


if __name__ == "__main__":
    unittest.main()
