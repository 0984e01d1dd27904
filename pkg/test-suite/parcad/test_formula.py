"""Parser, printer and formula helpers."""

import unittest
from fractions import Fraction
from pathlib import Path

from hypothesis import given, settings
from hypothesis import strategies as st

from parcad.errors import FormulaSyntaxError, UndeclaredVariable
from parcad.expgen import GeneratorParams, gen_formula
from parcad.formula import (
    TRUE,
    And,
    Atom,
    Not,
    Or,
    Polynomial,
    Quantifier,
    Relation,
    evaluate,
    negate_atom,
    parse_formula,
    print_formula,
)

import oracles

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


class ParseTest(unittest.TestCase):
    def test_smallest_formula(self) -> None:
        f = parse_formula("(A x0)[x0^2 >= 0]")

        self.assertEqual([(q, var.name) for q, var in f.block], [(Quantifier.FORALL, "x0")])
        self.assertEqual(f.free_vars, ())
        self.assertEqual(f.matrix, Atom(Polynomial.from_dict(1, {(2,): 1}), Relation.GE))

    def test_sharing_fixture_shape(self) -> None:
        f = parse_formula((FIXTURES / "sharing_s3.pf").read_text(encoding="utf-8"))

        self.assertEqual(f.nvars, 6)
        self.assertEqual([var.name for _, var in f.block], ["x0", "x1", "x2", "x3"])
        self.assertEqual([var.name for var in f.free_vars], ["x4", "x5"])
        self.assertIsInstance(f.matrix, And)
        self.assertEqual(len(f.matrix.args), 2)
        self.assertTrue(all(isinstance(clause, Or) for clause in f.matrix.args))

    def test_missing_operand_is_a_syntax_error(self) -> None:
        with self.assertRaises(FormulaSyntaxError) as caught:
            parse_formula("(E x0)[x0 < ]")

        self.assertGreater(caught.exception.position, 0)

    def test_declared_order_rejects_unknown_names(self) -> None:
        with self.assertRaises(UndeclaredVariable):
            parse_formula("{x, y} (E x)[x + z = 0]")

    def test_declaration_fixes_order(self) -> None:
        f = parse_formula("{b, a} (E x)[a x + b = 0]", variables=["x", "a", "b"])

        self.assertEqual(f.names, ("x", "a", "b"))

    def test_rational_coefficients_are_cleared(self) -> None:
        f = parse_formula("(E x)[1/2 x - 3/4 = 0]")

        self.assertEqual(f.matrix.poly, Polynomial.from_dict(1, {(1,): 2, (0,): -3}))

    def test_nested_negated_quantifier_is_prenexed_by_duality(self) -> None:
        f = parse_formula("~[(A x)[x > y]]")

        self.assertEqual([q for q, _ in f.block], [Quantifier.EXISTS])
        self.assertEqual(f.matrix, Not(Atom(Polynomial.from_dict(2, {(1, 0): 1, (0, 1): -1}), Relation.GT)))

    def test_alternative_spellings(self) -> None:
        ascii_form = parse_formula("(E x)[x^2 - 2 /= 0 /\\ x >= 1]")
        unicode_form = parse_formula("∃x[x^2 - 2 ≠ 0 ∧ x ≥ 1]")

        self.assertEqual(ascii_form, unicode_form)


class PrintTest(unittest.TestCase):
    def test_true_matrix(self) -> None:
        self.assertEqual(print_formula(parse_formula("TRUE")), "[ TRUE ]")

    def test_negative_coefficient_round_trip(self) -> None:
        f = parse_formula("(E x0)(E x1)[x1 - x0 > 0]")
        text = print_formula(f)

        self.assertIn("(-1) x1^1", text)
        self.assertEqual(parse_formula(text), f)

    def test_sharing_fixture_round_trip(self) -> None:
        f = parse_formula((FIXTURES / "sharing_s3.pf").read_text(encoding="utf-8"))

        self.assertEqual(parse_formula(print_formula(f)), f)

    def test_declaration_printed_only_when_needed(self) -> None:
        plain = parse_formula("(E x)[x + a = 0]")
        reordered = parse_formula("{a, x} (E x)[x + a = 0]")

        self.assertFalse(print_formula(plain).startswith("{"))
        self.assertTrue(print_formula(reordered).startswith("{a, x}"))
        self.assertEqual(parse_formula(print_formula(reordered)), reordered)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**64 - 1),
        n_vars=st.integers(min_value=1, max_value=4),
        clauses=st.integers(min_value=1, max_value=4),
        relation=st.sampled_from(["=", "mixed"]),
    )
    def test_generated_formulas_round_trip(self, seed: int, n_vars: int, clauses: int, relation: str) -> None:
        params = GeneratorParams(
            n_vars=n_vars,
            clauses=clauses,
            polys_per_clause=3,
            max_terms=4,
            max_exponent=3,
            seed=seed,
            relation=relation,
        )
        f = gen_formula(params)

        self.assertEqual(parse_formula(print_formula(f), variables=f.names), f)


class AtomTest(unittest.TestCase):
    def setUp(self) -> None:
        self.p = Polynomial.from_dict(2, {(2, 0): 1, (0, 1): -1})

    def test_negation_complements_the_relation(self) -> None:
        self.assertEqual(negate_atom(Atom(self.p, Relation.EQ)).relation, Relation.NE)
        self.assertEqual(negate_atom(Atom(self.p, Relation.LT)).relation, Relation.GE)

    def test_negation_is_an_involution(self) -> None:
        for relation in Relation:
            atom = Atom(self.p, relation)
            self.assertEqual(negate_atom(negate_atom(atom)), atom)

    def test_canonical_form_mirrors_relation(self) -> None:
        atom = Atom(Polynomial.from_dict(1, {(1,): -2, (0,): 4}), Relation.LT)

        self.assertEqual(atom.poly, Polynomial.from_dict(1, {(1,): 1, (0,): -2}))
        self.assertEqual(atom.relation, Relation.GT)

    @settings(max_examples=40, deadline=None)
    @given(
        x=st.fractions(min_value=-5, max_value=5, max_denominator=7),
        y=st.fractions(min_value=-5, max_value=5, max_denominator=7),
        relation=st.sampled_from(list(Relation)),
    )
    def test_negation_flips_truth_everywhere(self, x: Fraction, y: Fraction, relation: Relation) -> None:
        atom = Atom(self.p, relation)

        self.assertNotEqual(oracles.atom_at(atom, [x, y]), oracles.atom_at(negate_atom(atom), [x, y]))


class EvaluateTest(unittest.TestCase):
    def test_boolean_structure(self) -> None:
        a = Atom(Polynomial.from_dict(1, {(1,): 1}), Relation.GT)
        b = Atom(Polynomial.from_dict(1, {(1,): 1, (0,): -1}), Relation.LT)
        f = Or((And((a, b)), Not(a)))

        self.assertTrue(evaluate(f, lambda atom: atom is not a))
        self.assertFalse(evaluate(f, lambda atom: atom is a))
        self.assertTrue(evaluate(TRUE, lambda atom: False))


if __name__ == "__main__":
    unittest.main()
