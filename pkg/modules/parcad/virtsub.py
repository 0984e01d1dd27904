"""Linear virtual substitution with constant coefficients.

An equation ``c*x + r = 0`` with an integer ``c != 0`` sitting as a top-level
conjunct of the matrix fixes ``x = -r/c`` everywhere the matrix is true, so
``x`` can be replaced by that term in every other atom without changing the
formula's meaning. The substitutor equations themselves are kept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    Formula,
    Polynomial,
    PrenexFormula,
    Relation,
    format_atom,
    map_atoms,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SubstitutionStep:
    var: int
    substitutor: Atom
    numerator: Polynomial
    denominator: int


@dataclass(frozen=True, slots=True)
class SubstitutionPlan:
    steps: tuple[SubstitutionStep, ...] = ()
    # positions of top-level conjuncts that changed
    applied_to: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.steps)


def _conjuncts(f: PrenexFormula) -> tuple[Formula, ...]:
    return f.matrix.args if isinstance(f.matrix, And) else (f.matrix,)


def _solve_linear(atom: Atom, var: int) -> tuple[Polynomial, int] | None:
    """``(num, den)`` with ``den > 0`` and ``var = num/den`` on the zero set of ``atom``."""
    if atom.relation is not Relation.EQ or atom.poly.degree(var) != 1:
        return None
    rest, coefficient = atom.poly.coefficients_in(var)
    if not coefficient.is_constant:
        return None
    den = coefficient.constant_value
    num = -rest
    if den < 0:
        num, den = rest, -den
    return num, den


def find_substitutors(f: PrenexFormula) -> SubstitutionPlan:
    """Linear substitutors in a deterministic order, with the conjunct positions they rewrite."""
    names = f.names
    conjuncts = _conjuncts(f)
    candidates = []
    for atom in conjuncts:
        if not isinstance(atom, Atom):
            continue
        for var in sorted(atom.poly.variables()):
            solution = _solve_linear(atom, var)
            if solution is not None:
                num, den = solution
                candidates.append((var, den, format_atom(atom, names), atom, num))
    candidates.sort(key=lambda item: item[:3])

    steps: list[SubstitutionStep] = []
    used_atoms: list[Atom] = []
    for var, den, _, atom, num in candidates:
        if any(step.var == var for step in steps) or atom in used_atoms:
            continue
        if num.variables() & {step.var for step in steps}:
            continue
        steps.append(SubstitutionStep(var, atom, num, den))
        used_atoms.append(atom)
    plan = SubstitutionPlan(tuple(steps))
    if not plan:
        return plan
    _, changed = _rewrite(conjuncts, plan)
    return SubstitutionPlan(plan.steps, changed)


def vsubst_atom(target: Atom, var: int, num: Polynomial, den: int) -> Atom:
    if den == 0:
        raise ValueError("substitution denominator must be nonzero")
    relation = target.relation
    if den < 0 and target.poly.degree(var) % 2:
        relation = relation.mirror()
    return Atom(target.poly.compose(var, num, den), relation)


def _constant_truth(atom: Atom) -> Formula:
    value = atom.poly.constant_value
    sign = (value > 0) - (value < 0)
    return TRUE if atom.relation.holds(sign) else FALSE


def _substitute(atom: Atom, plan: SubstitutionPlan) -> Formula:
    if any(atom == step.substitutor for step in plan.steps):
        return atom
    current = atom
    for step in plan.steps:
        if step.var not in current.poly.variables():
            continue
        candidate = vsubst_atom(current, step.var, step.numerator, step.denominator)
        # Only substitutions that shrink the atom's variable set are taken.
        if len(candidate.poly.variables()) < len(current.poly.variables()):
            current = candidate
    if current.poly.is_constant:
        return _constant_truth(current)
    return current


def _rewrite(conjuncts: tuple[Formula, ...], plan: SubstitutionPlan) -> tuple[tuple[Formula, ...], tuple[int, ...]]:
    rewritten = tuple(map_atoms(child, lambda atom: _substitute(atom, plan)) for child in conjuncts)
    changed = tuple(index for index, (old, new) in enumerate(zip(conjuncts, rewritten)) if old != new)
    return rewritten, changed


def apply_plan(f: PrenexFormula, plan: SubstitutionPlan | None = None) -> PrenexFormula:
    plan = find_substitutors(f) if plan is None else plan
    if not plan:
        return f
    rewritten, changed = _rewrite(_conjuncts(f), plan)
    if not changed:
        return f
    logger.debug("virtual substitution of %d variable(s) changed conjuncts %s", len(plan.steps), changed)
    matrix = rewritten[0] if len(rewritten) == 1 else And(rewritten)
    return f.with_matrix(matrix)
