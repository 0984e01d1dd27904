"""Negation normal form, miniscoping and clause separation.

Separation is sound for every quantifier prefix: the CNF clauses are grouped
into connected components of the "shares an existentially quantified
variable" relation, and each component is re-prenexed with exactly the
quantifiers of the variables it uses (universal quantifiers distribute over
conjunction, vacuous ones are dropped). The disjunctive mode is the dual
(DNF terms grouped by shared universal variables).
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

from .config import DEFAULT_CLAUSE_BUDGET
from .errors import ClauseExplosion, InvalidK
from .formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    FalseConst,
    Formula,
    Not,
    Or,
    PrenexFormula,
    Quantified,
    Quantifier,
    TrueConst,
    format_formula,
    formula_variables,
    free_variables,
    negate_atom,
    print_formula,
)

logger = logging.getLogger(__name__)


class Combine(enum.Enum):
    CONJUNCTIVE = "conjunctive"
    DISJUNCTIVE = "disjunctive"


@dataclass(frozen=True, slots=True)
class Trace:
    """Snapshots of the preprocessing chain: input, NNF, substituted, clause form."""

    original: PrenexFormula
    nnf: PrenexFormula
    substituted: PrenexFormula
    clause_form: PrenexFormula


@dataclass(frozen=True, slots=True)
class Decomposition:
    clauses: tuple[PrenexFormula, ...]
    combine: Combine
    trace: Trace


@dataclass(frozen=True, slots=True)
class SharingReport:
    pair_factors: tuple[tuple[int, ...], ...]
    max_factor: int
    per_clause_vars: tuple[frozenset[int], ...]


def _flatten(kind: type, children: Sequence[Formula]) -> tuple[Formula, ...]:
    flat: list[Formula] = []
    for child in children:
        flat.extend(child.args if isinstance(child, kind) else (child,))
    return tuple(flat)


def nnf_formula(f: Formula, negate: bool = False) -> Formula:
    """Push negations to the atoms; quantifiers flip by duality."""
    if isinstance(f, Atom):
        return negate_atom(f) if negate else f
    if isinstance(f, TrueConst):
        return FALSE if negate else TRUE
    if isinstance(f, FalseConst):
        return TRUE if negate else FALSE
    if isinstance(f, Not):
        return nnf_formula(f.arg, not negate)
    if isinstance(f, Quantified):
        quantifier = f.quantifier.dual if negate else f.quantifier
        return Quantified(quantifier, f.var, nnf_formula(f.body, negate))
    children = [nnf_formula(child, negate) for child in f.args]
    kind = And if isinstance(f, And) != negate else Or
    return kind(_flatten(kind, children))


def nnf(f: PrenexFormula) -> PrenexFormula:
    return f.with_matrix(nnf_formula(f.matrix))


def _push(quantifier: Quantifier, var: int, f: Formula) -> Formula:
    if var not in free_variables(f):
        return f
    distributes_over = And if quantifier is Quantifier.FORALL else Or
    if isinstance(f, distributes_over):
        return distributes_over(tuple(_push(quantifier, var, child) for child in f.args))
    if isinstance(f, (And, Or)):
        kind = type(f)
        inside = [child for child in f.args if var in free_variables(child)]
        outside = [child for child in f.args if var not in free_variables(child)]
        if len(inside) == 1:
            scoped = _push(quantifier, var, inside[0])
        else:
            scoped = Quantified(quantifier, var, kind(tuple(inside)))
        if not outside:
            return scoped
        return kind((*outside, scoped))
    if isinstance(f, Quantified) and f.quantifier is quantifier:
        return _push(f.quantifier, f.var, _push(quantifier, var, f.body))
    return Quantified(quantifier, var, f)


def miniscope(f: PrenexFormula) -> Formula:
    """Push each quantifier of ``f`` (innermost first) as deep as it soundly goes."""
    result = f.matrix
    for quantifier, var in reversed(f.block):
        result = _push(quantifier, var.index, result)
    return result


Literal = Formula
Clause = tuple[Literal, ...]


def _normal_form(f: Formula, outer: type, budget: int) -> list[Clause]:
    """Clauses of ``f`` read as an ``outer``-of-inners (``And`` gives CNF, ``Or`` gives DNF)."""
    absorbing, neutral = (FalseConst, TrueConst) if outer is And else (TrueConst, FalseConst)
    if isinstance(f, neutral):
        return []
    if isinstance(f, absorbing):
        return [()]
    if isinstance(f, Atom):
        return [(f,)]
    if isinstance(f, outer):
        clauses: list[Clause] = []
        for child in f.args:
            clauses.extend(_normal_form(child, outer, budget))
            if len(clauses) > budget:
                raise ClauseExplosion(budget, len(clauses))
        return clauses
    if isinstance(f, (And, Or)):
        parts = [_normal_form(child, outer, budget) for child in f.args]
        needed = math.prod(len(part) for part in parts)
        if needed > budget:
            raise ClauseExplosion(budget, needed)
        combined: list[Clause] = [()]
        for part in parts:
            combined = [_merge(left, right) for left in combined for right in part]
        return combined
    raise ValueError("clause normal form needs a negation normal form matrix")


def _merge(left: Clause, right: Clause) -> Clause:
    return left + tuple(literal for literal in right if literal not in left)


def _dedupe(clauses: list[Clause]) -> list[Clause]:
    seen: set[frozenset[Literal]] = set()
    unique = []
    for clause in clauses:
        key = frozenset(clause)
        if key not in seen:
            seen.add(key)
            unique.append(clause)
    return unique


def _clause_formula(clause: Clause, inner: type) -> Formula:
    if not clause:
        return FALSE if inner is Or else TRUE
    return clause[0] if len(clause) == 1 else inner(clause)


def _components(clauses: list[Clause], linking: set[int]) -> list[list[int]]:
    parent = list(range(len(clauses)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for index, clause in enumerate(clauses):
        for var in formula_variables(Or(clause)) if clause else ():
            if var not in linking:
                continue
            if var in owner:
                parent[find(index)] = find(owner[var])
            else:
                owner[var] = index
    groups: dict[int, list[int]] = {}
    for index in range(len(clauses)):
        groups.setdefault(find(index), []).append(index)
    return list(groups.values())


def _ordering_key(f: PrenexFormula) -> tuple:
    used = f.matrix_variables()
    return (min(used, default=f.nvars), len(f.atoms()), print_formula(f))


def _strip(f: Formula) -> Formula:
    """``f`` with every quantifier node replaced by its body."""
    if isinstance(f, Quantified):
        return _strip(f.body)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_strip(child) for child in f.args))
    return f


def _scoped_parts(f: PrenexFormula, outer: type) -> list[Formula]:
    """Top-level ``outer`` operands of the miniscoped matrix, quantifiers stripped."""
    scoped = miniscope(f)
    operands = scoped.args if isinstance(scoped, outer) else (scoped,)
    return [_strip(operand) for operand in operands]


def separate(
    f: PrenexFormula,
    clause_budget: int = DEFAULT_CLAUSE_BUDGET,
    combine: Combine = Combine.CONJUNCTIVE,
) -> Decomposition:
    normal = nnf(f)
    outer, inner = (And, Or) if combine is Combine.CONJUNCTIVE else (Or, And)
    # Quantifiers that do not distribute over the outer connective glue clauses together.
    gluing = Quantifier.EXISTS if combine is Combine.CONJUNCTIVE else Quantifier.FORALL
    linking = {var.index for quantifier, var in normal.block if quantifier is gluing}
    clauses: list[Clause] = []
    groups: list[list[int]] = []
    seen: set[frozenset[Literal]] = set()
    for part in _scoped_parts(normal, outer):
        fresh = [c for c in _dedupe(_normal_form(part, outer, clause_budget)) if frozenset(c) not in seen]
        seen.update(frozenset(c) for c in fresh)
        offset = len(clauses)
        clauses.extend(fresh)
        if len(clauses) > clause_budget:
            raise ClauseExplosion(clause_budget, len(clauses))
        groups.extend([offset + index for index in group] for group in _components(fresh, linking))
    formulas = [_clause_formula(clause, inner) for clause in clauses]
    if formulas:
        clause_matrix: Formula = formulas[0] if len(formulas) == 1 else outer(tuple(formulas))
    else:
        clause_matrix = TRUE if outer is And else FALSE
    clause_form = normal.with_matrix(clause_matrix)
    pieces = []
    for group in groups:
        members = [formulas[index] for index in group]
        matrix = members[0] if len(members) == 1 else outer(tuple(members))
        pieces.append(normal.restricted(matrix))
    if not pieces:
        pieces.append(normal.restricted(clause_matrix))
    pieces.sort(key=_ordering_key)
    logger.debug("separated into %d %s clause(s)", len(pieces), combine.value)
    return Decomposition(tuple(pieces), combine, Trace(f, normal, normal, clause_form))


def sharing_factor(f: PrenexFormula, g: PrenexFormula) -> int:
    return len(f.matrix_variables() & g.matrix_variables())


def separability(f: PrenexFormula, clause_budget: int = DEFAULT_CLAUSE_BUDGET) -> int:
    return len(separate(f, clause_budget).clauses)


def in_separable_class(f: PrenexFormula, clause_budget: int = DEFAULT_CLAUSE_BUDGET) -> bool:
    clauses = separate(f, clause_budget).clauses
    everything = set(range(f.nvars))
    return len(clauses) >= 2 and all(clause.matrix_variables() != everything for clause in clauses)


def in_center(f: PrenexFormula, k: int, clause_budget: int = DEFAULT_CLAUSE_BUDGET) -> bool:
    """Clause ``i`` uses exactly the ``i``-th block of ``n/k`` consecutive variables."""
    n = f.nvars
    if k < 1 or n % k:
        raise InvalidK(k, n)
    clauses = separate(f, clause_budget).clauses
    if len(clauses) != k:
        return False
    width = n // k
    return all(
        clause.matrix_variables() == frozenset(range(i * width, (i + 1) * width))
        for i, clause in enumerate(clauses)
    )


def sharing_report(d: Decomposition) -> SharingReport:
    per_clause = tuple(clause.matrix_variables() for clause in d.clauses)
    factors = tuple(tuple(len(a & b) for b in per_clause) for a in per_clause)
    off_diagonal = [factors[i][j] for i in range(len(factors)) for j in range(len(factors)) if i != j]
    return SharingReport(factors, max(off_diagonal, default=0), per_clause)


def describe_decomposition(d: Decomposition) -> list[str]:
    names = d.trace.original.names
    return [f"{index}: {format_formula(clause.matrix, names)}" for index, clause in enumerate(d.clauses)]
