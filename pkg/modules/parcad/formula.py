"""Prenex formulas over integer polynomial constraints.

The textual form follows the notation used in the experiment listings::

    (A x0)(A x1)[ [[(85) x1^1 x2^2 + (64) x0^3 x2^1 = 0] \\/ [...]] /\\ [...] ]

Quantifiers are ``(A x)``/``(E x)`` (or ``∀``/``∃``), connectives ``/\\``,
``\\/`` and ``~`` (or ``∧``, ``∨``, ``¬``), square brackets group. An optional
``{x, y, ...}`` declaration in front fixes the variable order.
"""

from __future__ import annotations

import enum
import math
import re
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Union

import pyparsing as pp

from .errors import FormulaSyntaxError, UndeclaredVariable

Monomial = tuple[int, ...]


def _grlex(monomial: Monomial) -> tuple[int, Monomial]:
    return (sum(monomial), monomial)


def _pack(nvars: int, mapping: Mapping[Monomial, int]) -> tuple[tuple[Monomial, int], ...]:
    items = [(monomial, int(coeff)) for monomial, coeff in mapping.items() if coeff]
    for monomial, _ in items:
        if len(monomial) != nvars:
            raise ValueError(f"monomial {monomial} does not have {nvars} exponents")
    items.sort(key=lambda item: _grlex(item[0]), reverse=True)
    return tuple(items)


@dataclass(frozen=True, slots=True)
class Polynomial:
    """Integer polynomial; terms are stored in descending graded-lex order."""

    nvars: int
    terms: tuple[tuple[Monomial, int], ...] = ()

    @classmethod
    def from_dict(cls, nvars: int, mapping: Mapping[Monomial, int]) -> Polynomial:
        return cls(nvars, _pack(nvars, mapping))

    @classmethod
    def constant(cls, nvars: int, value: int) -> Polynomial:
        return cls.from_dict(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> Polynomial:
        exponents = [0] * nvars
        exponents[index] = 1
        return cls.from_dict(nvars, {tuple(exponents): 1})

    def as_dict(self) -> dict[Monomial, int]:
        return dict(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(self.terms[0][0]))

    @property
    def constant_value(self) -> int:
        for monomial, coeff in self.terms:
            if not any(monomial):
                return coeff
        return 0

    @property
    def leading_coefficient(self) -> int:
        return self.terms[0][1] if self.terms else 0

    def variables(self) -> frozenset[int]:
        used: set[int] = set()
        for monomial, _ in self.terms:
            used.update(index for index, exp in enumerate(monomial) if exp)
        return frozenset(used)

    def degree(self, var: int) -> int:
        return max((monomial[var] for monomial, _ in self.terms), default=0)

    def total_degree(self) -> int:
        return max((sum(monomial) for monomial, _ in self.terms), default=0)

    def content(self) -> int:
        return reduce(math.gcd, (abs(coeff) for _, coeff in self.terms), 0)

    def canonical(self) -> tuple[int, Polynomial]:
        """Return ``(sign, q)`` with ``self = sign * content * q`` and ``q`` primitive, lc(q) > 0."""
        if self.is_zero:
            return 1, self
        sign = 1 if self.leading_coefficient > 0 else -1
        divisor = self.content() * sign
        if divisor == 1:
            return 1, self
        return sign, Polynomial(self.nvars, tuple((m, c // divisor) for m, c in self.terms))

    def primitive(self) -> Polynomial:
        return self.canonical()[1]

    def __neg__(self) -> Polynomial:
        return Polynomial(self.nvars, tuple((m, -c) for m, c in self.terms))

    def __add__(self, other: Polynomial | int) -> Polynomial:
        other = self._coerce(other)
        acc = self.as_dict()
        for monomial, coeff in other.terms:
            acc[monomial] = acc.get(monomial, 0) + coeff
        return Polynomial.from_dict(self.nvars, acc)

    __radd__ = __add__

    def __sub__(self, other: Polynomial | int) -> Polynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other: int) -> Polynomial:
        return self._coerce(other) - self

    def __mul__(self, other: Polynomial | int) -> Polynomial:
        if isinstance(other, int):
            if other == 0:
                return Polynomial(self.nvars)
            return Polynomial(self.nvars, tuple((m, c * other) for m, c in self.terms))
        acc: dict[Monomial, int] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                monomial = tuple(a + b for a, b in zip(m1, m2))
                acc[monomial] = acc.get(monomial, 0) + c1 * c2
        return Polynomial.from_dict(self.nvars, acc)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> Polynomial:
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def _coerce(self, other: Polynomial | int) -> Polynomial:
        if isinstance(other, int):
            return Polynomial.constant(self.nvars, other)
        if other.nvars != self.nvars:
            raise ValueError("polynomials live over different variable counts")
        return other

    def coefficients_in(self, var: int) -> list[Polynomial]:
        """Coefficients with respect to ``var``; index is the degree."""
        buckets: list[dict[Monomial, int]] = [dict() for _ in range(self.degree(var) + 1)]
        for monomial, coeff in self.terms:
            stripped = monomial[:var] + (0,) + monomial[var + 1 :]
            buckets[monomial[var]][stripped] = coeff
        return [Polynomial.from_dict(self.nvars, bucket) for bucket in buckets]

    def derivative(self, var: int) -> Polynomial:
        acc: dict[Monomial, int] = {}
        for monomial, coeff in self.terms:
            if monomial[var]:
                lowered = monomial[:var] + (monomial[var] - 1,) + monomial[var + 1 :]
                acc[lowered] = coeff * monomial[var]
        return Polynomial.from_dict(self.nvars, acc)

    def evaluate(self, point: Mapping[int, Fraction] | Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for monomial, coeff in self.terms:
            term = Fraction(coeff)
            for index, exp in enumerate(monomial):
                if exp:
                    term *= Fraction(point[index]) ** exp
            total += term
        return total

    def specialize(self, var: int, value: Fraction) -> Polynomial:
        """Integer polynomial ``den^d * self(var=value)`` with ``d = degree(var)``; the factor is positive."""
        value = Fraction(value)
        degree = self.degree(var)
        acc: dict[Monomial, int] = {}
        for monomial, coeff in self.terms:
            exp = monomial[var]
            stripped = monomial[:var] + (0,) + monomial[var + 1 :]
            scaled = coeff * value.numerator**exp * value.denominator ** (degree - exp)
            acc[stripped] = acc.get(stripped, 0) + scaled
        return Polynomial.from_dict(self.nvars, acc)

    def compose(self, var: int, numerator: Polynomial, denominator: int) -> Polynomial:
        """``denominator^d * self(var = numerator/denominator)`` with ``d = degree(var)``."""
        coeffs = self.coefficients_in(var)
        degree = len(coeffs) - 1
        result = Polynomial(self.nvars)
        for k, coeff in enumerate(coeffs):
            if not coeff.is_zero:
                result = result + coeff * numerator**k * denominator ** (degree - k)
        return result

    def reindex(self, mapping: Sequence[int], nvars: int | None = None) -> Polynomial:
        """Move variable ``i`` to position ``mapping[i]``."""
        width = self.nvars if nvars is None else nvars
        acc: dict[Monomial, int] = {}
        for monomial, coeff in self.terms:
            moved = [0] * width
            for index, exp in enumerate(monomial):
                if exp:
                    moved[mapping[index]] = exp
            acc[tuple(moved)] = coeff
        return Polynomial.from_dict(width, acc)

    def to_text(self, names: Sequence[str]) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for monomial, coeff in self.terms:
            factors = [f"({coeff})"]
            factors.extend(f"{names[index]}^{exp}" for index, exp in enumerate(monomial) if exp)
            parts.append(" ".join(factors))
        return " + ".join(parts)


class Relation(enum.Enum):
    EQ = "="
    NE = "/="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    def negate(self) -> Relation:
        return _NEGATION[self]

    def mirror(self) -> Relation:
        """Relation after multiplying the polynomial by a negative number."""
        return _MIRROR[self]

    def holds(self, sign: int) -> bool:
        return sign in _ALLOWED_SIGNS[self]

    @property
    def allowed_signs(self) -> frozenset[int]:
        return _ALLOWED_SIGNS[self]

    @classmethod
    def from_signs(cls, signs: frozenset[int]) -> Relation | None:
        for relation, allowed in _ALLOWED_SIGNS.items():
            if allowed == signs:
                return relation
        return None


_NEGATION = {
    Relation.EQ: Relation.NE,
    Relation.NE: Relation.EQ,
    Relation.LT: Relation.GE,
    Relation.GE: Relation.LT,
    Relation.GT: Relation.LE,
    Relation.LE: Relation.GT,
}
_MIRROR = {
    Relation.EQ: Relation.EQ,
    Relation.NE: Relation.NE,
    Relation.LT: Relation.GT,
    Relation.GT: Relation.LT,
    Relation.LE: Relation.GE,
    Relation.GE: Relation.LE,
}
_ALLOWED_SIGNS = {
    Relation.EQ: frozenset({0}),
    Relation.NE: frozenset({-1, 1}),
    Relation.LT: frozenset({-1}),
    Relation.LE: frozenset({-1, 0}),
    Relation.GT: frozenset({1}),
    Relation.GE: frozenset({0, 1}),
}
_RELATION_SPELLINGS = {
    "=": Relation.EQ,
    "==": Relation.EQ,
    "/=": Relation.NE,
    "!=": Relation.NE,
    "≠": Relation.NE,
    "<": Relation.LT,
    "<=": Relation.LE,
    "≤": Relation.LE,
    ">": Relation.GT,
    ">=": Relation.GE,
    "≥": Relation.GE,
}


class Quantifier(enum.Enum):
    FORALL = "A"
    EXISTS = "E"

    @property
    def dual(self) -> Quantifier:
        return Quantifier.EXISTS if self is Quantifier.FORALL else Quantifier.FORALL


@dataclass(frozen=True, slots=True)
class Variable:
    index: int
    name: str


@dataclass(frozen=True, slots=True)
class Atom:
    """``poly relation 0`` with ``poly`` kept primitive and positive on its leading term."""

    poly: Polynomial
    relation: Relation

    def __post_init__(self) -> None:
        sign, canonical = self.poly.canonical()
        if canonical is not self.poly:
            object.__setattr__(self, "poly", canonical)
        if sign < 0:
            object.__setattr__(self, "relation", self.relation.mirror())


@dataclass(frozen=True, slots=True)
class TrueConst:
    pass


@dataclass(frozen=True, slots=True)
class FalseConst:
    pass


TRUE = TrueConst()
FALSE = FalseConst()


@dataclass(frozen=True, slots=True)
class Not:
    arg: Formula


@dataclass(frozen=True, slots=True)
class And:
    args: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("And needs at least one child")


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("Or needs at least one child")


@dataclass(frozen=True, slots=True)
class Quantified:
    quantifier: Quantifier
    var: int
    body: Formula


Formula = Union[Atom, Not, And, Or, TrueConst, FalseConst, Quantified]


def negate_atom(atom: Atom) -> Atom:
    return Atom(atom.poly, atom.relation.negate())


def negation(f: Formula) -> Formula:
    """``Not`` that never stacks two negations."""
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, TrueConst):
        return FALSE
    if isinstance(f, FalseConst):
        return TRUE
    return Not(f)


def conjunction(parts: Iterable[Formula]) -> Formula:
    """Flattened conjunction with constants absorbed and duplicates removed."""
    children: list[Formula] = []
    for part in parts:
        if isinstance(part, FalseConst):
            return FALSE
        if isinstance(part, TrueConst):
            continue
        for child in part.args if isinstance(part, And) else (part,):
            if child not in children:
                children.append(child)
    if not children:
        return TRUE
    return children[0] if len(children) == 1 else And(tuple(children))


def disjunction(parts: Iterable[Formula]) -> Formula:
    children: list[Formula] = []
    for part in parts:
        if isinstance(part, TrueConst):
            return TRUE
        if isinstance(part, FalseConst):
            continue
        for child in part.args if isinstance(part, Or) else (part,):
            if child not in children:
                children.append(child)
    if not children:
        return FALSE
    return children[0] if len(children) == 1 else Or(tuple(children))


def iter_atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from iter_atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for child in f.args:
            yield from iter_atoms(child)
    elif isinstance(f, Quantified):
        yield from iter_atoms(f.body)


def formula_variables(f: Formula) -> frozenset[int]:
    """Variables occurring in atoms, bound or not."""
    used: set[int] = set()
    for atom in iter_atoms(f):
        used.update(atom.poly.variables())
    return frozenset(used)


def free_variables(f: Formula) -> frozenset[int]:
    if isinstance(f, Quantified):
        return free_variables(f.body) - {f.var}
    if isinstance(f, Not):
        return free_variables(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_variables(child) for child in f.args))
    if isinstance(f, Atom):
        return f.poly.variables()
    return frozenset()


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(map_atoms(child, fn) for child in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(child, fn) for child in f.args))
    if isinstance(f, Quantified):
        return Quantified(f.quantifier, f.var, map_atoms(f.body, fn))
    return f


def evaluate(f: Formula, atom_truth: Callable[[Atom], bool]) -> bool:
    """Truth of a quantifier-free formula under an atom valuation."""
    if isinstance(f, Atom):
        return atom_truth(f)
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, Not):
        return not evaluate(f.arg, atom_truth)
    if isinstance(f, And):
        return all(evaluate(child, atom_truth) for child in f.args)
    if isinstance(f, Or):
        return any(evaluate(child, atom_truth) for child in f.args)
    raise ValueError("evaluate needs a quantifier-free formula")


def contains_quantifier(f: Formula) -> bool:
    if isinstance(f, Quantified):
        return True
    if isinstance(f, Not):
        return contains_quantifier(f.arg)
    if isinstance(f, (And, Or)):
        return any(contains_quantifier(child) for child in f.args)
    return False


@dataclass(frozen=True, slots=True)
class PrenexFormula:
    variables: tuple[Variable, ...]
    block: tuple[tuple[Quantifier, Variable], ...]
    free_vars: tuple[Variable, ...]
    matrix: Formula
    _bound: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        bound = frozenset(var.index for _, var in self.block)
        free = frozenset(var.index for var in self.free_vars)
        if len(bound) != len(self.block):
            raise ValueError("a variable is bound twice")
        if bound & free:
            raise ValueError("bound and free variables overlap")
        if contains_quantifier(self.matrix):
            raise ValueError("matrix must be quantifier-free")
        if not formula_variables(self.matrix) <= bound | free:
            raise ValueError("matrix uses a variable that is neither bound nor free")
        object.__setattr__(self, "_bound", bound)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(var.name for var in self.variables)

    @property
    def bound(self) -> frozenset[int]:
        return self._bound

    def matrix_variables(self) -> frozenset[int]:
        return formula_variables(self.matrix)

    def with_matrix(self, matrix: Formula) -> PrenexFormula:
        return PrenexFormula(self.variables, self.block, self.free_vars, matrix)

    def restricted(self, matrix: Formula) -> PrenexFormula:
        """Formula over ``matrix`` keeping only the quantifiers and free variables it uses."""
        used = formula_variables(matrix)
        block = tuple((q, var) for q, var in self.block if var.index in used)
        free = tuple(var for var in self.free_vars if var.index in used)
        return PrenexFormula(self.variables, block, free, matrix)

    def atoms(self) -> list[Atom]:
        return list(iter_atoms(self.matrix))


def natural_key(name: str) -> tuple:
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name))


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _RawAtom:
    lhs: dict
    relation: Relation
    rhs: dict


@dataclass(frozen=True)
class _RawNode:
    kind: str
    children: tuple = ()
    quantifier: Quantifier | None = None
    name: str = ""


def _make_term(tokens: pp.ParseResults) -> dict:
    coeff = Fraction(1)
    powers: dict[str, int] = {}
    for token in tokens:
        if isinstance(token, Fraction):
            coeff *= token
        else:
            name, exp = token
            powers[name] = powers.get(name, 0) + exp
    key = tuple(sorted(powers.items()))
    return {key: coeff}


def _make_poly(tokens: pp.ParseResults) -> dict:
    acc: dict = {}
    sign = 1
    for token in tokens:
        if token == "+":
            sign = 1
        elif token == "-":
            sign = -1
        else:
            for key, coeff in token.items():
                acc[key] = acc.get(key, Fraction(0)) + sign * coeff
            sign = 1
    return acc


def _fold(kind: str) -> Callable[[pp.ParseResults], object]:
    def action(tokens: pp.ParseResults) -> object:
        items = list(tokens)
        return items[0] if len(items) == 1 else _RawNode(kind, tuple(items))

    return action


def _build_grammar() -> pp.ParserElement:
    lbrack, rbrack = pp.Suppress("["), pp.Suppress("]")
    lparen, rparen = pp.Suppress("("), pp.Suppress(")")
    keyword = pp.Keyword("TRUE") | pp.Keyword("FALSE")
    ident = ~keyword + pp.Word(pp.alphas + "_", pp.alphanums + "_")
    natural = pp.Word(pp.nums).set_parse_action(lambda t: int(t[0]))
    rational = (natural + pp.Opt(pp.Suppress("/") + natural)).set_parse_action(
        lambda t: Fraction(t[0], t[1] if len(t) > 1 else 1)
    )
    signed = (pp.Opt(pp.one_of("+ -")) + rational).set_parse_action(
        lambda t: -t[-1] if t[0] == "-" else t[-1]
    )
    coefficient = (lparen + signed + rparen) | rational
    power = (ident + pp.Opt(pp.Suppress("^") + natural)).set_parse_action(
        lambda t: (t[0], t[1] if len(t) > 1 else 1)
    )
    star = pp.Suppress(pp.Opt("*"))
    term = (
        (coefficient + pp.ZeroOrMore(star + power)) | (power + pp.ZeroOrMore(star + power))
    ).set_parse_action(_make_term)
    addop = pp.one_of("+ -")
    poly = (pp.Opt(addop) + term + pp.ZeroOrMore(addop + term)).set_parse_action(_make_poly)
    relop = pp.one_of(list(_RELATION_SPELLINGS))
    atom = (poly + relop - poly).set_parse_action(
        lambda t: _RawAtom(t[0], _RELATION_SPELLINGS[t[1]], t[2])
    )
    constant = pp.Keyword("TRUE").set_parse_action(lambda: _RawNode("true")) | pp.Keyword(
        "FALSE"
    ).set_parse_action(lambda: _RawNode("false"))

    expr = pp.Forward()
    unary = pp.Forward()
    quantifier_symbol = pp.one_of("A E ∀ ∃")
    quantifier = (
        (lparen + quantifier_symbol + ident + rparen) | (pp.one_of("∀ ∃") + ident)
    ).set_parse_action(lambda t: (t[0], t[1]))
    negation_op = pp.Suppress(pp.one_of("~ ¬"))
    group = lbrack - expr - rbrack
    primary = group | constant | atom
    unary <<= (
        (negation_op - unary).set_parse_action(lambda t: _RawNode("not", (t[0],)))
        | (quantifier - unary).set_parse_action(
            lambda t: _RawNode(
                "quant",
                (t[1],),
                Quantifier.FORALL if t[0][0] in ("A", "∀") else Quantifier.EXISTS,
                t[0][1],
            )
        )
        | primary
    )
    and_op = pp.Suppress(pp.Literal("/\\") | pp.Literal("∧"))
    or_op = pp.Suppress(pp.Literal("\\/") | pp.Literal("∨"))
    conj = (unary + pp.ZeroOrMore(and_op - unary)).set_parse_action(_fold("and"))
    disj = (conj + pp.ZeroOrMore(or_op - conj)).set_parse_action(_fold("or"))
    expr <<= disj
    declaration = (
        pp.Suppress("{") + pp.Opt(ident + pp.ZeroOrMore(pp.Suppress(",") + ident)) + pp.Suppress("}")
    ).set_parse_action(lambda t: _Declaration(tuple(t)))
    return pp.Opt(declaration) + expr


@dataclass(frozen=True)
class _Declaration:
    names: tuple[str, ...]


_GRAMMAR = _build_grammar()


def _raw_names(node: object, scope: frozenset[str], bound: list[str], free: list[str]) -> None:
    if isinstance(node, _RawAtom):
        for side in (node.lhs, node.rhs):
            for key in side:
                for name, _ in key:
                    if name not in scope and name not in free:
                        free.append(name)
        return
    assert isinstance(node, _RawNode)
    if node.kind == "quant":
        if node.name in bound:
            raise FormulaSyntaxError(0, f"a single binding of {node.name!r}")
        bound.append(node.name)
        scope = scope | {node.name}
    for child in node.children:
        _raw_names(child, scope, bound, free)


def _to_polynomial(raw: dict, index: Mapping[str, int], nvars: int) -> tuple[Polynomial, int]:
    """Integer polynomial from rational terms, scaled by a positive factor."""
    denominator = reduce(math.lcm, (coeff.denominator for coeff in raw.values()), 1)
    acc: dict[Monomial, int] = {}
    for key, coeff in raw.items():
        exponents = [0] * nvars
        for name, exp in key:
            exponents[index[name]] += exp
        monomial = tuple(exponents)
        acc[monomial] = acc.get(monomial, 0) + int(coeff * denominator)
    return Polynomial.from_dict(nvars, acc), denominator


def _to_formula(node: object, index: Mapping[str, int], nvars: int) -> Formula:
    if isinstance(node, _RawAtom):
        difference = dict(node.lhs)
        for key, coeff in node.rhs.items():
            difference[key] = difference.get(key, Fraction(0)) - coeff
        poly, _ = _to_polynomial(difference, index, nvars)
        return Atom(poly, node.relation)
    assert isinstance(node, _RawNode)
    if node.kind == "true":
        return TRUE
    if node.kind == "false":
        return FALSE
    if node.kind == "not":
        return negation(_to_formula(node.children[0], index, nvars))
    if node.kind == "quant":
        return Quantified(node.quantifier, index[node.name], _to_formula(node.children[0], index, nvars))
    children = tuple(_to_formula(child, index, nvars) for child in node.children)
    return And(children) if node.kind == "and" else Or(children)


def prenex(f: Formula) -> tuple[list[tuple[Quantifier, int]], Formula]:
    """Pull quantifiers out of ``f``; bound variables must be distinct and not occur free elsewhere."""
    if isinstance(f, Quantified):
        prefix, matrix = prenex(f.body)
        return [(f.quantifier, f.var), *prefix], matrix
    if isinstance(f, Not):
        prefix, matrix = prenex(f.arg)
        return [(q.dual, var) for q, var in prefix], negation(matrix)
    if isinstance(f, (And, Or)):
        prefix: list[tuple[Quantifier, int]] = []
        matrices = []
        for child in f.args:
            child_prefix, child_matrix = prenex(child)
            prefix.extend(child_prefix)
            matrices.append(child_matrix)
        return prefix, type(f)(tuple(matrices))
    return [], f


def default_order(bound: Sequence[str], occurring: Iterable[str]) -> list[str]:
    free = sorted((name for name in occurring if name not in bound), key=natural_key)
    return [*bound, *free]


def parse_formula(text: str, variables: Sequence[str] | None = None) -> PrenexFormula:
    try:
        parsed = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise FormulaSyntaxError(exc.loc, exc.msg.removeprefix("Expected ").strip(), text) from exc
    tokens = list(parsed)
    declared = list(tokens.pop(0).names) if isinstance(tokens[0], _Declaration) else None
    body = tokens[0]
    bound: list[str] = []
    free: list[str] = []
    _raw_names(body, frozenset(), bound, free)
    for name in free:
        if name in bound:
            raise FormulaSyntaxError(0, f"{name!r} to be either bound or free, not both", text)
    if variables is not None:
        declared = list(variables)
    if declared is not None:
        for name in [*bound, *free]:
            if name not in declared:
                raise UndeclaredVariable(name)
        order = declared
    else:
        order = default_order(bound, free)
    index = {name: position for position, name in enumerate(order)}
    formula = _to_formula(body, index, len(order))
    prefix, matrix = prenex(formula)
    bound_indices = {var for _, var in prefix}
    var_objects = tuple(Variable(position, name) for position, name in enumerate(order))
    block = tuple((q, var_objects[var]) for q, var in prefix)
    free = tuple(var for var in var_objects if var.index not in bound_indices)
    return PrenexFormula(var_objects, block, free, matrix)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def format_atom(atom: Atom, names: Sequence[str]) -> str:
    return f"[{atom.poly.to_text(names)} {atom.relation.value} 0]"


def format_matrix(f: Formula, names: Sequence[str], *, top: bool = False) -> str:
    if isinstance(f, Atom):
        return format_atom(f, names)
    if isinstance(f, TrueConst):
        return "TRUE"
    if isinstance(f, FalseConst):
        return "FALSE"
    if isinstance(f, Not):
        return "~" + format_matrix(f.arg, names)
    if isinstance(f, Quantified):
        return f"({f.quantifier.value} {names[f.var]}){format_matrix(f.body, names)}"
    joiner = " /\\ " if isinstance(f, And) else " \\/ "
    inner = joiner.join(format_matrix(child, names) for child in f.args)
    return inner if top else f"[{inner}]"


def print_formula(f: PrenexFormula) -> str:
    names = f.names
    occurring = [names[index] for index in sorted(f.matrix_variables())]
    bound = [var.name for _, var in f.block]
    prefix = ""
    if default_order(bound, occurring) != list(names):
        prefix = "{" + ", ".join(names) + "} "
    quantifiers = "".join(f"({q.value} {var.name})" for q, var in f.block)
    return f"{prefix}{quantifiers}[ {format_matrix(f.matrix, names, top=True)} ]"


def format_formula(f: Formula, names: Sequence[str]) -> str:
    """Quantifier-free (or nested) formula without the outer brackets of a matrix."""
    return format_matrix(f, names, top=True)
