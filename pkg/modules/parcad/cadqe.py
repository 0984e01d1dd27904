"""Cylindrical algebraic decomposition and quantifier elimination.

Levels are numbered from 1: the free variables come first (in variable
order), then the quantified variables from the outermost to the innermost
quantifier, so the innermost variable is projected away first. Inside the
engine polynomials are reindexed so that level ``j`` is variable ``j - 1``.

Stack positions are 1-based and start with a sector, so within a stack the
odd positions are sectors and the even positions are sections.
"""

from __future__ import annotations

import enum
import functools
import itertools
import logging
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .config import DEFAULT_CELL_CAP
from .errors import ClauseTimeout, DegreeZero, NotSignDefinable, ResourceLimit
from .formula import (
    FALSE,
    TRUE,
    Atom,
    Formula,
    Polynomial,
    PrenexFormula,
    Quantifier,
    Relation,
    conjunction,
    disjunction,
    evaluate,
)
from .polyarith import (
    Coordinate,
    UnivariateView,
    as_coordinate,
    compare_coordinates,
    discriminant,
    factorization,
    irreducible_factors,
    merge_roots,
    principal_subresultant_coefficients,
    rational_above,
    rational_below,
    rational_between,
    real_roots_at,
    resultant,
    sign_at,
    sturm_isolate,
)

logger = logging.getLogger(__name__)

IndexPath = tuple[int, ...]


class CellKind(enum.Enum):
    SECTION = "section"
    SECTOR = "sector"


class Deadline:
    """Cooperative wall-clock limit checked between lifting steps."""

    def __init__(self, seconds: float | None) -> None:
        self.seconds = seconds
        self.expires = None if seconds is None else time.monotonic() + seconds

    def check(self) -> None:
        if self.expires is not None and time.monotonic() > self.expires:
            raise ClauseTimeout(self.seconds)


@dataclass(frozen=True, slots=True)
class ProjectionSet:
    # levels[j - 1] holds the polynomials whose highest variable is j - 1
    levels: tuple[tuple[Polynomial, ...], ...]
    order: tuple[int, ...]

    def up_to(self, level: int) -> list[Polynomial]:
        return [p for polys in self.levels[:level] for p in polys]


@dataclass(frozen=True, slots=True)
class Cell:
    level: int
    index_path: IndexPath
    kind: CellKind
    sample_point: tuple[Coordinate, ...]
    signs: Mapping[Polynomial, int] = field(default_factory=dict, hash=False)
    truth: bool | None = None


@dataclass(frozen=True, slots=True)
class Stack:
    base: IndexPath
    cells: tuple[Cell, ...]
    # polynomials that vanished identically over the base cell
    vanishing: int = 0


@dataclass(slots=True)
class CadStats:
    total_cells: int = 0
    cells_per_level: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    per_phase_time: dict[str, float] = field(default_factory=dict)
    delineability_warnings: int = 0
    augmented: bool = False

    def as_dict(self) -> dict:
        return {
            "total_cells": self.total_cells,
            "cells_per_level": list(self.cells_per_level),
            "wall_time": round(self.wall_time, 6),
            "per_phase_time": {phase: round(seconds, 6) for phase, seconds in self.per_phase_time.items()},
            "delineability_warnings": self.delineability_warnings,
            "augmented": self.augmented,
        }


@dataclass(frozen=True, slots=True)
class CadTree:
    projection: ProjectionSet
    cells: Mapping[IndexPath, Cell]
    stacks: Mapping[IndexPath, tuple[IndexPath, ...]]
    stats: CadStats
    # global variable index for each level
    order: tuple[int, ...]
    global_nvars: int

    @property
    def depth(self) -> int:
        return len(self.order)

    @property
    def root(self) -> Cell:
        return self.cells[()]

    def level(self, j: int) -> list[Cell]:
        return [cell for path, cell in self.cells.items() if len(path) == j]

    def sign_vector(self, path: IndexPath) -> dict[Polynomial, int]:
        signs: dict[Polynomial, int] = {}
        for cut in range(1, len(path) + 1):
            signs.update(self.cells[path[:cut]].signs)
        return signs


@dataclass(frozen=True, slots=True)
class TruthRow:
    index_path: IndexPath
    sample_point: tuple[Coordinate, ...]
    conditions: Formula
    truth: bool


@dataclass(frozen=True, slots=True)
class QeResult:
    formula: Formula | None
    truth_table: tuple[TruthRow, ...]
    stats: CadStats
    # set when the truth table had to stand in for the formula
    extended: bool = False
    order: tuple[int, ...] = ()


def _poly_key(p: Polynomial) -> tuple:
    return (p.total_degree(), len(p.terms), p.terms)


def _top_level(p: Polynomial) -> int:
    return max(p.variables()) + 1


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def _truncated_reducta(p: Polynomial, var: int) -> list[Polynomial]:
    """Reducta of ``p`` stopping after the first one with a constant leading coefficient."""
    result = []
    coeffs = p.coefficients_in(var)
    while len(coeffs) > 1:
        while len(coeffs) > 1 and coeffs[-1].is_zero:
            coeffs.pop()
        if len(coeffs) == 1:
            break
        view = UnivariateView(tuple(coeffs), var)
        result.append(view.polynomial())
        if view.leading_coefficient.is_constant:
            break
        coeffs = coeffs[:-1]
    return result


def _projection_factors(polys: Sequence[Polynomial], var: int) -> list[Polynomial]:
    derived: list[Polynomial] = []
    reducta = {p: _truncated_reducta(p, var) for p in polys}
    for p in polys:
        derived.extend(c for c in p.coefficients_in(var) if not c.is_constant)
        view = UnivariateView.of(p, var)
        if view.degree >= 2:
            derived.append(discriminant(view))
        for r in reducta[p]:
            if r.degree(var) >= 2:
                derived.extend(principal_subresultant_coefficients(r, r.derivative(var), var))
    for p, q in itertools.combinations(polys, 2):
        derived.append(resultant(UnivariateView.of(p, var), UnivariateView.of(q, var)))
        for r, s in itertools.product(reducta[p], reducta[q]):
            try:
                derived.extend(principal_subresultant_coefficients(r, s, var))
            except DegreeZero:
                continue
    return derived


def project(
    polys: Iterable[Polynomial], nlevels: int, order: Sequence[int] = (), deadline: Deadline | None = None
) -> ProjectionSet:
    """Collins-style projection of ``polys`` (already in level numbering)."""
    buckets: list[list[Polynomial]] = [[] for _ in range(nlevels)]

    def add(p: Polynomial) -> None:
        if p.is_zero or p.is_constant:
            return
        for factor in irreducible_factors(p):
            bucket = buckets[_top_level(factor) - 1]
            if factor not in bucket:
                bucket.append(factor)

    for p in polys:
        add(p)
    for level in range(nlevels, 1, -1):
        if deadline is not None:
            deadline.check()
        current = sorted(buckets[level - 1], key=_poly_key)
        buckets[level - 1] = current
        for derived in _projection_factors(current, level - 1):
            add(derived)
    if buckets:
        buckets[0].sort(key=_poly_key)
    return ProjectionSet(tuple(tuple(bucket) for bucket in buckets), tuple(order))


def augment_with_derivatives(projection: ProjectionSet) -> ProjectionSet:
    """Add every derivative of the level-1 polynomials, which separates all level-1 cells by sign."""
    if not projection.levels:
        return projection
    base = list(projection.levels[0])
    pending = list(base)
    while pending:
        p = pending.pop()
        derivative = p.derivative(0)
        if derivative.is_constant:
            continue
        for factor in irreducible_factors(derivative):
            if factor not in base:
                base.append(factor)
                pending.append(factor)
    base.sort(key=_poly_key)
    return ProjectionSet((tuple(base), *projection.levels[1:]), projection.order)


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------


def _stack_cells(
    parent: IndexPath,
    sample: tuple[Coordinate, ...],
    roots: list[Coordinate],
    polys: Sequence[Polynomial],
    roots_of: Mapping[Polynomial, list[Coordinate] | None],
) -> tuple[Cell, ...]:
    level = len(parent) + 1
    coordinates: list[tuple[CellKind, Coordinate]] = []
    if not roots:
        coordinates.append((CellKind.SECTOR, Fraction(0)))
    else:
        coordinates.append((CellKind.SECTOR, rational_below(roots[0])))
        for index, root in enumerate(roots):
            coordinates.append((CellKind.SECTION, root))
            if index + 1 < len(roots):
                coordinates.append((CellKind.SECTOR, rational_between(root, roots[index + 1])))
        coordinates.append((CellKind.SECTOR, rational_above(roots[-1])))
    cells = []
    for position, (kind, coordinate) in enumerate(coordinates, start=1):
        point = (*sample, coordinate)
        signs: dict[Polynomial, int] = {}
        for p in polys:
            found = roots_of[p]
            if found is None or (kind is CellKind.SECTION and _is_root(coordinate, found)):
                signs[p] = 0
            else:
                signs[p] = sign_at(p, point)
        cells.append(Cell(level, (*parent, position), kind, point, signs))
    return tuple(cells)


def _is_root(coordinate: Coordinate, roots: Sequence[Coordinate]) -> bool:
    return any(root is coordinate or compare_coordinates(root, coordinate) == 0 for root in roots)


def base_decompose(level1: Sequence[Polynomial]) -> list[Cell]:
    roots_of: dict[Polynomial, list[Coordinate] | None] = {
        p: [as_coordinate(root) for root in sturm_isolate(p).roots] for p in level1
    }
    roots = merge_roots(roots_of.values())
    return list(_stack_cells((), (), roots, level1, roots_of))


def lift(base: Cell, level_polys: Sequence[Polynomial]) -> Stack:
    var = base.level
    roots_of: dict[Polynomial, list[Coordinate] | None] = {}
    vanishing = 0
    for p in level_polys:
        roots_of[p] = real_roots_at(p, var, base.sample_point)
        if roots_of[p] is None:
            vanishing += 1
            logger.warning(
                "polynomial vanishes identically over cell %s; recording sign 0 and skipping its roots",
                base.index_path,
            )
    roots = merge_roots(found for found in roots_of.values() if found is not None)
    cells = _stack_cells(base.index_path, base.sample_point, roots, level_polys, roots_of)
    return Stack(base.index_path, cells, vanishing)


# ---------------------------------------------------------------------------
# Formula plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Layout:
    order: tuple[int, ...]
    free_count: int
    quantifiers: tuple[Quantifier, ...]
    forward: tuple[int, ...]


def _layout(f: PrenexFormula) -> _Layout:
    used = f.matrix_variables()
    free = [var.index for var in f.free_vars if var.index in used]
    block = [(q, var.index) for q, var in f.block if var.index in used]
    order = (*free, *(var for _, var in block))
    forward = [0] * f.nvars
    for position, var in enumerate(order):
        forward[var] = position
    return _Layout(tuple(order), len(free), tuple(q for q, _ in block), tuple(forward))


def _to_levels(p: Polynomial, layout: _Layout) -> Polynomial:
    return p.reindex(layout.forward, len(layout.order))


def _to_global(p: Polynomial, cad: CadTree) -> Polynomial:
    return p.reindex(cad.order, cad.global_nvars)


def build_cad(
    f: PrenexFormula,
    *,
    cell_cap: int = DEFAULT_CELL_CAP,
    deadline: Deadline | None = None,
    augment: bool = False,
) -> CadTree:
    layout = _layout(f)
    depth = len(layout.order)
    stats = CadStats()
    started = time.perf_counter()
    polys = [_to_levels(atom.poly, layout) for atom in f.atoms() if not atom.poly.is_constant]
    projection = project(polys, depth, layout.order, deadline)
    if augment:
        projection = augment_with_derivatives(projection)
        stats.augmented = True
    stats.per_phase_time["project"] = time.perf_counter() - started

    cells: dict[IndexPath, Cell] = {(): Cell(0, (), CellKind.SECTOR, ())}
    stacks: dict[IndexPath, tuple[IndexPath, ...]] = {}
    lifting = time.perf_counter()
    frontier = [cells[()]]
    for level in range(1, depth + 1):
        level_polys = projection.levels[level - 1]
        next_frontier: list[Cell] = []
        for parent in frontier:
            if deadline is not None:
                deadline.check()
            if level == 1:
                children = tuple(base_decompose(level_polys))
            else:
                stack = lift(parent, level_polys)
                stats.delineability_warnings += stack.vanishing
                children = stack.cells
            stacks[parent.index_path] = tuple(child.index_path for child in children)
            for child in children:
                cells[child.index_path] = child
            next_frontier.extend(children)
            if len(cells) - 1 > cell_cap:
                raise ResourceLimit("cells", cell_cap)
        stats.cells_per_level.append(len(next_frontier))
        frontier = next_frontier
    stats.per_phase_time["lift"] = time.perf_counter() - lifting
    stats.total_cells = len(cells) - 1
    stats.wall_time = time.perf_counter() - started
    logger.debug("CAD with %d cells per level %s", stats.total_cells, stats.cells_per_level)
    return CadTree(projection, cells, stacks, stats, layout.order, f.nvars)


def _atom_sign(atom: Atom, layout: _Layout, signs: Mapping[Polynomial, int], point: Sequence[Coordinate]) -> int:
    poly = _to_levels(atom.poly, layout)
    if poly.is_constant:
        value = poly.constant_value
        return (value > 0) - (value < 0)
    unit, factors = _factored(poly)
    sign = unit
    for factor, multiplicity in factors:
        factor_sign = signs.get(factor)
        if factor_sign is None:
            factor_sign = sign_at(factor, point)
        sign *= factor_sign**multiplicity
    return sign


@functools.lru_cache(maxsize=4096)
def _factored(p: Polynomial) -> tuple[int, tuple[tuple[Polynomial, int], ...]]:
    unit, factors = factorization(p)
    return unit, tuple(factors)


def evaluate_and_propagate(cad: CadTree, f: PrenexFormula) -> CadTree:
    layout = _layout(f)
    if layout.order != cad.order:
        raise ValueError("CAD was built for a different variable order")
    depth = cad.depth
    truths: dict[IndexPath, bool] = {}
    for cell in cad.level(depth) if depth else [cad.root]:
        signs = cad.sign_vector(cell.index_path)
        truths[cell.index_path] = evaluate(
            f.matrix,
            lambda atom: atom.relation.holds(_atom_sign(atom, layout, signs, cell.sample_point)),
        )
    for level in range(depth - 1, layout.free_count - 1, -1):
        quantifier = layout.quantifiers[level - layout.free_count]
        combine = any if quantifier is Quantifier.EXISTS else all
        for cell in cad.level(level) if level else [cad.root]:
            truths[cell.index_path] = combine(truths[child] for child in cad.stacks[cell.index_path])
    cells = {
        path: replace(cell, truth=truths[path]) if path in truths else cell for path, cell in cad.cells.items()
    }
    return CadTree(cad.projection, cells, cad.stacks, cad.stats, cad.order, cad.global_nvars)


# ---------------------------------------------------------------------------
# Solution formulas
# ---------------------------------------------------------------------------

Cube = tuple[frozenset[int], ...]


def _merge_cubes(cubes: list[Cube]) -> list[Cube]:
    merged = list(dict.fromkeys(cubes))
    changed = True
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(merged)), 2):
            a, b = merged[i], merged[j]
            if all(x <= y for x, y in zip(a, b)):
                del merged[i]
                changed = True
                break
            if all(y <= x for x, y in zip(a, b)):
                del merged[j]
                changed = True
                break
            differing = [position for position, (x, y) in enumerate(zip(a, b)) if x != y]
            if len(differing) == 1:
                position = differing[0]
                union = a[:position] + (a[position] | b[position],) + a[position + 1 :]
                merged[i] = union
                del merged[j]
                changed = True
                break
    return merged


_FULL = frozenset({-1, 0, 1})


def _cube_formula(cube: Cube, polys: Sequence[Polynomial], cad: CadTree) -> Formula:
    atoms = []
    for signs, poly in zip(cube, polys):
        if signs == _FULL:
            continue
        relation = Relation.from_signs(signs)
        atoms.append(Atom(_to_global(poly, cad), relation))
    return conjunction(atoms)


def _cell_conditions(signs: Mapping[Polynomial, int], polys: Sequence[Polynomial], cad: CadTree) -> Formula:
    return _cube_formula(tuple(frozenset({signs[p]}) for p in polys), polys, cad)


def solution_formula(cad: CadTree, k: int) -> Formula:
    if k == 0:
        return TRUE if cad.root.truth else FALSE
    polys = cad.projection.up_to(k)
    seen: dict[tuple[int, ...], Cell] = {}
    cubes: list[Cube] = []
    cells = cad.level(k)
    for cell in cells:
        signs = cad.sign_vector(cell.index_path)
        vector = tuple(signs[p] for p in polys)
        other = seen.setdefault(vector, cell)
        if other.truth != cell.truth:
            raise NotSignDefinable(other.index_path, cell.index_path)
        if cell.truth:
            cubes.append(tuple(frozenset({s}) for s in vector))
    if not cubes:
        return FALSE
    if len(cubes) == len(cells):
        return TRUE
    return disjunction(_cube_formula(cube, polys, cad) for cube in _merge_cubes(cubes))


def _truth_table(cad: CadTree, k: int) -> tuple[TruthRow, ...]:
    polys = cad.projection.up_to(k)
    rows = []
    for cell in cad.level(k) if k else [cad.root]:
        signs = cad.sign_vector(cell.index_path)
        rows.append(TruthRow(cell.index_path, cell.sample_point, _cell_conditions(signs, polys, cad), bool(cell.truth)))
    return tuple(rows)


def qe(
    f: PrenexFormula,
    *,
    cell_cap: int = DEFAULT_CELL_CAP,
    deadline: Deadline | None = None,
) -> QeResult:
    started = time.perf_counter()
    k = _layout(f).free_count
    cad = evaluate_and_propagate(build_cad(f, cell_cap=cell_cap, deadline=deadline), f)
    try:
        formula = solution_formula(cad, k)
    except NotSignDefinable as exc:
        if k != 1:
            logger.warning("no sign-condition formula: %s; returning the truth table", exc)
            cad.stats.wall_time = time.perf_counter() - started
            return QeResult(None, _truth_table(cad, k), cad.stats, extended=True, order=cad.order)
        logger.info("retrying with derivatives of the level-1 polynomials: %s", exc)
        cad = evaluate_and_propagate(build_cad(f, cell_cap=cell_cap, deadline=deadline, augment=True), f)
        formula = solution_formula(cad, k)
    cad.stats.per_phase_time["total"] = time.perf_counter() - started
    cad.stats.wall_time = time.perf_counter() - started
    return QeResult(formula, _truth_table(cad, k), cad.stats, order=cad.order)
