"""Seeded formula generation and the benchmark experiments.

Randomness comes from SplitMix64 (state += 0x9E3779B97F4A7C15, then the
0xBF58476D1CE4E5B9 / 0x94D049BB133111EB xor-shift-multiply finaliser) so a
seed gives the same formulas on every platform.
"""

from __future__ import annotations

import csv
import logging
import statistics
import sys
import time
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .config import DEFAULT_CELL_CAP, DEFAULT_CLAUSE_BUDGET
from .errors import ClauseExplosion, InvalidParams, ParcadError
from .formula import (
    And,
    Atom,
    Formula,
    Not,
    Or,
    Polynomial,
    PrenexFormula,
    Quantifier,
    Relation,
    Variable,
    evaluate,
    iter_atoms,
    parse_formula,
)
from .normalize import separate
from .orchestrator import OrchestratorConfig, run_direct, run_pipeline
from .polyarith import merge_roots, rational_above, rational_below, rational_between, sign_at, sturm_isolate

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MAX_COEFFICIENT = 99
_RELATIONS = tuple(Relation)


class SplitMix64:
    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        return self.next_u64() % bound

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def chance(self, probability: float) -> bool:
        return self.next_u64() < probability * (1 << 64)

    def choice(self, items: Sequence):
        return items[self.below(len(items))]

    def sample(self, items: Sequence, k: int) -> list:
        pool = list(items)
        picked = []
        for _ in range(k):
            picked.append(pool.pop(self.below(len(pool))))
        return picked


def derive_seed(*parts: int) -> int:
    """Stable child seed for nested loops (value, repetition, ...)."""
    rng = SplitMix64(0)
    for part in parts:
        rng.state ^= part & MASK64
        rng.next_u64()
    return rng.next_u64()


@dataclass(frozen=True, slots=True)
class SharingPattern:
    shared_count: int
    first_vars: int = 3
    own_vars: int = 3


@dataclass(frozen=True, slots=True)
class GeneratorParams:
    n_vars: int
    clauses: int
    polys_per_clause: int
    max_terms: int
    max_exponent: int
    seed: int = 0
    relation: str = "="
    free_vars: int = 0
    # "shared": every clause draws from the same n_vars variables;
    # "blocks": clause i owns variables [i*n_vars, (i+1)*n_vars)
    layout: str = "shared"
    sharing: SharingPattern | None = None
    cover_vars: bool = False

    def validate(self) -> None:
        problems = []
        if self.n_vars < 1:
            problems.append("n_vars must be at least 1")
        if self.clauses < 1:
            problems.append("clauses must be at least 1")
        if self.polys_per_clause < 1:
            problems.append("polys_per_clause must be at least 1")
        if self.max_terms < 1:
            problems.append("max_terms (T) must be at least 1")
        if self.max_exponent < 0:
            problems.append("max_exponent (E) must be non-negative")
        if self.relation not in ("=", "mixed"):
            problems.append("relation must be '=' or 'mixed'")
        if self.layout not in ("shared", "blocks"):
            problems.append("layout must be 'shared' or 'blocks'")
        if not 0 <= self.free_vars <= self.total_vars:
            problems.append("free_vars must lie between 0 and the variable count")
        if self.sharing is not None:
            if self.clauses != 2:
                problems.append("a sharing pattern needs exactly 2 clauses")
            if not 0 <= self.sharing.shared_count <= self.sharing.first_vars:
                problems.append("shared_count must lie between 0 and the first clause's variable count")
        if not 0 <= self.seed <= MASK64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise InvalidParams("; ".join(problems))

    @property
    def total_vars(self) -> int:
        if self.sharing is not None:
            return self.sharing.first_vars + self.sharing.own_vars
        if self.layout == "blocks":
            return self.n_vars * self.clauses
        return self.n_vars


def _clause_variables(params: GeneratorParams, index: int) -> list[int]:
    if params.sharing is not None:
        first = list(range(params.sharing.first_vars))
        if index == 0:
            return first
        own = range(params.sharing.first_vars, params.sharing.first_vars + params.sharing.own_vars)
        return [*first[: params.sharing.shared_count], *own]
    if params.layout == "blocks":
        return list(range(index * params.n_vars, (index + 1) * params.n_vars))
    return list(range(params.n_vars))


def random_polynomial(
    rng: SplitMix64, nvars: int, variables: Sequence[int], max_terms: int, max_exponent: int
) -> Polynomial:
    while True:
        acc: dict[tuple[int, ...], int] = {}
        for _ in range(rng.randint(1, max_terms)):
            exponents = [0] * nvars
            for var in variables:
                exponents[var] = rng.randint(0, max_exponent)
            coeff = rng.randint(1, MAX_COEFFICIENT) * (1 if rng.chance(0.5) else -1)
            monomial = tuple(exponents)
            acc[monomial] = acc.get(monomial, 0) + coeff
        poly = Polynomial.from_dict(nvars, acc)
        if not poly.is_zero:
            return poly


def _cover(rng: SplitMix64, polys: list[Polynomial], variables: Sequence[int], max_exponent: int) -> list[Polynomial]:
    """Raise exponents so that every variable of the clause occurs somewhere in it."""
    if max_exponent < 1:
        return polys
    for var in variables:
        if any(var in p.variables() for p in polys):
            continue
        target = rng.below(len(polys))
        terms = list(polys[target].terms)
        slot = rng.below(len(terms))
        monomial, coeff = terms[slot]
        bumped = monomial[:var] + (rng.randint(1, max_exponent),) + monomial[var + 1 :]
        terms[slot] = (bumped, coeff)
        acc: dict[tuple[int, ...], int] = {}
        for mono, c in terms:
            acc[mono] = acc.get(mono, 0) + c
        replacement = Polynomial.from_dict(polys[target].nvars, acc)
        if not replacement.is_zero:
            polys[target] = replacement
    return polys


def _relation(rng: SplitMix64, mode: str) -> Relation:
    return Relation.EQ if mode == "=" else rng.choice(_RELATIONS)


def _variables(count: int) -> tuple[Variable, ...]:
    return tuple(Variable(index, f"x{index}") for index in range(count))


def _universal(variables: tuple[Variable, ...], free_vars: int, matrix: Formula) -> PrenexFormula:
    bound = len(variables) - free_vars
    block = tuple((Quantifier.FORALL, var) for var in variables[:bound])
    return PrenexFormula(variables, block, variables[bound:], matrix)


def gen_clause(rng: SplitMix64, params: GeneratorParams, index: int) -> Formula:
    nvars = params.total_vars
    variables = _clause_variables(params, index)
    polys = [
        random_polynomial(rng, nvars, variables, params.max_terms, params.max_exponent)
        for _ in range(params.polys_per_clause)
    ]
    if params.cover_vars or params.sharing is not None:
        polys = _cover(rng, polys, variables, params.max_exponent)
    atoms = tuple(Atom(p, _relation(rng, params.relation)) for p in polys)
    return atoms[0] if len(atoms) == 1 else Or(atoms)


def gen_formula(params: GeneratorParams) -> PrenexFormula:
    params.validate()
    rng = SplitMix64(params.seed)
    clauses = []
    for index in range(params.clauses):
        # the first clause of a sharing study never depends on shared_count
        clause_rng = SplitMix64(derive_seed(params.seed, index)) if params.sharing is not None else rng
        clauses.append(gen_clause(clause_rng, params, index))
    matrix = clauses[0] if len(clauses) == 1 else And(tuple(clauses))
    return _universal(_variables(params.total_vars), params.free_vars, matrix)


# ---------------------------------------------------------------------------
# Equivalence check
# ---------------------------------------------------------------------------

GRID_POINTS = 201
GRID_RADIUS = 10


def _truth_at(f: Formula, point: Sequence[Fraction]) -> bool:
    return evaluate(f, lambda atom: atom.relation.holds(sign_at(atom.poly, point)))


def sample_points(polys: Iterable[Polynomial], var: int) -> list[Fraction]:
    """Grid points plus every root and the midpoints around the roots of the given univariate polynomials."""
    points = {Fraction(-GRID_RADIUS) + Fraction(2 * GRID_RADIUS * i, GRID_POINTS - 1) for i in range(GRID_POINTS)}
    roots = merge_roots(
        sturm_isolate(p).roots for p in polys if not p.is_constant and p.variables() == {var}
    )
    if roots:
        points.add(rational_below(roots[0]))
        points.add(rational_above(roots[-1]))
        for left, right in zip(roots, roots[1:]):
            points.add(rational_between(left, right))
    return sorted(points)


def formulas_agree(left: Formula, right: Formula, nvars: int, sample_seed: int = 0, samples: int = 400) -> bool:
    """Decide ``left <-> right`` over the reals.

    Exact for at most one variable (roots are checked as algebraic points,
    the gaps by midpoints); with more variables a seeded rational sample is
    used instead.
    """
    used = sorted({var for f in (left, right) for atom in iter_atoms(f) for var in atom.poly.variables()})
    if not used:
        zero = [Fraction(0)] * nvars
        return _truth_at(left, zero) == _truth_at(right, zero)
    if len(used) == 1:
        (var,) = used
        polys = [atom.poly for f in (left, right) for atom in iter_atoms(f)]
        for x in sample_points(polys, var):
            point = [Fraction(0)] * nvars
            point[var] = x
            if _truth_at(left, point) != _truth_at(right, point):
                return False
        roots = merge_roots(sturm_isolate(p).roots for p in polys if p.variables() == {var})
        for root in roots:
            point = [Fraction(0)] * nvars
            point[var] = root
            if _truth_at(left, point) != _truth_at(right, point):
                return False
        return True
    rng = SplitMix64(sample_seed)
    for _ in range(samples):
        point = [Fraction(0)] * nvars
        for var in used:
            point[var] = Fraction(rng.randint(-40, 40), rng.randint(1, 4))
        if _truth_at(left, point) != _truth_at(right, point):
            return False
    return True


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "experiment",
    "seed",
    "n_vars",
    "clauses",
    "polys",
    "T",
    "E",
    "s",
    "time_direct_ms",
    "time_pipeline_ms",
    "cells_direct",
    "cells_pipeline",
    "clause_count",
    "equivalent",
)


@dataclass(frozen=True, slots=True)
class RunRecord:
    """One CSV row; ``None`` marks a run that did not finish (reported as unbounded)."""

    experiment: str
    seed: int
    n_vars: int
    clauses: int
    polys: int
    T: int
    E: int
    s: int | None = None
    time_direct_ms: float | None = None
    time_pipeline_ms: float | None = None
    cells_direct: int | None = None
    cells_pipeline: int | None = None
    clause_count: int | None = None
    equivalent: bool | None = None


@dataclass(frozen=True, slots=True)
class BenchRow:
    experiment: str
    key: tuple
    runs: tuple[RunRecord, ...]

    @property
    def repetitions(self) -> int:
        return len(self.runs)

    def times(self, column: str = "time_direct_ms") -> list[float]:
        return [getattr(run, column) for run in self.runs if getattr(run, column) is not None]

    def mean_time(self, column: str = "time_direct_ms") -> float | None:
        values = self.times(column)
        return statistics.fmean(values) if values else None

    def median_time(self, column: str = "time_direct_ms") -> float | None:
        values = self.times(column)
        return statistics.median(values) if values else None

    @property
    def unbounded(self) -> int:
        return sum(run.time_direct_ms is None for run in self.runs)


def summarize(records: Iterable[RunRecord]) -> list[BenchRow]:
    groups: dict[tuple, list[RunRecord]] = {}
    for record in records:
        key = (record.experiment, record.n_vars, record.clauses, record.polys, record.T, record.E, record.s)
        groups.setdefault(key, []).append(record)
    return [BenchRow(key[0], key[1:], tuple(runs)) for key, runs in groups.items()]


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    repetitions: int = 10
    seed: int = 1
    n_vars: int = 2
    clauses: int = 2
    polys_per_clause: int = 2
    max_terms: int = 5
    max_exponent: int = 3
    relation: str = "="
    layout: str = "shared"
    free_vars: int = 0
    workers: int = 1
    cell_cap: int = DEFAULT_CELL_CAP
    clause_budget: int = DEFAULT_CLAUSE_BUDGET
    clause_timeout: float | None = None
    values: tuple[int, ...] = ()

    def validate(self) -> None:
        if self.repetitions < 1:
            raise InvalidParams("repetitions must be at least 1")

    def orchestrator(self, workers: int | None = None, short_circuit: bool = True) -> OrchestratorConfig:
        return OrchestratorConfig(
            workers=workers or self.workers,
            cell_cap=self.cell_cap,
            clause_budget=self.clause_budget,
            per_clause_timeout=self.clause_timeout,
            short_circuit=short_circuit,
        )


SWEEP_DEFAULTS = {
    "max_terms": (1, 2, 3, 4, 5),
    "max_exponent": (1, 2, 3, 4, 5),
    "total_terms": (2, 3, 4, 5, 6),
}


def log_progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _params_for(kind: str, value: int, cfg: ExperimentConfig, seed: int) -> GeneratorParams:
    params = GeneratorParams(
        n_vars=cfg.n_vars,
        clauses=cfg.clauses,
        polys_per_clause=cfg.polys_per_clause,
        max_terms=cfg.max_terms,
        max_exponent=cfg.max_exponent,
        seed=seed,
        relation=cfg.relation,
        free_vars=cfg.free_vars,
        layout=cfg.layout,
    )
    if kind == "max_terms":
        return replace(params, max_terms=value)
    if kind == "max_exponent":
        return replace(params, max_exponent=value)
    if kind == "total_terms":
        return replace(params, clauses=value)
    raise InvalidParams(f"unknown sweep kind {kind!r}")


def _timed_direct(f: PrenexFormula, cfg: ExperimentConfig):
    started = time.perf_counter()
    try:
        direct = run_direct(f, cfg.orchestrator())
    except ParcadError as exc:
        logger.info("direct run did not finish: %s", exc)
        return None, None, None
    return direct, (time.perf_counter() - started) * 1000, direct.result.stats.total_cells


def experiment_params_sweep(kind: str, cfg: ExperimentConfig) -> list[RunRecord]:
    cfg.validate()
    if kind not in SWEEP_DEFAULTS:
        raise InvalidParams(f"unknown sweep kind {kind!r}")
    values = cfg.values if cfg.values else SWEEP_DEFAULTS[kind]
    records = []
    for value in values:
        for rep in range(cfg.repetitions):
            seed = derive_seed(cfg.seed, value, rep)
            params = _params_for(kind, value, cfg, seed)
            f = gen_formula(params)
            _, elapsed, cells = _timed_direct(f, cfg)
            records.append(
                RunRecord(
                    experiment=kind,
                    seed=seed,
                    n_vars=params.n_vars,
                    clauses=params.clauses,
                    polys=params.polys_per_clause,
                    T=params.max_terms,
                    E=params.max_exponent,
                    time_direct_ms=elapsed,
                    cells_direct=cells,
                )
            )
        log_progress(f"[sweep {kind}] value={value} reps={cfg.repetitions}")
    return records


@dataclass(frozen=True, slots=True)
class DistributionConfig:
    seed: int = 1
    n_vars: int = 6
    depth: int = 4
    fan_out: int = 3
    exists_probability: float = 0.1
    max_terms: int = 2
    max_exponent: int = 2
    atoms_only: bool = False
    clause_budget: int = DEFAULT_CLAUSE_BUDGET


@dataclass(frozen=True, slots=True)
class DistributionResult:
    # separability -> formula count; key -1 counts formulas over the clause budget
    histogram: dict[int, int]
    count: int

    @property
    def one_separable_fraction(self) -> float:
        return self.histogram.get(1, 0) / self.count if self.count else 0.0


def _random_atom(rng: SplitMix64, cfg: DistributionConfig) -> Atom:
    width = rng.randint(1, min(2, cfg.n_vars))
    variables = sorted(rng.sample(range(cfg.n_vars), width))
    poly = random_polynomial(rng, cfg.n_vars, variables, cfg.max_terms, max(cfg.max_exponent, 1))
    return Atom(poly, rng.choice(_RELATIONS))


def _random_tree(rng: SplitMix64, cfg: DistributionConfig, depth: int) -> Formula:
    leaf_probability = 0.2 if depth == cfg.depth - 1 else 0.35
    if depth == 0 or (depth < cfg.depth and rng.chance(leaf_probability)):
        atom = _random_atom(rng, cfg)
        return Not(atom) if rng.chance(0.1) else atom
    children = tuple(_random_tree(rng, cfg, depth - 1) for _ in range(rng.randint(2, cfg.fan_out)))
    return And(children) if rng.chance(0.5) else Or(children)


def random_non_cnf(rng: SplitMix64, cfg: DistributionConfig) -> PrenexFormula:
    matrix = _random_atom(rng, cfg) if cfg.atoms_only else _random_tree(rng, cfg, cfg.depth)
    variables = _variables(cfg.n_vars)
    block = tuple(
        (Quantifier.EXISTS if rng.chance(cfg.exists_probability) else Quantifier.FORALL, var) for var in variables
    )
    return PrenexFormula(variables, block, (), matrix).restricted(matrix)


def experiment_distribution(count: int, cfg: DistributionConfig | None = None) -> DistributionResult:
    cfg = cfg or DistributionConfig()
    rng = SplitMix64(cfg.seed)
    histogram: Counter[int] = Counter()
    for _ in range(count):
        f = random_non_cnf(rng, cfg)
        try:
            histogram[len(separate(f, cfg.clause_budget).clauses)] += 1
        except ClauseExplosion:
            histogram[-1] += 1
    return DistributionResult(dict(sorted(histogram.items())), count)


def experiment_speedup(cfg: ExperimentConfig) -> list[RunRecord]:
    """Direct elimination against the preprocessed pipeline on the same formulas."""
    cfg.validate()
    records = []
    for rep in range(cfg.repetitions):
        seed = derive_seed(cfg.seed, rep)
        params = GeneratorParams(
            n_vars=cfg.n_vars,
            clauses=cfg.clauses,
            polys_per_clause=cfg.polys_per_clause,
            max_terms=cfg.max_terms,
            max_exponent=cfg.max_exponent,
            seed=seed,
            relation=cfg.relation,
            free_vars=cfg.free_vars,
            layout=cfg.layout,
        )
        f = gen_formula(params)
        direct, direct_ms, direct_cells = _timed_direct(f, cfg)
        started = time.perf_counter()
        pipeline = run_pipeline(f, cfg.orchestrator(short_circuit=False))
        pipeline_ms = (time.perf_counter() - started) * 1000
        equivalent = None
        if direct is not None and direct.formula is not None and pipeline.formula is not None:
            equivalent = formulas_agree(direct.formula, pipeline.formula, f.nvars, sample_seed=seed)
        records.append(
            RunRecord(
                experiment="speedup",
                seed=seed,
                n_vars=params.n_vars,
                clauses=params.clauses,
                polys=params.polys_per_clause,
                T=params.max_terms,
                E=params.max_exponent,
                time_direct_ms=direct_ms,
                time_pipeline_ms=pipeline_ms if pipeline.status == "complete" else None,
                cells_direct=direct_cells,
                cells_pipeline=pipeline.total_cells,
                clause_count=len(pipeline.decomposition.clauses),
                equivalent=equivalent,
            )
        )
        log_progress(
            f"[speedup] rep={rep} direct={'unbounded' if direct_ms is None else f'{direct_ms:.1f}ms'} "
            f"pipeline={pipeline_ms:.1f}ms clauses={len(pipeline.decomposition.clauses)}"
        )
    return records


SHARING_FIRST_VARS = 3
SHARING_TOTAL_VARS = 6


@dataclass(frozen=True, slots=True)
class SharingConfig:
    seed: int = 1
    max_exponent: int = 3
    shares: tuple[int, ...] = (0, 1, 2, 3)
    cell_cap: int = DEFAULT_CELL_CAP

    def validate(self) -> None:
        problems = []
        if self.max_exponent < 1:
            problems.append("max_exponent must be at least 1")
        if any(not 0 <= s <= SHARING_FIRST_VARS for s in self.shares):
            problems.append(f"shares must lie between 0 and {SHARING_FIRST_VARS}")
        if not 0 <= self.seed <= MASK64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise InvalidParams("; ".join(problems))


@dataclass(frozen=True, slots=True)
class SharingRow:
    s: int
    cells_with: int | None
    cells_without: int | None

    @property
    def difference(self) -> int | None:
        if self.cells_with is None or self.cells_without is None:
            return None
        return self.cells_with - self.cells_without


def _coefficient(rng: SplitMix64) -> int:
    return rng.randint(1, MAX_COEFFICIENT) * (1 if rng.chance(0.5) else -1)


def _binomial(rng: SplitMix64, left: dict[int, int], right: dict[int, int]) -> Polynomial:
    """Two terms with random nonzero coefficients; the maps give variable exponents."""

    def monomial(exponents: dict[int, int]) -> tuple[int, ...]:
        return tuple(exponents.get(var, 0) for var in range(SHARING_TOTAL_VARS))

    return Polynomial.from_dict(
        SHARING_TOTAL_VARS, {monomial(left): _coefficient(rng), monomial(right): _coefficient(rng)}
    )


def sharing_formula(cfg: SharingConfig, s: int) -> PrenexFormula:
    """Two clauses over x0..x5 where the second one reuses x0..x(s-1).

    The first clause is a fixed line in x0 and a product x2^m (a x1 + b).
    The second one solves x4 and x5 linearly against bare powers of x3 and
    of the shared variables. Every main variable has degree one with a
    constant leading coefficient and all roots are rational, so the cell
    counts depend on s and not on the drawn coefficients.
    """
    if not 0 <= s <= SHARING_FIRST_VARS:
        raise InvalidParams(f"shared count must lie between 0 and {SHARING_FIRST_VARS}")
    first = SplitMix64(derive_seed(cfg.seed, 0))
    m = first.randint(1, cfg.max_exponent)
    line = _binomial(first, {0: 1}, {})
    product = _binomial(first, {1: 1, 2: m}, {2: m})

    second = SplitMix64(derive_seed(cfg.seed, 1))
    k = second.randint(1, cfg.max_exponent)
    powers = [second.randint(1, cfg.max_exponent) for _ in range(SHARING_FIRST_VARS)]
    own = _binomial(second, {4: 1}, {3: k})
    shared = _binomial(second, {5: 1}, {var: powers[var] for var in range(s)})

    matrix = And(
        (
            Or((Atom(line, Relation.EQ), Atom(product, Relation.EQ))),
            Or((Atom(own, Relation.EQ), Atom(shared, Relation.EQ))),
        )
    )
    return _universal(_variables(SHARING_TOTAL_VARS), 0, matrix)


def _cells(f: PrenexFormula, cap: int) -> int | None:
    try:
        return run_direct(f, OrchestratorConfig(cell_cap=cap)).result.stats.total_cells
    except ParcadError as exc:
        logger.info("sharing run did not finish: %s", exc)
        return None


def second_clause(f: PrenexFormula) -> PrenexFormula:
    if not isinstance(f.matrix, And) or len(f.matrix.args) != 2:
        raise InvalidParams("sharing study needs a two-clause conjunction")
    return f.restricted(f.matrix.args[1])


def experiment_sharing(cfg: SharingConfig | None = None, fixture: PrenexFormula | None = None) -> list[SharingRow]:
    """Cells for the whole formula and for its second clause alone, per sharing factor."""
    cfg = cfg or SharingConfig()
    if fixture is None:
        cfg.validate()
    rows = []
    cases = [(3, fixture)] if fixture is not None else [(s, sharing_formula(cfg, s)) for s in cfg.shares]
    for s, f in cases:
        rows.append(SharingRow(s, _cells(f, cfg.cell_cap), _cells(second_clause(f), cfg.cell_cap)))
        log_progress(f"[sharing] s={s} with={rows[-1].cells_with} without={rows[-1].cells_without}")
    return rows


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _csv_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def write_csv(records: Iterable[RunRecord], path: Path | None = None) -> str:
    lines = [list(CSV_COLUMNS)]
    for record in records:
        lines.append([_csv_value(getattr(record, column)) for column in CSV_COLUMNS])
    text = "\n".join(",".join(line) for line in lines) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


_INT_COLUMNS = {"seed", "n_vars", "clauses", "polys", "T", "E", "s", "cells_direct", "cells_pipeline", "clause_count"}
_FLOAT_COLUMNS = {"time_direct_ms", "time_pipeline_ms"}


def read_csv(path: Path) -> list[RunRecord]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise InvalidParams(f"{path} does not carry the benchmark CSV header")
        records = []
        for row in reader:
            values: dict[str, object] = {}
            for column in CSV_COLUMNS:
                raw = row[column]
                if raw == "":
                    values[column] = None
                elif column in _INT_COLUMNS:
                    values[column] = int(raw)
                elif column in _FLOAT_COLUMNS:
                    values[column] = float(raw)
                elif column == "equivalent":
                    values[column] = raw == "true"
                else:
                    values[column] = raw
            records.append(RunRecord(**values))
    return records


def load_fixture(path: Path) -> PrenexFormula:
    return parse_formula(path.read_text(encoding="utf-8"))
