"""Preprocessing pipeline: NNF, substitution, separation, parallel elimination, combination."""

from __future__ import annotations

import logging
import shlex
import subprocess
import time
from collections.abc import Sequence
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Union

from .cadqe import Deadline, QeResult, qe
from .config import DEFAULT_CELL_CAP, DEFAULT_CLAUSE_BUDGET
from .errors import (
    BackendError,
    BackendParseError,
    BackendTimeout,
    ClauseFailed,
    ConfigError,
    NotSignDefinable,
    ParcadError,
    error_record,
)
from .formula import (
    FALSE,
    TRUE,
    FalseConst,
    Formula,
    PrenexFormula,
    TrueConst,
    conjunction,
    disjunction,
    format_formula,
    parse_formula,
    print_formula,
)
from .normalize import Combine, Decomposition, Trace, nnf, separate
from .virtsub import apply_plan

logger = logging.getLogger(__name__)

OK = "ok"
FAILED = "failed"
CANCELLED = "cancelled"
ANSWER_MARKER = "An equivalent quantifier-free formula:"


@dataclass(frozen=True, slots=True)
class InternalBackend:
    name: str = "internal"


@dataclass(frozen=True, slots=True)
class ExternalBackend:
    """Command template; ``{vars}``, ``{free_count}`` and ``{formula}`` are filled per clause."""

    command: str
    name: str = "external"


Backend = Union[InternalBackend, ExternalBackend]


@dataclass(frozen=True, slots=True)
class OrchestratorConfig:
    workers: int = 1
    backend: Backend = field(default_factory=InternalBackend)
    clause_budget: int = DEFAULT_CLAUSE_BUDGET
    cell_cap: int = DEFAULT_CELL_CAP
    per_clause_timeout: float | None = None
    short_circuit: bool = True
    substitute: bool = True
    combine: Combine = Combine.CONJUNCTIVE

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.cell_cap < 1:
            raise ConfigError(f"cell cap must be positive, got {self.cell_cap}")
        if self.per_clause_timeout is not None and self.per_clause_timeout <= 0:
            raise ConfigError("per-clause timeout must be positive when set")


@dataclass(frozen=True, slots=True)
class ClauseOutcome:
    index: int
    status: str
    formula: Formula | None = None
    error: dict[str, Any] | None = None
    wall_time: float = 0.0
    cells: int = 0
    stats: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class RunResult:
    formula: Formula | None
    status: str
    outcomes: tuple[ClauseOutcome, ...]
    decomposition: Decomposition
    trace: Trace
    combine_time: float
    total_wall: float

    @property
    def total_cells(self) -> int:
        return sum(outcome.cells for outcome in self.outcomes)

    def raise_for_status(self) -> None:
        if self.status != "complete":
            failures = [
                (outcome.index, (outcome.error or {}).get("message", outcome.status))
                for outcome in self.outcomes
                if outcome.status != OK
            ]
            raise ClauseFailed(failures)


@dataclass(frozen=True, slots=True)
class DirectResult:
    formula: Formula | None
    result: QeResult
    wall_time: float


def _absorbing(combine: Combine) -> type:
    return FalseConst if combine is Combine.CONJUNCTIVE else TrueConst


def _eliminate_clause(index: int, clause: PrenexFormula, config: OrchestratorConfig) -> ClauseOutcome:
    """Worker entry point; every failure comes back as a plain record."""
    started = time.perf_counter()
    try:
        if isinstance(config.backend, ExternalBackend):
            formula = external_eliminate(clause, config.backend.command, config.per_clause_timeout)
            cells, stats = 0, {}
        else:
            result = qe(clause, cell_cap=config.cell_cap, deadline=Deadline(config.per_clause_timeout))
            if result.formula is None:
                raise NotSignDefinable(result.truth_table[0].index_path, result.truth_table[-1].index_path)
            formula, cells, stats = result.formula, result.stats.total_cells, result.stats.as_dict()
    except ParcadError as exc:
        return ClauseOutcome(index, FAILED, error=error_record(exc), wall_time=time.perf_counter() - started)
    return ClauseOutcome(index, OK, formula, wall_time=time.perf_counter() - started, cells=cells, stats=stats)


def _run_inline(clauses: Sequence[PrenexFormula], config: OrchestratorConfig, combine: Combine) -> list[ClauseOutcome]:
    outcomes: list[ClauseOutcome] = []
    for index, clause in enumerate(clauses):
        try:
            outcome = _eliminate_clause(index, clause, config)
        except Exception as exc:
            logger.exception("clause %d raised outside the engine's error hierarchy", index)
            outcome = ClauseOutcome(index, FAILED, error=error_record(exc))
        if outcome.status == FAILED:
            logger.warning("clause %d failed: %s", index, outcome.error["message"])
        outcomes.append(outcome)
        if config.short_circuit and isinstance(outcome.formula, _absorbing(combine)):
            outcomes.extend(ClauseOutcome(rest, CANCELLED) for rest in range(index + 1, len(clauses)))
            break
    return outcomes


def _run_pool(clauses: Sequence[PrenexFormula], config: OrchestratorConfig, combine: Combine) -> list[ClauseOutcome]:
    results: dict[int, ClauseOutcome] = {}
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        pending: dict[Future, int] = {
            pool.submit(_eliminate_clause, index, clause, config): index for index, clause in enumerate(clauses)
        }
        while pending:
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            stop = False
            for future in done:
                index = pending.pop(future)
                outcome = _collect(future, index)
                results[index] = outcome
                if outcome.status == FAILED:
                    logger.warning("clause %d failed: %s", index, outcome.error["message"])
                if config.short_circuit and isinstance(outcome.formula, _absorbing(combine)):
                    stop = True
            if stop and pending:
                logger.info("clause result decides the run; cancelling %d clause(s)", len(pending))
                for future in pending:
                    future.cancel()
                pool.shutdown(wait=True, cancel_futures=True)
                for future, index in pending.items():
                    if future.done() and not future.cancelled():
                        results[index] = _collect(future, index)
                    else:
                        results[index] = ClauseOutcome(index, CANCELLED)
                break
    return [results[index] for index in range(len(clauses))]


def _collect(future: Future, index: int) -> ClauseOutcome:
    try:
        return future.result()
    except Exception as exc:  # a crashed worker or an unexpected algebra failure
        logger.exception("clause %d raised outside the engine's error hierarchy", index)
        return ClauseOutcome(index, FAILED, error=error_record(exc))


def dispatch(clauses: Sequence[PrenexFormula], config: OrchestratorConfig, combine: Combine) -> list[ClauseOutcome]:
    if config.workers == 1 or len(clauses) <= 1:
        return _run_inline(clauses, config, combine)
    return _run_pool(clauses, config, combine)


def combine_outcomes(outcomes: Sequence[ClauseOutcome], combine: Combine) -> tuple[Formula | None, str]:
    """Combined formula in clause order; ``None`` with status ``partial`` when a needed clause is missing."""
    absorbing = _absorbing(combine)
    if any(isinstance(outcome.formula, absorbing) for outcome in outcomes):
        return (FALSE if combine is Combine.CONJUNCTIVE else TRUE), "complete"
    if any(outcome.status != OK for outcome in outcomes):
        return None, "partial"
    join = conjunction if combine is Combine.CONJUNCTIVE else disjunction
    return join(outcome.formula for outcome in outcomes), "complete"


def run_pipeline(f: PrenexFormula, config: OrchestratorConfig | None = None) -> RunResult:
    config = config or OrchestratorConfig()
    started = time.perf_counter()
    normal = nnf(f)
    substituted = apply_plan(normal) if config.substitute else normal
    decomposition = separate(substituted, config.clause_budget, config.combine)
    trace = Trace(f, normal, substituted, decomposition.trace.clause_form)
    logger.info(
        "dispatching %d clause(s) to %d worker(s) on the %s backend",
        len(decomposition.clauses),
        config.workers,
        config.backend.name,
    )
    outcomes = dispatch(decomposition.clauses, config, decomposition.combine)
    combining = time.perf_counter()
    formula, status = combine_outcomes(outcomes, decomposition.combine)
    combine_time = time.perf_counter() - combining
    if status != "complete":
        logger.warning("run is partial: %d clause(s) without a result", sum(o.status != OK for o in outcomes))
    return RunResult(
        formula,
        status,
        tuple(outcomes),
        decomposition,
        trace,
        combine_time,
        time.perf_counter() - started,
    )


def run_direct(f: PrenexFormula, config: OrchestratorConfig | None = None) -> DirectResult:
    """Eliminate ``f`` as one instance, without preprocessing."""
    config = config or OrchestratorConfig()
    started = time.perf_counter()
    result = qe(f, cell_cap=config.cell_cap, deadline=Deadline(config.per_clause_timeout))
    return DirectResult(result.formula, result, time.perf_counter() - started)


# ---------------------------------------------------------------------------
# External backend
# ---------------------------------------------------------------------------


def _elimination_order(clause: PrenexFormula) -> tuple[list[str], int]:
    used = clause.matrix_variables()
    free = [var.name for var in clause.free_vars if var.index in used]
    bound = [var.name for _, var in clause.block]
    return [*free, *bound], len(free)


def qepcad_script(clause: PrenexFormula) -> str:
    names, free_count = _elimination_order(clause)
    quantifiers = "".join(f"({q.value} {var.name})" for q, var in clause.block)
    matrix = format_formula(clause.matrix, clause.names)
    return "\n".join(
        [
            "[parcad clause]",
            "(" + ",".join(names) + ")",
            str(free_count),
            f"{quantifiers}[{matrix}].",
            "finish",
            "",
        ]
    )


def _output_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bytes):
        return value.decode("utf-8", errors="replace")
    return str(value)


def parse_backend_answer(output: str, clause: PrenexFormula) -> Formula:
    lines = [line.strip() for line in output.splitlines()]
    answer = ""
    if ANSWER_MARKER in lines:
        for line in lines[lines.index(ANSWER_MARKER) + 1 :]:
            if line:
                answer = line
                break
    else:
        answer = next((line for line in reversed(lines) if line), "")
    if not answer:
        raise BackendParseError("backend produced no answer line")
    try:
        parsed = parse_formula(f"[{answer.rstrip('.')}]", variables=clause.names)
    except ParcadError as exc:
        raise BackendParseError(f"cannot read backend answer {answer!r}: {exc}") from exc
    return parsed.matrix


def external_eliminate(clause: PrenexFormula, template: str, timeout: float | None = None) -> Formula:
    names, free_count = _elimination_order(clause)
    script = qepcad_script(clause)
    fields = {
        "vars": ",".join(names),
        "free_count": str(free_count),
        "formula": print_formula(clause),
    }
    command = [part.format(**fields) for part in shlex.split(template)]
    try:
        proc = subprocess.run(command, input=script, text=True, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        logger.debug("backend output before timeout: %s", _output_text(exc.stdout))
        raise BackendTimeout(timeout or 0) from exc
    except OSError as exc:
        raise BackendError(127, str(exc)) from exc
    if proc.returncode != 0:
        raise BackendError(proc.returncode, proc.stdout + proc.stderr)
    return parse_backend_answer(proc.stdout, clause)


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def outcome_as_dict(outcome: ClauseOutcome, names: Sequence[str]) -> dict[str, Any]:
    return {
        "index": outcome.index,
        "status": outcome.status,
        "result": None if outcome.formula is None else format_formula(outcome.formula, names),
        "error": outcome.error,
        "wall_time": round(outcome.wall_time, 6),
        "cells": outcome.cells,
    }


def run_as_dict(run: RunResult) -> dict[str, Any]:
    names = run.trace.original.names
    return {
        "formula": None if run.formula is None else format_formula(run.formula, names),
        "status": run.status,
        "combine": run.decomposition.combine.value,
        "clauses": [print_formula(clause) for clause in run.decomposition.clauses],
        "ledger": [outcome_as_dict(outcome, names) for outcome in run.outcomes],
        "combine_time": round(run.combine_time, 6),
        "total_wall": round(run.total_wall, 6),
        "total_cells": run.total_cells,
        "trace": {
            "original": print_formula(run.trace.original),
            "nnf": print_formula(run.trace.nnf),
            "substituted": print_formula(run.trace.substituted),
            "clause_form": print_formula(run.trace.clause_form),
        },
    }


def direct_as_dict(direct: DirectResult, names: Sequence[str]) -> dict[str, Any]:
    table = [
        {
            "index_path": list(row.index_path),
            "sample_point": [float(coordinate) for coordinate in row.sample_point],
            "conditions": format_formula(row.conditions, names),
            "truth": row.truth,
        }
        for row in direct.result.truth_table
    ]
    return {
        "formula": None if direct.formula is None else format_formula(direct.formula, names),
        "extended": direct.result.extended,
        "stats": direct.result.stats.as_dict(),
        "truth_table": table if direct.result.extended else [],
        "wall_time": round(direct.wall_time, 6),
    }
