"""Command-line entry point: ``parcad qe|preprocess|gen|bench|analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

from . import __version__
from .config import (
    default_cell_cap,
    default_clause_budget,
    default_clause_timeout,
    default_log_level,
    default_workers,
    configure_logging,
)
from .errors import EXIT_INPUT, EXIT_OK, EXIT_RESOURCE, ConfigError, ParcadError
from .expgen import (
    SWEEP_DEFAULTS,
    DistributionConfig,
    ExperimentConfig,
    GeneratorParams,
    SharingConfig,
    experiment_distribution,
    experiment_params_sweep,
    experiment_sharing,
    experiment_speedup,
    gen_formula,
    load_fixture,
    read_csv,
    summarize,
    write_csv,
)
from .formula import PrenexFormula, format_formula, parse_formula, print_formula
from .normalize import Combine, describe_decomposition, in_center, in_separable_class, separate, sharing_report
from .orchestrator import (
    Backend,
    ExternalBackend,
    InternalBackend,
    OrchestratorConfig,
    direct_as_dict,
    run_as_dict,
    run_direct,
    run_pipeline,
)
from .virtsub import apply_plan, find_substitutors

logger = logging.getLogger("parcad.cli")


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_backend(value: str) -> Backend:
    if value == "internal":
        return InternalBackend()
    if value.startswith("external:") and value.removeprefix("external:").strip():
        return ExternalBackend(value.removeprefix("external:"))
    raise ConfigError(f"backend must be 'internal' or 'external:<command template>', got {value!r}")


def _common(workers: int, cell_cap: int, timeout: float | None) -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--workers", type=int, default=workers, help="worker processes (default: PARCAD_WORKERS or 1)")
    common.add_argument("--seed", type=int, default=1, help="generator seed")
    common.add_argument("--backend", default="internal", help="internal | external:<command template>")
    common.add_argument("--cell-cap", type=int, default=cell_cap, help="cell cap per CAD run")
    common.add_argument(
        "--timeout",
        type=float,
        default=timeout,
        help="per-clause timeout in seconds (default: PARCAD_CLAUSE_TIMEOUT, 0 disables)",
    )
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", type=Path, help="write the result here instead of stdout")
    common.add_argument("--log-level", default=None, help="logging level (default: PARCAD_LOG_LEVEL or WARNING)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(default_workers(), default_cell_cap(), default_clause_timeout())
    parser = _Parser(prog="parcad", description="Parallel CAD quantifier-elimination preprocessor")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    qe_cmd = commands.add_parser("qe", parents=[common], help="eliminate the quantifiers of a formula file")
    qe_cmd.add_argument("path", help="formula file (.pf) or - for stdin")
    qe_cmd.add_argument("--direct", action="store_true", help="skip preprocessing and run one CAD")
    qe_cmd.add_argument("--no-vs", action="store_true", help="skip the virtual substitution step")
    qe_cmd.add_argument("--combine", choices=[c.value for c in Combine], default=Combine.CONJUNCTIVE.value)
    qe_cmd.add_argument("--no-short-circuit", action="store_true", help="run every clause even after FALSE")

    pre_cmd = commands.add_parser("preprocess", parents=[common], help="show normal form, substitution and clauses")
    pre_cmd.add_argument("path")
    pre_cmd.add_argument("--combine", choices=[c.value for c in Combine], default=Combine.CONJUNCTIVE.value)

    gen_cmd = commands.add_parser("gen", parents=[common], help="generate random CNF prenex formulas")
    gen_cmd.add_argument("--vars", type=int, default=2)
    gen_cmd.add_argument("--clauses", type=int, default=2)
    gen_cmd.add_argument("--polys", type=int, default=2)
    gen_cmd.add_argument("--terms", type=int, default=5, help="T, maximum terms per polynomial")
    gen_cmd.add_argument("--exponent", type=int, default=3, help="E, maximum exponent")
    gen_cmd.add_argument("--relation", choices=("=", "mixed"), default="=")
    gen_cmd.add_argument("--free", type=int, default=0, help="trailing free variables")
    gen_cmd.add_argument("--layout", choices=("shared", "blocks"), default="shared")
    gen_cmd.add_argument("--count", type=int, default=1)

    bench_cmd = commands.add_parser("bench", parents=[common], help="run one of the benchmark experiments")
    bench_cmd.add_argument("experiment", choices=("params", "distribution", "speedup", "sharing"))
    bench_cmd.add_argument("--kind", choices=tuple(SWEEP_DEFAULTS), default="max_terms")
    bench_cmd.add_argument("--values", default="", help="comma separated swept values")
    bench_cmd.add_argument("--reps", type=int, default=10)
    bench_cmd.add_argument("--count", type=int, default=100, help="formulas for the distribution experiment")
    bench_cmd.add_argument("--vars", type=int, default=None)
    bench_cmd.add_argument("--clauses", type=int, default=None)
    bench_cmd.add_argument("--polys", type=int, default=None)
    bench_cmd.add_argument("--terms", type=int, default=None)
    bench_cmd.add_argument("--exponent", type=int, default=None)
    bench_cmd.add_argument("--layout", choices=("shared", "blocks"), default=None)
    bench_cmd.add_argument("--fixture", type=Path, help="two-clause formula for the sharing study")

    analyze_cmd = commands.add_parser("analyze", parents=[common], help="report on a formula file or benchmark CSV")
    analyze_cmd.add_argument("path")
    return parser


def _read_formula(path: str) -> PrenexFormula:
    if path == "-":
        return parse_formula(sys.stdin.read())
    try:
        return load_fixture(Path(path))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _emit(text: str, out: Path | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _as_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=False)


def _orchestrator(args: argparse.Namespace, **overrides: Any) -> OrchestratorConfig:
    settings = dict(
        workers=args.workers,
        backend=parse_backend(args.backend),
        clause_budget=default_clause_budget(),
        cell_cap=args.cell_cap,
        per_clause_timeout=args.timeout or None,
    )
    settings.update(overrides)
    return OrchestratorConfig(**settings)


def cmd_qe(args: argparse.Namespace) -> int:
    f = _read_formula(args.path)
    names = f.names
    if args.direct:
        direct = run_direct(f, _orchestrator(args))
        if args.format == "json":
            _emit(_as_json(direct_as_dict(direct, names)), args.out)
        elif direct.formula is None:
            rows = [
                f"{'T' if row.truth else 'F'} {format_formula(row.conditions, names)}"
                for row in direct.result.truth_table
            ]
            _emit("\n".join(["extended truth table:", *rows]), args.out)
        else:
            _emit(format_formula(direct.formula, names), args.out)
        return EXIT_OK if direct.formula is not None else EXIT_RESOURCE

    config = _orchestrator(
        args,
        substitute=not args.no_vs,
        combine=Combine(args.combine),
        short_circuit=not args.no_short_circuit,
    )
    run = run_pipeline(f, config)
    if args.format == "json":
        _emit(_as_json(run_as_dict(run)), args.out)
    elif args.format == "csv":
        lines = ["index,status,wall_time,cells,result"]
        for outcome in run.outcomes:
            result = "" if outcome.formula is None else format_formula(outcome.formula, names)
            lines.append(f'{outcome.index},{outcome.status},{outcome.wall_time:.6f},{outcome.cells},"{result}"')
        _emit("\n".join(lines), args.out)
    else:
        answer = "<partial>" if run.formula is None else format_formula(run.formula, names)
        lines = [answer]
        for outcome in run.outcomes:
            detail = (
                format_formula(outcome.formula, names)
                if outcome.formula is not None
                else (outcome.error or {}).get("message", "")
            )
            lines.append(f"  clause {outcome.index}: {outcome.status} ({outcome.wall_time:.3f}s, {outcome.cells} cells) {detail}")
        _emit("\n".join(lines), args.out)
    if run.status != "complete":
        logger.warning("%d clause(s) failed", sum(outcome.formula is None for outcome in run.outcomes))
        return EXIT_RESOURCE
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    f = _read_formula(args.path)
    plan = find_substitutors(f)
    substituted = apply_plan(f, plan)
    decomposition = separate(substituted, default_clause_budget(), Combine(args.combine))
    names = f.names
    steps = [
        {"var": names[step.var], "substitutor": format_formula(step.substitutor, names)} for step in plan.steps
    ]
    if args.format == "json":
        data = {
            "substitutions": steps,
            "applied_to": list(plan.applied_to),
            "substituted": print_formula(substituted),
            "combine": decomposition.combine.value,
            "clauses": [print_formula(clause) for clause in decomposition.clauses],
        }
        _emit(_as_json(data), args.out)
        return EXIT_OK
    lines = [f"input: {print_formula(f)}"]
    for step in steps:
        lines.append(f"substitute {step['var']} from {step['substitutor']}")
    lines.append(f"{len(decomposition.clauses)} {decomposition.combine.value} clause(s):")
    lines.extend(f"  {line}" for line in describe_decomposition(decomposition))
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    printed = []
    for index in range(args.count):
        params = GeneratorParams(
            n_vars=args.vars,
            clauses=args.clauses,
            polys_per_clause=args.polys,
            max_terms=args.terms,
            max_exponent=args.exponent,
            seed=args.seed + index,
            relation=args.relation,
            free_vars=args.free,
            layout=args.layout,
        )
        printed.append(print_formula(gen_formula(params)))
    _emit(_as_json(printed) if args.format == "json" else "\n".join(printed), args.out)
    return EXIT_OK


def _experiment_config(args: argparse.Namespace, **defaults: Any) -> ExperimentConfig:
    values = tuple(int(part) for part in args.values.split(",") if part.strip()) if args.values else ()
    chosen = {
        "n_vars": args.vars,
        "clauses": args.clauses,
        "polys_per_clause": args.polys,
        "max_terms": args.terms,
        "max_exponent": args.exponent,
        "layout": args.layout,
    }
    settings = {**defaults, **{key: value for key, value in chosen.items() if value is not None}}
    return ExperimentConfig(
        repetitions=args.reps,
        seed=args.seed,
        workers=args.workers,
        cell_cap=args.cell_cap,
        clause_budget=default_clause_budget(),
        clause_timeout=args.timeout or None,
        values=values,
        **settings,
    )


def _records_output(records: list, fmt: str) -> str:
    if fmt == "csv":
        return write_csv(records)
    if fmt == "json":
        return _as_json([asdict(record) for record in records])
    return "\n".join(_summary_lines(records))


def _summary_lines(records: list) -> list[str]:
    lines = []
    for row in summarize(records):
        mean = row.mean_time()
        pipeline = row.mean_time("time_pipeline_ms")
        direct_text = "unbounded" if mean is None else f"{mean:.1f}ms"
        pipeline_text = "" if pipeline is None else f" pipeline={pipeline:.1f}ms"
        lines.append(
            f"{row.experiment} n={row.key[0]} clauses={row.key[1]} polys={row.key[2]} T={row.key[3]} E={row.key[4]}"
            f" reps={row.repetitions} direct={direct_text}{pipeline_text} unbounded={row.unbounded}"
        )
    return lines


def cmd_bench(args: argparse.Namespace) -> int:
    fmt = args.format if args.format != "text" or args.out is None else "csv"
    if args.experiment == "params":
        extra = {"clauses": 2, "polys_per_clause": 2, "max_terms": 5, "max_exponent": 3}
        if args.kind == "total_terms":
            extra = {"polys_per_clause": 2, "max_terms": 5, "max_exponent": 3}
        records = experiment_params_sweep(args.kind, _experiment_config(args, **extra))
        _emit(_records_output(records, fmt), args.out)
    elif args.experiment == "speedup":
        cfg = _experiment_config(
            args, n_vars=2, clauses=100, polys_per_clause=5, max_terms=5, max_exponent=2, layout="blocks"
        )
        records = experiment_speedup(cfg)
        _emit(_records_output(records, fmt), args.out)
    elif args.experiment == "distribution":
        result = experiment_distribution(args.count, DistributionConfig(seed=args.seed))
        if fmt == "json":
            data = {"histogram": result.histogram, "one_separable_fraction": result.one_separable_fraction}
            _emit(_as_json(data), args.out)
        else:
            lines = ["separability,count"] + [f"{key},{value}" for key, value in result.histogram.items()]
            if fmt == "text":
                lines.append(f"1-separable fraction: {result.one_separable_fraction:.3f}")
            _emit("\n".join(lines), args.out)
    else:
        fixture = load_fixture(args.fixture) if args.fixture else None
        rows = experiment_sharing(SharingConfig(seed=args.seed, cell_cap=args.cell_cap), fixture)
        if fmt == "json":
            _emit(_as_json([{**asdict(row), "difference": row.difference} for row in rows]), args.out)
        else:
            lines = ["s,cells_with,cells_without,difference"]
            for row in rows:
                cells = (row.cells_with, row.cells_without, row.difference)
                lines.append(f"{row.s}," + ",".join("" if value is None else str(value) for value in cells))
            _emit("\n".join(lines), args.out)
    return EXIT_OK


def _analyze_formula(f: PrenexFormula) -> dict[str, Any]:
    decomposition = separate(f, default_clause_budget())
    report = sharing_report(decomposition)
    n = f.nvars
    centers = {k: in_center(f, k) for k in range(1, n + 1) if n % k == 0}
    return {
        "formula": print_formula(f),
        "separability": len(decomposition.clauses),
        "separable_class": in_separable_class(f),
        "sharing_matrix": [list(row) for row in report.pair_factors],
        "max_sharing": report.max_factor,
        "center": {str(k): member for k, member in centers.items()},
    }


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.path.endswith(".csv"):
        records = read_csv(Path(args.path))
        if args.format == "json":
            data = [
                {
                    "experiment": row.experiment,
                    "key": list(row.key),
                    "repetitions": row.repetitions,
                    "mean_time_direct_ms": row.mean_time(),
                    "mean_time_pipeline_ms": row.mean_time("time_pipeline_ms"),
                    "unbounded": row.unbounded,
                }
                for row in summarize(records)
            ]
            _emit(_as_json(data), args.out)
        else:
            _emit("\n".join(_summary_lines(records)) or "no rows", args.out)
        return EXIT_OK

    data = _analyze_formula(_read_formula(args.path))
    if args.format == "json":
        _emit(_as_json(data), args.out)
        return EXIT_OK
    lines = [
        f"formula: {data['formula']}",
        f"separability: {data['separability']}",
        f"separable class: {'yes' if data['separable_class'] else 'no'}",
        f"max sharing factor: {data['max_sharing']}",
        "sharing matrix:",
        *("  " + " ".join(str(value) for value in row) for row in data["sharing_matrix"]),
        "center membership: " + ", ".join(f"k={k}:{'yes' if v else 'no'}" for k, v in data["center"].items()),
    ]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


COMMANDS = {
    "qe": cmd_qe,
    "preprocess": cmd_preprocess,
    "gen": cmd_gen,
    "bench": cmd_bench,
    "analyze": cmd_analyze,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level.upper() if args.log_level else default_log_level())
        return COMMANDS[args.command](args)
    except ParcadError as exc:
        print(f"parcad: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # level names and --values entries
        print(f"parcad: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
