#!/usr/bin/env python3
"""Acceptance gates for the parcad preprocessor and its CAD engine.

Every gate runs the real engine on seeded inputs and checks the result
against an independent oracle or a trend. Gates are named phases; sizes
come from PARCAD_ACCEPTANCE_* environment variables so that a quick pass
and the full protocol share one code path.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[2]
TEST_ROOT = REPO_ROOT / "test-suite"
FIXTURES = TEST_ROOT / "fixtures"

for path in (REPO_ROOT / "modules", TEST_ROOT / "parcad"):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))

from parcad.errors import ParcadError  # noqa: E402
from parcad.expgen import (  # noqa: E402
    DistributionConfig,
    ExperimentConfig,
    GeneratorParams,
    SharingConfig,
    SplitMix64,
    derive_seed,
    experiment_distribution,
    experiment_params_sweep,
    experiment_sharing,
    formulas_agree,
    gen_formula,
    load_fixture,
)
from parcad.formula import Polynomial, PrenexFormula, format_formula, parse_formula  # noqa: E402
from parcad.orchestrator import OrchestratorConfig, run_direct, run_pipeline  # noqa: E402
from parcad.polyarith import UnivariateView, resultant, sturm_isolate  # noqa: E402

import oracles  # noqa: E402

GROUND_TRUTH = (
    ("quadratic.pf", "b^2 - 4 c >= 0"),
    ("positive.pf", "TRUE"),
    ("linear_sign.pf", "a < 0"),
    ("circle.pf", "x0^2 - 1 <= 0"),
)
PHASES = (
    "ground-truth",
    "soundness",
    "determinism",
    "speedup",
    "distribution",
    "sharing",
    "kernel",
    "growth",
)
QUICK_PHASES = ("ground-truth", "determinism", "distribution", "kernel")


def env_size(name: str, default: int) -> int:
    raw_value = os.environ.get(name, str(default))
    try:
        value = int(raw_value)
    except ValueError as exc:
        raise AssertionError(f"{name} must be an integer") from exc
    if value <= 0:
        raise AssertionError(f"{name} must be positive")
    return value


@dataclass(frozen=True, slots=True)
class Sizes:
    soundness_count: int
    determinism_count: int
    speedup_seeds: int
    speedup_clauses: int
    speedup_workers: int
    direct_timeout: int
    distribution_count: int
    oracle_pairs: int
    sweep_reps: int

    @classmethod
    def from_env(cls) -> Sizes:
        return cls(
            soundness_count=env_size("PARCAD_ACCEPTANCE_SOUNDNESS_COUNT", 100),
            determinism_count=env_size("PARCAD_ACCEPTANCE_DETERMINISM_COUNT", 20),
            speedup_seeds=env_size("PARCAD_ACCEPTANCE_SPEEDUP_SEEDS", 10),
            speedup_clauses=env_size("PARCAD_ACCEPTANCE_SPEEDUP_CLAUSES", 100),
            speedup_workers=env_size("PARCAD_ACCEPTANCE_SPEEDUP_WORKERS", 8),
            direct_timeout=env_size("PARCAD_ACCEPTANCE_DIRECT_TIMEOUT", 120),
            distribution_count=env_size("PARCAD_ACCEPTANCE_DISTRIBUTION_COUNT", 100),
            oracle_pairs=env_size("PARCAD_ACCEPTANCE_ORACLE_PAIRS", 200),
            sweep_reps=env_size("PARCAD_ACCEPTANCE_SWEEP_REPS", 10),
        )


def enable_line_buffered_stdout() -> None:
    reconfigure = getattr(sys.stdout, "reconfigure", None)
    if callable(reconfigure):
        reconfigure(line_buffering=True)


def log_progress(message: str) -> None:
    print(message, flush=True)


def expected_formula(f: PrenexFormula, text: str):
    return parse_formula(f"[{text}]", variables=f.names).matrix


def check_ground_truth(sizes: Sizes) -> None:
    for name, text in GROUND_TRUTH:
        f = load_fixture(FIXTURES / name)
        expected = expected_formula(f, text)
        for label, answer in (("pipeline", run_pipeline(f).formula), ("direct", run_direct(f).formula)):
            if answer is None or not formulas_agree(answer, expected, f.nvars):
                shown = None if answer is None else format_formula(answer, f.names)
                raise AssertionError(f"{name} ({label}) gave {shown}, expected {text}")
        log_progress(f"[ground-truth] {name} ok")


def soundness_params(seed: int) -> GeneratorParams:
    rng = SplitMix64(seed)
    n_vars = rng.randint(1, 3)
    return GeneratorParams(
        n_vars=n_vars,
        clauses=rng.randint(1, 4),
        polys_per_clause=rng.randint(1, 2),
        max_terms=rng.randint(1, 3),
        max_exponent=rng.randint(1, 3),
        seed=seed,
        relation="mixed",
        free_vars=rng.randint(0, min(1, n_vars - 1)),
    )


def check_soundness(sizes: Sizes) -> None:
    config = OrchestratorConfig(cell_cap=20_000, short_circuit=False)
    completed = 0
    for index in range(sizes.soundness_count):
        seed = derive_seed(2024, index)
        f = gen_formula(soundness_params(seed))
        try:
            direct = run_direct(f, config)
        except ParcadError as exc:
            log_progress(f"[soundness] seed={seed} direct did not finish: {exc}")
            continue
        pipeline = run_pipeline(f, config)
        if direct.formula is None or pipeline.formula is None:
            continue
        completed += 1
        if not formulas_agree(direct.formula, pipeline.formula, f.nvars, sample_seed=seed):
            raise AssertionError(
                f"seed {seed}: pipeline {format_formula(pipeline.formula, f.names)} "
                f"differs from direct {format_formula(direct.formula, f.names)}"
            )
    rate = completed / sizes.soundness_count
    log_progress(f"[soundness] {completed}/{sizes.soundness_count} completed and agreed")
    if rate < 0.9:
        raise AssertionError(f"only {rate:.0%} of soundness runs completed, need 90%")


def check_determinism(sizes: Sizes) -> None:
    for index in range(sizes.determinism_count):
        seed = derive_seed(77, index)
        f = gen_formula(
            GeneratorParams(
                n_vars=2, clauses=4, polys_per_clause=1, max_terms=2, max_exponent=2, seed=seed, layout="blocks"
            )
        )
        printed = set()
        for workers in (1, 2, 4, 8):
            run = run_pipeline(f, OrchestratorConfig(workers=workers, short_circuit=False, cell_cap=50_000))
            printed.add(None if run.formula is None else format_formula(run.formula, f.names))
        if len(printed) != 1:
            raise AssertionError(f"seed {seed}: worker counts disagree: {sorted(map(str, printed))}")
    log_progress(f"[determinism] {sizes.determinism_count} inputs identical across 1/2/4/8 workers")


def _timed(action: Callable[[], object]) -> tuple[float, object]:
    started = time.perf_counter()
    result = action()
    return time.perf_counter() - started, result


def check_speedup(sizes: Sizes) -> None:
    serial_times, parallel_times, direct_times = [], [], []
    for index in range(sizes.speedup_seeds):
        seed = derive_seed(4242, index)
        f = gen_formula(
            GeneratorParams(
                n_vars=2,
                clauses=sizes.speedup_clauses,
                polys_per_clause=5,
                max_terms=5,
                max_exponent=2,
                seed=seed,
                layout="blocks",
            )
        )
        serial, _ = _timed(lambda: run_pipeline(f, OrchestratorConfig(workers=1, short_circuit=False)))
        parallel, _ = _timed(
            lambda: run_pipeline(f, OrchestratorConfig(workers=sizes.speedup_workers, short_circuit=False))
        )
        try:
            direct, _ = _timed(lambda: run_direct(f, OrchestratorConfig(per_clause_timeout=sizes.direct_timeout)))
        except ParcadError:
            direct = float("inf")
        serial_times.append(serial)
        parallel_times.append(parallel)
        direct_times.append(direct)
        log_progress(f"[speedup] seed={seed} serial={serial:.2f}s parallel={parallel:.2f}s direct={direct:.2f}s")
    serial, parallel, direct = (statistics.median(t) for t in (serial_times, parallel_times, direct_times))
    if parallel > 0.5 * serial:
        raise AssertionError(f"median parallel {parallel:.2f}s is not within half of serial {serial:.2f}s")
    if parallel > 0.5 * direct:
        raise AssertionError(f"median parallel {parallel:.2f}s is not within half of direct {direct:.2f}s")


def check_distribution(sizes: Sizes) -> None:
    result = experiment_distribution(sizes.distribution_count, DistributionConfig(seed=1))
    log_progress(f"[distribution] histogram={result.histogram} 1-separable={result.one_separable_fraction:.3f}")
    if result.one_separable_fraction > 0.25:
        raise AssertionError(f"1-separable fraction {result.one_separable_fraction:.3f} exceeds 0.25")


def sharing_trend_errors(differences: dict[int, int | None]) -> list[str]:
    """Cell differences must grow away from s=0; one intermediate share may misbehave."""
    if any(value is None for value in differences.values()):
        return ["a sharing run did not finish"]
    base = differences[0]
    errors = []
    intermediate = [s for s in differences if s not in (0, max(differences))]
    anomalies = [s for s in intermediate if differences[s] <= base]
    if len(anomalies) > 1:
        errors.append(f"shares {anomalies} do not exceed s=0")
    if differences[max(differences)] <= base:
        errors.append(f"s={max(differences)} does not exceed s=0")
    if not any(differences[s] >= 2 * base and differences[s] > base for s in differences if s >= 2):
        errors.append("no share of 2 or more doubles the s=0 difference")
    return errors


def check_sharing(sizes: Sizes) -> None:
    rows = experiment_sharing(SharingConfig(seed=1))
    errors = sharing_trend_errors({row.s: row.difference for row in rows})
    if errors:
        raise AssertionError("; ".join(errors))


def _univariate(coeffs: Sequence[int]) -> Polynomial:
    return Polynomial.from_dict(1, {(k,): c for k, c in enumerate(coeffs) if c})


def check_kernel(sizes: Sizes) -> None:
    rng = SplitMix64(99)
    for _ in range(sizes.oracle_pairs):
        p, q = (_random_bivariate(rng) for _ in range(2))
        expected = oracles.sylvester_resultant(p, q, 0)
        if resultant(UnivariateView.of(p, 0), UnivariateView.of(q, 0)) != expected:
            raise AssertionError(f"resultant mismatch for {p} and {q}")
    log_progress(f"[kernel] {sizes.oracle_pairs} resultants match the Sylvester determinant")
    for _ in range(sizes.oracle_pairs):
        p = _univariate([1])
        for _ in range(rng.randint(0, 4)):
            p = p * _univariate([-rng.randint(-40, 40), 2])
        if rng.chance(0.5):
            p = p * _univariate([rng.randint(1, 5), 0, 1])
        if sturm_isolate(p).count != oracles.grid_root_count(p):
            raise AssertionError(f"Sturm count disagrees with grid scan for {p}")
    log_progress(f"[kernel] {sizes.oracle_pairs} root counts match the grid scan")


def _random_bivariate(rng: SplitMix64) -> Polynomial:
    while True:
        acc = {}
        for _ in range(rng.randint(1, 5)):
            i = rng.randint(0, 3)
            j = rng.randint(0, 3 - i)
            acc[(i, j)] = acc.get((i, j), 0) + rng.randint(-9, 9)
        p = Polynomial.from_dict(2, acc)
        if p.degree(0) >= 1:
            return p


def decreasing_steps(means: Sequence[float]) -> int:
    return sum(later < earlier for earlier, later in zip(means, means[1:]))


def check_growth(sizes: Sizes) -> None:
    for kind in ("max_terms", "max_exponent"):
        cfg = ExperimentConfig(repetitions=sizes.sweep_reps, n_vars=2, values=(1, 2, 3, 4, 5), cell_cap=200_000)
        records = experiment_params_sweep(kind, cfg)
        means = []
        for value in cfg.values:
            column = "T" if kind == "max_terms" else "E"
            times = [r.time_direct_ms for r in records if getattr(r, column) == value]
            finished = [t for t in times if t is not None]
            # unfinished runs count as slower than anything measured
            means.append(float("inf") if len(finished) < len(times) else statistics.fmean(finished))
        log_progress(f"[growth] {kind} means={['inf' if m == float('inf') else round(m, 1) for m in means]}")
        if decreasing_steps(means) > 1:
            raise AssertionError(f"{kind} sweep decreases in more than one step: {means}")


CHECKS: dict[str, Callable[[Sizes], None]] = {
    "ground-truth": check_ground_truth,
    "soundness": check_soundness,
    "determinism": check_determinism,
    "speedup": check_speedup,
    "distribution": check_distribution,
    "sharing": check_sharing,
    "kernel": check_kernel,
    "growth": check_growth,
}


def main(argv: list[str]) -> int:
    enable_line_buffered_stdout()
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--phase",
        dest="phases",
        action="append",
        choices=PHASES,
        help="run only this phase (can repeat); default: the quick phases",
    )
    parser.add_argument("--all", action="store_true", help="run every phase, including the slow ones")
    args = parser.parse_args(argv)

    sizes = Sizes.from_env()
    phases = PHASES if args.all else tuple(args.phases or QUICK_PHASES)
    failures = 0
    for phase in phases:
        started = time.perf_counter()
        try:
            CHECKS[phase](sizes)
        except AssertionError as exc:
            failures += 1
            log_progress(f"[{phase}] FAIL ({time.perf_counter() - started:.1f}s): {exc}")
            continue
        log_progress(f"[{phase}] PASS ({time.perf_counter() - started:.1f}s)")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
