"""End-to-end runs of the ``parcad`` command line."""

import contextlib
import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from parcad.cli import main
from parcad.errors import EXIT_INPUT, EXIT_OK, EXIT_RESOURCE
from parcad.expgen import RunRecord, write_csv
from parcad.formula import parse_formula

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def run_cli(*argv: str) -> tuple[int, str, str]:
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        code = main(list(argv))
    return code, stdout.getvalue(), stderr.getvalue()


class QeCommandTest(unittest.TestCase):
    def test_text_answer_and_ledger(self) -> None:
        code, out, _ = run_cli("qe", str(FIXTURES / "circle.pf"))

        self.assertEqual(code, EXIT_OK)
        first, *ledger = out.splitlines()
        self.assertIn("x0", first)
        self.assertEqual(len(ledger), 1)
        self.assertIn("clause 0: ok", ledger[0])

    def test_json_output(self) -> None:
        code, out, _ = run_cli("qe", str(FIXTURES / "quadratic.pf"), "--format", "json")

        data = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data["status"], "complete")
        self.assertEqual(len(data["clauses"]), 1)

    def test_csv_ledger(self) -> None:
        code, out, _ = run_cli("qe", str(FIXTURES / "blocks_k2.pf"), "--format", "csv", "--no-short-circuit")

        lines = out.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], "index,status,wall_time,cells,result")
        self.assertEqual(len(lines), 3)

    def test_direct(self) -> None:
        code, out, _ = run_cli("qe", "--direct", str(FIXTURES / "positive.pf"))

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.strip(), "TRUE")

    def test_cell_cap_gives_a_partial_run(self) -> None:
        code, out, _ = run_cli("qe", str(FIXTURES / "circle.pf"), "--cell-cap", "1")

        self.assertEqual(code, EXIT_RESOURCE)
        self.assertEqual(out.splitlines()[0], "<partial>")
        self.assertIn("failed", out)

    def test_syntax_error(self) -> None:
        code, out, err = run_cli("qe", str(FIXTURES / "broken.pf"))

        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(out, "")
        self.assertIn("syntax error", err)

    def test_missing_file(self) -> None:
        code, _, err = run_cli("qe", str(FIXTURES / "does-not-exist.pf"))

        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("cannot read", err)

    def test_unknown_backend(self) -> None:
        code, _, err = run_cli("qe", str(FIXTURES / "circle.pf"), "--backend", "mathematica")

        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("backend", err)

    def test_bad_environment(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_WORKERS": "many"}):
            code, _, err = run_cli("qe", str(FIXTURES / "circle.pf"))

        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("PARCAD_WORKERS", err)

    def test_usage_errors_exit_with_input_code(self) -> None:
        with contextlib.redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as caught:
            main(["explode"])

        self.assertEqual(caught.exception.code, EXIT_INPUT)

    def test_out_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "answer.txt"
            code, out, _ = run_cli("qe", "--direct", str(FIXTURES / "positive.pf"), "--out", str(target))

            self.assertEqual(code, EXIT_OK)
            self.assertEqual(out, "")
            self.assertEqual(target.read_text(encoding="utf-8"), "TRUE\n")


class PreprocessCommandTest(unittest.TestCase):
    def test_substitution_and_clauses(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "vs.pf"
            path.write_text("(E x)(E y)[2 x + 3 y - 1 = 0 /\\ x + y > 0]\n", encoding="utf-8")

            code, out, _ = run_cli("preprocess", str(path), "--format", "json")

        data = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual([step["var"] for step in data["substitutions"]], ["x"])
        self.assertEqual(data["applied_to"], [1])
        self.assertEqual(data["combine"], "conjunctive")

    def test_text_lists_clauses(self) -> None:
        code, out, _ = run_cli("preprocess", str(FIXTURES / "blocks_k2.pf"))

        self.assertEqual(code, EXIT_OK)
        self.assertIn("2 conjunctive clause(s):", out)


class GenCommandTest(unittest.TestCase):
    def test_generated_formulas_parse_back(self) -> None:
        code, out, _ = run_cli("gen", "--count", "3", "--vars", "2", "--terms", "2", "--format", "json")

        printed = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(printed), 3)
        for text in printed:
            self.assertEqual(parse_formula(text).nvars, 2)

    def test_seed_is_reproducible(self) -> None:
        self.assertEqual(run_cli("gen", "--seed", "5"), run_cli("gen", "--seed", "5"))


class AnalyzeCommandTest(unittest.TestCase):
    def test_formula_report(self) -> None:
        code, out, _ = run_cli("analyze", str(FIXTURES / "blocks_k2.pf"), "--format", "json")

        data = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data["separability"], 2)
        self.assertTrue(data["separable_class"])
        self.assertEqual(data["max_sharing"], 0)
        self.assertTrue(data["center"]["2"])
        self.assertFalse(data["center"]["4"])

    def test_csv_summary(self) -> None:
        records = [RunRecord("max_terms", seed, 2, 2, 2, 1, 3, time_direct_ms=ms) for seed, ms in ((1, 2.0), (2, 4.0))]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bench.csv"
            write_csv(records, path)

            code, out, _ = run_cli("analyze", str(path))

        self.assertEqual(code, EXIT_OK)
        self.assertIn("reps=2 direct=3.0ms", out)


class BenchCommandTest(unittest.TestCase):
    def test_distribution_histogram(self) -> None:
        code, out, _ = run_cli("bench", "distribution", "--count", "6", "--format", "json")

        data = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(sum(data["histogram"].values()), 6)

    def test_params_sweep_as_csv(self) -> None:
        code, out, _ = run_cli(
            "bench", "params", "--kind", "max_exponent", "--values", "1", "--reps", "1",
            "--vars", "1", "--terms", "2", "--format", "csv",
        )

        lines = out.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(lines[0].startswith("experiment,seed,"))
        self.assertEqual(len(lines), 2)

    def test_bad_values(self) -> None:
        code, _, _ = run_cli("bench", "params", "--values", "1,two", "--reps", "1")

        self.assertEqual(code, EXIT_INPUT)


if __name__ == "__main__":
    unittest.main()
