#!/usr/bin/env python3
"""Run the parcad CLI regression cases listed in test-suite/manifest.json.

Each case invokes ``python -m parcad <command> [args] [path]`` with the
repository's ``modules/`` on PYTHONPATH and checks the exit code, top-level
JSON fields and stdout/stderr substrings. stdout, stderr and a result record
are kept under ``test-suite/artifacts/<case>/`` for inspection.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

REPO_ROOT = Path(__file__).resolve().parents[1]
MODULES_DIR = REPO_ROOT / "modules"
DEFAULT_MANIFEST = Path(__file__).with_name("manifest.json")
COMMANDS = ("qe", "preprocess", "gen", "bench", "analyze")
PATHLESS_COMMANDS = frozenset({"gen", "bench"})
# expect key -> (stream, must contain)
SUBSTRING_RULES = {
    "require_substrings": ("stdout", True),
    "forbid_substrings": ("stdout", False),
    "require_substrings_stderr": ("stderr", True),
    "forbid_substrings_stderr": ("stderr", False),
}


@dataclass(frozen=True)
class Case:
    id: str
    command: str
    description: str
    path: Optional[str] = None
    args: tuple[str, ...] = ()
    env: dict[str, str] = field(default_factory=dict)
    expect: dict[str, Any] = field(default_factory=dict)
    enabled: bool = True
    skip_reason: str = "disabled in manifest"

    @classmethod
    def from_entry(cls, entry: dict[str, Any]) -> Case:
        return cls(
            id=entry["id"],
            command=entry["command"],
            description=entry["description"].strip(),
            path=entry.get("path"),
            args=tuple(entry.get("args", ())),
            env={key: str(value) for key, value in (entry.get("env") or {}).items()},
            expect=entry.get("expect") or {},
            enabled=entry.get("enabled", True),
            skip_reason=entry.get("skip_reason", "disabled in manifest"),
        )

    def argv(self, default_args: Sequence[str]) -> list[str]:
        argv = [sys.executable, "-m", "parcad", self.command, *default_args, *self.args]
        if self.path:
            argv.append(os.path.relpath(REPO_ROOT / self.path, REPO_ROOT))
        return argv


@dataclass
class Outcome:
    case_id: str
    status: str
    seconds: float = 0.0
    problems: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [f"[{self.case_id}] {self.status.upper()} ({self.seconds:.2f}s)"]
        lines.extend(f"  - {problem}" for problem in self.problems)
        return "\n".join(lines)


def load_manifest(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        sys.exit(f"Manifest not found: {path}")
    except json.JSONDecodeError as exc:
        sys.exit(f"Invalid JSON in manifest {path}: {exc}")
    if not isinstance(data, dict) or not isinstance(data.get("cases"), list):
        sys.exit("Manifest must contain a 'cases' array")
    return data


def _text(value: Any) -> bool:
    return isinstance(value, str) and bool(value.strip())


def _strings(value: Any, label: str) -> list[str]:
    if not isinstance(value, list):
        return [f"{label} must be a list of strings"]
    return [f"{label}[{i}] must be a non-empty string" for i, item in enumerate(value) if not _text(item)]


def _env(value: Any, label: str) -> list[str]:
    if not isinstance(value, dict):
        return [f"{label} must be an object of string values"]
    problems = [f"{label} has an empty key" for key in value if not _text(key)]
    problems += [f"{label}.{key} must be a string" for key, item in value.items() if not isinstance(item, str)]
    return problems


def expect_problems(expect: Any, label: str) -> list[str]:
    if expect is None:
        return []
    if not isinstance(expect, dict):
        return [f"{label}.expect must be an object"]
    problems = []
    code = expect.get("exit_code")
    if isinstance(code, bool) or not (code is None or isinstance(code, (int, str))):
        problems.append(f"{label}.expect.exit_code must be an integer, zero or nonzero")
    elif isinstance(code, int) and code < 0:
        problems.append(f"{label}.expect.exit_code must be non-negative")
    elif isinstance(code, str) and code not in ("zero", "nonzero"):
        problems.append(f"{label}.expect.exit_code must be an integer, zero or nonzero")
    if "json" in expect and not isinstance(expect["json"], dict):
        problems.append(f"{label}.expect.json must be an object of top-level fields")
    for key in SUBSTRING_RULES:
        if key in expect:
            problems += _strings(expect[key], f"{label}.expect.{key}")
    return problems


def case_problems(entry: Any, position: int) -> list[str]:
    label = f"manifest case #{position}"
    if not isinstance(entry, dict):
        return [f"{label} must be an object"]
    if _text(entry.get("id")):
        label = f"case {entry['id']}"
    problems = [f"{label}.{key} must be a non-empty string" for key in ("id", "command", "description") if not _text(entry.get(key))]
    command = entry.get("command")
    if _text(command) and command not in COMMANDS:
        problems.append(f"{label}.command must be one of {', '.join(COMMANDS)}")
    path = entry.get("path")
    if path is None and command not in PATHLESS_COMMANDS:
        problems.append(f"{label}.path is required for {command}")
    elif path is not None and not _text(path):
        problems.append(f"{label}.path must be a non-empty string")
    elif path is not None and not (REPO_ROOT / path).exists():
        problems.append(f"{label}.path does not exist: {path}")
    if "enabled" in entry and not isinstance(entry["enabled"], bool):
        problems.append(f"{label}.enabled must be a boolean")
    if "args" in entry:
        problems += _strings(entry["args"], f"{label}.args")
    if "env" in entry:
        problems += _env(entry["env"], f"{label}.env")
    return problems + expect_problems(entry.get("expect"), label)


def manifest_problems(manifest: dict[str, Any]) -> list[str]:
    problems = []
    defaults = manifest.get("defaults", {})
    if not isinstance(defaults, dict):
        problems.append("defaults must be an object")
    else:
        if "artifacts_dir" in defaults and not _text(defaults["artifacts_dir"]):
            problems.append("defaults.artifacts_dir must be a non-empty string")
        if "args" in defaults:
            problems += _strings(defaults["args"], "defaults.args")
        if "env" in defaults:
            problems += _env(defaults["env"], "defaults.env")
    entries = manifest.get("cases", [])
    if not entries:
        return [*problems, "cases must contain at least one case"]
    for position, entry in enumerate(entries, start=1):
        problems += case_problems(entry, position)
    ids = Counter(entry.get("id") for entry in entries if isinstance(entry, dict) and _text(entry.get("id")))
    problems += [f"duplicate case id {case_id}" for case_id, seen in sorted(ids.items()) if seen > 1]
    return problems


def first_json(stdout: str) -> Optional[Any]:
    """The first JSON object or array starting a line of stdout."""
    decoder = json.JSONDecoder()
    lines = stdout.splitlines()
    for index, line in enumerate(lines):
        if not line.lstrip().startswith(("{", "[")):
            continue
        try:
            value, _ = decoder.raw_decode("\n".join(lines[index:]).lstrip())
        except json.JSONDecodeError:
            continue
        return value
    return None


def expectation_problems(expect: dict[str, Any], exit_code: int, payload: Any, stdout: str, stderr: str) -> list[str]:
    problems = []
    wanted = expect.get("exit_code")
    if wanted == "zero":
        wanted = 0
    if wanted == "nonzero":
        if exit_code == 0:
            problems.append("expected a non-zero exit but got 0")
    elif wanted is not None and exit_code != wanted:
        problems.append(f"expected exit {wanted} but got {exit_code}")

    fields = expect.get("json") or {}
    if fields and not isinstance(payload, dict):
        problems.append("expected a JSON object on stdout")
    elif fields:
        for key, value in fields.items():
            if key not in payload:
                problems.append(f"JSON output lacks '{key}'")
            elif payload[key] != value:
                problems.append(f"JSON {key} is {payload[key]!r}, expected {value!r}")

    streams = {"stdout": stdout, "stderr": stderr}
    for key, (stream, present) in SUBSTRING_RULES.items():
        for needle in expect.get(key, ()):
            if (needle in streams[stream]) != present:
                verb = "missing" if present else "forbidden"
                problems.append(f"{verb} substring '{needle}' in {stream}")
    return problems


def _decoded(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bytes):
        return value.decode("utf-8", errors="replace")
    return str(value)


def run_case(case: Case, default_args: Sequence[str], default_env: dict[str, str], artifacts: Path, timeout: int) -> Outcome:
    argv = case.argv(default_args)
    env = {**os.environ, **default_env, **case.env}
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [str(MODULES_DIR), env.get("PYTHONPATH", "")]))
    artifacts.mkdir(parents=True, exist_ok=True)
    record: dict[str, Any] = {"id": case.id, "command": argv}

    print(f"[{case.id}] RUN {' '.join(argv[2:])}", flush=True)
    started = time.monotonic()
    try:
        proc = subprocess.run(
            argv, cwd=REPO_ROOT, env=env, text=True, capture_output=True, timeout=timeout or None
        )
    except subprocess.TimeoutExpired as exc:
        seconds = time.monotonic() - started
        (artifacts / "stdout.log").write_text(_decoded(exc.stdout))
        (artifacts / "stderr.log").write_text(_decoded(exc.stderr).rstrip("\n") + f"\nTimed out after {timeout}s\n")
        record.update(duration_sec=seconds, timeout_sec=timeout, timed_out=True, payload=None)
        (artifacts / "result.json").write_text(json.dumps(record, indent=2))
        return Outcome(case.id, "fail", seconds, [f"timed out after {timeout}s"])

    seconds = time.monotonic() - started
    payload = first_json(proc.stdout)
    (artifacts / "stdout.log").write_text(proc.stdout)
    (artifacts / "stderr.log").write_text(proc.stderr)
    record.update(exit_code=proc.returncode, duration_sec=seconds, payload=payload)
    (artifacts / "result.json").write_text(json.dumps(record, indent=2))
    problems = expectation_problems(case.expect, proc.returncode, payload, proc.stdout, proc.stderr)
    return Outcome(case.id, "fail" if problems else "pass", seconds, problems)


def default_case_timeout() -> int:
    raw = os.environ.get("PARCAD_MANIFEST_CASE_TIMEOUT", "120")
    try:
        value = int(raw)
    except ValueError:
        sys.exit(f"PARCAD_MANIFEST_CASE_TIMEOUT must be an integer, got {raw!r}")
    if value < 0:
        sys.exit("PARCAD_MANIFEST_CASE_TIMEOUT must be non-negative")
    return value


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Run parcad manifest cases")
    parser.add_argument("--manifest", type=Path, default=DEFAULT_MANIFEST)
    parser.add_argument("--case", dest="cases", action="append", help="run only this case id (repeatable)")
    parser.add_argument("--list", action="store_true", help="list case ids and exit")
    parser.add_argument("--fail-fast", action="store_true", help="stop after the first failure")
    parser.add_argument(
        "--case-timeout",
        type=int,
        default=default_case_timeout(),
        help="seconds per case, 0 disables (default: 120 or PARCAD_MANIFEST_CASE_TIMEOUT)",
    )
    args = parser.parse_args(argv)

    manifest = load_manifest(args.manifest)
    if args.list:
        for entry in manifest["cases"]:
            state = "enabled" if entry.get("enabled", True) else "disabled"
            print(f"{entry.get('id')}: {state} :: {entry.get('description', '').strip()}")
        return 0

    problems = manifest_problems(manifest)
    if problems:
        print(Outcome("manifest", "fail", problems=problems).render(), file=sys.stderr)
        return 1
    cases = [Case.from_entry(entry) for entry in manifest["cases"]]
    selected = set(args.cases or ())
    unknown = sorted(selected - {case.id for case in cases})
    if unknown:
        print(Outcome("manifest", "fail", problems=[f"no such case id {case_id}" for case_id in unknown]).render(), file=sys.stderr)
        return 1

    defaults = manifest.get("defaults", {})
    artifacts_root = (args.manifest.parent / defaults.get("artifacts_dir", "artifacts")).resolve()
    default_env = {key: str(value) for key, value in (defaults.get("env") or {}).items()}
    tally = Counter()
    for case in cases:
        if selected and case.id not in selected:
            continue
        if not case.enabled:
            outcome = Outcome(case.id, "skipped", problems=[case.skip_reason])
        else:
            outcome = run_case(case, defaults.get("args", []), default_env, artifacts_root / case.id, args.case_timeout)
        tally[outcome.status] += 1
        print(outcome.render(), flush=True)
        if outcome.status == "fail" and args.fail_fast:
            break

    total = sum(tally.values())
    print(f"\nCompleted {total} case(s): {tally['pass']} passed, {tally['fail']} failed, {tally['skipped']} skipped.")
    return 1 if tally["fail"] else 0


if __name__ == "__main__":
    sys.exit(main())
