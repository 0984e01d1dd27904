"""Exception hierarchy shared by every parcad module.

Each error keeps its structured fields as attributes and passes them to
``Exception.__init__`` so instances survive pickling across worker processes.
"""

from __future__ import annotations

from typing import Any

# Exit codes used by the CLI.
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RESOURCE = 2


class ParcadError(Exception):
    exit_code = EXIT_INPUT

    def __str__(self) -> str:
        return self.describe()

    def describe(self) -> str:
        return " ".join(str(arg) for arg in self.args)


class ConfigError(ParcadError):
    pass


class InvalidParams(ParcadError):
    pass


class FormulaSyntaxError(ParcadError):
    def __init__(self, position: int, expected: str, text: str = "") -> None:
        super().__init__(position, expected, text)
        self.position = position
        self.expected = expected
        self.text = text

    def describe(self) -> str:
        snippet = self.text[self.position : self.position + 20]
        return f"syntax error at position {self.position}: expected {self.expected} (near {snippet!r})"


class UndeclaredVariable(ParcadError):
    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.name = name

    def describe(self) -> str:
        return f"variable {self.name!r} is not in the declared variable order"


class AlgebraError(ParcadError):
    pass


class DegreeZero(AlgebraError):
    def describe(self) -> str:
        return "polynomial is constant in the main variable"


class DegreeTooLow(AlgebraError):
    def describe(self) -> str:
        return "discriminant needs degree >= 2 in the main variable"


class ZeroPolynomial(AlgebraError):
    def describe(self) -> str:
        return "zero polynomial has no isolated roots"


class ClauseExplosion(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, budget: int, needed: int) -> None:
        super().__init__(budget, needed)
        self.budget = budget
        self.needed = needed

    def describe(self) -> str:
        return f"CNF distribution needs {self.needed} clauses, budget is {self.budget}"


class InvalidK(ParcadError):
    def __init__(self, k: int, n: int) -> None:
        super().__init__(k, n)
        self.k = k
        self.n = n

    def describe(self) -> str:
        return f"k={self.k} must be positive and divide the variable count n={self.n}"


class ResourceLimit(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, what: str, limit: int) -> None:
        super().__init__(what, limit)
        self.what = what
        self.limit = limit

    def describe(self) -> str:
        return f"{self.what} exceeded the cap of {self.limit}"


class ClauseTimeout(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, seconds: float) -> None:
        super().__init__(seconds)
        self.seconds = seconds

    def describe(self) -> str:
        return f"elimination exceeded {self.seconds:g}s"


class LiftingDegeneracy(ParcadError):
    """Raised when root candidates over an algebraic sample point cannot be formed."""

    exit_code = EXIT_RESOURCE


class NotSignDefinable(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, first: tuple[int, ...], second: tuple[int, ...]) -> None:
        super().__init__(first, second)
        self.first = first
        self.second = second

    def describe(self) -> str:
        return f"cells {self.first} and {self.second} share a sign vector but differ in truth"


class ClauseFailed(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, failures: list[tuple[int, str]]) -> None:
        super().__init__(failures)
        self.failures = failures

    def describe(self) -> str:
        parts = ", ".join(f"clause {index}: {cause}" for index, cause in self.failures)
        return f"{len(self.failures)} clause(s) failed ({parts})"


class BackendError(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, exit_code: int, output: str) -> None:
        super().__init__(exit_code, output)
        self.returncode = exit_code
        self.output = output

    def describe(self) -> str:
        tail = self.output.strip().splitlines()[-3:]
        return f"external backend exited with {self.returncode}: {' | '.join(tail)}"


class BackendParseError(ParcadError):
    exit_code = EXIT_RESOURCE


class BackendTimeout(ParcadError):
    exit_code = EXIT_RESOURCE

    def __init__(self, seconds: float) -> None:
        super().__init__(seconds)
        self.seconds = seconds

    def describe(self) -> str:
        return f"external backend timed out after {self.seconds:g}s"


def error_record(exc: BaseException) -> dict[str, Any]:
    """Plain-data view of an exception for ledgers and JSON output."""
    return {"kind": type(exc).__name__, "message": str(exc)}
