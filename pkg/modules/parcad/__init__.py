"""parcad: split prenex formulas into independent clauses and eliminate them with CAD in parallel."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import ParcadError
from .formula import PrenexFormula, parse_formula, print_formula
from .normalize import Combine, Decomposition, separate
from .orchestrator import OrchestratorConfig, RunResult, run_direct, run_pipeline

__all__ = [
    "Combine",
    "Decomposition",
    "OrchestratorConfig",
    "ParcadError",
    "PrenexFormula",
    "RunResult",
    "__version__",
    "parse_formula",
    "print_formula",
    "run_direct",
    "run_pipeline",
    "separate",
]
