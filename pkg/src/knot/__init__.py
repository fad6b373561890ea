"""Knowledge-extraction, LWT translation and step-wise execution of prompt networks."""
from __future__ import annotations

__version__ = "0.1.0"

from .backends import OracleBackend, ReplayStore, resolve_backend
from .lwt import LwtScript, ParseError, parse_script, serialize, to_dot, validate_script
from .pipeline import AblationConfig, PromptParts, run_knot
from .runtime import ExecutionTrace, execute_parallel, execute_script, index_value

__all__ = [
    "__version__",
    "AblationConfig",
    "ExecutionTrace",
    "LwtScript",
    "OracleBackend",
    "ParseError",
    "PromptParts",
    "ReplayStore",
    "execute_parallel",
    "execute_script",
    "index_value",
    "parse_script",
    "resolve_backend",
    "run_knot",
    "serialize",
    "to_dot",
    "validate_script",
]
