"""Inference backends: live HTTP, record/replay fixtures, and the offline oracle."""
from __future__ import annotations

from .base import (
    AuthError,
    Backend,
    Completion,
    DivisionByZero,
    FixtureMiss,
    FunctionBackend,
    InferenceError,
    ProviderError,
    RateLimited,
    RequestTimeout,
    TokenUsage,
    UnrecognizedPattern,
    complete,
    estimate_tokens,
)
from .http import HttpBackend, HttpBackendConfig, RetryPolicy, http_infer
from .oracle import OracleBackend, oracle_infer
from .replay import ReplayMode, ReplayStore, replay_infer


def resolve_backend(
    spec: str,
    *,
    http_config: HttpBackendConfig | None = None,
    record_from: str = "oracle",
) -> Backend:
    """Build a backend from ``oracle``, ``http``, ``replay:PATH`` or ``record:PATH``.

    ``record:PATH`` forwards to ``record_from`` (``oracle`` or ``http``) and
    appends every exchange to PATH.  Replay is strict: unseen prompts fail.
    """
    kind, _, arg = spec.partition(":")
    if kind == "oracle" and not arg:
        return OracleBackend()
    if kind == "http" and not arg:
        return HttpBackend(http_config)
    if kind in ("replay", "record") and arg:
        if kind == "replay":
            return ReplayStore(arg, ReplayMode.REPLAY_STRICT)
        return ReplayStore(arg, ReplayMode.RECORD, inner=resolve_backend(record_from, http_config=http_config))
    raise ValueError(f"bad backend {spec!r}; expected oracle, http, replay:PATH or record:PATH")

__all__ = [
    "AuthError",
    "Backend",
    "Completion",
    "DivisionByZero",
    "FixtureMiss",
    "FunctionBackend",
    "HttpBackend",
    "HttpBackendConfig",
    "InferenceError",
    "OracleBackend",
    "ProviderError",
    "RateLimited",
    "ReplayMode",
    "ReplayStore",
    "RequestTimeout",
    "RetryPolicy",
    "TokenUsage",
    "UnrecognizedPattern",
    "complete",
    "estimate_tokens",
    "http_infer",
    "oracle_infer",
    "replay_infer",
    "resolve_backend",
]
