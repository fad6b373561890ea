from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Protocol, Union, runtime_checkable


def estimate_tokens(text: str) -> int:
    """Rough offline token count: one token per four characters."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    estimated: bool = False

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.estimated or other.estimated,
        )

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    @classmethod
    def estimate(cls, prompt: str, response: str) -> "TokenUsage":
        return cls(estimate_tokens(prompt), estimate_tokens(response), estimated=True)


class Completion(NamedTuple):
    text: str
    usage: TokenUsage


@runtime_checkable
class Backend(Protocol):
    def infer(self, prompt: str) -> Completion: ...


class InferenceError(Exception):
    """Base class for errors raised by backends."""


class AuthError(InferenceError):
    pass


class RateLimited(InferenceError):
    pass


class RequestTimeout(InferenceError):
    pass


class ProviderError(InferenceError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class FixtureMiss(InferenceError):
    def __init__(self, prompt: str):
        super().__init__(f"no recorded response for prompt {prompt[:120]!r}")
        self.prompt = prompt


class UnrecognizedPattern(InferenceError):
    def __init__(self, prompt: str):
        super().__init__(f"oracle cannot interpret prompt {prompt[:120]!r}")
        self.prompt = prompt


class DivisionByZero(InferenceError, ZeroDivisionError):
    pass


class FunctionBackend:
    """Adapt a plain ``prompt -> str`` callable (handy for stubs)."""

    def __init__(self, fn: Callable[[str], Union[str, Completion]]):
        self.fn = fn

    def infer(self, prompt: str) -> Completion:
        out = self.fn(prompt)
        if isinstance(out, str):
            return Completion(out, TokenUsage.estimate(prompt, out))
        return Completion(*out)


def complete(backend: Backend, prompt: str) -> Completion:
    """Call ``backend.infer`` and coerce a bare string result into a Completion."""
    result = backend.infer(prompt)
    if isinstance(result, str):
        return Completion(result, TokenUsage.estimate(prompt, result))
    return Completion(*result)
