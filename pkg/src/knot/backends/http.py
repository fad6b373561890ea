"""Chat-completion client for OpenAI-compatible endpoints."""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import httpx

from .base import AuthError, Completion, ProviderError, RateLimited, RequestTimeout, TokenUsage

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "KNOT_API_KEY"
_RETRY_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    initial_backoff: float = 1.0
    multiplier: float = 2.0
    max_backoff: float = 30.0

    def delay(self, attempt: int) -> float:
        return min(self.initial_backoff * self.multiplier ** attempt, self.max_backoff)


@dataclass(frozen=True)
class HttpBackendConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo"
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = 0.0
    max_output_tokens: int = 4096
    timeout: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or None


class HttpBackend:
    """Single-turn chat completion per prompt, with retries on transient failures.

    ``transport`` and ``sleep`` exist so tests can stub the network and the
    backoff clock.
    """

    def __init__(
        self,
        config: HttpBackendConfig | None = None,
        *,
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config or HttpBackendConfig()
        self._api_key = api_key
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=self.config.base_url.rstrip("/"),
            timeout=self.config.timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _payload(self, prompt: str) -> dict:
        return {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }

    def infer(self, prompt: str) -> Completion:
        key = self._api_key or self.config.api_key()
        if not key:
            raise AuthError(f"no API key: set ${self.config.api_key_env}")
        if not prompt:
            raise ValueError("prompt must be non-empty")
        policy = self.config.retry
        last: Exception | None = None
        for attempt in range(policy.max_attempts):
            if attempt:
                delay = policy.delay(attempt - 1)
                logger.warning("retrying chat completion in %.1fs (%s)", delay, last)
                self._sleep(delay)
            try:
                resp = self._client.post(
                    "/chat/completions",
                    json=self._payload(prompt),
                    headers={"Authorization": f"Bearer {key}"},
                )
            except httpx.TimeoutException as exc:
                last = RequestTimeout(str(exc) or "request timed out")
                continue
            except httpx.TransportError as exc:
                last = ProviderError(0, str(exc))
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if resp.status_code in _RETRY_STATUS:
                last = (RateLimited("rate limited (HTTP 429)") if resp.status_code == 429
                        else ProviderError(resp.status_code, resp.text))
                continue
            if resp.status_code >= 400:
                raise ProviderError(resp.status_code, resp.text)
            return self._parse(prompt, resp)
        assert last is not None
        raise last

    @staticmethod
    def _parse(prompt: str, resp: httpx.Response) -> Completion:
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            raise ProviderError(resp.status_code, resp.text) from None
        usage = body.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            tokens = TokenUsage(int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        else:
            tokens = TokenUsage.estimate(prompt, content)
        return Completion(content, tokens)


def http_infer(cfg: HttpBackendConfig, prompt: str, **kwargs) -> Completion:
    with HttpBackend(cfg, **kwargs) as backend:
        return backend.infer(prompt)
