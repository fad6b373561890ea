"""Record/replay fixtures for deterministic tests of model-backed runs.

Fixtures are JSON Lines files with one ``{"prompt": ..., "response": ...}``
object per line (an optional ``"usage"`` object is kept when present).
Prompts are matched exactly after trimming surrounding whitespace.
"""
from __future__ import annotations

import enum
import json
import threading
from dataclasses import asdict
from pathlib import Path

from .base import Backend, Completion, FixtureMiss, TokenUsage, complete


class ReplayMode(str, enum.Enum):
    RECORD = "record"
    REPLAY = "replay"
    REPLAY_STRICT = "replay-strict"


def _key(prompt: str) -> str:
    return prompt.strip()


class ReplayStore:
    """Fixture-backed backend.

    * ``RECORD`` forwards every prompt to ``inner`` and appends the pair to
      ``path`` (when given).
    * ``REPLAY`` answers recorded prompts and falls back to ``inner`` when one
      is configured, otherwise raises :class:`FixtureMiss`.
    * ``REPLAY_STRICT`` raises :class:`FixtureMiss` for any unseen prompt.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        mode: ReplayMode | str = ReplayMode.REPLAY_STRICT,
        inner: Backend | None = None,
    ):
        self.mode = ReplayMode(mode)
        self.path = Path(path) if path is not None else None
        self.inner = inner
        self.pairs: dict[str, Completion] = {}
        self._lock = threading.Lock()
        if self.mode is ReplayMode.RECORD and inner is None:
            raise ValueError("record mode needs an inner backend")
        if self.path is not None and self.path.exists():
            self.load(self.path)
        elif self.mode is not ReplayMode.RECORD and self.path is not None:
            raise FileNotFoundError(self.path)

    def load(self, path: str | Path) -> None:
        with open(path, encoding="utf-8") as fp:
            for line in fp:
                if not line.strip():
                    continue
                rec = json.loads(line)
                usage = rec.get("usage")
                usage = TokenUsage(**usage) if usage else TokenUsage.estimate(rec["prompt"], rec["response"])
                self.pairs[_key(rec["prompt"])] = Completion(rec["response"], usage)

    def add(self, prompt: str, response: str, usage: TokenUsage | None = None) -> None:
        usage = usage or TokenUsage.estimate(prompt, response)
        with self._lock:
            key = _key(prompt)
            if key in self.pairs:
                return
            self.pairs[key] = Completion(response, usage)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fp:
                    rec = {"prompt": prompt, "response": response, "usage": asdict(usage)}
                    fp.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def infer(self, prompt: str) -> Completion:
        if self.mode is ReplayMode.RECORD:
            result = complete(self.inner, prompt)
            self.add(prompt, result.text, result.usage)
            return result
        hit = self.pairs.get(_key(prompt))
        if hit is not None:
            return hit
        if self.mode is ReplayMode.REPLAY and self.inner is not None:
            return complete(self.inner, prompt)
        raise FixtureMiss(prompt)

    def __len__(self) -> int:
        return len(self.pairs)


def replay_infer(store: ReplayStore, prompt: str) -> str:
    return store.infer(prompt).text
