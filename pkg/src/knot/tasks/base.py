from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any, ClassVar

from ..pipeline import BaselinePrompts, PromptParts
from ..runtime import parse_list


class UnknownTask(KeyError):
    def __str__(self) -> str:
        return f"unknown task {self.args[0]!r}"


class UnsupportedSize(ValueError):
    pass


class Unparseable(ValueError):
    """The raw answer cannot be read as an answer for the task."""


@dataclass(frozen=True)
class TaskInstance:
    task: str
    size: int
    seed: int
    payload: dict = field(hash=False)

    def to_dict(self, ground_truth: Any = None) -> dict:
        d = {"task": self.task, "size": self.size, "seed": self.seed, "payload": self.payload}
        if ground_truth is not None:
            d["ground_truth"] = ground_truth
        return d


def read_data(*parts: str) -> str:
    text = resources.files("knot.data").joinpath("/".join(parts)).read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def parse_number(text: str) -> Fraction:
    """Read one decimal number, tolerating quotes, brackets and a trailing period."""
    s = text.strip().strip("'\"[]`").strip()
    if s.endswith(".") and not s.endswith(".."):
        s = s[:-1]
    s = s.replace(",", "") if re.fullmatch(r"[-+]?\d{1,3}(,\d{3})+(\.\d+)?", s) else s
    if not re.fullmatch(r"[-+]?(\d+(\.\d*)?|\.\d+)", s):
        raise Unparseable(f"not a number: {text!r}")
    return Fraction(s)


def last_list(text: str) -> list[str]:
    """Elements of the answer list: the whole text if bracketed, else its last ``[...]``."""
    s = text.strip().strip("`").strip()
    if not (s.startswith("[") and s.endswith("]")):
        start = s.rfind("[")
        end = s.find("]", start)
        if start < 0 or end < 0:
            raise Unparseable(f"no list found in {text!r}")
        s = s[start:end + 1]
    return parse_list(s)


class Task:
    """One benchmark use case: generator, renderer, oracle and normalizer."""

    name: ClassVar[str]
    sizes: ClassVar[tuple[int, ...]]

    def generate(self, size: int, seed: int, *, strict_size: bool = True, **options) -> TaskInstance:
        if strict_size and size not in self.sizes:
            raise UnsupportedSize(f"{self.name} supports sizes {list(self.sizes)}, got {size}")
        if size < 1:
            raise UnsupportedSize(f"size must be positive, got {size}")
        rng = random.Random(f"{self.name}:{size}:{seed}")
        return TaskInstance(self.name, size, seed, self._payload(size, rng, **options))

    def _payload(self, size: int, rng: random.Random, **options) -> dict:
        raise NotImplementedError

    def render(self, instance: TaskInstance) -> tuple[str, dict[str, str]]:
        """Query text and named bindings for the script."""
        raise NotImplementedError

    def query(self, instance: TaskInstance) -> str:
        return self.render(instance)[0]

    def ground_truth(self, instance: TaskInstance) -> Any:
        raise NotImplementedError

    def normalize(self, raw: str) -> Any:
        raise NotImplementedError

    def format_answer(self, answer: Any) -> str:
        return str(answer)

    def is_correct(self, raw: str | None, instance: TaskInstance) -> bool:
        if raw is None:
            return False
        try:
            return self.normalize(raw) == self.ground_truth(instance)
        except Unparseable:
            return False

    def fixture_script(self, instance: TaskInstance) -> str:
        """Instance-specific LWT script following the task's example strategy."""
        raise NotImplementedError

    def fixture_plan(self) -> str:
        return read_data("fixtures", self.name, "plan.txt")

    def prompt_parts(self) -> PromptParts:
        return PromptParts(
            context=read_data("tasks", self.name, "context.txt"),
            lwt_example=read_data("tasks", self.name, "example.lwt"),
        )

    baseline: ClassVar[BaselinePrompts]

    def to_json(self, instance: TaskInstance) -> str:
        gt = self.ground_truth(instance)
        return json.dumps(instance.to_dict(self.format_answer(gt)))


def line(index: int, body: str) -> str:
    return f'({index})=LLM("{body}")'
