"""The six benchmark use cases and module-level helpers over them."""
from __future__ import annotations

from typing import Any

from ..pipeline import PromptParts
from .arithmetic import ArithmeticTask, LargeDigitTask, evaluate, expression
from .base import Task, TaskInstance, UnknownTask, Unparseable, UnsupportedSize
from .language import COUNTRIES, KeywordTask, YelpTask, load_review_corpus
from .symbolic import SetIntersectionTask, SortingTask

TASKS: dict[str, Task] = {
    t.name: t
    for t in (YelpTask(), KeywordTask(), SortingTask(), SetIntersectionTask(),
              ArithmeticTask(), LargeDigitTask())
}


def get_task(name: str) -> Task:
    try:
        return TASKS[name]
    except KeyError:
        raise UnknownTask(name) from None


def generate(name: str, size: int, seed: int, **options) -> TaskInstance:
    return get_task(name).generate(size, seed, **options)


def ground_truth(instance: TaskInstance) -> Any:
    return get_task(instance.task).ground_truth(instance)


def normalize(name: str, raw: str) -> Any:
    return get_task(name).normalize(raw)


def prompt_parts(name: str) -> PromptParts:
    return get_task(name).prompt_parts()


__all__ = [
    "TASKS",
    "Task",
    "TaskInstance",
    "UnknownTask",
    "UnsupportedSize",
    "Unparseable",
    "ArithmeticTask",
    "LargeDigitTask",
    "SortingTask",
    "SetIntersectionTask",
    "YelpTask",
    "KeywordTask",
    "COUNTRIES",
    "evaluate",
    "expression",
    "load_review_corpus",
    "get_task",
    "generate",
    "ground_truth",
    "normalize",
    "prompt_parts",
]
