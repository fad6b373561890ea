"""Sorting with duplicates and set intersection."""
from __future__ import annotations

import random

from ..pipeline import BaselinePrompts
from .base import Task, TaskInstance, Unparseable, last_list, line, parse_number


def _fmt(values) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def _numbers(raw: str) -> tuple:
    items = last_list(raw)
    try:
        return tuple(parse_number(x) for x in items)
    except Unparseable:
        raise Unparseable(f"non-numeric element in {raw!r}") from None


class SortingTask(Task):
    name = "sorting"
    sizes = (16, 32, 64)
    baseline = BaselinePrompts(
        instruction="Sort the following list of single-digit numbers in ascending order. "
                    "Only output the sorted list.",
        few_shot="Input: [4, 5, 3, 3, 7, 3, 0, 5]\nOutput: [0, 3, 3, 3, 4, 5, 5, 7]",
        cot_example=(
            "Input: [4, 5, 3, 3, 7, 3, 0, 5]\n"
            "Answer: Count each digit: one 0, three 3s, one 4, two 5s, one 7. "
            "Write them out in order. The final answer is [0, 3, 3, 3, 4, 5, 5, 7]."
        ),
    )

    def _payload(self, size: int, rng: random.Random) -> dict:
        return {"values": [rng.randrange(10) for _ in range(size)]}

    def render(self, instance: TaskInstance):
        q = _fmt(instance.payload["values"])
        return q, {"input": q}

    def ground_truth(self, instance: TaskInstance) -> tuple[int, ...]:
        return tuple(sorted(instance.payload["values"]))

    def normalize(self, raw: str) -> tuple:
        return _numbers(raw)

    def format_answer(self, answer) -> str:
        return _fmt(int(x) for x in answer)

    def fixture_script(self, instance: TaskInstance) -> str:
        n = len(instance.payload["values"])
        out = [line(0, "Initialize an array of size 10 to zero.")]
        for i in range(n):
            out.append(line(i + 1, f"Increment the count at index {{(input)}}[{i}] in {{({i})}} "
                                   "(index start from 0). Only output updated array."))
        out.append(line(n + 1, f"Convert {{({n})}} in English. Output an array."))
        low = ", ".join(f"{{({n + 1})}}[{d}] {d}s" for d in range(5))
        high = ", ".join(f"{{({n + 1})}}[{d}] {d}s" for d in range(5, 10))
        out.append(line(n + 2, f"The array should contain {low}. Output in array format."))
        out.append(line(n + 3, f"The array should contain {high}. Output in array format."))
        out.append(line(n + 4, f"Combine {{({n + 2})}} and {{({n + 3})}} in ascending order. "
                               "Only output array."))
        return "\n".join(out)


class SetIntersectionTask(Task):
    name = "set_intersection"
    sizes = (32, 64, 128)
    baseline = BaselinePrompts(
        instruction="Find the intersection of Set1 and Set2. Output the common elements "
                    "in the order they appear in Set1 as a list.",
        few_shot="Input: Set1: [3, 9, 1, 12]\nSet2: [12, 5, 3, 0]\nOutput: [3, 12]",
        cot_example=(
            "Input: Set1: [3, 9, 1, 12]\nSet2: [12, 5, 3, 0]\n"
            "Answer: 3 is in Set2, 9 is not, 1 is not, 12 is. The final answer is [3, 12]."
        ),
    )

    def _payload(self, size: int, rng: random.Random) -> dict:
        universe = range(2 * size)
        return {"set1": rng.sample(universe, size), "set2": rng.sample(universe, size)}

    def render(self, instance: TaskInstance):
        s1, s2 = _fmt(instance.payload["set1"]), _fmt(instance.payload["set2"])
        q = f"Set1: {s1}\nSet2: {s2}"
        return q, {"input": q, "Set1": s1, "Set2": s2}

    def ground_truth(self, instance: TaskInstance) -> tuple[int, ...]:
        other = set(instance.payload["set2"])
        return tuple(x for x in instance.payload["set1"] if x in other)

    def normalize(self, raw: str) -> tuple:
        return _numbers(raw)

    def format_answer(self, answer) -> str:
        return _fmt(int(x) for x in answer)

    def fixture_script(self, instance: TaskInstance) -> str:
        n = len(instance.payload["set1"])
        out = [
            line(i, f"Find the intersection for [{{(Set1)}}[{i}]] and {{(Set2)}}. "
                    "Output [] if mutually exclusive.")
            for i in range(n)
        ]
        refs = ", ".join(f"{{({i})}}" for i in range(n))
        out.append(line(n, f"Combine {refs} in one array."))
        return "\n".join(out)
