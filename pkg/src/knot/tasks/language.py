"""Review-batch sentiment counting and country keyword extraction.

Neither task can be answered by the offline oracle; they are generated and
scored here so live runs produce exact-match reports.
"""
from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Iterable

from ..pipeline import BaselinePrompts
from .base import Task, TaskInstance, Unparseable, last_list, line, parse_number, read_data

_POSITIVE_LABELS = {"positive", "pos", "1", "5", "true"}
_NEGATIVE_LABELS = {"negative", "neg", "0", "-1", "true_negative", "false"}


def _label(value) -> bool:
    key = str(value).strip().lower()
    if key in _POSITIVE_LABELS:
        return True
    if key in _NEGATIVE_LABELS:
        return False
    raise ValueError(f"unrecognized review label {value!r}")


def load_review_corpus(path: str | Path | None = None) -> list[tuple[str, bool]]:
    """Labeled reviews from JSON Lines ``{"text": ..., "label": ...}``.

    Without ``path`` the bundled synthetic corpus is used.
    """
    text = Path(path).read_text(encoding="utf-8") if path else read_data("yelp_reviews.jsonl")
    corpus = []
    for raw in text.splitlines():
        if raw.strip():
            rec = json.loads(raw)
            corpus.append((rec["text"], _label(rec["label"])))
    return corpus


class YelpTask(Task):
    name = "yelp"
    sizes = (10,)
    baseline = BaselinePrompts(
        instruction="Count how many of the following reviews are positive. Output only the number.",
        few_shot='Input: ["Loved the food and the staff.", "Cold soup and rude service."]\nOutput: 1',
        cot_example=(
            'Input: ["Loved the food and the staff.", "Cold soup and rude service."]\n'
            "Answer: The first review is Positive, the second is Negative. The final answer is 1."
        ),
    )

    def __init__(self, corpus: Iterable[tuple[str, bool]] | None = None):
        self._corpus = list(corpus) if corpus is not None else None

    @property
    def corpus(self) -> list[tuple[str, bool]]:
        if self._corpus is None:
            self._corpus = load_review_corpus()
        return self._corpus

    def _payload(self, size: int, rng: random.Random) -> dict:
        if size > len(self.corpus):
            raise ValueError(f"corpus has only {len(self.corpus)} reviews")
        picked = rng.sample(self.corpus, size)
        return {"reviews": [t for t, _ in picked], "labels": [lab for _, lab in picked]}

    def render(self, instance: TaskInstance):
        q = json.dumps(instance.payload["reviews"], ensure_ascii=False)
        return q, {"input": q}

    def ground_truth(self, instance: TaskInstance) -> int:
        return sum(bool(x) for x in instance.payload["labels"])

    def normalize(self, raw: str) -> int:
        value = parse_number(raw)
        if value.denominator != 1:
            raise Unparseable(f"not a count: {raw!r}")
        return int(value)

    def fixture_script(self, instance: TaskInstance) -> str:
        n = len(instance.payload["reviews"])
        out = [
            line(i, f"Check the following review is Positive or Negative: {{(input)}}[{i}].")
            for i in range(n)
        ]
        refs = ", ".join(f"{{({i})}}" for i in range(n))
        out.append(line(n, f"[{refs}], output the number of Positive."))
        return "\n".join(out)


COUNTRIES = (
    "Argentina", "Australia", "Brazil", "Canada", "Chile", "China", "Cuba", "Egypt",
    "France", "Germany", "Greece", "India", "Indonesia", "Ireland", "Italy", "Japan",
    "Kenya", "Mexico", "Morocco", "Nepal", "Netherlands", "New Zealand", "Nigeria",
    "Norway", "Peru", "Poland", "Portugal", "South Africa", "South Korea", "Spain",
    "Sweden", "Switzerland", "Thailand", "Turkey", "United Kingdom", "Vietnam",
)

_TEMPLATES_0 = (
    "The weather stayed mild for most of the trip.",
    "Everyone agreed that the food had been the highlight.",
    "They spent the afternoon writing postcards to old friends.",
    "The train was late again, but nobody minded.",
    "Later that evening the group gathered to plan the next day.",
    "A local guide explained the history of the old harbor.",
)
_TEMPLATES_1 = (
    "Maria had always wanted to see the mountains of {0}.",
    "The museum had a large exhibit about the coast of {0}.",
    "Tom remembered the markets he had visited in {0} years ago.",
    "Their flight connected through {0} before heading home.",
    "A friend from {0} recommended a small family restaurant.",
    "The photographs from {0} covered an entire wall.",
)
_TEMPLATES_2 = (
    "After a week in {0}, they took a ferry to {1}.",
    "She compared the street food of {0} with the dishes she tried in {1}.",
    "The documentary contrasted the rivers of {0} and {1}.",
    "His cousins moved from {0} to {1} last spring.",
    "The conference alternated between {0} and {1} every year.",
)


class KeywordTask(Task):
    name = "keyword"
    sizes = tuple(range(14, 21))
    baseline = BaselinePrompts(
        instruction="List every country name (no continents) in the article in order of "
                    "appearance, repeats allowed. Output a list.",
        few_shot="Input: Anna flew from Spain to Peru. Later she returned to Spain.\n"
                 "Output: ['Spain', 'Peru', 'Spain']",
        cot_example=(
            "Input: Anna flew from Spain to Peru. Later she returned to Spain.\n"
            "Answer: The first sentence names Spain and Peru, the second names Spain. "
            "The final answer is ['Spain', 'Peru', 'Spain']."
        ),
    )

    def _payload(self, size: int, rng: random.Random) -> dict:
        sentences, mentions = [], []
        for _ in range(size):
            k = rng.choices((0, 1, 2), weights=(2, 5, 3))[0]
            template = rng.choice((_TEMPLATES_0, _TEMPLATES_1, _TEMPLATES_2)[k])
            names = [rng.choice(COUNTRIES) for _ in range(k)]
            sentences.append(template.format(*names))
            mentions.extend(names)
        return {"sentences": sentences, "mentions": mentions}

    def render(self, instance: TaskInstance):
        q = " ".join(instance.payload["sentences"])
        return q, {"input": q}

    def ground_truth(self, instance: TaskInstance) -> tuple[str, ...]:
        return tuple(m.lower() for m in instance.payload["mentions"])

    def normalize(self, raw: str) -> tuple[str, ...]:
        return tuple(" ".join(x.split()).lower() for x in last_list(raw) if x.strip())

    def format_answer(self, answer) -> str:
        return "[" + ", ".join(f"'{x}'" for x in answer) + "]"

    def fixture_script(self, instance: TaskInstance) -> str:
        n = len(instance.payload["sentences"])
        out = [line(0, "Split the following article into sentences: '{(input)}'. Output an array.")]
        for i in range(n):
            out.append(line(
                i + 1,
                "Extract all country names (no continents) in the order of their appearance from "
                f'the following sentence (repeated is allowed): "{{(0)}}[{i}]"  '
                "Output [] if not exist any country.",
            ))
        refs = ", ".join(f"{{({i})}}" for i in range(1, n + 1))
        out.append(line(n + 1, f"Combine {refs} in one array. Repeated is allowed."))
        return "\n".join(out)
