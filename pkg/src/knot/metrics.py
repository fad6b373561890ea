"""Accuracy aggregation, prompt cost accounting and report emission."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping

from .backends.base import TokenUsage, estimate_tokens
from .pipeline import PromptParts

DEFAULT_SAMPLES = 100


class EmptyRun(ValueError):
    """Scoring was asked for zero samples."""


@dataclass(frozen=True)
class SampleRecord:
    seed: int
    answer: str | None
    ground_truth: str
    correct: bool
    usage: TokenUsage = field(default_factory=TokenUsage)
    latency: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["usage"] = asdict(self.usage)
        return d


@dataclass
class BenchResult:
    task: str
    size: int
    scheme: str
    records: list[SampleRecord]
    ablation: str | None = None
    ground_truth_mode: str | None = None

    @property
    def n_samples(self) -> int:
        return len(self.records)

    @property
    def n_correct(self) -> int:
        return sum(r.correct for r in self.records)

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_samples

    @property
    def usage(self) -> TokenUsage:
        total = TokenUsage()
        for r in self.records:
            total = total + r.usage
        return total

    @property
    def label(self) -> str:
        return self.scheme if self.ablation is None else f"{self.scheme}[{self.ablation}]"

    def to_dict(self, *, samples: bool = True) -> dict:
        d: dict[str, Any] = {
            "task": self.task,
            "size": self.size,
            "scheme": self.scheme,
            "ablation": self.ablation,
            "n_samples": self.n_samples,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "usage": asdict(self.usage),
        }
        if self.ground_truth_mode is not None:
            d["ground_truth_mode"] = self.ground_truth_mode
        if samples:
            d["samples"] = [r.to_dict() for r in self.records]
        return d


def score(
    records: Iterable[SampleRecord],
    *,
    task: str,
    size: int,
    scheme: str,
    ablation: str | None = None,
    ground_truth_mode: str | None = None,
) -> BenchResult:
    """Collect sample records (in any order) into a result sorted by seed."""
    ordered = sorted(records, key=lambda r: r.seed)
    if not ordered:
        raise EmptyRun(f"no samples for {task} size {size} ({scheme})")
    return BenchResult(task, size, scheme, ordered, ablation, ground_truth_mode)


@dataclass(frozen=True)
class PriceTable:
    """Dollars per thousand tokens."""

    input_per_1k: float
    output_per_1k: float

    def __post_init__(self):
        if self.input_per_1k < 0 or self.output_per_1k < 0:
            raise ValueError("prices must be non-negative")

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "PriceTable":
        return cls(float(d["input_per_1k"]), float(d["output_per_1k"]))


def estimate_cost(usage: TokenUsage, prices: PriceTable) -> float:
    return (usage.prompt_tokens * prices.input_per_1k
            + usage.completion_tokens * prices.output_per_1k) / 1000


@dataclass(frozen=True)
class CostReport:
    """Character counts of reusable versus task-specific prompt text."""

    constant_chars: int
    task_specific_chars: int
    constant_tokens: int
    task_specific_tokens: int
    tokens_estimated: bool = True
    usage: TokenUsage = field(default_factory=TokenUsage)
    cost: float | None = None

    def with_usage(self, usage: TokenUsage, prices: PriceTable | None = None) -> "CostReport":
        cost = estimate_cost(usage, prices) if prices is not None else None
        return CostReport(self.constant_chars, self.task_specific_chars, self.constant_tokens,
                          self.task_specific_tokens, self.tokens_estimated, usage, cost)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["usage"] = asdict(self.usage)
        return d


def count_prompt_cost(parts: PromptParts) -> CostReport:
    """Characters are counted as Unicode code points, not bytes."""
    constant = parts.extraction_instructions + parts.translation_instructions
    specific = parts.context + parts.lwt_example
    return CostReport(
        constant_chars=len(parts.extraction_instructions) + len(parts.translation_instructions),
        task_specific_chars=len(parts.context) + len(parts.lwt_example),
        constant_tokens=estimate_tokens(constant),
        task_specific_tokens=estimate_tokens(specific),
    )


def report_json(results: Iterable[BenchResult], *, samples: bool = True, **extra) -> str:
    doc = {**extra, "results": [r.to_dict(samples=samples) for r in results]}
    return json.dumps(doc, indent=2, sort_keys=False)


def report_table(results: Iterable[BenchResult]) -> str:
    """Aligned plain-text table, one row per (task, size, scheme)."""
    header = ("task", "size", "scheme", "correct", "n", "accuracy")
    rows = [header] + [
        (r.task, str(r.size), r.label, str(r.n_correct), str(r.n_samples), f"{r.accuracy:.0%}")
        for r in results
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)


def report_csv(results: Iterable[BenchResult]) -> str:
    """Grid with one row per task and scheme, one column per size."""
    results = list(results)
    sizes = sorted({r.size for r in results})
    grid: dict[tuple[str, str], dict[int, float]] = {}
    for r in results:
        grid.setdefault((r.task, r.label), {})[r.size] = r.accuracy
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "scheme", *sizes])
    for (task, label), by_size in grid.items():
        w.writerow([task, label, *(by_size.get(s, "") for s in sizes)])
    return buf.getvalue()
