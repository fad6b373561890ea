from __future__ import annotations

import csv
import io
import json
import random

import pytest

from knot.backends import OracleBackend, TokenUsage
from knot.bench import run_bench, run_sample
from knot.metrics import (
    EmptyRun,
    PriceTable,
    SampleRecord,
    count_prompt_cost,
    estimate_cost,
    report_csv,
    report_json,
    report_table,
    score,
)
from knot.pipeline import AblationConfig, ExtractionInstructions, PromptParts, TranslationInstructions
from knot.tasks import get_task


def _records(n_correct, n):
    return [SampleRecord(seed, "x", "y", seed < n_correct) for seed in range(n)]


def test_accuracy():
    result = score(_records(92, 100), task="sorting", size=32, scheme="knot")
    assert (result.n_samples, result.n_correct, result.accuracy) == (100, 92, 0.92)
    assert "92%" in report_table([result])


def test_empty_run():
    with pytest.raises(EmptyRun):
        score([], task="sorting", size=16, scheme="knot")


def test_all_unparseable_is_zero():
    task = get_task("sorting")
    recs = []
    for seed in range(5):
        inst = task.generate(16, seed)
        correct = task.is_correct("not a list", inst)
        recs.append(SampleRecord(seed, "not a list", "", correct))
    assert score(recs, task="sorting", size=16, scheme="zero-shot").accuracy == 0.0


def test_score_is_permutation_invariant():
    recs = _records(37, 60)
    shuffled = recs[:]
    random.Random(0).shuffle(shuffled)
    a = score(recs, task="t", size=1, scheme="s")
    b = score(shuffled, task="t", size=1, scheme="s")
    assert a.to_dict() == b.to_dict()
    assert [r.seed for r in b.records] == sorted(r.seed for r in recs)


def test_cost_counts():
    blank = PromptParts("ab", "cde", ExtractionInstructions(*[""] * 5), TranslationInstructions(*[""] * 5))
    report = count_prompt_cost(blank)
    assert (report.task_specific_chars, report.constant_chars) == (5, 0)
    swapped = PromptParts("cde", "ab", blank.extraction, blank.translation)
    assert count_prompt_cost(swapped).task_specific_chars == 5
    assert report.tokens_estimated


def test_characters_are_code_points():
    parts = PromptParts("é✓", "日本", ExtractionInstructions(*[""] * 5), TranslationInstructions(*[""] * 5))
    assert count_prompt_cost(parts).task_specific_chars == 4


def test_estimate_cost():
    prices = PriceTable(0.005, 0.015)
    assert estimate_cost(TokenUsage(), prices) == 0
    assert estimate_cost(TokenUsage(1000, 0), prices) == pytest.approx(0.005)
    assert estimate_cost(TokenUsage(2000, 1000), prices) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        PriceTable(-1, 0)
    report = count_prompt_cost(get_task("sorting").prompt_parts()).with_usage(TokenUsage(1000, 0), prices)
    assert report.cost == pytest.approx(0.005)
    assert json.loads(json.dumps(report.to_dict()))["usage"]["prompt_tokens"] == 1000


def test_bench_grid_reports():
    results = run_bench(["sorting"], [16, 32, 64], ["knot"], OracleBackend(), n=10)
    assert [(r.size, r.accuracy) for r in results] == [(16, 1.0), (32, 1.0), (64, 1.0)]
    doc = json.loads(report_json(results))
    assert len(doc["results"]) == 3
    assert [s["seed"] for s in doc["results"][0]["samples"]] == list(range(10))
    rows = list(csv.reader(io.StringIO(report_csv(results))))
    assert rows[0] == ["task", "scheme", "16", "32", "64"]
    assert rows[1] == ["sorting", "knot", "1.0", "1.0", "1.0"]


def test_bench_parallel_workers_match_serial():
    serial = run_bench(["large_digit"], [8], ["knot"], OracleBackend(), n=12, workers=1)
    pooled = run_bench(["large_digit"], [8], ["knot"], OracleBackend(), n=12, workers=4)
    strip = lambda rs: [{k: v for k, v in s.items() if k != "latency"} for s in rs[0].to_dict()["samples"]]
    assert strip(serial) == strip(pooled)


def test_bench_labels_ablation():
    results = run_bench(["arithmetic"], [8], ["knot"], OracleBackend(), n=2,
                        abl=AblationConfig.from_mask("011111"))
    assert results[0].ablation == "011111"
    assert results[0].label == "knot[011111]"
    assert results[0].ground_truth_mode == "round-intermediate"


def test_bench_rejects_bad_input():
    with pytest.raises(ValueError):
        run_bench(["sorting"], [16], ["knot"], OracleBackend(), n=0)
    with pytest.raises(ValueError):
        run_bench(["sorting"], [16], ["tot"], OracleBackend(), n=1)


def test_baseline_on_oracle_is_recorded_as_failure():
    task = get_task("sorting")
    rec = run_sample(task, task.generate(16, 0), "zero-shot", OracleBackend())
    assert not rec.correct and "UnrecognizedPattern" in rec.error
