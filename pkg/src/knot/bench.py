"""Run schemes over seeded task instances and score them."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

from .backends.base import AuthError, Backend, InferenceError, TokenUsage
from .lwt import ParseError
from .metrics import BenchResult, SampleRecord, score
from .pipeline import AblationConfig, BaselineKind, FixturePlanner, KnotResult, run_baseline, run_knot
from .runtime import ExecutionError
from .tasks import ArithmeticTask, Task, TaskInstance, get_task

SCHEMES = ("knot", *(k.value for k in BaselineKind))


def fixture_planner(task: Task, instance: TaskInstance) -> FixturePlanner:
    """Planner that answers with the bundled plan and the instance's fixture script."""
    return FixturePlanner(task.fixture_plan(), task.fixture_script(instance))


def run_sample(
    task: Task,
    instance: TaskInstance,
    scheme: str,
    backend: Backend,
    *,
    planner: Backend | None = None,
    abl: AblationConfig = AblationConfig(),
    max_in_flight: int = 1,
    round_intermediate: bool = True,
    on_result: Callable[[TaskInstance, KnotResult], None] | None = None,
) -> SampleRecord:
    """Solve one instance; failures are recorded as incorrect samples.

    Without ``planner`` the knot scheme plans with the bundled fixtures,
    which is how offline runs pair with the oracle backend.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    query, bindings = task.render(instance)
    if isinstance(task, ArithmeticTask):
        truth = task.ground_truth(instance, round_intermediate=round_intermediate)
    else:
        truth = task.ground_truth(instance)
    answer, usage, error = None, TokenUsage(), None
    start = time.perf_counter()
    try:
        if scheme == "knot":
            plan_backend = planner if planner is not None else fixture_planner(task, instance)
            result = run_knot(query, bindings, task.prompt_parts(), abl, plan_backend=plan_backend,
                              exec_backend=backend, max_in_flight=max_in_flight)
            answer, usage = result.answer, result.usage
            if on_result is not None:
                on_result(instance, result)
        else:
            answer = run_baseline(scheme, query, task.baseline, backend)
    except AuthError:
        raise
    except (ExecutionError, ParseError, InferenceError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    latency = time.perf_counter() - start
    correct = False
    if answer is not None:
        try:
            correct = task.normalize(answer) == truth
        except ValueError as exc:
            error = error or f"{type(exc).__name__}: {exc}"
    return SampleRecord(instance.seed, answer, task.format_answer(truth), correct, usage, latency, error)


def run_bench(
    tasks: Sequence[str],
    sizes: Sequence[int] | None,
    schemes: Sequence[str],
    backend: Backend,
    *,
    n: int = 100,
    seed: int = 0,
    planner: Backend | None = None,
    abl: AblationConfig = AblationConfig(),
    workers: int = 1,
    round_intermediate: bool = True,
    strict_size: bool = True,
) -> list[BenchResult]:
    """Score every (task, size, scheme) cell on seeds ``seed .. seed+n-1``.

    ``sizes=None`` uses each task's documented sizes.  Samples fan out over
    ``workers`` threads; results are merged by seed so output is stable.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    ablation = None if abl == AblationConfig() else abl.mask
    results = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for name in tasks:
            task = get_task(name)
            for size in (sizes if sizes else task.sizes):
                instances = [task.generate(size, s, strict_size=strict_size)
                             for s in range(seed, seed + n)]
                for scheme in schemes:
                    records = pool.map(
                        lambda inst: run_sample(task, inst, scheme, backend, planner=planner,
                                                abl=abl, round_intermediate=round_intermediate),
                        instances,
                    )
                    gt_mode = None
                    if isinstance(task, ArithmeticTask):
                        gt_mode = "round-intermediate" if round_intermediate else "round-final"
                    results.append(score(records, task=name, size=size, scheme=scheme,
                                         ablation=ablation, ground_truth_mode=gt_mode))
    return results


def iter_ablations(masks: Iterable[str]) -> list[AblationConfig]:
    return [AblationConfig.from_mask(m) for m in masks]
