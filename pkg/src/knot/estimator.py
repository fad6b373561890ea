"""scikit-learn style wrapper: a task-bound solver with fit/predict/score."""
from __future__ import annotations

from typing import Sequence

from sklearn.base import BaseEstimator

from .backends import Backend, HttpBackendConfig, resolve_backend
from .bench import fixture_planner
from .pipeline import AblationConfig, run_knot
from .tasks import TaskInstance, get_task


class KnotSolver(BaseEstimator):
    """Solve task instances with the knot pipeline.

    ``backend`` is a backend spec string (``"oracle"``, ``"http"``,
    ``"replay:PATH"``) or a backend object.  ``planner=None`` plans with the
    bundled fixtures, otherwise planning uses the given backend (``"same"``
    reuses the execution backend).  Nothing is learned: ``fit`` only checks
    the configuration and loads the task's prompt bundle.
    """

    def __init__(
        self,
        task: str = "arithmetic",
        backend: str | Backend = "oracle",
        planner: str | Backend | None = None,
        ablation: str = "111111",
        max_in_flight: int = 1,
        model: str = "gpt-3.5-turbo",
    ):
        self.task = task
        self.backend = backend
        self.planner = planner
        self.ablation = ablation
        self.max_in_flight = max_in_flight
        self.model = model

    def _resolve(self, spec):
        if isinstance(spec, str):
            return resolve_backend(spec, http_config=HttpBackendConfig(model=self.model))
        return spec

    def fit(self, X=None, y=None):
        self.task_ = get_task(self.task)
        self.parts_ = self.task_.prompt_parts()
        self.ablation_ = AblationConfig.from_mask(self.ablation)
        self.backend_ = self._resolve(self.backend)
        if self.planner == "same":
            self.planner_ = self.backend_
        else:
            self.planner_ = None if self.planner is None else self._resolve(self.planner)
        return self

    def _check_fitted(self):
        if not hasattr(self, "task_"):
            raise RuntimeError("KnotSolver is not fitted; call fit() first")

    def solve(self, item: TaskInstance | str):
        """Full pipeline result for one instance (or raw query with a planner)."""
        self._check_fitted()
        if isinstance(item, TaskInstance):
            query, bindings = self.task_.render(item)
            planner = self.planner_ or fixture_planner(self.task_, item)
        else:
            if self.planner_ is None:
                raise ValueError("raw queries need a planner backend; fixtures only cover generated instances")
            query, bindings, planner = item, {"input": item}, self.planner_
        return run_knot(query, bindings, self.parts_, self.ablation_, plan_backend=planner,
                        exec_backend=self.backend_, max_in_flight=self.max_in_flight)

    def predict(self, X: Sequence[TaskInstance | str]) -> list[str | None]:
        """Raw final answers, one per input."""
        self._check_fitted()
        return [self.solve(x).answer for x in X]

    def score(self, X: Sequence[TaskInstance], y=None) -> float:
        """Exact-match accuracy; ``y`` defaults to each instance's ground truth."""
        self._check_fitted()
        answers = self.predict(X)
        truths = y if y is not None else [self.task_.ground_truth(x) for x in X]
        hits = 0
        for raw, truth in zip(answers, truths):
            try:
                hits += raw is not None and self.task_.normalize(raw) == truth
            except ValueError:
                pass
        return hits / len(answers) if answers else 0.0
