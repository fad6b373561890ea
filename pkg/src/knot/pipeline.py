"""The three-stage kNoT pipeline: knowledge extraction, LWT translation, execution.

Prompts are assembled from constant instruction fragments plus two
task-specific parts, the context description and the LWT example.  Every
fragment that can be ablated is a separate field so it can be dropped on its
own.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, fields
from typing import Mapping

from .backends.base import Backend, Completion, TokenUsage, complete
from .lwt import LwtScript, ParseError, ValidationReport, parse_script, validate_script
from .runtime import ExecutionTrace, ScriptValidationError, execute_parallel, execute_script

__all__ = [
    "ExtractionInstructions",
    "TranslationInstructions",
    "PromptParts",
    "AblationConfig",
    "SolutionPlan",
    "KnotResult",
    "BaselineKind",
    "BaselinePrompts",
    "FixturePlanner",
    "build_extraction_prompt",
    "build_translation_prompt",
    "extract_plan",
    "run_knot",
    "build_baseline_prompt",
    "run_baseline",
    "fill",
]

_SLOT = re.compile(r"\{(query|context|plan|example)\}")
ZERO_COT_SUFFIX = "Let's think step by step."


def fill(template: str, **values: str) -> str:
    """Substitute ``{query}``-style slots in one pass; values are not rescanned."""
    return _SLOT.sub(lambda m: values.get(m.group(1), m.group(0)), template)


def _strip_slots(template: str) -> str:
    return _SLOT.sub("", template)


@dataclass(frozen=True)
class ExtractionInstructions:
    header: str = "Given the following question:\nInput: {query}\n"
    context: str = "Context: {context}\n"
    framing: str = (
        "The Input section is the input query.\n"
        "The Context section is the goal we want to achieve.\n"
        "Please use your knowledge to create a solution by step-by-step manner without any numbers.\n"
    )
    elementary: str = (
        "Every step need to be as easy as possible.\n"
        "Use Step0, Step1, Step2 to represent result.\n"
    )
    restriction: str = (
        "Don't use for loop to reduce step.\n"
        "Don't directly use any element in the input.\n"
    )

    @property
    def text(self) -> str:
        """Constant text of the prompt, with task slots removed."""
        return "".join(_strip_slots(getattr(self, f.name)) for f in fields(self))


@dataclass(frozen=True)
class TranslationInstructions:
    framing: str = (
        "Based on your expert knowledge\n{plan}\n"
        "and the above example, create a script to solve the following question:\n"
        "Input: {query}\n"
    )
    context: str = "Context: {context}\n"
    framing_tail: str = (
        "The Input section is the input query. The Context section is the goal we want to achieve.\n"
    )
    rules: str = (
        "You have to follow the rules to create a script.\n"
        "This script should be numbered and contains several instruction to be called "
        "line-by-line in a sequential order.\n"
        "Use (number) to represent each line.\n"
        "The line numbering starts from 0.\n"
        'You can use LLM Inference: use LLM("Your Instruction") to find the answer.\n'
        "Use {(index)} to represent the variable you want to replace with previous result.\n"
        "Use {(input)}, {(Set1)}, ... to represent input, not allow to directly use numbers.\n"
        "Use python indexing to get the element in the list (E.g. {(0)}[0], {(0)}[1]).\n"
        "Do not directly use numbers.\n"
    )
    example: str = "Here is one example.\n{example}\n"

    @property
    def text(self) -> str:
        return "".join(_strip_slots(getattr(self, f.name)) for f in fields(self))


@dataclass(frozen=True)
class PromptParts:
    """Constant instructions plus the task-specific context and LWT example."""

    context: str
    lwt_example: str
    extraction: ExtractionInstructions = field(default_factory=ExtractionInstructions)
    translation: TranslationInstructions = field(default_factory=TranslationInstructions)

    @property
    def extraction_instructions(self) -> str:
        return self.extraction.text

    @property
    def translation_instructions(self) -> str:
        return self.translation.text


@dataclass(frozen=True)
class AblationConfig:
    """Which prompt components to keep; all ``True`` is the full scheme."""

    include_context_in_extraction: bool = True
    include_elementary_commands: bool = True
    include_restriction_commands: bool = True
    include_context_in_translation: bool = True
    include_translation_instructions: bool = True
    include_lwt_example: bool = True

    @property
    def mask(self) -> str:
        return "".join("1" if getattr(self, f.name) else "0" for f in fields(self))

    @classmethod
    def from_mask(cls, mask: str) -> "AblationConfig":
        if len(mask) != 6 or set(mask) - {"0", "1"}:
            raise ValueError(f"ablation mask must be six 0/1 characters, got {mask!r}")
        return cls(*(c == "1" for c in mask))

    @classmethod
    def keep(cls, *components: int) -> "AblationConfig":
        """Config keeping only the numbered components (1-6)."""
        return cls(*(i in components for i in range(1, 7)))


@dataclass(frozen=True)
class SolutionPlan:
    text: str


def build_extraction_prompt(query: str, parts: PromptParts, abl: AblationConfig = AblationConfig()) -> str:
    ex = parts.extraction
    chunks = [ex.header]
    if abl.include_context_in_extraction:
        chunks.append(ex.context)
    chunks.append(ex.framing)
    if abl.include_elementary_commands:
        chunks.append(ex.elementary)
    if abl.include_restriction_commands:
        chunks.append(ex.restriction)
    return "".join(fill(c, query=query, context=parts.context) for c in chunks).rstrip("\n")


def build_translation_prompt(
    plan: SolutionPlan | str,
    query: str,
    parts: PromptParts,
    abl: AblationConfig = AblationConfig(),
) -> str:
    tr = parts.translation
    plan_text = plan.text if isinstance(plan, SolutionPlan) else plan
    chunks = [tr.framing]
    if abl.include_context_in_translation:
        chunks.append(tr.context)
    chunks.append(tr.framing_tail)
    if abl.include_translation_instructions:
        chunks.append(tr.rules)
    if abl.include_lwt_example:
        chunks.append(tr.example)
    values = {"query": query, "context": parts.context, "plan": plan_text, "example": parts.lwt_example}
    return "".join(fill(c, **values) for c in chunks).rstrip("\n")


def extract_plan(backend: Backend, prompt: str) -> SolutionPlan:
    return SolutionPlan(complete(backend, prompt).text)


@dataclass
class KnotResult:
    plan: SolutionPlan
    script_text: str
    script: LwtScript
    report: ValidationReport
    trace: ExecutionTrace
    extraction_prompt: str = ""
    translation_prompt: str = ""
    planning_usage: TokenUsage = field(default_factory=TokenUsage)

    @property
    def answer(self) -> str | None:
        return self.trace.final_answer

    @property
    def usage(self) -> TokenUsage:
        return self.planning_usage + self.trace.usage


def run_knot(
    query: str,
    bindings: Mapping[str, str] | None,
    parts: PromptParts,
    abl: AblationConfig = AblationConfig(),
    *,
    plan_backend: Backend,
    exec_backend: Backend,
    max_in_flight: int = 1,
) -> KnotResult:
    """Plan with ``plan_backend``, translate to LWT, execute with ``exec_backend``.

    Parse and validation errors from the translation stage carry the raw
    model output in ``raw_text``.
    """
    bindings = dict(bindings) if bindings is not None else {"input": query}
    k_prompt = build_extraction_prompt(query, parts, abl)
    first = complete(plan_backend, k_prompt)
    plan = SolutionPlan(first.text)
    t_prompt = build_translation_prompt(plan, query, parts, abl)
    second = complete(plan_backend, t_prompt)
    script_text = second.text
    try:
        script = parse_script(script_text, first_block=True)
    except ParseError as exc:
        exc.raw_text = script_text
        raise
    report = validate_script(script, bindings)
    if not report.ok:
        err = ScriptValidationError(report)
        err.raw_text = script_text
        raise err
    if max_in_flight > 1:
        trace = execute_parallel(script, bindings, exec_backend, max_in_flight)
    else:
        trace = execute_script(script, bindings, exec_backend)
    return KnotResult(plan, script_text, script, report, trace, k_prompt, t_prompt,
                      first.usage + second.usage)


class FixturePlanner:
    """Offline stand-in for the planning model.

    Returns ``plan`` for knowledge-extraction prompts and ``script`` for
    translation prompts.
    """

    marker = "create a script to solve the following question"

    def __init__(self, plan: str, script: str):
        self.plan = plan
        self.script = script

    def infer(self, prompt: str) -> Completion:
        text = self.script if self.marker in prompt else self.plan
        return Completion(text, TokenUsage.estimate(prompt, text))


class BaselineKind(str, enum.Enum):
    ZERO_SHOT = "zero-shot"
    FEW_SHOT = "few-shot"
    ZERO_COT = "zero-cot"
    COT = "cot"


@dataclass(frozen=True)
class BaselinePrompts:
    instruction: str
    few_shot: str = ""
    cot_example: str = ""


def build_baseline_prompt(kind: BaselineKind | str, query: str, prompts: BaselinePrompts) -> str:
    kind = BaselineKind(kind)
    if kind is BaselineKind.FEW_SHOT and not prompts.few_shot:
        raise ValueError("few-shot baseline needs an example")
    if kind is BaselineKind.COT and not prompts.cot_example:
        raise ValueError("CoT baseline needs a worked example")
    if kind is BaselineKind.ZERO_SHOT:
        return f"{prompts.instruction}\nInput: {query}"
    if kind is BaselineKind.FEW_SHOT:
        return f"{prompts.instruction}\n{prompts.few_shot}\nInput: {query}"
    if kind is BaselineKind.ZERO_COT:
        return f"{prompts.instruction}\nInput: {query}\n{ZERO_COT_SUFFIX}"
    return (
        f"{prompts.instruction}\nSolve it step by step and finish with "
        f"\"The final answer is <answer>.\"\n{prompts.cot_example}\nInput: {query}\nAnswer:"
    )


_ANSWER_MARKER = re.compile(r"The final answer is|Output:|Answer:", re.IGNORECASE)


def _extract_answer(text: str) -> str:
    matches = list(_ANSWER_MARKER.finditer(text))
    tail = text[matches[-1].end():] if matches else text
    lines = [ln for ln in tail.strip().splitlines() if ln.strip()]
    if not lines:
        return ""
    line = lines[0] if matches else lines[-1]
    return line.strip().rstrip(".").strip()


def run_baseline(kind: BaselineKind | str, query: str, prompts: BaselinePrompts, backend: Backend) -> str:
    """Single-inference baseline; returns the extracted raw answer."""
    prompt = build_baseline_prompt(kind, query, prompts)
    text = complete(backend, prompt).text
    if BaselineKind(kind) in (BaselineKind.COT, BaselineKind.ZERO_COT):
        return _extract_answer(text)
    return text.strip()
