"""Execution of LWT scripts against an inference backend.

Each instruction is rendered by substituting its placeholders from the
outputs of earlier instructions (or from named bindings), sent to the backend
as one independent inference, and its response appended to the output list.
The last response is the answer.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from typing import IO, Mapping, Sequence

from .backends.base import Backend, Completion, TokenUsage, complete
from .lwt import LwtInstruction, LwtScript, Placeholder, ValidationReport, validate_script

logger = logging.getLogger(__name__)

__all__ = [
    "parse_list",
    "split_top_level",
    "index_value",
    "render_instruction",
    "execute_script",
    "execute_parallel",
    "StepRecord",
    "ExecutionTrace",
    "ExecutionError",
    "IndexOutOfRange",
    "MissingBinding",
    "MissingOutput",
    "BackendError",
    "ScriptValidationError",
]

_QUOTES = "'\""
_OPEN = "[({"
_CLOSE = "])}"


class ExecutionError(Exception):
    """Base class for failures while running a script.

    ``step`` is the instruction index being rendered or executed and
    ``trace`` the partial trace up to the failure, when available.
    """

    step: int | None = None
    trace: "ExecutionTrace | None" = None


class IndexOutOfRange(ExecutionError, IndexError):
    def __init__(self, position: int, index: int, length: int):
        super().__init__(f"index {index} out of range for length {length} (path position {position})")
        self.position = position
        self.index = index
        self.length = length


class MissingBinding(ExecutionError, LookupError):
    def __init__(self, name: str):
        super().__init__(f"no binding for named input {name!r}")
        self.name = name


class MissingOutput(ExecutionError, LookupError):
    def __init__(self, source: int):
        super().__init__(f"no output recorded for instruction ({source})")
        self.source = source


class BackendError(ExecutionError):
    def __init__(self, step: int, cause: BaseException):
        super().__init__(f"backend failed at instruction ({step}): {cause}")
        self.step = step
        self.cause = cause


class ScriptValidationError(ExecutionError, ValueError):
    def __init__(self, report: ValidationReport):
        msgs = "; ".join(f"({e.index}) {e.kind}: {e.message}" for e in report.errors)
        super().__init__(f"script is not executable: {msgs}")
        self.report = report


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split at ``sep`` outside brackets and outside quoted elements.

    A quote only opens a quoted region when it is the first non-space
    character of an element, so apostrophes inside words are harmless.
    """
    parts: list[str] = []
    depth = 0
    quote: str | None = None
    buf: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if quote is not None:
            buf.append(ch)
            if ch == "\\" and i + 1 < n:
                buf.append(text[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in _QUOTES and not "".join(buf).strip():
            quote = ch
            buf.append(ch)
        elif ch in _OPEN:
            depth += 1
            buf.append(ch)
        elif ch in _CLOSE:
            depth = max(depth - 1, 0)
            buf.append(ch)
        elif depth == 0 and text.startswith(sep, i):
            parts.append("".join(buf))
            buf = []
            i += len(sep)
            continue
        else:
            buf.append(ch)
        i += 1
    parts.append("".join(buf))
    return parts


def _unquote(item: str) -> str:
    if len(item) >= 2 and item[0] == item[-1] and item[0] in _QUOTES:
        return item[1:-1]
    return item


def _is_bracketed(text: str) -> bool:
    return len(text) >= 2 and text[0] == "[" and text[-1] == "]"


def parse_list(text: str) -> list[str]:
    """Interpret a model output as a list of strings.

    ``"[1, 2]"`` and ``"['a', 'b']"`` are lists, so is ``"1, 2"``; anything
    else is a one-element list holding the trimmed text.
    """
    stripped = text.strip()
    if _is_bracketed(stripped):
        inner = stripped[1:-1]
        if not inner.strip():
            return []
        return [_unquote(part.strip()) for part in split_top_level(inner)]
    parts = split_top_level(stripped)
    if len(parts) > 1:
        return [_unquote(part.strip()) for part in parts]
    return [stripped]


def index_value(value: str, path: Sequence[int]) -> str:
    """Apply python-style indices left to right.

    A value that reads as a list is indexed by element, anything else by
    character.
    """
    current = value.strip()
    for position, idx in enumerate(path):
        items = parse_list(current)
        seq: Sequence[str] = items if (_is_bracketed(current) or len(items) > 1) else current
        if not -len(seq) <= idx < len(seq):
            raise IndexOutOfRange(position, idx, len(seq))
        current = seq[idx].strip()
    return current


def _lookup(p: Placeholder, outputs: Mapping[int, str] | Sequence[str], bindings: Mapping[str, str]) -> str:
    if p.is_numbered:
        if isinstance(outputs, Mapping):
            if p.source not in outputs:
                raise MissingOutput(p.source)
            return outputs[p.source]
        if p.source >= len(outputs):
            raise MissingOutput(p.source)
        return outputs[p.source]
    if p.source not in bindings:
        raise MissingBinding(p.source)
    return bindings[p.source]


def render_instruction(
    instr: LwtInstruction,
    outputs: Mapping[int, str] | Sequence[str],
    bindings: Mapping[str, str],
) -> str:
    """Fill the placeholders of ``instr``.

    ``outputs`` maps instruction index to its raw response; a plain list is
    read positionally, which is the same thing for scripts numbered from 0.
    """
    rendered = []
    for seg in instr.segments:
        if isinstance(seg, str):
            rendered.append(seg)
            continue
        value = _lookup(seg, outputs, bindings)
        rendered.append(index_value(value, seg.index_path) if seg.index_path else value.strip())
    return "".join(rendered)


@dataclass
class StepRecord:
    index: int
    prompt: str
    response: str
    latency: float
    usage: TokenUsage = field(default_factory=TokenUsage)
    started: float = 0.0
    finished: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["type"] = "step"
        return d


@dataclass
class ExecutionTrace:
    steps: list[StepRecord] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    indices: list[int] = field(default_factory=list)

    @property
    def final_answer(self) -> str | None:
        return self.outputs[-1] if self.outputs else None

    @property
    def usage(self) -> TokenUsage:
        total = TokenUsage()
        for s in self.steps:
            total = total + s.usage
        return total

    def output_for(self, index: int) -> str:
        return self.outputs[self.indices.index(index)]

    def write_jsonl(self, fp: IO[str]) -> None:
        for step in self.steps:
            fp.write(json.dumps(step.to_dict(), ensure_ascii=False) + "\n")
        summary = {
            "type": "summary",
            "indices": self.indices,
            "outputs": self.outputs,
            "final_answer": self.final_answer,
            "usage": asdict(self.usage),
        }
        fp.write(json.dumps(summary, ensure_ascii=False) + "\n")

    def to_jsonl(self) -> str:
        import io

        buf = io.StringIO()
        self.write_jsonl(buf)
        return buf.getvalue()

    @classmethod
    def from_jsonl(cls, text: str) -> "ExecutionTrace":
        trace = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.pop("type", "step")
            if kind == "summary":
                trace.outputs = list(rec["outputs"])
                trace.indices = list(rec["indices"])
            else:
                rec["usage"] = TokenUsage(**rec.get("usage", {}))
                trace.steps.append(StepRecord(**rec))
        return trace


def _check(script: LwtScript, bindings: Mapping[str, str]) -> None:
    report = validate_script(script, bindings)
    if not report.ok:
        raise ScriptValidationError(report)


class _Memo:
    def __init__(self, backend: Backend):
        self.backend = backend
        self.cache: dict[str, Completion] = {}
        self.lock = threading.Lock()

    def infer(self, prompt: str) -> Completion:
        with self.lock:
            hit = self.cache.get(prompt)
        if hit is not None:
            return hit
        result = complete(self.backend, prompt)
        with self.lock:
            self.cache[prompt] = result
        return result


def _fail(exc: ExecutionError, step: int, trace: ExecutionTrace) -> ExecutionError:
    if exc.step is None:
        exc.step = step
    exc.trace = trace
    return exc


def execute_script(
    script: LwtScript,
    bindings: Mapping[str, str],
    backend: Backend,
    *,
    on_error: str = "raise",
    memoize: bool = False,
) -> ExecutionTrace:
    """Run the instructions one after another in index order.

    ``on_error="record"`` keeps going after a backend failure, storing an
    empty output and the error message in the step record.
    """
    if on_error not in ("raise", "record"):
        raise ValueError("on_error must be 'raise' or 'record'")
    _check(script, bindings)
    if memoize:
        backend = _Memo(backend)
    trace = ExecutionTrace()
    produced: dict[int, str] = {}
    t0 = time.perf_counter()
    for ins in script.instructions:
        try:
            prompt = render_instruction(ins, produced, bindings)
        except ExecutionError as exc:
            raise _fail(exc, ins.index, trace) from None
        started = time.perf_counter()
        try:
            text, usage = complete(backend, prompt)
            error = None
        except Exception as exc:
            if on_error == "raise":
                raise _fail(BackendError(ins.index, exc), ins.index, trace) from exc
            logger.warning("instruction (%d) failed: %s", ins.index, exc)
            text, usage, error = "", TokenUsage(), f"{type(exc).__name__}: {exc}"
        finished = time.perf_counter()
        trace.steps.append(
            StepRecord(ins.index, prompt, text, finished - started, usage,
                       started - t0, finished - t0, error)
        )
        trace.outputs.append(text)
        trace.indices.append(ins.index)
        produced[ins.index] = text
    return trace


def execute_parallel(
    script: LwtScript,
    bindings: Mapping[str, str],
    backend: Backend,
    max_in_flight: int = 4,
    *,
    on_error: str = "raise",
    memoize: bool = False,
) -> ExecutionTrace:
    """Run instructions as soon as everything they reference is available.

    At most ``max_in_flight`` inferences run at once.  Steps are recorded in
    completion order; ``outputs`` stays in instruction order, so with a
    deterministic backend it matches :func:`execute_script` exactly.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be a positive integer")
    if on_error not in ("raise", "record"):
        raise ValueError("on_error must be 'raise' or 'record'")
    _check(script, bindings)
    if memoize:
        backend = _Memo(backend)
    defined = set(script.indices)
    deps = {ins.index: ins.dependencies & defined for ins in script.instructions}
    waiting = [ins for ins in script.instructions]
    produced: dict[int, str] = {}
    trace = ExecutionTrace()
    running: dict[Future, tuple[LwtInstruction, str, float]] = {}
    t0 = time.perf_counter()

    def ordered_trace() -> ExecutionTrace:
        done = sorted(produced)
        return ExecutionTrace(trace.steps, [produced[i] for i in done], done)

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        while waiting or running:
            for ins in list(waiting):
                if len(running) >= max_in_flight:
                    break
                if not deps[ins.index] <= produced.keys():
                    continue
                waiting.remove(ins)
                try:
                    prompt = render_instruction(ins, produced, bindings)
                except ExecutionError as exc:
                    for fut in running:
                        fut.cancel()
                    raise _fail(exc, ins.index, ordered_trace()) from None
                running[pool.submit(complete, backend, prompt)] = (ins, prompt, time.perf_counter())
            if not running:
                # Only reachable when a dependency never completes.
                raise _fail(MissingOutput(min(deps[waiting[0].index] - produced.keys())),
                            waiting[0].index, ordered_trace())
            finished, _ = wait(running, return_when=FIRST_COMPLETED)
            for fut in sorted(finished, key=lambda f: running[f][0].index):
                ins, prompt, started = running.pop(fut)
                end = time.perf_counter()
                try:
                    text, usage = fut.result()
                    error = None
                except Exception as exc:
                    if on_error == "raise":
                        for other in running:
                            other.cancel()
                        raise _fail(BackendError(ins.index, exc), ins.index, ordered_trace()) from exc
                    text, usage, error = "", TokenUsage(), f"{type(exc).__name__}: {exc}"
                trace.steps.append(
                    StepRecord(ins.index, prompt, text, end - started, usage,
                               started - t0, end - t0, error)
                )
                produced[ins.index] = text
    return ordered_trace()
