"""Parser, validator and graph export for LWT (LLM Workflow Template) scripts.

A script is a list of lines of the shape ``(k)=LLM("...")``.  Inside the
quoted body, ``{(k)}`` receives the whole output of instruction ``k`` and
``{(k)}[m]`` selects its ``m``-th item.  Named inputs (``{(input)}``,
``{(Set1)}``), chained indices (``{(0)}[0][15]``) and negative indices
(``{(1)}[-1]``) are accepted as well.

Parsing is lossless: :func:`serialize` reproduces the input text exactly,
including lines that were skipped because they are not instructions.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

__all__ = [
    "Placeholder",
    "LwtInstruction",
    "LwtScript",
    "SkippedLine",
    "ValidationIssue",
    "ValidationReport",
    "ParseError",
    "MalformedPlaceholder",
    "DuplicateIndex",
    "NonMonotoneIndex",
    "EmptyScript",
    "parse_script",
    "parse_template",
    "serialize",
    "validate_script",
    "to_dot",
    "script_to_json",
    "script_from_json",
]

_INSTRUCTION_HEAD = re.compile(r'\s*\(([0-9]+)\)\s*=\s*LLM\("', re.ASCII)
_NUMBER = re.compile(r"0|[1-9][0-9]*", re.ASCII)
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*", re.ASCII)
_INDEX = re.compile(r"\[(0|-?[1-9][0-9]*)\]", re.ASCII)


class ParseError(ValueError):
    """Raised when text cannot be turned into an :class:`LwtScript`."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no + 1}: {message}")
        self.line_no = line_no
        self.raw_text: str | None = None


class MalformedPlaceholder(ParseError):
    pass


class DuplicateIndex(ParseError):
    pass


class NonMonotoneIndex(ParseError):
    pass


class EmptyScript(ParseError):
    pass


@dataclass(frozen=True)
class Placeholder:
    """Reference to a prior output (``source`` is an int) or a named input (a str)."""

    source: Union[int, str]
    index_path: tuple[int, ...] = ()

    def __post_init__(self):
        if isinstance(self.source, bool) or not isinstance(self.source, (int, str)):
            raise TypeError(f"placeholder source must be int or str, got {self.source!r}")
        if isinstance(self.source, int) and self.source < 0:
            raise ValueError("numbered placeholder source must be non-negative")
        if isinstance(self.source, str) and not _NAME.fullmatch(self.source):
            raise ValueError(f"invalid input name {self.source!r}")
        object.__setattr__(self, "index_path", tuple(int(i) for i in self.index_path))

    @property
    def is_numbered(self) -> bool:
        return isinstance(self.source, int)

    def __str__(self) -> str:
        return "{(%s)}" % self.source + "".join(f"[{i}]" for i in self.index_path)


Segment = Union[str, Placeholder]


@dataclass(frozen=True)
class LwtInstruction:
    index: int
    segments: tuple[Segment, ...]
    # Raw text around the body, kept so serialization is byte-exact.
    prefix: str = field(default="", compare=False)
    suffix: str = field(default='")', compare=False)
    line_no: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.prefix:
            object.__setattr__(self, "prefix", f'({self.index})=LLM("')

    @property
    def template(self) -> str:
        return "".join(str(s) for s in self.segments)

    @property
    def placeholders(self) -> list[Placeholder]:
        return [s for s in self.segments if isinstance(s, Placeholder)]

    @property
    def dependencies(self) -> set[int]:
        return {p.source for p in self.placeholders if p.is_numbered}

    @property
    def line(self) -> str:
        return self.prefix + self.template + self.suffix


@dataclass(frozen=True)
class SkippedLine:
    line_no: int
    text: str


@dataclass(frozen=True)
class LwtScript:
    instructions: tuple[LwtInstruction, ...]
    skipped: tuple[SkippedLine, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "skipped", tuple(self.skipped))
        indices = [ins.index for ins in self.instructions]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise NonMonotoneIndex(f"instruction indices must strictly increase: {indices}")

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    @property
    def indices(self) -> list[int]:
        return [ins.index for ins in self.instructions]

    @property
    def named_inputs(self) -> frozenset[str]:
        return frozenset(
            p.source for ins in self.instructions for p in ins.placeholders if not p.is_numbered
        )

    @property
    def warnings(self) -> list[str]:
        return [
            f"line {s.line_no + 1}: skipped non-instruction line {s.text.strip()[:60]!r}"
            for s in self.skipped
            if s.text.strip()
        ]

    def get(self, index: int) -> LwtInstruction | None:
        for ins in self.instructions:
            if ins.index == index:
                return ins
        return None


def parse_template(body: str, line_no: int | None = None) -> tuple[Segment, ...]:
    """Split an instruction body into literal strings and placeholders."""
    segments: list[Segment] = []
    pos = 0
    literal_start = 0
    while True:
        start = body.find("{(", pos)
        if start < 0:
            break
        end = body.find(")}", start + 2)
        if end < 0:
            raise MalformedPlaceholder(f"unterminated placeholder at column {start}", line_no)
        content = body[start + 2:end]
        if _NUMBER.fullmatch(content):
            source: int | str = int(content)
        elif _NAME.fullmatch(content):
            source = content
        else:
            raise MalformedPlaceholder(f"bad placeholder {body[start:end + 2]!r}", line_no)
        pos = end + 2
        path = []
        while m := _INDEX.match(body, pos):
            path.append(int(m.group(1)))
            pos = m.end()
        if start > literal_start:
            segments.append(body[literal_start:start])
        segments.append(Placeholder(source, tuple(path)))
        literal_start = pos
    if literal_start < len(body):
        segments.append(body[literal_start:])
    return tuple(segments)


def _parse_line(line: str, line_no: int) -> LwtInstruction | None:
    head = _INSTRUCTION_HEAD.match(line)
    if head is None:
        return None
    close = line.rfind('")')
    if close < head.end():
        return None
    body = line[head.end():close]
    return LwtInstruction(
        index=int(head.group(1)),
        segments=parse_template(body, line_no),
        prefix=line[:head.end()],
        suffix=line[close:],
        line_no=line_no,
    )


def parse_script(text: str | bytes, *, first_block: bool = False) -> LwtScript:
    """Parse LWT text into a script.

    Lines that are not instructions (blank lines, code fences, prose) are kept
    as :class:`SkippedLine` entries and reported through ``script.warnings``.

    With ``first_block=True`` parsing stops taking instructions at the first
    index that does not increase, which tolerates model output that contains
    several candidate scripts; otherwise such lines raise.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    instructions: list[LwtInstruction] = []
    skipped: list[SkippedLine] = []
    seen: set[int] = set()
    closed = False
    for line_no, line in enumerate(text.split("\n")):
        ins = None if closed else _parse_line(line, line_no)
        if ins is None:
            skipped.append(SkippedLine(line_no, line))
            continue
        if instructions and ins.index <= instructions[-1].index:
            if first_block:
                closed = True
                skipped.append(SkippedLine(line_no, line))
                continue
            if ins.index in seen:
                raise DuplicateIndex(f"instruction ({ins.index}) defined twice", line_no)
            raise NonMonotoneIndex(
                f"instruction ({ins.index}) follows ({instructions[-1].index})", line_no
            )
        seen.add(ins.index)
        instructions.append(ins)
    if not instructions:
        err = EmptyScript("no (k)=LLM(\"...\") instruction lines found")
        err.raw_text = text
        raise err
    return LwtScript(tuple(instructions), tuple(skipped))


def serialize(script: LwtScript, *, keep_skipped: bool = True) -> str:
    """Render a script back to text; the inverse of :func:`parse_script`."""
    if not keep_skipped or any(ins.line_no is None for ins in script.instructions):
        return "\n".join(ins.line for ins in script.instructions)
    lines: dict[int, str] = {s.line_no: s.text for s in script.skipped}
    lines.update({ins.line_no: ins.line for ins in script.instructions})
    return "\n".join(lines[i] for i in sorted(lines))


@dataclass(frozen=True)
class ValidationIssue:
    index: int | None
    kind: str
    message: str


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [vars(e) for e in self.errors],
            "warnings": [vars(w) for w in self.warnings],
        }


def validate_script(script: LwtScript, bindings: Iterable[str] | Mapping[str, str] = ()) -> ValidationReport:
    """Check reference rules; ``bindings`` names the available named inputs."""
    names = set(bindings)
    report = ValidationReport()
    for s in script.skipped:
        if s.text.strip():
            report.warnings.append(
                ValidationIssue(None, "SkippedLine", f"line {s.line_no + 1}: {s.text.strip()[:60]!r}")
            )
    if script.instructions and script.instructions[0].index != 0:
        report.warnings.append(
            ValidationIssue(script.instructions[0].index, "NonZeroStart",
                            f"numbering starts at {script.instructions[0].index}, expected 0")
        )
    defined = set(script.indices)
    referenced: set[int] = set()
    for ins in script.instructions:
        for p in ins.placeholders:
            if not p.is_numbered:
                if p.source not in names:
                    report.errors.append(
                        ValidationIssue(ins.index, "UndefinedNamedInput",
                                        f"{p} refers to unbound input {p.source!r}")
                    )
                continue
            referenced.add(p.source)
            if p.source >= ins.index:
                kind = "SelfReference" if p.source == ins.index else "ForwardReference"
                report.errors.append(
                    ValidationIssue(ins.index, kind, f"{p} is not an earlier instruction")
                )
            elif p.source not in defined:
                report.warnings.append(
                    ValidationIssue(ins.index, "DanglingReference",
                                    f"{p} refers to instruction ({p.source}) missing from the script")
                )
    for ins in script.instructions[:-1]:
        if ins.index not in referenced:
            report.warnings.append(
                ValidationIssue(ins.index, "UnusedOutput", f"output of ({ins.index}) is never used")
            )
    return report


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def to_dot(script: LwtScript, *, name: str = "lwt", label_width: int = 40) -> str:
    """Render the message-passing network as a Graphviz digraph.

    One node per named input and per instruction, one edge per placeholder.
    Indexed edges carry the index path as label and are drawn dashed.
    """
    out = [f'digraph "{_dot_escape(name)}" {{', "  rankdir=TB;"]
    inputs: list[str] = []
    for ins in script.instructions:
        for p in ins.placeholders:
            if not p.is_numbered and p.source not in inputs:
                inputs.append(p.source)
    for nm in inputs:
        out.append(f'  "{nm}" [shape=ellipse, label="{nm}"];')
    for ins in script.instructions:
        text = ins.template
        if len(text) > label_width:
            text = text[: label_width - 3] + "..."
        out.append(f'  "{ins.index}" [shape=box, label="({ins.index}) {_dot_escape(text)}"];')
    for ins in script.instructions:
        for p in ins.placeholders:
            attrs = ""
            if p.index_path:
                label = "".join(f"[{i}]" for i in p.index_path)
                attrs = f' [label="{label}", style=dashed]'
            out.append(f'  "{p.source}" -> "{ins.index}"{attrs};')
    out.append("}")
    return "\n".join(out) + "\n"


def _segment_to_json(seg: Segment) -> dict:
    if isinstance(seg, Placeholder):
        return {"source": seg.source, "index_path": list(seg.index_path)}
    return {"text": seg}


def script_to_json(script: LwtScript, **dump_kwargs) -> str:
    doc = {
        "instructions": [
            {"index": ins.index, "segments": [_segment_to_json(s) for s in ins.segments]}
            for ins in script.instructions
        ],
        "named_inputs": sorted(script.named_inputs),
    }
    return json.dumps(doc, **dump_kwargs)


def script_from_json(text: str) -> LwtScript:
    doc = json.loads(text)
    instructions = []
    for item in doc["instructions"]:
        segs: list[Segment] = []
        for s in item["segments"]:
            if "text" in s:
                segs.append(s["text"])
            else:
                segs.append(Placeholder(s["source"], tuple(s["index_path"])))
        instructions.append(LwtInstruction(int(item["index"]), tuple(segs)))
    return LwtScript(tuple(instructions))
