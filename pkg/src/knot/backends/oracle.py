"""Deterministic interpreter for the elementary prompts used by the bundled scripts.

The oracle stands in for a model during offline runs.  It only understands a
fixed set of single-step instructions (two-number arithmetic, splitting,
counting-sort steps, membership tests, digit concatenation) and raises
:class:`UnrecognizedPattern` for anything else.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Iterable

from .. import numwords
from .base import Completion, DivisionByZero, TokenUsage, UnrecognizedPattern

_NUM = r"[-+]?\d+(?:\.\d+)?"
_ARRAY = r"\[[^\[\]]*\]"


def round_half_away(value: Fraction, places: int = 2) -> Fraction:
    scale = 10 ** places
    scaled = abs(value) * scale
    whole, rest = divmod(scaled.numerator, scaled.denominator)
    if 2 * rest >= scaled.denominator:
        whole += 1
    return Fraction(whole if value >= 0 else -whole, scale)


def format_number(value: Fraction) -> str:
    """Render an exact number: integers bare, otherwise up to two decimals."""
    value = round_half_away(value)
    if value.denominator == 1:
        return str(value.numerator)
    sign = "-" if value < 0 else ""
    cents = abs(value.numerator) * (100 // value.denominator)
    text = f"{cents // 100}.{cents % 100:02d}".rstrip("0")
    return sign + text


def _number(text: str) -> Fraction:
    return Fraction(text.strip().strip("'\""))


def _render_list(items: Iterable[str]) -> str:
    out = []
    for item in items:
        try:
            out.append(format_number(_number(item)))
        except (ValueError, ZeroDivisionError):
            out.append(repr(item))
    return "[" + ", ".join(out) + "]"


def _elements(text: str) -> list[str]:
    from ..runtime import parse_list

    return parse_list(text)


def _arith(m: re.Match) -> str:
    op, a, b = m.group(1), _number(m.group(2)), _number(m.group(3))
    if op == "Add":
        result = a + b
    elif op in ("Minus", "Subtraction", "Subtract"):
        result = a - b
    elif op == "Multiply":
        result = a * b
    else:
        if b == 0:
            raise DivisionByZero(f"Divide({m.group(2)}, {m.group(3)})")
        result = a / b
    return format_number(result)


def _split_numbers(m: re.Match) -> str:
    return _render_list(re.findall(r"\d+(?:\.\d+)?", m.group(1)))


def _split_plus(m: re.Match) -> str:
    parts = [p.strip() for p in m.group(1).split("+")]
    return "[" + ", ".join(f"'{p}'" for p in parts) + "]"


def _calc_sum(m: re.Match) -> str:
    return format_number(sum((_number(t) for t in re.findall(_NUM, m.group(1))), Fraction(0)))


def _calc_div10(m: re.Match) -> str:
    value = _number(m.group(1))
    return str(value.numerator // (value.denominator * 10))


def _init_array(m: re.Match) -> str:
    return "[" + ", ".join(["0"] * int(m.group(1))) + "]"


def _increment(m: re.Match) -> str:
    idx = int(m.group(1))
    counts = [int(_number(x)) for x in _elements(m.group(2))]
    if not -len(counts) <= idx < len(counts):
        raise UnrecognizedPattern(m.string)
    counts[idx] += 1
    return "[" + ", ".join(map(str, counts)) + "]"


def _to_english(m: re.Match) -> str:
    words = [numwords.to_words(int(_number(x))) for x in _elements(m.group(1))]
    return "[" + ", ".join(f"'{w}'" for w in words) + "]"


def _expand(m: re.Match) -> str:
    from ..runtime import split_top_level

    out: list[str] = []
    for clause in split_top_level(m.group(1)):
        cm = re.fullmatch(r"\s*(.+?)\s+(-?\d+)s\s*", clause)
        if cm is None:
            raise UnrecognizedPattern(m.string)
        try:
            count = numwords.from_words(cm.group(1))
        except ValueError:
            raise UnrecognizedPattern(m.string) from None
        out.extend([cm.group(2)] * count)
    return "[" + ", ".join(out) + "]"


def _merge_sorted(m: re.Match) -> str:
    items = _elements(m.group(1)) + _elements(m.group(2))
    try:
        return _render_list(str(x) for x in sorted(_number(i) for i in items))
    except ValueError:
        raise UnrecognizedPattern(m.string) from None


def _concat(m: re.Match) -> str:
    from ..runtime import split_top_level

    items: list[str] = []
    for part in split_top_level(m.group(1)):
        part = part.strip()
        if part.startswith("["):
            items.extend(_elements(part))
        elif part:
            items.append(part.strip("'\""))
    return _render_list(items)


def _intersect(m: re.Match) -> str:
    left, right = _elements(m.group(1)), _elements(m.group(2))

    def key(x: str):
        try:
            return _number(x)
        except (ValueError, ZeroDivisionError):
            return x

    pool = {key(x) for x in right}
    return _render_list(x for x in left if key(x) in pool)


def _to_integer(m: re.Match) -> str:
    return m.group(1).lstrip("0") or "0"


_TAIL_NUMBER = r"\.\s*Only output number\.(?:\s*If contains floating point, round to two decimal places\.)?"

# Order matters: the first matching pattern wins.
PATTERNS: list[tuple[str, re.Pattern, Callable[[re.Match], str]]] = [
    ("arithmetic", re.compile(
        rf"(Add|Minus|Subtraction|Subtract|Multiply|Divide)\(\s*({_NUM})\s*,\s*({_NUM})\s*\){_TAIL_NUMBER}"),
     _arith),
    ("split-numbers", re.compile(
        r"Given (.+?), Split the numbers without operators\. Only output list\."), _split_numbers),
    ("split-plus", re.compile(
        r"Split \"(.*)\" by \+ and output in string format in an array\."), _split_plus),
    ("calculate-sum", re.compile(
        rf"Calculate ({_NUM}(?:\s*\+\s*{_NUM})+)\.\s*Only output result\."), _calc_sum),
    ("calculate-div10", re.compile(
        r"Calculate ([-+]?\d+) divide 10, Only output integer\."), _calc_div10),
    ("init-array", re.compile(r"Initialize an array of size (\d+) to zero\."), _init_array),
    ("increment", re.compile(
        rf"Increment the count at index (-?\d+) (?:\(start from 0\) )?in ({_ARRAY})"
        r"(?: \(index start from 0\))?\. Only output updated array\."), _increment),
    ("to-english", re.compile(rf"Convert ({_ARRAY}) in English\. Output an array\."), _to_english),
    ("expand-counts", re.compile(
        r"The array should contain (.+?)\. Output in array format\."), _expand),
    ("merge-sorted", re.compile(
        rf"Combine ({_ARRAY}) and ({_ARRAY}) in ascending order\. Only output array\."), _merge_sorted),
    ("concat", re.compile(r"Combine (.*?) in one array\.(?: Repeated is allowed\.)?"), _concat),
    ("intersect", re.compile(
        rf"Find the intersection for ({_ARRAY}) and ({_ARRAY})\. Output \[\] if mutually exclusive\."),
     _intersect),
    ("to-integer", re.compile(r"Convert into an integer: ?([0-9]*)"), _to_integer),
]


def oracle_infer(prompt: str) -> str:
    """Answer one elementary prompt exactly, or raise :class:`UnrecognizedPattern`."""
    text = " ".join(prompt.split())
    for _name, pattern, handler in PATTERNS:
        m = pattern.fullmatch(text)
        if m is not None:
            return handler(m)
    raise UnrecognizedPattern(prompt)


class OracleBackend:
    """Backend wrapper around :func:`oracle_infer` with estimated token usage."""

    def infer(self, prompt: str) -> Completion:
        text = oracle_infer(prompt)
        return Completion(text, TokenUsage.estimate(prompt, text))
