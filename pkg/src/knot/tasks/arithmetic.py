"""Arithmetic expressions and large-digit addition."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from ..backends.oracle import format_number, round_half_away
from ..pipeline import BaselinePrompts
from .base import Task, TaskInstance, Unparseable, line, parse_number

OPERATORS = "+-*/"
_OP_NAMES = {"+": "Add", "-": "Minus", "*": "Multiply", "/": "Divide"}
_ROUND_TAIL = "Only output number. If contains floating point, round to two decimal places."


def evaluate(operands: Sequence[int], operators: Sequence[str], *, round_intermediate: bool = True) -> Fraction:
    """Multiplication and division first, then addition and subtraction, each left to right.

    With ``round_intermediate`` every two-number step is rounded to two
    decimals (half away from zero), which is what a step-by-step script does.
    """
    if len(operators) != len(operands) - 1:
        raise ValueError("need exactly one operator between consecutive operands")
    step = round_half_away if round_intermediate else (lambda v: v)
    terms: list[tuple[str, Fraction]] = []
    sign, term = "+", Fraction(operands[0])
    for op, x in zip(operators, operands[1:]):
        if op == "*":
            term = step(term * x)
        elif op == "/":
            if x == 0:
                raise ZeroDivisionError("division by zero in expression")
            term = step(term / x)
        elif op in "+-":
            terms.append((sign, term))
            sign, term = op, Fraction(x)
        else:
            raise ValueError(f"unknown operator {op!r}")
    terms.append((sign, term))
    total = terms[0][1]
    for s, value in terms[1:]:
        total = step(total + value if s == "+" else total - value)
    return round_half_away(total)


def expression(operands: Sequence[int], operators: Sequence[str]) -> str:
    out = [str(operands[0])]
    for op, x in zip(operators, operands[1:]):
        out.append(op)
        out.append(str(x))
    return "".join(out)


class ArithmeticTask(Task):
    name = "arithmetic"
    sizes = (8, 16, 32)
    baseline = BaselinePrompts(
        instruction="Calculate the given sequence. Do multiplication and division first, "
                    "round to two decimal places if needed. Output only the number.",
        few_shot="Input: 3+5+6+2+4+5*3+2\nOutput: 37",
        cot_example=(
            "Input: 3+5+6+2+4+5*3+2\n"
            "Answer: 3+5=8, 8+6=14, 14+2=16, 16+4=20, 5*3=15, 20+15=35, 35+2=37.\n"
            "The final answer is 37."
        ),
    )

    def _payload(self, size: int, rng: random.Random, two_digit: bool = False) -> dict:
        if size < 2:
            raise ValueError("arithmetic needs at least two operands")
        lo, hi = (10, 99) if two_digit else (1, 9)
        return {
            "operands": [rng.randint(lo, hi) for _ in range(size)],
            "operators": [rng.choice(OPERATORS) for _ in range(size - 1)],
        }

    def render(self, instance: TaskInstance):
        q = expression(instance.payload["operands"], instance.payload["operators"])
        return q, {"input": q}

    def ground_truth(self, instance: TaskInstance, *, round_intermediate: bool = True) -> Fraction:
        return evaluate(instance.payload["operands"], instance.payload["operators"],
                        round_intermediate=round_intermediate)

    def normalize(self, raw: str) -> Fraction:
        return parse_number(raw)

    def format_answer(self, answer) -> str:
        return format_number(Fraction(answer))

    def fixture_script(self, instance: TaskInstance) -> str:
        ops = instance.payload["operators"]
        out = [line(0, "Given {(input)}, Split the numbers without operators. Only output list.")]

        def emit(op: str, a: str, b: str) -> str:
            idx = len(out)
            out.append(line(idx, f"{_OP_NAMES[op]}({a}, {b}). {_ROUND_TAIL}"))
            return f"{{({idx})}}"

        acc: str | None = None
        pending = "+"
        term = "{(0)}[0]"
        for k, op in enumerate(ops):
            operand = f"{{(0)}}[{k + 1}]"
            if op in "*/":
                term = emit(op, term, operand)
                continue
            acc = term if acc is None else emit(pending, acc, term)
            pending, term = op, operand
        if acc is not None:
            emit(pending, acc, term)
        return "\n".join(out)


class LargeDigitTask(Task):
    name = "large_digit"
    sizes = (8, 16, 32)
    baseline = BaselinePrompts(
        instruction="Calculate the sum of the two numbers. Output only the result.",
        few_shot="Input: 4721+5698\nOutput: 10419",
        cot_example=(
            "Input: 4721+5698\n"
            "Answer: 1+8=9 carry 0, 2+9=11 carry 1, 7+6+1=14 carry 1, 4+5+1=10 carry 1. "
            "The final answer is 10419."
        ),
    )

    def _payload(self, size: int, rng: random.Random) -> dict:
        def number() -> str:
            return str(rng.randint(1, 9)) + "".join(str(rng.randrange(10)) for _ in range(size - 1))

        return {"a": number(), "b": number()}

    def render(self, instance: TaskInstance):
        q = f"{instance.payload['a']}+{instance.payload['b']}"
        return q, {"input": q}

    def ground_truth(self, instance: TaskInstance) -> int:
        return int(instance.payload["a"]) + int(instance.payload["b"])

    def normalize(self, raw: str) -> int:
        value = parse_number(raw.replace(" ", ""))
        if value.denominator != 1:
            raise Unparseable(f"not an integer: {raw!r}")
        return int(value)

    def fixture_script(self, instance: TaskInstance) -> str:
        n = len(instance.payload["a"])
        if len(instance.payload["b"]) != n:
            raise ValueError("fixture script expects operands of equal length")
        out = [line(0, 'Split "{(input)}" by + and output in string format in an array.')]
        for k in range(n):
            d = n - 1 - k
            digits = f"{{(0)}}[0][{d}]+{{(0)}}[1][{d}]"
            expr = digits if k == 0 else f"{{({2 * k})}}+{digits}"
            out.append(line(2 * k + 1, f"Calculate {expr}. Only output result."))
            out.append(line(2 * k + 2, f"Calculate {{({2 * k + 1})}} divide 10, Only output integer."))
        units = "".join(f"{{({2 * k + 1})}}[-1]" for k in reversed(range(n)))
        out.append(line(2 * n + 1, f"Convert into an integer: {{({2 * n})}}{units}"))
        return "\n".join(out)
