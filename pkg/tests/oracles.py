"""Reference implementations used to check the package.

Nothing here imports ``knot``: each function reaches its answer by a
different route than the code under test (Decimal instead of Fraction,
recursive descent instead of term folding, digit loops instead of int(),
byte inspection instead of len()).
"""
from __future__ import annotations

import re
from decimal import ROUND_HALF_UP, Decimal, localcontext

CENT = Decimal("0.01")


def _round2(x: Decimal) -> Decimal:
    # ROUND_HALF_UP in the decimal module rounds ties away from zero.
    with localcontext() as ctx:
        ctx.prec = 60
        return x.quantize(CENT, rounding=ROUND_HALF_UP)


def _div(a: Decimal, b: Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        return a / b


def eval_expression(text: str, *, round_steps: bool = True) -> Decimal:
    """Recursive-descent evaluator for ``d (op d)*`` with * and / binding tighter.

    Every binary result is rounded to two decimals when ``round_steps``.
    """
    tokens = re.findall(r"\d+|[-+*/]", text.replace(" ", ""))
    pos = 0

    def step(x: Decimal) -> Decimal:
        return _round2(x) if round_steps else x

    def number() -> Decimal:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return Decimal(tok)

    def term() -> Decimal:
        nonlocal pos
        value = number()
        while pos < len(tokens) and tokens[pos] in "*/":
            op = tokens[pos]
            pos += 1
            rhs = number()
            value = step(value * rhs) if op == "*" else step(_div(value, rhs))
        return value

    def expr() -> Decimal:
        nonlocal pos
        value = term()
        while pos < len(tokens) and tokens[pos] in "+-":
            op = tokens[pos]
            pos += 1
            rhs = term()
            value = step(value + rhs if op == "+" else value - rhs)
        return value

    result = expr()
    assert pos == len(tokens), text
    return _round2(result)


def decimal_text(x: Decimal) -> str:
    """Integral values bare, otherwise at most two decimals, no trailing zeros."""
    x = _round2(x)
    if x == x.to_integral_value():
        return str(int(x))
    return format(x, "f").rstrip("0")


def add_digit_strings(a: str, b: str) -> str:
    """Schoolbook addition over decimal digit strings."""
    out = []
    carry = 0
    ia, ib = len(a) - 1, len(b) - 1
    while ia >= 0 or ib >= 0 or carry:
        da = ord(a[ia]) - 48 if ia >= 0 else 0
        db = ord(b[ib]) - 48 if ib >= 0 else 0
        s = da + db + carry
        out.append(chr(48 + s % 10))
        carry = s // 10
        ia -= 1
        ib -= 1
    return "".join(reversed(out)).lstrip("0") or "0"


def rational_op_text(op: str, a: int, b: int) -> str:
    """Exact rational result of ``a op b`` rounded half away to cents, rendered."""
    if op == "+":
        num, den = a + b, 1
    elif op == "-":
        num, den = a - b, 1
    elif op == "*":
        num, den = a * b, 1
    else:
        num, den = a, b
    if den < 0:
        num, den = -num, -den
    negative = num < 0
    # round(|num|/den * 100) with ties away from zero, integers only
    cents = (2 * 100 * abs(num) + den) // (2 * den)
    if cents == 0:
        return "0"
    sign = "-" if negative else ""
    whole, frac = divmod(cents, 100)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:02d}".rstrip("0")


def utf8_char_count(data: bytes) -> int:
    """Code points in UTF-8 data: every byte that is not a continuation byte."""
    return sum(1 for byte in data if byte & 0xC0 != 0x80)


def counting_sort(values: list[int], base: int = 10) -> list[int]:
    counts = [0] * base
    for v in values:
        counts[v] += 1
    out: list[int] = []
    for digit, c in enumerate(counts):
        out.extend([digit] * c)
    return out


def merge_sort(values: list[int]) -> list[int]:
    if len(values) <= 1:
        return list(values)
    mid = len(values) // 2
    left, right = merge_sort(values[:mid]), merge_sort(values[mid:])
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    return out + left[i:] + right[j:]


def ordered_intersection(first: list[int], second: list[int]) -> list[int]:
    lookup = frozenset(second)
    return [x for x in first if x in lookup]
