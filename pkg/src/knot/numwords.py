"""English cardinal words for small non-negative integers (0..999)."""
from __future__ import annotations

_ONES = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
    "seventeen", "eighteen", "nineteen",
]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]


def to_words(n: int) -> str:
    if not 0 <= n < 1000:
        raise ValueError(f"{n} outside supported range 0..999")
    if n < 20:
        return _ONES[n]
    if n < 100:
        tens, ones = divmod(n, 10)
        return _TENS[tens] + (f"-{_ONES[ones]}" if ones else "")
    hundreds, rest = divmod(n, 100)
    head = f"{_ONES[hundreds]} hundred"
    return head if rest == 0 else f"{head} and {to_words(rest)}"


_LOOKUP = {to_words(i): i for i in range(1000)}


def from_words(text: str) -> int:
    """Inverse of :func:`to_words`; also accepts plain digits."""
    key = " ".join(text.strip().lower().replace("_", " ").split())
    if key.isdigit():
        return int(key)
    key = key.replace(" - ", "-")
    if key in _LOOKUP:
        return _LOOKUP[key]
    alt = key.replace(" and ", " ").replace("-", " ")
    for words, value in _LOOKUP.items():
        if words.replace(" and ", " ").replace("-", " ") == alt:
            return value
    raise ValueError(f"not an English number: {text!r}")
