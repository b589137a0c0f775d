"""Extraction of structured answers from free-form model replies.

Replies are expected to end with an anchored line such as
``New_Position:(15, 20)`` or ``Answer:615``; lines are scanned in reverse so
the last anchored line wins, and the remainder after the anchor is handed to
a typed parser.
"""

from __future__ import annotations

import re

__all__ = [
    "ParseError",
    "parse_anchored",
    "parse_bool_answer",
    "parse_coordinate_pair",
    "parse_integer_answer",
    "parse_integer_list",
]

_NUMERAL = re.compile(r"\d+\.\d+|\d+")
_PARENTHESIZED = re.compile(r"\(.*?\)")
_BRACKETED = re.compile(r"\[.*?\]")
_INTEGER = re.compile(r"\d+")


class ParseError(ValueError):
    """The reply does not contain an extractable answer."""


def parse_anchored(text: str, anchor: str) -> str:
    """Remainder of the last line of ``text`` containing ``anchor``."""
    if not anchor:
        raise ValueError("anchor must be non-empty")
    for line in reversed(text.split("\n")):
        idx = line.find(anchor)
        if idx != -1:
            return line[idx + len(anchor):]
    raise ParseError(f"no line containing the {anchor!r} anchor")


def parse_coordinate_pair(raw: str) -> tuple[int, int]:
    """Integer (x, y) from the last parenthesized pair in ``raw``.

    Within each comma-separated half the last decimal-or-integer numeral is
    taken and truncated toward zero.
    """
    groups = _PARENTHESIZED.findall(raw)
    if not groups:
        raise ParseError(f"no parenthesized pair in {raw!r}")
    halves = groups[-1].strip("()").split(",")
    if len(halves) < 2:
        raise ParseError(f"expected two comma-separated coordinates in {raw!r}")
    coords = []
    for half in halves[:2]:
        numerals = _NUMERAL.findall(half)
        if not numerals:
            raise ParseError(f"no numeral in coordinate {half!r}")
        coords.append(int(float(numerals[-1])))
    return coords[0], coords[1]


def parse_integer_answer(raw: str) -> int:
    """Last integer numeral in ``raw``, arbitrary width, parsed exactly."""
    numerals = _INTEGER.findall(raw)
    if not numerals:
        raise ParseError(f"no integer numeral in {raw!r}")
    return int(numerals[-1])


def parse_bool_answer(raw: str) -> bool:
    """YES / NO (case-insensitive) from the start of ``raw``."""
    token = raw.strip().strip(".!,").upper()
    if token.startswith("YES"):
        return True
    if token.startswith("NO"):
        return False
    raise ParseError(f"expected YES or NO, got {raw!r}")


def parse_integer_list(text: str) -> list[int]:
    """Integer list from the last bracketed group in ``text`` that holds
    numerals (or is empty).  Works on whole replies, no anchor required."""
    groups = _BRACKETED.findall(text)
    for group in reversed(groups):
        body = group.strip("[]").strip()
        if not body:
            return []
        numerals = _INTEGER.findall(body)
        if numerals:
            return [int(n) for n in numerals]
    raise ParseError(f"no bracketed integer list in {text!r}")
