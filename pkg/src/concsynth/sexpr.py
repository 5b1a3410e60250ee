"""Tokenizer and reader for SMT-LIB / SyGuS S-expressions.

Atoms come back as :class:`Symbol` (a ``str`` carrying its source position),
``int`` for numerals and :class:`String` for string literals.  Lists are
:class:`SList` (a ``list`` with the position of the opening parenthesis).
"""

from __future__ import annotations

import re

from .errors import ParseError

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<quoted>\|[^|]*\|)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<numeral>-?\d+)(?![^\s()])
  | (?P<symbol>[^\s()|";]+)
    """,
    re.VERBOSE,
)


class Symbol(str):
    line = 0
    col = 0

    def __new__(cls, value: str, line: int = 0, col: int = 0):
        s = super().__new__(cls, value)
        s.line = line
        s.col = col
        return s


class String(str):
    pass


class SList(list):
    line = 0
    col = 0


def position(x) -> tuple[int, int]:
    return getattr(x, "line", 0), getattr(x, "col", 0)


def tokenize(text: str):
    line, line_start = 1, 0
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind not in ("ws", "comment"):
            yield kind, value, line, col
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()


def parse_all(text: str) -> list:
    """Read every top-level S-expression in ``text``."""
    stack: list[SList] = []
    out: list = []
    for kind, value, line, col in tokenize(text):
        if kind == "lparen":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
            continue
        if kind == "rparen":
            if not stack:
                raise ParseError(line, col, "unbalanced ')'")
            item = stack.pop()
        elif kind == "numeral":
            item = int(value)
        elif kind == "quoted":
            item = Symbol(value[1:-1], line, col)
        elif kind == "string":
            item = String(value[1:-1].replace('""', '"'))
        else:
            item = Symbol(value, line, col)
        (stack[-1] if stack else out).append(item)
    if stack:
        line, col = position(stack[-1])
        raise ParseError(line, col, "unterminated list")
    return out


def parse_one(text: str):
    items = parse_all(text)
    if len(items) != 1:
        raise ParseError(1, 1, f"expected one expression, found {len(items)}")
    return items[0]


def is_balanced(text: str) -> bool:
    """True when ``text`` holds at least one complete top-level expression."""
    depth = 0
    seen = False
    try:
        for kind, _, _, _ in tokenize(text):
            if kind == "lparen":
                depth += 1
            elif kind == "rparen":
                depth -= 1
                if depth == 0:
                    seen = True
            elif depth == 0:
                seen = True
    except ParseError:
        return False
    return seen and depth == 0
