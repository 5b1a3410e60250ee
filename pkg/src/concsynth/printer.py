"""Render CLIA nodes in SyGuS / SMT-LIB concrete syntax."""

from __future__ import annotations

import re

from .clia import (
    Add,
    And,
    App,
    AppB,
    BoolConst,
    Const,
    CondIte,
    Geq,
    Ite,
    ModEq,
    Mul,
    Not,
    Or,
    Var,
)

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")


def symbol(name: str, quote: bool = False) -> str:
    if quote or not _SIMPLE.match(name):
        return f"|{name}|"
    return name


def numeral(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def to_sexpr(node, quote: bool = False) -> str:
    """Concrete syntax for a term or condition.

    ``Add(a, Mul(-1, b))`` prints as ``(- a b)``; every other node maps to
    exactly one operator, so the output reads back to the same AST.
    """
    out: list[str] = []
    _emit(node, out, quote)
    return "".join(out)


def _emit(n, out: list[str], quote: bool) -> None:
    if isinstance(n, Const):
        out.append(numeral(n.value))
    elif isinstance(n, Var):
        out.append(symbol(n.name, quote))
    elif isinstance(n, Add):
        if isinstance(n.right, Mul) and n.right.coef == -1:
            out.append("(- ")
            _emit(n.left, out, quote)
            out.append(" ")
            _emit(n.right.arg, out, quote)
        else:
            out.append("(+ ")
            _emit(n.left, out, quote)
            out.append(" ")
            _emit(n.right, out, quote)
        out.append(")")
    elif isinstance(n, Mul):
        out.append(f"(* {numeral(n.coef)} ")
        _emit(n.arg, out, quote)
        out.append(")")
    elif isinstance(n, (Ite, CondIte)):
        out.append("(ite ")
        _emit(n.cond, out, quote)
        out.append(" ")
        _emit(n.then, out, quote)
        out.append(" ")
        _emit(n.other, out, quote)
        out.append(")")
    elif isinstance(n, (App, AppB)):
        if not n.args:
            out.append(symbol(n.fname, quote))
            return
        out.append("(" + symbol(n.fname, quote))
        for a in n.args:
            out.append(" ")
            _emit(a, out, quote)
        out.append(")")
    elif isinstance(n, Geq):
        out.append("(>= ")
        _emit(n.left, out, quote)
        out.append(" ")
        _emit(n.right, out, quote)
        out.append(")")
    elif isinstance(n, (And, Or)):
        op = "and" if isinstance(n, And) else "or"
        if not n.args:
            out.append("true" if op == "and" else "false")
            return
        out.append(f"({op}")
        for a in n.args:
            out.append(" ")
            _emit(a, out, quote)
        out.append(")")
    elif isinstance(n, Not):
        out.append("(not ")
        _emit(n.arg, out, quote)
        out.append(")")
    elif isinstance(n, BoolConst):
        out.append("true" if n.value else "false")
    elif isinstance(n, ModEq):
        out.append("(= (mod ")
        _emit(n.term, out, quote)
        out.append(f" {n.modulus}) {n.residue})")
    else:
        raise TypeError(f"not a CLIA node: {n!r}")
