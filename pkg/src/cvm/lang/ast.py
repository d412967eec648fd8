"""Syntax tree for the reconfiguration language.

A form is one of five node kinds: symbol, string, integer, float, or list.
Nodes are immutable and compare structurally, so they can be handed between
threads and used as wire payloads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

# Characters that can never appear in a symbol name: they are tokenizer
# delimiters, so a name containing one would not survive print -> parse.
_SYMBOL_FORBIDDEN = set('()";') | set(" \t\r\n\f\v")


@dataclass(frozen=True, slots=True)
class Symbol:
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("symbol name must be non-empty")
        if any(c in _SYMBOL_FORBIDDEN for c in self.name):
            raise ValueError(f"symbol name contains a delimiter character: {self.name!r}")
        if _looks_numeric(self.name):
            raise ValueError(f"symbol name would re-lex as a number: {self.name!r}")


@dataclass(frozen=True, slots=True)
class Str:
    value: str


@dataclass(frozen=True, slots=True)
class Int:
    value: int

    def __post_init__(self) -> None:
        if not INT64_MIN <= self.value <= INT64_MAX:
            raise ValueError(f"integer literal out of 64-bit range: {self.value}")


@dataclass(frozen=True, slots=True)
class Float:
    value: float


@dataclass(frozen=True, slots=True)
class ListNode:
    children: tuple[AstNode, ...]


AstNode = Symbol | Str | Int | Float | ListNode


@dataclass(frozen=True, slots=True)
class Script:
    """Ordered top-level forms; evaluated first-to-last, stopping on failure."""

    forms: tuple[AstNode, ...]

    def __len__(self) -> int:
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)


def _looks_numeric(name: str) -> bool:
    # Mirrors the reader's ASCII-only int/float token rules.
    body = name[1:] if name[0] in "+-" else name
    if not body:
        return False
    if all(c in "0123456789" for c in body):
        return True
    head, dot, tail = body.partition(".")
    if not dot or "." in tail:
        return False
    digits = head + tail
    return bool(digits) and all(c in "0123456789" for c in digits)


def format_float(x: float) -> str:
    """Render a float so it re-lexes as a float token and round-trips exactly.

    repr() is shortest-exact but may use exponent notation, which the token
    grammar does not know; expand those through Decimal instead.
    """
    if math.isnan(x) or math.isinf(x):
        # Outside the token grammar; printed for diagnostics only.
        return repr(x)
    s = repr(x)
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    if "." not in s:
        s += ".0"
    return s


def escape_string(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def print_form(node: AstNode) -> str:
    """Canonical textual form: single spaces, re-escaped strings."""
    if isinstance(node, Symbol):
        return node.name
    if isinstance(node, Str):
        return f'"{escape_string(node.value)}"'
    if isinstance(node, Int):
        return str(node.value)
    if isinstance(node, Float):
        return format_float(node.value)
    if isinstance(node, ListNode):
        return "(" + " ".join(print_form(c) for c in node.children) + ")"
    raise TypeError(f"not an AST node: {node!r}")


def print_script(script: Script) -> str:
    return "\n".join(print_form(f) for f in script.forms) + ("\n" if script.forms else "")
