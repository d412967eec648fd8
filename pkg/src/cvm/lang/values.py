"""Evaluated values and their wire representation.

Values are plain Python objects: None (unit), bool, int, float, str, tuple
(value list), and Handle for opaque node-side references. `value_to_ast`
fixes the canonical tree encoding used for protocol replies; unit maps to
the empty list and handles to (handle <kind-code> <id>).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .ast import AstNode, Float, Int, ListNode, Str, Symbol, print_form


class HandleKind(enum.IntEnum):
    RUNTIME = 1
    CONTAINER = 2
    COMPONENT = 3
    SERVICE = 4
    METRIC = 5
    METRIC_SPEC = 6


@dataclass(frozen=True, slots=True)
class Handle:
    kind: HandleKind
    id: int


Value = None | bool | int | float | str | Handle | tuple

_HANDLE_MARKER = Symbol("handle")
_TRUE = Symbol("true")
_FALSE = Symbol("false")


def value_to_ast(value: Value) -> AstNode:
    if value is None:
        return ListNode(())
    if isinstance(value, bool):  # before int: bool subclasses int
        return _TRUE if value else _FALSE
    if isinstance(value, int):
        return Int(value)
    if isinstance(value, float):
        return Float(value)
    if isinstance(value, str):
        return Str(value)
    if isinstance(value, Handle):
        return ListNode((_HANDLE_MARKER, Int(int(value.kind)), Int(value.id)))
    if isinstance(value, tuple):
        return ListNode(tuple(value_to_ast(v) for v in value))
    raise TypeError(f"not a value: {value!r}")


def ast_to_value(node: AstNode) -> Value:
    """Inverse of value_to_ast. The empty list reads back as unit."""
    if isinstance(node, Int):
        return node.value
    if isinstance(node, Float):
        return node.value
    if isinstance(node, Str):
        return node.value
    if isinstance(node, Symbol):
        if node == _TRUE:
            return True
        if node == _FALSE:
            return False
        raise ValueError(f"symbol {node.name!r} is not a value encoding")
    if isinstance(node, ListNode):
        kids = node.children
        if not kids:
            return None
        if (
            len(kids) == 3
            and kids[0] == _HANDLE_MARKER
            and isinstance(kids[1], Int)
            and isinstance(kids[2], Int)
        ):
            return Handle(HandleKind(kids[1].value), kids[2].value)
        return tuple(ast_to_value(k) for k in kids)
    raise TypeError(f"not an AST node: {node!r}")


def render_value(value: Value) -> str:
    """Human-facing rendering; unit prints as 'unit', handles show their kind."""
    if value is None:
        return "unit"
    if isinstance(value, Handle):
        return f"#<{value.kind.name.lower()}:{value.id}>"
    if isinstance(value, tuple):
        return "(" + " ".join(render_value(v) for v in value) + ")"
    return print_form(value_to_ast(value))
