"""Binary codec for syntax trees, the unit shipped over the admin channel.

Layout is tag-prefixed, big-endian throughout:
  0x01 symbol / 0x02 string -> u32 byte length + UTF-8 bytes
  0x03 int                  -> 8 bytes two's complement
  0x04 float                -> 8 bytes IEEE-754
  0x05 list                 -> u32 child count + encoded children
"""

from __future__ import annotations

import struct

from .ast import AstNode, Float, Int, ListNode, Str, Symbol

TAG_SYMBOL = 0x01
TAG_STR = 0x02
TAG_INT = 0x03
TAG_FLOAT = 0x04
TAG_LIST = 0x05

MAX_NESTING = 500


class DecodeError(Exception):
    pass


class UnknownTagError(DecodeError):
    def __init__(self, tag: int):
        super().__init__(f"unknown tag 0x{tag:02x}")
        self.tag = tag


class TruncatedError(DecodeError):
    """Input ends before a field completes."""


class LengthExceedsInputError(TruncatedError):
    """A declared length runs past the remaining bytes."""

    def __init__(self, declared: int, remaining: int):
        super().__init__(f"declared length {declared} exceeds {remaining} remaining bytes")
        self.declared = declared
        self.remaining = remaining


class InvalidUtf8Error(DecodeError):
    pass


def encode_ast(node: AstNode) -> bytes:
    out = bytearray()
    _encode_into(node, out)
    return bytes(out)


def _encode_into(node: AstNode, out: bytearray) -> None:
    if isinstance(node, Symbol):
        raw = node.name.encode("utf-8")
        out.append(TAG_SYMBOL)
        out += struct.pack(">I", len(raw))
        out += raw
    elif isinstance(node, Str):
        raw = node.value.encode("utf-8")
        out.append(TAG_STR)
        out += struct.pack(">I", len(raw))
        out += raw
    elif isinstance(node, Int):
        out.append(TAG_INT)
        out += struct.pack(">q", node.value)
    elif isinstance(node, Float):
        out.append(TAG_FLOAT)
        out += struct.pack(">d", node.value)
    elif isinstance(node, ListNode):
        out.append(TAG_LIST)
        out += struct.pack(">I", len(node.children))
        for child in node.children:
            _encode_into(child, out)
    else:
        raise TypeError(f"not an AST node: {node!r}")


def decode_ast(data: bytes | memoryview) -> tuple[AstNode, int]:
    """Decode one node from the front of `data`.

    Returns the node and the number of bytes consumed; trailing bytes are
    left untouched.
    """
    view = memoryview(data)
    node, consumed = _decode_at(view, 0, 0)
    return node, consumed


def _need(view: memoryview, offset: int, count: int) -> None:
    if offset + count > len(view):
        raise TruncatedError(
            f"need {count} bytes at offset {offset}, have {len(view) - offset}"
        )


def _decode_at(view: memoryview, offset: int, depth: int) -> tuple[AstNode, int]:
    if depth > MAX_NESTING:
        raise DecodeError("list nesting too deep")
    _need(view, offset, 1)
    tag = view[offset]
    offset += 1
    if tag in (TAG_SYMBOL, TAG_STR):
        _need(view, offset, 4)
        (length,) = struct.unpack_from(">I", view, offset)
        offset += 4
        if offset + length > len(view):
            raise LengthExceedsInputError(length, len(view) - offset)
        raw = bytes(view[offset : offset + length])
        offset += length
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidUtf8Error(f"invalid UTF-8 payload: {exc}") from None
        if tag == TAG_SYMBOL:
            try:
                return Symbol(text), offset
            except ValueError as exc:
                raise DecodeError(f"invalid symbol payload: {exc}") from None
        return Str(text), offset
    if tag == TAG_INT:
        _need(view, offset, 8)
        (value,) = struct.unpack_from(">q", view, offset)
        return Int(value), offset + 8
    if tag == TAG_FLOAT:
        _need(view, offset, 8)
        (value,) = struct.unpack_from(">d", view, offset)
        return Float(value), offset + 8
    if tag == TAG_LIST:
        _need(view, offset, 4)
        (count,) = struct.unpack_from(">I", view, offset)
        offset += 4
        children = []
        for _ in range(count):
            child, offset = _decode_at(view, offset, depth + 1)
            children.append(child)
        return ListNode(tuple(children)), offset
    raise UnknownTagError(tag)
