"""Tokenizer and parser for reconfiguration scripts.

Grammar: parenthesized lists, whitespace-separated tokens, double-quoted
strings with \\" and \\\\ escapes, `;` comments to end of line. A token of
optional sign plus digits is an integer; with a single dot it is a float;
anything else is a symbol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import AstNode, Float, Int, ListNode, Script, Str, Symbol

MAX_NESTING = 500

_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_FLOAT_RE = re.compile(r"[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+)\Z")
_DELIMITERS = set('()";') | set(" \t\r\n\f\v")


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # "(" | ")" | "string" | "atom"
    text: str
    line: int
    column: int


class _Scanner:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.line = 1
        self.column = 1

    def _advance(self, ch: str) -> None:
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        src = self.source
        while self.pos < len(src):
            ch = src[self.pos]
            if ch in " \t\r\n\f\v":
                self._advance(ch)
            elif ch == ";":
                while self.pos < len(src) and src[self.pos] != "\n":
                    self._advance(src[self.pos])
            elif ch in "()":
                out.append(_Token(ch, ch, self.line, self.column))
                self._advance(ch)
            elif ch == '"':
                out.append(self._string())
            else:
                out.append(self._atom())
        return out

    def _string(self) -> _Token:
        line, column = self.line, self.column
        self._advance('"')
        src = self.source
        parts: list[str] = []
        while self.pos < len(src):
            ch = src[self.pos]
            if ch == '"':
                self._advance(ch)
                return _Token("string", "".join(parts), line, column)
            if ch == "\\":
                esc_line, esc_col = self.line, self.column
                self._advance(ch)
                if self.pos >= len(src):
                    break
                esc = src[self.pos]
                if esc not in ('"', "\\"):
                    raise ParseError(f"unsupported string escape '\\{esc}'", esc_line, esc_col)
                parts.append(esc)
                self._advance(esc)
            else:
                parts.append(ch)
                self._advance(ch)
        raise ParseError("unterminated string", line, column)

    def _atom(self) -> _Token:
        line, column = self.line, self.column
        src = self.source
        start = self.pos
        while self.pos < len(src) and src[self.pos] not in _DELIMITERS:
            self._advance(src[self.pos])
        return _Token("atom", src[start : self.pos], line, column)


def _classify_atom(tok: _Token) -> AstNode:
    text = tok.text
    if _INT_RE.match(text):
        try:
            return Int(int(text))
        except ValueError as exc:
            raise ParseError(str(exc), tok.line, tok.column) from None
    if _FLOAT_RE.match(text):
        return Float(float(text))
    return Symbol(text)


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def parse_all(self) -> list[AstNode]:
        forms = []
        while self.pos < len(self.tokens):
            forms.append(self._form(depth=0))
        return forms

    def _form(self, depth: int) -> AstNode:
        tok = self.tokens[self.pos]
        self.pos += 1
        if tok.kind == "(":
            if depth >= MAX_NESTING:
                raise ParseError("form nesting too deep", tok.line, tok.column)
            children: list[AstNode] = []
            while True:
                if self.pos >= len(self.tokens):
                    raise ParseError("unbalanced parentheses: missing ')'", tok.line, tok.column)
                if self.tokens[self.pos].kind == ")":
                    self.pos += 1
                    return ListNode(tuple(children))
                children.append(self._form(depth + 1))
        if tok.kind == ")":
            raise ParseError("unbalanced parentheses: unexpected ')'", tok.line, tok.column)
        if tok.kind == "string":
            return Str(tok.text)
        return _classify_atom(tok)


def parse(source: str) -> Script:
    """Parse source text into all of its top-level forms.

    Empty (or comment-only) input parses to an empty script.
    """
    tokens = _Scanner(source).tokens()
    return Script(tuple(_Parser(tokens).parse_all()))


def parse_form(source: str) -> AstNode:
    """Parse exactly one form; reject empty input or trailing forms."""
    script = parse(source)
    if len(script) != 1:
        raise ParseError(f"expected exactly one form, got {len(script)}", 1, 1)
    return script.forms[0]
