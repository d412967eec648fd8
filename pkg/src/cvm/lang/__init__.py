"""The s-expression reconfiguration language: reader, printer, codec, evaluator."""

from .ast import AstNode, Float, Int, ListNode, Script, Str, Symbol, print_form, print_script
from .codec import (
    DecodeError,
    InvalidUtf8Error,
    LengthExceedsInputError,
    TruncatedError,
    UnknownTagError,
    decode_ast,
    encode_ast,
)
from .env import Environment, LangError, UnboundSymbolError
from .interp import ArityError, EvalError, NotCallableError, evaluate, install_special_forms, run_script
from .reader import ParseError, parse, parse_form
from .values import Handle, HandleKind, Value, ast_to_value, render_value, value_to_ast

__all__ = [
    "AstNode",
    "ArityError",
    "DecodeError",
    "Environment",
    "EvalError",
    "Float",
    "Handle",
    "HandleKind",
    "Int",
    "InvalidUtf8Error",
    "LangError",
    "LengthExceedsInputError",
    "ListNode",
    "NotCallableError",
    "ParseError",
    "Script",
    "Str",
    "Symbol",
    "TruncatedError",
    "UnboundSymbolError",
    "UnknownTagError",
    "Value",
    "ast_to_value",
    "decode_ast",
    "encode_ast",
    "evaluate",
    "install_special_forms",
    "parse",
    "parse_form",
    "print_form",
    "print_script",
    "render_value",
    "run_script",
    "value_to_ast",
]
