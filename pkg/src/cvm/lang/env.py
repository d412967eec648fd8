"""Mutable symbol table: the unit of language extension and restriction.

Every name, including the special forms, lives here as an ordinary binding;
removing one disables the capability for scripts until something redefines it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TYPE_CHECKING

from .ast import AstNode, ListNode

if TYPE_CHECKING:
    from .values import Value


class LangError(Exception):
    pass


class UnboundSymbolError(LangError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol: {name}")
        self.name = name


@dataclass(slots=True)
class ValBinding:
    value: "Value"


@dataclass(slots=True)
class NativeBinding:
    name: str
    fn: Callable[[list], "Value"]


@dataclass(slots=True)
class ProcBinding:
    name: str
    params: tuple[str, ...]
    body: tuple[AstNode, ...]


@dataclass(slots=True)
class SpecialBinding:
    """A syntactic form: receives its argument forms unevaluated."""

    name: str
    handler: Callable[["Environment", tuple[AstNode, ...], ListNode], "Value"]


Binding = ValBinding | NativeBinding | ProcBinding | SpecialBinding


class Environment:
    def __init__(self) -> None:
        self._bindings: dict[str, Binding] = {}

    def lookup(self, name: str) -> Binding:
        try:
            return self._bindings[name]
        except KeyError:
            raise UnboundSymbolError(name) from None

    def peek(self, name: str) -> Binding | None:
        return self._bindings.get(name)

    def is_bound(self, name: str) -> bool:
        return name in self._bindings

    def define_value(self, name: str, value: "Value") -> None:
        self._bindings[name] = ValBinding(value)

    def define_native(self, name: str, fn: Callable[[list], "Value"]) -> None:
        # Replacing an existing binding is the extension mechanism, not an error.
        self._bindings[name] = NativeBinding(name, fn)

    def define_proc(self, name: str, params: tuple[str, ...], body: tuple[AstNode, ...]) -> None:
        self._bindings[name] = ProcBinding(name, params, body)

    def define_special(self, name: str, handler) -> None:
        self._bindings[name] = SpecialBinding(name, handler)

    def undefine(self, name: str) -> bool:
        return self._bindings.pop(name, None) is not None

    def list_symbols(self) -> list[str]:
        return sorted(self._bindings)
