"""Evaluator for reconfiguration forms.

Application is syntactic: a list's head must be a symbol whose binding is a
special form, a native, or a proc. The five special forms (define, undefine,
defproc, if, begin) are installed as removable bindings, so restricting the
language and restricting the natives are the same operation.
"""

from __future__ import annotations

from .ast import AstNode, Float, Int, ListNode, Script, Str, Symbol, print_form
from .env import (
    Environment,
    LangError,
    NativeBinding,
    ProcBinding,
    SpecialBinding,
    ValBinding,
)
from .values import Value

SPECIAL_FORMS = ("define", "undefine", "defproc", "if", "begin")


class EvalError(LangError):
    """Evaluation failure carrying the printed offending form."""

    def __init__(self, message: str, form: AstNode | None = None):
        self.message = message
        self.form_text = print_form(form) if form is not None else None
        super().__init__(f"{message} (in {self.form_text})" if form is not None else message)


class NotCallableError(EvalError):
    pass


class ArityError(EvalError):
    pass


def evaluate(node: AstNode, env: Environment) -> Value:
    if isinstance(node, Symbol):
        binding = env.lookup(node.name)
        if isinstance(binding, ValBinding):
            return binding.value
        raise EvalError(f"symbol names an operation, not a value: {node.name}", node)
    if isinstance(node, (Str, Int, Float)):
        return node.value
    if isinstance(node, ListNode):
        return _apply_form(node, env)
    raise TypeError(f"not an AST node: {node!r}")


def _apply_form(form: ListNode, env: Environment) -> Value:
    if not form.children:
        raise NotCallableError("cannot evaluate an empty list", form)
    head, *rest = form.children
    if not isinstance(head, Symbol):
        raise NotCallableError("application head must be a symbol", form)
    binding = env.lookup(head.name)
    if isinstance(binding, SpecialBinding):
        return binding.handler(env, tuple(rest), form)
    if isinstance(binding, NativeBinding):
        args = [evaluate(a, env) for a in rest]
        try:
            return binding.fn(args)
        except LangError:
            raise
        except Exception as exc:
            raise EvalError(str(exc) or type(exc).__name__, form) from exc
    if isinstance(binding, ProcBinding):
        args = [evaluate(a, env) for a in rest]
        return call_proc(binding, args, env, form)
    raise NotCallableError(f"not callable: {head.name}", form)


def call_proc(proc: ProcBinding, args: list[Value], env: Environment, form: AstNode | None = None) -> Value:
    if len(args) != len(proc.params):
        raise ArityError(
            f"{proc.name} expects {len(proc.params)} argument(s), got {len(args)}", form
        )
    # Parameters shadow the defining environment for the duration of the call.
    saved = {p: env._bindings.get(p) for p in proc.params}
    for param, arg in zip(proc.params, args):
        env.define_value(param, arg)
    try:
        result: Value = None
        for body_form in proc.body:
            result = evaluate(body_form, env)
        return result
    finally:
        for param, old in saved.items():
            if old is None:
                env._bindings.pop(param, None)
            else:
                env._bindings[param] = old


def run_script(script: Script, env: Environment) -> list[Value]:
    """Evaluate forms first-to-last; a failing form aborts the remainder."""
    return [evaluate(form, env) for form in script.forms]


# --- special forms -----------------------------------------------------------


def _sf_define(env: Environment, args: tuple[AstNode, ...], form: ListNode) -> Value:
    if len(args) != 2 or not isinstance(args[0], Symbol):
        raise EvalError("define expects a name and one form", form)
    env.define_value(args[0].name, evaluate(args[1], env))
    return None


def _sf_undefine(env: Environment, args: tuple[AstNode, ...], form: ListNode) -> Value:
    if len(args) != 1 or not isinstance(args[0], Symbol):
        raise EvalError("undefine expects one name", form)
    env.undefine(args[0].name)
    return None


def _sf_defproc(env: Environment, args: tuple[AstNode, ...], form: ListNode) -> Value:
    if len(args) < 2 or not isinstance(args[0], Symbol) or not isinstance(args[1], ListNode):
        raise EvalError("defproc expects a name, a parameter list, and body forms", form)
    params = []
    for p in args[1].children:
        if not isinstance(p, Symbol):
            raise EvalError("defproc parameters must be symbols", form)
        params.append(p.name)
    if len(set(params)) != len(params):
        raise EvalError("defproc parameters must be distinct", form)
    if not args[2:]:
        raise EvalError("defproc body must not be empty", form)
    env.define_proc(args[0].name, tuple(params), tuple(args[2:]))
    return None


def _sf_if(env: Environment, args: tuple[AstNode, ...], form: ListNode) -> Value:
    if len(args) not in (2, 3):
        raise EvalError("if expects a condition, a then-form, and an optional else-form", form)
    cond = evaluate(args[0], env)
    if not isinstance(cond, bool):
        raise EvalError("if condition must evaluate to a boolean", form)
    if cond:
        return evaluate(args[1], env)
    if len(args) == 3:
        return evaluate(args[2], env)
    return None


def _sf_begin(env: Environment, args: tuple[AstNode, ...], form: ListNode) -> Value:
    result: Value = None
    for sub in args:
        result = evaluate(sub, env)
    return result


SPECIAL_FORM_HANDLERS = {
    "define": _sf_define,
    "undefine": _sf_undefine,
    "defproc": _sf_defproc,
    "if": _sf_if,
    "begin": _sf_begin,
}


def install_special_forms(env: Environment) -> None:
    for name, handler in SPECIAL_FORM_HANDLERS.items():
        env.define_special(name, handler)
