"""Shared component fixtures for runtime-level tests."""

from __future__ import annotations

from cvm.runtime import CallContext, ComponentImpl, ComponentRuntime


def _echo(ctx: CallContext, args):
    ctx.state["calls"] = ctx.state.get("calls", 0) + 1
    return args[0] if args else None


def _stats(ctx: CallContext, args):
    return ctx.state.get("calls", 0)


def echo_impl() -> ComponentImpl:
    return ComponentImpl(
        "Echo",
        operations={"echo": _echo, "stats": _stats},
        facets={"in"},
    )


def caller_impl() -> ComponentImpl:
    return ComponentImpl("Caller", receptacles={"out"})


def make_runtime_with_pair() -> tuple[ComponentRuntime, int, int, int]:
    """Runtime with Caller.out -> Echo.in wired; returns (rt, container, caller, echo)."""
    rt = ComponentRuntime()
    rt.register_impl(echo_impl())
    rt.register_impl(caller_impl())
    container = rt.create_container()
    caller = rt.deploy_component(container, "Caller")
    echo = rt.deploy_component(container, "Echo")
    rt.connect(caller, "out", echo, "in")
    return rt, container, caller, echo
