"""The Container Virtual Machine core: one NodeRuntime per node process,
a bootstrap that builds the reconfiguration keyword set inside it, and a
control loop that executes incoming forms concurrently with application
traffic.

"Class loading" is realized as a compiled-in implementation catalog plus
script-defined procedures wrapped as implementations; plugin-path keywords
manipulate a recorded search path so deployment scripts run verbatim.
"""

from __future__ import annotations

import itertools
import os
import queue
import tempfile
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import crypto, demo
from .interceptors import ALL_POINTS
from .lang.ast import AstNode, ListNode, Symbol
from .lang.env import Environment, ProcBinding
from .lang.interp import (
    SPECIAL_FORM_HANDLERS,
    EvalError,
    call_proc,
    evaluate,
    install_special_forms,
)
from .lang.values import Handle, HandleKind, Value
from .monitoring import (
    CountComponent,
    CountMethod,
    DebugTrace,
    MonitoringService,
    NotInstalledError,
    Temporal,
    monitor_install,
)
from .runtime import (
    CallContext,
    ComponentImpl,
    ComponentRuntime,
    RuntimeFault,
    connect_action,
    disconnect_action,
)

CONTROL_QUEUE_DEPTH = 64

_node_seq = itertools.count(1)


class BootstrapError(Exception):
    pass


class EventBus:
    """Fan-out of node events (topology-changed, metrics-updated) to
    subscriber queues; slow subscribers drop events rather than block."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=100)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, kind: str) -> None:
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            try:
                q.put_nowait(kind)
            except queue.Full:
                pass


class ResultSlot:
    """One pending control-loop evaluation; filled exactly once."""

    def __init__(self):
        self._done = threading.Event()
        self.ok: bool | None = None
        self.payload: Value | str = None

    def set_ok(self, value: Value) -> None:
        self.ok, self.payload = True, value
        self._done.set()

    def set_err(self, text: str) -> None:
        self.ok, self.payload = False, text
        self._done.set()

    def wait(self, timeout: float | None = None) -> tuple[bool, Value | str]:
        if not self._done.wait(timeout):
            raise TimeoutError("control loop did not answer in time")
        return self.ok, self.payload


@dataclass
class _ControlItem:
    form: AstNode
    slot: ResultSlot


_SHUTDOWN = object()


class NodeRuntime(ComponentRuntime):
    """A ComponentRuntime plus everything one reconfigurable node needs:
    the script environment, the implementation catalog, the admin control
    queue, monitoring state, and the event bus."""

    def __init__(self, journal_path: str | Path | None = None,
                 scan_interval: float | None = None):
        super().__init__()
        self.node_seq = next(_node_seq)
        self.env: Environment | None = None
        self.plugin_search_path: list[str] = []
        self.monitoring: MonitoringService | None = None
        self.scan_interval = scan_interval
        self.journal_path = Path(journal_path) if journal_path else (
            Path(tempfile.gettempdir()) / f"cvm-monitor-{os.getpid()}-{self.node_seq}.log"
        )
        self.control_queue: queue.Queue = queue.Queue(maxsize=CONTROL_QUEUE_DEPTH)
        self.events = EventBus()
        self.signature_log: deque[tuple[str, str, str]] = deque(maxlen=256)
        self.runtime_handle = self.register_handle(HandleKind.RUNTIME, self)
        self.demos: list[demo.DemoTopology] = []
        self._bootstrapped = False
        self._control_thread: threading.Thread | None = None
        self.on_topology_change = lambda: self.events.publish("topology-changed")

    # --- monitoring glue ---

    def install_monitoring(self, journal_path: str | Path | None = None) -> MonitoringService:
        kwargs = {}
        if self.scan_interval is not None:
            kwargs["scan_interval"] = self.scan_interval
        service = monitor_install(self, journal_path or self.journal_path, **kwargs)
        service.on_metrics_update = lambda: self.events.publish("metrics-updated")
        return service

    def require_monitoring(self) -> MonitoringService:
        if self.monitoring is None:
            raise NotInstalledError("monitoring service is not installed")
        return self.monitoring

    # --- control context ---

    def eval_form(self, form: AstNode) -> Value:
        if self.env is None:
            raise BootstrapError("node is not bootstrapped")
        with self.control_lock:
            return evaluate(form, self.env)

    def submit_form(self, form: AstNode, timeout: float | None = 30.0) -> tuple[bool, Value | str]:
        """Queue a form for the control loop; blocks while the queue is full."""
        slot = ResultSlot()
        self.control_queue.put(_ControlItem(form, slot))
        return slot.wait(timeout)

    def control_loop(self) -> None:
        """Evaluate queued forms until shutdown; evaluation errors are
        answered, never raised out of the loop."""
        while True:
            item = self.control_queue.get()
            if item is _SHUTDOWN:
                return
            try:
                item.slot.set_ok(self.eval_form(item.form))
            except Exception as exc:
                item.slot.set_err(str(exc) or type(exc).__name__)

    def start_control_loop(self) -> threading.Thread:
        if self._control_thread is not None and self._control_thread.is_alive():
            return self._control_thread
        self._control_thread = threading.Thread(
            target=self.control_loop, name="cvm-control", daemon=True
        )
        self._control_thread.start()
        return self._control_thread

    def shutdown(self) -> None:
        for topo in self.demos:
            topo.cancel()
        if self.monitoring is not None:
            self.monitoring.uninstall()
        if self._control_thread is not None and self._control_thread.is_alive():
            self.control_queue.put(_SHUTDOWN)
            self._control_thread.join(5)
            self._control_thread = None


# --- implementation catalog ---------------------------------------------------


def _monitor_get_instance(node: NodeRuntime, args: list[Value]) -> Value:
    if node.monitoring is not None:
        return node.monitoring.handle
    return node.install_monitoring().handle


def _monitor_register_metric(node: NodeRuntime, args: list[Value]) -> Value:
    service = node.require_monitoring()
    spec_handle = args[-1]
    if not (isinstance(spec_handle, Handle) and spec_handle.kind is HandleKind.METRIC_SPEC):
        raise RuntimeFault("registerMetric expects a metric definition handle last")
    return service.register_metric(node.resolve_handle(spec_handle))


def _monitor_unregister_metric(node: NodeRuntime, args: list[Value]) -> Value:
    service = node.require_monitoring()
    handle = args[-1]
    if not isinstance(handle, Handle):
        raise RuntimeFault("unregisterMetric expects a metric handle")
    return service.unregister_metric(handle)


def _monitor_start(node: NodeRuntime, args: list[Value]) -> Value:
    node.require_monitoring().start()
    return None


def _monitor_stop(node: NodeRuntime, args: list[Value]) -> Value:
    node.require_monitoring().stop()
    return None


def _monitor_uninstall(node: NodeRuntime, args: list[Value]) -> Value:
    node.require_monitoring().uninstall()
    return None


def _monitor_snapshot(node: NodeRuntime, args: list[Value]) -> Value:
    out = []
    for snap in node.require_monitoring().snapshot():
        kind = type(snap.spec).__name__
        out.append((snap.metric_id, kind, snap.count))
    return tuple(out)


def _metric_spec_op(builder: Callable[..., Value], arity: int, what: str):
    def op(node: NodeRuntime, args: list[Value]) -> Value:
        if len(args) != arity or not all(isinstance(a, str) for a in args):
            raise RuntimeFault(f"{what} expects {arity} string argument(s)")
        return node.register_handle(HandleKind.METRIC_SPEC, builder(*args))

    return op


def _monitor_impl() -> ComponentImpl:
    return ComponentImpl(
        "Monitor",
        static_ops={
            "getInstance": _monitor_get_instance,
            "registerMetric": _monitor_register_metric,
            "unregisterMetric": _monitor_unregister_metric,
            "start": _monitor_start,
            "stop": _monitor_stop,
            "uninstall": _monitor_uninstall,
            "snapshot": _monitor_snapshot,
            "countMethod": _metric_spec_op(CountMethod, 2, "countMethod"),
            "countComponent": _metric_spec_op(CountComponent, 1, "countComponent"),
            "temporal": _metric_spec_op(Temporal, 2, "temporal"),
        },
    )


def _debug_metric_ctor(node: NodeRuntime, args: list[Value]) -> Value:
    if len(args) != 1 or not isinstance(args[0], str):
        raise RuntimeFault("DebugMetric expects one argument: the log file path")
    return node.register_handle(HandleKind.METRIC_SPEC, DebugTrace(args[0]))


def _debug_metric_impl() -> ComponentImpl:
    return ComponentImpl("DebugMetric", static_ops={"DebugMetric": _debug_metric_ctor})


IMPL_CATALOG: dict[str, Callable[[], ComponentImpl]] = {
    "Echo": demo.echo_impl,
    "Caller": demo.caller_impl,
    demo.EMITTER_IMPL_NAME: demo.emitter_impl,
    demo.SINK_IMPL_NAME: demo.sink_impl,
    crypto.COS_IMPL_NAME: crypto.cos_impl,
    "Monitor": _monitor_impl,
    "DebugMetric": _debug_metric_impl,
}


# --- argument coercion ---------------------------------------------------------


def _as_component_id(node: NodeRuntime, value: Value, what: str = "component") -> int:
    if isinstance(value, Handle):
        if value.kind is not HandleKind.COMPONENT:
            raise RuntimeFault(f"expected a {what} handle, got {value.kind.name.lower()}")
        return value.id
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise RuntimeFault(f"expected a {what} reference, got {value!r}")


def _as_container_id(node: NodeRuntime, value: Value) -> int:
    if isinstance(value, Handle):
        if value.kind is not HandleKind.CONTAINER:
            raise RuntimeFault(f"expected a container handle, got {value.kind.name.lower()}")
        return value.id
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise RuntimeFault(f"expected a container reference, got {value!r}")


def _as_text(value: Value, what: str) -> str:
    if not isinstance(value, str):
        raise RuntimeFault(f"expected {what} as a string, got {value!r}")
    return value


def _arity(args: list[Value], low: int, high: int | None, what: str) -> None:
    high = low if high is None else high
    if not low <= len(args) <= high:
        expected = str(low) if low == high else f"{low}..{high}"
        raise RuntimeFault(f"{what} expects {expected} argument(s), got {len(args)}")


# --- invoke ---------------------------------------------------------------------


def invoke(node: NodeRuntime, target: Value, operation: str, signature: str,
           args: list[Value]) -> Value:
    """Call a named operation on an implementation, a service object, or a
    deployed component. The JVM-style signature string is recorded for
    diagnostics and not interpreted."""
    node.signature_log.append((repr(target), operation, signature))
    if isinstance(target, str):
        impl = node.get_impl(target)
        op = impl.static_ops.get(operation)
        if op is None:
            raise RuntimeFault(f"{target} has no operation {operation!r}")
        return op(node, args)
    if isinstance(target, Handle):
        if target.kind is HandleKind.SERVICE:
            service = node.resolve_handle(target)
            return _invoke_service(node, service, operation, args)
        if target.kind is HandleKind.COMPONENT:
            instance = node.instance(target.id)
            version = instance.impl.active_version(operation)
            ctx = CallContext(node, target.id, instance.impl, instance.state)
            with instance.lock:
                return version.body(ctx, args)
        raise RuntimeFault(f"cannot invoke on a {target.kind.name.lower()} handle")
    raise RuntimeFault(f"invoke target must be an implementation name or handle, got {target!r}")


def _invoke_service(node: NodeRuntime, service, operation: str, args: list[Value]) -> Value:
    if not isinstance(service, MonitoringService):
        raise RuntimeFault(f"not an invokable service: {service!r}")
    if operation == "registerMetric":
        return _monitor_register_metric(node, args)
    if operation == "unregisterMetric":
        return _monitor_unregister_metric(node, args)
    if operation == "start":
        service.start()
        return None
    if operation == "stop":
        service.stop()
        return None
    if operation == "snapshot":
        return _monitor_snapshot(node, args)
    raise RuntimeFault(f"monitoring service has no operation {operation!r}")


# --- bootstrap -------------------------------------------------------------------


def load_impl(node: NodeRuntime, name: str) -> None:
    """Make `name` deployable: from the compiled-in catalog, or from a
    script-defined procedure of that name (wrapped as a single-operation
    implementation whose facet is "in")."""
    if node.impl_registered(name):
        return
    factory = IMPL_CATALOG.get(name)
    if factory is not None:
        node.register_impl(factory())
        return
    binding = node.env.peek(name) if node.env is not None else None
    if isinstance(binding, ProcBinding):
        proc = binding

        def proc_body(ctx: CallContext, args: list[Value]) -> Value:
            # Script procedures evaluate in the node environment, which is
            # owned by the control context: serialize with it.
            with node.control_lock:
                return call_proc(proc, list(args), node.env)

        node.register_impl(ComponentImpl(name, operations={"invoke": proc_body}, facets={"in"}))
        return
    searched = ", ".join(node.plugin_search_path) or "(empty)"
    raise RuntimeFault(f"implementation {name!r} not found; plugin search path: {searched}")


def _build_natives(node: NodeRuntime, env: Environment) -> dict[str, Callable[[list[Value]], Value]]:
    def get_runtime(args: list[Value]) -> Value:
        _arity(args, 0, 0, "get_runtime")
        return node.runtime_handle

    def add_plugin_path(args: list[Value]) -> Value:
        _arity(args, 1, 1, "add_url_classloader")
        location = _as_text(args[0], "a plugin location")
        if location not in node.plugin_search_path:
            node.plugin_search_path.append(location)
        return None

    def native_load_impl(args: list[Value]) -> Value:
        _arity(args, 1, 1, "load_impl")
        load_impl(node, _as_text(args[0], "an implementation name"))
        return None

    def add_container(args: list[Value]) -> Value:
        _arity(args, 0, 0, "add_container")
        return Handle(HandleKind.CONTAINER, node.create_container())

    def add_component(args: list[Value]) -> Value:
        if len(args) < 2:
            raise RuntimeFault("add_component expects a container and an implementation name")
        container = _as_container_id(node, args[0])
        impl_name = _as_text(args[1], "an implementation name")
        return Handle(HandleKind.COMPONENT, node.deploy_component(container, impl_name, args[2:]))

    def remove_component(args: list[Value]) -> Value:
        _arity(args, 1, 1, "remove_component")
        node.remove_component(_as_component_id(node, args[0]))
        return None

    def connect(args: list[Value]) -> Value:
        _arity(args, 4, 4, "connect")
        node.connect(
            _as_component_id(node, args[0], "source component"),
            _as_text(args[1], "a receptacle name"),
            _as_component_id(node, args[2], "target component"),
            _as_text(args[3], "a facet name"),
        )
        return None

    def disconnect(args: list[Value]) -> Value:
        _arity(args, 2, 2, "disconnect")
        node.disconnect(
            _as_component_id(node, args[0], "source component"),
            _as_text(args[1], "a receptacle name"),
        )
        return None

    def native_invoke(args: list[Value]) -> Value:
        if len(args) < 3:
            raise RuntimeFault("invoke expects target, operation, signature[, arguments...]")
        return invoke(
            node,
            args[0],
            _as_text(args[1], "an operation name"),
            _as_text(args[2], "a signature"),
            list(args[3:]),
        )

    def replace_method(args: list[Value]) -> Value:
        _arity(args, 3, 3, "replace_method")
        impl_name = _as_text(args[0], "an implementation name")
        operation = _as_text(args[1], "an operation name")
        proc_name = _as_text(args[2], "the name of a script procedure")
        binding = env.peek(proc_name)
        if not isinstance(binding, ProcBinding):
            raise RuntimeFault(f"{proc_name!r} does not name a script procedure")
        proc = binding

        def body(ctx: CallContext, call_args: list[Value]) -> Value:
            with node.control_lock:
                return call_proc(proc, list(call_args), env)

        return node.replace_method(impl_name, operation, body)

    def register_interceptor_service(args: list[Value]) -> Value:
        _arity(args, 0, 0, "register_interceptor_service")
        return node.interceptors.register(ALL_POINTS, lambda point, info: None)

    def unregister_interceptor_service(args: list[Value]) -> Value:
        _arity(args, 1, 1, "unregister_interceptor_service")
        if not isinstance(args[0], int) or isinstance(args[0], bool):
            raise RuntimeFault("unregister_interceptor_service expects a registration id")
        return node.interceptors.unregister(args[0])

    def symbols(args: list[Value]) -> Value:
        _arity(args, 0, 0, "symbols")
        return tuple(env.list_symbols())

    def native_interpose(args: list[Value]) -> Value:
        _arity(args, 5, 6, "interpose")
        impl_name = _as_text(args[5], "an implementation name") if len(args) == 6 else crypto.COS_IMPL_NAME
        cos_id = crypto.interpose(
            node,
            _as_container_id(node, args[0]),
            (_as_component_id(node, args[1], "source component"), _as_text(args[2], "a receptacle name")),
            (_as_component_id(node, args[3], "target component"), _as_text(args[4], "a facet name")),
            impl_name,
        )
        return Handle(HandleKind.COMPONENT, cos_id)

    def native_deinterpose(args: list[Value]) -> Value:
        _arity(args, 1, 1, "deinterpose")
        crypto.deinterpose(node, _as_component_id(node, args[0]))
        return None

    def native_deploy_demo(args: list[Value]) -> Value:
        _arity(args, 2, 2, "deploy_demo")
        interval_ms = args[0]
        count = args[1]
        if isinstance(interval_ms, bool) or not isinstance(interval_ms, (int, float)):
            raise RuntimeFault("deploy_demo expects an interval in milliseconds")
        if isinstance(count, bool) or not isinstance(count, int):
            raise RuntimeFault("deploy_demo expects a message count")
        topo = demo.deploy_demo(node, float(interval_ms), count)
        node.demos.append(topo)
        handles = (
            Handle(HandleKind.CONTAINER, topo.container_a),
            Handle(HandleKind.CONTAINER, topo.container_b),
            Handle(HandleKind.COMPONENT, topo.emitter),
            Handle(HandleKind.COMPONENT, topo.sink),
        )
        for name, handle in zip(("demo_ca", "demo_cb", "demo_a", "demo_b"), handles):
            env.define_value(name, handle)
        return handles

    def bench_requests(args: list[Value]) -> Value:
        _arity(args, 1, 3, "bench_requests")
        n = args[0]
        if isinstance(n, bool) or not isinstance(n, int) or n <= 0:
            raise RuntimeFault("bench_requests expects a positive request count")
        warmup = args[1] if len(args) > 1 else 1000
        runs = args[2] if len(args) > 2 else 3
        mean_us, std_us = demo.latency_probe(node, n, warmup=int(warmup), runs=int(runs))
        return (mean_us, std_us)

    natives: dict[str, Callable[[list[Value]], Value]] = {
        "get_runtime": get_runtime,
        "getorb": get_runtime,
        "add_url_classloader": add_plugin_path,
        "add_plugin_path": add_plugin_path,
        "load_impl": native_load_impl,
        "jrun": native_load_impl,
        "add_container": add_container,
        "add_component": add_component,
        "remove_component": remove_component,
        "connect": connect,
        "disconnect": disconnect,
        "invoke": native_invoke,
        "runCCM": native_invoke,
        "runCCM_arg": native_invoke,
        "replace_method": replace_method,
        "register_interceptor_service": register_interceptor_service,
        "unregister_interceptor_service": unregister_interceptor_service,
        "symbols": symbols,
        "interpose": native_interpose,
        "deinterpose": native_deinterpose,
        "deploy_demo": native_deploy_demo,
        "bench_requests": bench_requests,
    }
    return natives


def _build_specials(node: NodeRuntime, env: Environment):
    def sf_rewire(env_: Environment, arg_forms: tuple[AstNode, ...], form: ListNode) -> Value:
        actions = []
        for action_form in arg_forms:
            if (
                not isinstance(action_form, ListNode)
                or not action_form.children
                or not isinstance(action_form.children[0], Symbol)
            ):
                raise EvalError("rewire actions are (connect ...) or (disconnect ...) forms", form)
            head = action_form.children[0].name
            operands = [evaluate(a, env_) for a in action_form.children[1:]]
            if head == "connect":
                if len(operands) != 4:
                    raise EvalError("connect action expects 4 operands", action_form)
                actions.append(
                    connect_action(
                        _as_component_id(node, operands[0], "source component"),
                        _as_text(operands[1], "a receptacle name"),
                        _as_component_id(node, operands[2], "target component"),
                        _as_text(operands[3], "a facet name"),
                    )
                )
            elif head == "disconnect":
                if len(operands) != 2:
                    raise EvalError("disconnect action expects 2 operands", action_form)
                actions.append(
                    disconnect_action(
                        _as_component_id(node, operands[0], "source component"),
                        _as_text(operands[1], "a receptacle name"),
                    )
                )
            else:
                raise EvalError(f"unknown rewire action {head!r}", action_form)
        try:
            node.atomic_rewire(actions)
        except RuntimeFault as exc:
            raise EvalError(str(exc), form) from exc
        return None

    def sf_classloader_call(env_: Environment, arg_forms: tuple[AstNode, ...], form: ListNode) -> Value:
        # (clssLoaderCCM op args...) delegates to the named operation.
        if not arg_forms:
            raise EvalError("clssLoaderCCM expects an operation form", form)
        return evaluate(ListNode(tuple(arg_forms)), env_)

    return {"rewire": sf_rewire, "clssLoaderCCM": sf_classloader_call}


def bootstrap(node: NodeRuntime) -> Environment:
    """Phase one of a node's life: build the reconfiguration keyword set.

    A node bootstraps exactly once; the environment it returns is the node's
    single script-visible symbol table.
    """
    if node._bootstrapped:
        raise BootstrapError("node is already bootstrapped (single entry point)")
    node._bootstrapped = True
    env = Environment()
    node.env = env
    install_special_forms(env)

    for factory in IMPL_CATALOG.values():
        impl = factory()
        if not node.impl_registered(impl.impl_name):
            node.register_impl(impl)

    for name, fn in _build_natives(node, env).items():
        env.define_native(name, fn)
    for name, handler in _build_specials(node, env).items():
        env.define_special(name, handler)
    return env


def redefine_keyword(node: NodeRuntime, name: str) -> None:
    """Re-install one bootstrap keyword that a script removed; this is the
    define_native path of language extension applied to a built-in."""
    env = node.env
    if env is None:
        raise BootstrapError("node is not bootstrapped")
    if name in SPECIAL_FORM_HANDLERS:
        env.define_special(name, SPECIAL_FORM_HANDLERS[name])
        return
    specials = _build_specials(node, env)
    if name in specials:
        env.define_special(name, specials[name])
        return
    natives = _build_natives(node, env)
    if name in natives:
        env.define_native(name, natives[name])
        return
    raise KeyError(f"not a bootstrap keyword: {name}")


#: Every keyword the bootstrap installs; `(symbols)` must contain all of these.
BOOTSTRAP_KEYWORDS = frozenset(
    {
        "define", "undefine", "defproc", "if", "begin",
        "get_runtime", "getorb",
        "add_url_classloader", "add_plugin_path",
        "load_impl", "jrun",
        "add_container", "add_component", "remove_component",
        "connect", "disconnect", "rewire",
        "invoke", "runCCM", "runCCM_arg",
        "replace_method",
        "register_interceptor_service", "unregister_interceptor_service",
        "symbols",
        "interpose", "deinterpose",
        "deploy_demo", "bench_requests",
        "clssLoaderCCM",
    }
)


def run_control_loop(node: NodeRuntime) -> None:
    """Blocking entry point: evaluate queued forms until shutdown."""
    node.control_loop()
