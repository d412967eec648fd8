"""Deployable demo fixture: a traffic generator A wired to a recording sink B,
plus the Echo component and a request-latency probe used by the bench harness.

A emits sequenced messages from its own application thread, independent of
the control context, which is what makes reconfiguration-under-live-traffic
an honest scenario. Messages are (sequence number, payload) pairs; B records
them in receipt order.
"""

from __future__ import annotations

import math
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .interceptors import ReplyStatus
from .runtime import CallContext, ComponentImpl, Reply

if TYPE_CHECKING:
    from .runtime import ComponentRuntime

EMITTER_IMPL_NAME = "SeqEmitter"
SINK_IMPL_NAME = "SeqSink"


def _echo(ctx: CallContext, args):
    ctx.state["calls"] = ctx.state.get("calls", 0) + 1
    return args[0] if args else None


def _echo_stats(ctx: CallContext, args):
    return ctx.state.get("calls", 0)


def echo_impl() -> ComponentImpl:
    return ComponentImpl("Echo", operations={"echo": _echo, "stats": _echo_stats}, facets={"in"})


def caller_impl() -> ComponentImpl:
    """Pure client: a receptacle and no operations, used as a request source."""
    return ComponentImpl("Caller", receptacles={"out"})


def emitter_impl() -> ComponentImpl:
    return ComponentImpl(EMITTER_IMPL_NAME, receptacles={"out"})


def _sink_send(ctx: CallContext, args):
    seq, payload = args[0]
    received = ctx.state.setdefault("received", [])
    received.append((seq, payload))
    return None


def _sink_records(ctx: CallContext, args):
    return tuple(tuple(pair) for pair in ctx.state.get("received", []))


def sink_impl() -> ComponentImpl:
    return ComponentImpl(
        SINK_IMPL_NAME, operations={"send": _sink_send, "records": _sink_records}, facets={"in"}
    )


@dataclass
class DemoTopology:
    runtime: "ComponentRuntime"
    container_a: int
    container_b: int
    emitter: int
    sink: int
    count: int
    interval_s: float
    failures: list[Reply] = field(default_factory=list)
    _thread: threading.Thread | None = None
    _stop: threading.Event = field(default_factory=threading.Event)

    def start(self) -> None:
        self._thread = threading.Thread(target=self._emit_loop, name="cvm-demo-emitter", daemon=True)
        self._thread.start()

    def _emit_loop(self) -> None:
        start = time.monotonic()
        for seq in range(1, self.count + 1):
            if self._stop.is_set():
                return
            reply = self.runtime.send_request(
                self.emitter, "out", "send", [(seq, f"msg-{seq}")]
            )
            if reply.status is not ReplyStatus.SUCCESSFUL:
                self.failures.append(reply)
            if self.interval_s > 0:
                # Absolute schedule: holds the average rate even when one
                # sleep overshoots.
                deadline = start + seq * self.interval_s
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

    def wait(self, timeout: float | None = None) -> bool:
        if self._thread is None:
            return True
        self._thread.join(timeout)
        return not self._thread.is_alive()

    def cancel(self) -> None:
        self._stop.set()
        self.wait(5)

    def received(self) -> list[tuple[int, str]]:
        instance = self.runtime.instance(self.sink)
        with instance.lock:
            return list(instance.state.get("received", []))


def register_demo_impls(runtime: "ComponentRuntime") -> None:
    for impl in (echo_impl(), caller_impl(), emitter_impl(), sink_impl()):
        if not runtime.impl_registered(impl.impl_name):
            runtime.register_impl(impl)


def deploy_demo(runtime: "ComponentRuntime", interval_ms: float, count: int) -> DemoTopology:
    """Deploy containers CA/CB with A -> B wired, then start A emitting."""
    register_demo_impls(runtime)
    with runtime.control_lock:
        container_a = runtime.create_container()
        container_b = runtime.create_container()
        emitter = runtime.deploy_component(container_a, EMITTER_IMPL_NAME)
        sink = runtime.deploy_component(container_b, SINK_IMPL_NAME)
        runtime.connect(emitter, "out", sink, "in")
    topology = DemoTopology(
        runtime, container_a, container_b, emitter, sink, count, interval_ms / 1000.0
    )
    topology.start()
    return topology


# --- bench probe -----------------------------------------------------------


def _bench_fixture(runtime: "ComponentRuntime") -> tuple[int, int]:
    pair = getattr(runtime, "_bench_pair", None)
    if pair is not None:
        return pair
    register_demo_impls(runtime)
    with runtime.control_lock:
        container = runtime.create_container()
        caller = runtime.deploy_component(container, "Caller")
        echo = runtime.deploy_component(container, "Echo")
        runtime.connect(caller, "out", echo, "in")
    runtime._bench_pair = (caller, echo)
    return runtime._bench_pair


def latency_probe(
    runtime: "ComponentRuntime", requests: int, warmup: int = 1000, runs: int = 3
) -> tuple[float, float]:
    """Mean and standard deviation of request latency in microseconds.

    Performs `runs` batches of `requests` echo calls and reports the batch
    with the lowest mean: the minimum is robust against scheduler and GC
    noise, which matters when comparing interceptor-count overheads.
    """
    import gc

    caller, _ = _bench_fixture(runtime)
    send = runtime.send_request
    for _ in range(warmup):
        send(caller, "out", "echo", ["w"])
    best: tuple[float, float] | None = None
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(runs):
            samples = []
            clock = time.perf_counter_ns
            for _ in range(requests):
                t0 = clock()
                send(caller, "out", "echo", ["p"])
                samples.append(clock() - t0)
            mean_us = statistics.fmean(samples) / 1000.0
            std_us = statistics.pstdev(samples) / 1000.0
            if best is None or mean_us < best[0]:
                best = (mean_us, std_us)
    finally:
        if was_enabled:
            gc.enable()
    assert best is not None and not math.isnan(best[0])
    return best
