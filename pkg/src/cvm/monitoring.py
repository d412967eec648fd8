"""Runtime-integrated monitoring: an interceptor-backed trace journal, a
periodic journal scanner, and registrable counting/temporal metrics.

The service observes the two server-side interception points. Each
observation appends one trace record line to an append-only journal; a
scanner thread periodically parses the new lines and updates whatever
metrics are registered. Counting goes through the journal deliberately
(the journal is the source of truth), not through inline counters.
Durations are measured with a monotonic clock stamped into request slot 1
at receive time; the wall-clock `date` field is display-only.
"""

from __future__ import annotations

import re
import struct
import threading
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Callable

from .interceptors import (
    SLOT_MONITOR_TIMESTAMP,
    InterceptionPoint,
    ReplyStatus,
    RequestInfo,
)
from .lang.values import Handle, HandleKind

if TYPE_CHECKING:
    from .runtime import ComponentRuntime

JOURNAL_TOPIC = "cvm.interceptors.server"
DEFAULT_SCAN_INTERVAL = 1.0  # seconds


class MonitoringError(Exception):
    pass


class AlreadyInstalledError(MonitoringError):
    pass


class NotInstalledError(MonitoringError):
    pass


class UnknownMetricError(MonitoringError):
    pass


# --- trace records -------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    date: str
    thread: str
    class_name: str
    method: str  # "receive_request" | "send_reply"
    request_id: int
    operation: str
    arguments: str
    exceptions: str
    response_expected: bool
    reply_status: ReplyStatus
    target: str
    topic: str = JOURNAL_TOPIC
    line: int = 0


def _sanitize(value: str) -> str:
    # Journal values may contain spaces but never '=' or line breaks.
    return value.replace("=", "%3D").replace("\r", "%0D").replace("\n", "%0A")


def format_trace_line(rec: TraceRecord) -> str:
    return (
        f"INFO date={rec.date}"
        f" thread={_sanitize(rec.thread)}"
        f" topic={rec.topic}"
        f" class={_sanitize(rec.class_name)}"
        f" method={rec.method}"
        f" line={rec.line}"
        f" request_id={rec.request_id}"
        f" operation={_sanitize(rec.operation)}"
        f" arguments={_sanitize(rec.arguments)}"
        f" exceptions={_sanitize(rec.exceptions)}"
        f" response_expected={'true' if rec.response_expected else 'false'}"
        f" reply_status={rec.reply_status.value}"
        f" target={_sanitize(rec.target)}"
    )


_KEY_RE = re.compile(r"(?:^|\s)(\w+)=")


def parse_trace_line(line: str) -> TraceRecord | None:
    """Parse one journal line; returns None for lines that are not records."""
    if not line.startswith("INFO "):
        return None
    rest = line[5:]
    marks = list(_KEY_RE.finditer(rest))
    fields: dict[str, str] = {}
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(rest)
        fields[m.group(1)] = rest[m.end() : end].rstrip()
    try:
        return TraceRecord(
            date=fields["date"],
            thread=fields["thread"],
            topic=fields["topic"],
            class_name=fields["class"],
            method=fields["method"],
            line=int(fields["line"]),
            request_id=int(fields["request_id"]),
            operation=fields["operation"],
            arguments=fields["arguments"],
            exceptions=fields["exceptions"],
            response_expected=fields["response_expected"] == "true",
            reply_status=ReplyStatus(fields["reply_status"]),
            target=fields["target"],
        )
    except (KeyError, ValueError):
        return None


def _wall_clock_date() -> str:
    now = datetime.now()
    return now.strftime("%Y-%m-%d %H:%M:%S") + f",{now.microsecond // 1000:03d}"


def _monotonic_us() -> int:
    return time.monotonic_ns() // 1000


# --- metric specs ----------------------------------------------------------


@dataclass(frozen=True)
class CountMethod:
    impl: str
    operation: str


@dataclass(frozen=True)
class CountComponent:
    impl: str


@dataclass(frozen=True)
class Temporal:
    impl: str
    operation: str


@dataclass(frozen=True)
class DebugTrace:
    """Counts every completed request and mirrors its record to a log file."""

    logfile: str


MetricSpec = CountMethod | CountComponent | Temporal | DebugTrace


@dataclass
class _MetricState:
    handle: Handle
    spec: MetricSpec
    watermark: int  # journal byte offset at registration; earlier records never count
    active: bool = True
    count: int = 0
    total_us: int = 0
    min_us: int | None = None
    max_us: int | None = None


@dataclass(frozen=True)
class MetricSnapshot:
    metric_id: int
    spec: MetricSpec
    count: int
    total_us: int | None = None
    min_us: int | None = None
    max_us: int | None = None
    mean_us: float | None = None


# --- the service -----------------------------------------------------------


class MonitoringService:
    def __init__(self, runtime: "ComponentRuntime", journal_path: str | Path,
                 scan_interval: float = DEFAULT_SCAN_INTERVAL):
        self.runtime = runtime
        self.journal_path = Path(journal_path)
        self.scan_interval = scan_interval
        self.handle: Handle = runtime.register_handle(HandleKind.SERVICE, self)
        self.on_metrics_update: Callable[[], None] | None = None

        self._journal = open(self.journal_path, "ab")  # may raise: journal unwritable
        self._write_lock = threading.Lock()
        self._append_offset = self._journal.tell()

        self._reader = open(self.journal_path, "rb")
        self._scan_offset = self._append_offset  # pre-existing content is not ours
        self._scan_lock = threading.Lock()

        self._metrics_lock = threading.Lock()
        self._metrics: dict[int, _MetricState] = {}
        self._pending_receive: dict[int, TraceRecord] = {}
        self._durations: dict[int, int] = {}
        self._durations_lock = threading.Lock()
        self._debug_files: dict[str, object] = {}

        self._scanner: threading.Thread | None = None
        self._stop = threading.Event()

        self._registration = runtime.interceptors.register(
            {InterceptionPoint.SERVER_RECEIVE_REQUEST, InterceptionPoint.SERVER_SEND_REPLY},
            self._observe,
        )

    # --- journal side (runs in request threads) ---

    def _observe(self, point: InterceptionPoint, info: RequestInfo) -> None:
        if point is InterceptionPoint.SERVER_RECEIVE_REQUEST:
            info.slot_set(SLOT_MONITOR_TIMESTAMP, struct.pack(">Q", _monotonic_us()))
            self._append(self._record(info, "receive_request"))
        else:
            stamp = info.slot_get(SLOT_MONITOR_TIMESTAMP)
            if stamp is not None:
                elapsed = _monotonic_us() - struct.unpack(">Q", stamp)[0]
                with self._durations_lock:
                    self._durations[info.request_id] = elapsed
            self._append(self._record(info, "send_reply"))

    def _record(self, info: RequestInfo, method: str) -> TraceRecord:
        return TraceRecord(
            date=_wall_clock_date(),
            thread=threading.current_thread().name,
            class_name=info.target_impl,
            method=method,
            request_id=info.request_id,
            operation=info.operation,
            arguments=info.arguments_text,
            exceptions=info.exception_text,
            response_expected=info.response_expected,
            reply_status=info.reply_status,
            target=info.target_interface,
        )

    def _append(self, rec: TraceRecord) -> None:
        data = (format_trace_line(rec) + "\n").encode("utf-8")
        with self._write_lock:
            self._journal.write(data)
            self._journal.flush()
            self._append_offset += len(data)

    # --- metrics ---

    def register_metric(self, spec: MetricSpec) -> Handle:
        if isinstance(spec, DebugTrace) and spec.logfile not in self._debug_files:
            # Open eagerly so an unwritable path fails the registration, not the scanner.
            self._debug_files[spec.logfile] = open(spec.logfile, "a", encoding="utf-8")
        with self._write_lock:
            watermark = self._append_offset
        handle = self.runtime.register_handle(HandleKind.METRIC, spec)
        with self._metrics_lock:
            self._metrics[handle.id] = _MetricState(handle, spec, watermark)
        return handle

    def unregister_metric(self, handle: Handle | int) -> bool:
        metric_id = handle.id if isinstance(handle, Handle) else handle
        with self._metrics_lock:
            state = self._metrics.get(metric_id)
            if state is None or not state.active:
                return False
            state.active = False  # frozen at its last scanned value, still reported
            return True

    def snapshot(self) -> list[MetricSnapshot]:
        with self._metrics_lock:
            out = []
            for state in self._metrics.values():
                if isinstance(state.spec, Temporal):
                    mean = state.total_us / state.count if state.count else None
                    out.append(
                        MetricSnapshot(
                            state.handle.id, state.spec, state.count,
                            total_us=state.total_us, min_us=state.min_us,
                            max_us=state.max_us, mean_us=mean,
                        )
                    )
                else:
                    out.append(MetricSnapshot(state.handle.id, state.spec, state.count))
            return out

    # --- scanner ---

    def start(self) -> None:
        """Launch the periodic scanner; starting twice is a no-op."""
        if self._scanner is not None and self._scanner.is_alive():
            return
        self._stop.clear()
        self._scanner = threading.Thread(target=self._scan_loop, name="cvm-monitor-scan", daemon=True)
        self._scanner.start()

    def stop(self) -> None:
        """Halt scanning; an in-progress pass finishes first."""
        self._stop.set()
        if self._scanner is not None:
            self._scanner.join()
            self._scanner = None

    def _scan_loop(self) -> None:
        while not self._stop.wait(self.scan_interval):
            self.scan_once()

    def scan_once(self) -> int:
        """Parse newly appended complete lines and update metrics.

        A partial trailing line is deferred to the next pass. Returns the
        number of records processed.
        """
        with self._scan_lock:
            with self._write_lock:
                limit = self._append_offset
            if limit <= self._scan_offset:
                return 0
            self._reader.seek(self._scan_offset)
            data = self._reader.read(limit - self._scan_offset)
            last_newline = data.rfind(b"\n")
            if last_newline < 0:
                return 0
            data = data[: last_newline + 1]
            processed = 0
            offset = self._scan_offset
            with self._metrics_lock:
                for raw in data.splitlines(keepends=True):
                    rec = parse_trace_line(raw.decode("utf-8", errors="replace").rstrip("\r\n"))
                    if rec is not None:
                        self._apply(rec, offset)
                        processed += 1
                    offset += len(raw)
                self._scan_offset = offset
        if processed and self.on_metrics_update is not None:
            self.on_metrics_update()
        return processed

    def _apply(self, rec: TraceRecord, offset: int) -> None:
        if rec.method == "receive_request":
            self._pending_receive[rec.request_id] = rec
            return
        if rec.method != "send_reply":
            return
        self._pending_receive.pop(rec.request_id, None)
        with self._durations_lock:
            duration = self._durations.pop(rec.request_id, None)
        for state in self._metrics.values():
            if not state.active or offset < state.watermark:
                continue
            spec = state.spec
            if isinstance(spec, CountMethod):
                if rec.class_name == spec.impl and rec.operation == spec.operation:
                    state.count += 1
            elif isinstance(spec, CountComponent):
                if rec.class_name == spec.impl:
                    state.count += 1
            elif isinstance(spec, Temporal):
                if rec.class_name == spec.impl and rec.operation == spec.operation and duration is not None:
                    state.count += 1
                    state.total_us += duration
                    state.min_us = duration if state.min_us is None else min(state.min_us, duration)
                    state.max_us = duration if state.max_us is None else max(state.max_us, duration)
            elif isinstance(spec, DebugTrace):
                state.count += 1
                self._mirror(spec.logfile, rec)

    def _mirror(self, logfile: str, rec: TraceRecord) -> None:
        f = self._debug_files.get(logfile)
        if f is None:
            return
        f.write(format_trace_line(rec) + "\n")
        f.flush()

    # --- teardown ---

    def uninstall(self) -> None:
        self.stop()
        self.runtime.interceptors.unregister(self._registration)
        if getattr(self.runtime, "monitoring", None) is self:
            self.runtime.monitoring = None
        self._journal.close()
        self._reader.close()
        for f in self._debug_files.values():
            f.close()


def monitor_install(runtime: "ComponentRuntime", journal_path: str | Path,
                    scan_interval: float = DEFAULT_SCAN_INTERVAL) -> MonitoringService:
    """Install the monitoring service on a node; errors if already installed
    or if the journal cannot be opened for append."""
    if getattr(runtime, "monitoring", None) is not None:
        raise AlreadyInstalledError("monitoring service is already installed")
    try:
        service = MonitoringService(runtime, journal_path, scan_interval)
    except OSError as exc:
        raise MonitoringError(f"journal unwritable: {exc}") from exc
    runtime.monitoring = service
    return service
