"""HTTP gateway for the operator console: read-only topology/metrics/symbol
snapshots, script submission, and a server-sent event stream.

Script submissions go through the same control queue as the TCP admin
protocol, so HTTP- and TCP-submitted scripts serialize with each other.
All bodies are JSON; the exact shapes are documented in docs/api.md and are
the contract the browser console builds against.
"""

from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import TYPE_CHECKING

from .lang.reader import ParseError, parse
from .lang.values import render_value
from .monitoring import CountComponent, CountMethod, DebugTrace, Temporal

if TYPE_CHECKING:
    from .core import NodeRuntime

DEFAULT_PORT = 4778
EVENT_HEARTBEAT_S = 15.0

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


def topology_json(node: "NodeRuntime") -> dict:
    snap = node.snapshot
    containers = []
    for container_id in sorted(snap.containers):
        components = []
        for component_id in sorted(snap.containers[container_id]):
            instance = snap.instances[component_id]
            components.append(
                {
                    "id": component_id,
                    "impl": instance.impl.impl_name,
                    "facets": sorted(instance.impl.facets),
                    "receptacles": sorted(instance.impl.receptacles),
                }
            )
        containers.append({"id": container_id, "components": components})
    connections = [
        {
            "source": {"component": src[0], "receptacle": src[1]},
            "target": {"component": dst[0], "facet": dst[1]},
        }
        for src, dst in sorted(snap.connections.items())
    ]
    return {"containers": containers, "connections": connections}


def _metric_json(snap) -> dict:
    spec = snap.spec
    entry: dict = {"id": snap.metric_id, "count": snap.count}
    if isinstance(spec, CountMethod):
        entry.update(kind="count_method", impl=spec.impl, operation=spec.operation)
    elif isinstance(spec, CountComponent):
        entry.update(kind="count_component", impl=spec.impl)
    elif isinstance(spec, Temporal):
        entry.update(
            kind="temporal",
            impl=spec.impl,
            operation=spec.operation,
            min_us=snap.min_us,
            max_us=snap.max_us,
            mean_us=snap.mean_us,
            total_us=snap.total_us,
        )
    elif isinstance(spec, DebugTrace):
        entry.update(kind="debug_trace", logfile=spec.logfile)
    return entry


def metrics_json(node: "NodeRuntime") -> dict:
    service = node.monitoring
    if service is None:
        return {"installed": False, "metrics": []}
    return {"installed": True, "metrics": [_metric_json(s) for s in service.snapshot()]}


def run_script_json(node: "NodeRuntime", source: str) -> dict:
    """Evaluate script text through the control queue; a failing form stops
    the remainder, mirroring script semantics everywhere else."""
    script = parse(source)
    results = []
    for index, form in enumerate(script.forms):
        ok, payload = node.submit_form(form)
        if ok:
            results.append({"index": index, "ok": render_value(payload)})
        else:
            results.append({"index": index, "error": str(payload)})
            break
    return {"results": results}


class GatewayServer:
    def __init__(self, node: "NodeRuntime", host: str = "127.0.0.1", port: int = 0,
                 ui_dir: str | Path | None = None):
        self.node = node
        self.ui_dir = Path(ui_dir) if ui_dir else None
        gateway = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # quiet by default
                pass

            def _cors(self):
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

            def _json(self, status: int, body) -> None:
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self._cors()
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_OPTIONS(self):
                self.send_response(204)
                self._cors()
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self):
                path = self.path.split("?", 1)[0]
                if path == "/api/topology":
                    self._json(200, topology_json(gateway.node))
                elif path == "/api/metrics":
                    self._json(200, metrics_json(gateway.node))
                elif path == "/api/symbols":
                    with gateway.node.control_lock:
                        symbols = gateway.node.env.list_symbols() if gateway.node.env else []
                    self._json(200, symbols)
                elif path == "/api/events":
                    self._event_stream()
                else:
                    self._static(path)

            def do_POST(self):
                path = self.path.split("?", 1)[0]
                if path != "/api/script":
                    self._json(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length", "0"))
                source = self.rfile.read(length).decode("utf-8", errors="replace")
                try:
                    body = run_script_json(gateway.node, source)
                except ParseError as exc:
                    self._json(400, {"error": exc.message, "line": exc.line, "column": exc.column})
                    return
                self._json(200, body)

            def _chunk(self, data: bytes) -> None:
                self.wfile.write(f"{len(data):X}\r\n".encode() + data + b"\r\n")
                self.wfile.flush()

            def _event_stream(self):
                # Chunked framing so clients see each event as it happens;
                # a plain length-less body would sit in their read buffers.
                self.send_response(200)
                self._cors()
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Transfer-Encoding", "chunked")
                self.end_headers()
                events = gateway.node.events.subscribe()
                try:
                    self._chunk(b"retry: 2000\n\n")
                    while not gateway._stopping.is_set():
                        try:
                            kind = events.get(timeout=EVENT_HEARTBEAT_S)
                        except queue.Empty:
                            self._chunk(b": keep-alive\n\n")
                            continue
                        self._chunk(f"event: {kind}\ndata: {{}}\n\n".encode())
                    self.wfile.write(b"0\r\n\r\n")
                except (BrokenPipeError, ConnectionResetError, OSError):
                    pass
                finally:
                    gateway.node.events.unsubscribe(events)

            def _static(self, path: str):
                if gateway.ui_dir is None:
                    self._json(404, {"error": "not found"})
                    return
                if path in ("/", ""):
                    path = "/index.html"
                candidate = (gateway.ui_dir / path.lstrip("/")).resolve()
                if not str(candidate).startswith(str(gateway.ui_dir.resolve())) or not candidate.is_file():
                    self._json(404, {"error": "not found"})
                    return
                data = candidate.read_bytes()
                self.send_response(200)
                self._cors()
                self.send_header(
                    "Content-Type", _CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
                )
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self._stopping = threading.Event()
        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    def start(self) -> tuple[str, int]:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.2},
            name="cvm-gateway", daemon=True,
        )
        self._thread.start()
        return self.address

    def stop(self) -> None:
        self._stopping.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(5)


def gateway_serve(address: tuple[str, int] | str, node: "NodeRuntime",
                  ui_dir: str | Path | None = None) -> None:
    """Blocking gateway entry point."""
    from .protocol import parse_address

    host, port = parse_address(address)
    server = GatewayServer(node, host, port, ui_dir=ui_dir)
    server.start()
    try:
        threading.Event().wait()
    finally:
        server.stop()
