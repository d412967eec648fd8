"""Remote administration protocol: length-prefixed frames over TCP.

The client parses script text locally and ships encoded syntax trees; the
server decodes each tree, hands it to the node's control loop, and answers
with exactly one RESULT or ERROR frame before reading the next request.
Frame layout: 2-byte magic "CV", version byte, message-type byte, u32
big-endian payload length, payload.
"""

from __future__ import annotations

import enum
import socket
import struct
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .lang.ast import AstNode, Script
from .lang.codec import DecodeError, decode_ast, encode_ast
from .lang.values import Value, ast_to_value, value_to_ast

if TYPE_CHECKING:
    from .core import NodeRuntime

MAGIC = b"CV"
VERSION = 1
DEFAULT_PORT = 4777
_HEADER = struct.Struct(">2sBBI")


class MsgType(enum.IntEnum):
    EVAL = 0x01
    RESULT = 0x02
    ERROR = 0x03
    PING = 0x04
    PONG = 0x05
    BYE = 0x06


class FrameError(Exception):
    """Malformed frame header (magic, version, type, or truncation)."""


class ProtocolViolationError(Exception):
    """The peer answered out of protocol (e.g. a reply of the wrong type)."""


def encode_frame(msg_type: MsgType, payload: bytes = b"") -> bytes:
    return _HEADER.pack(MAGIC, VERSION, int(msg_type), len(payload)) + payload


def read_frame(stream) -> tuple[MsgType, bytes] | None:
    """Read one frame from a blocking binary stream; None on clean EOF."""
    header = stream.read(_HEADER.size)
    if not header:
        return None
    if len(header) < _HEADER.size:
        raise FrameError("truncated frame header")
    magic, version, msg_type, length = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError(f"unsupported protocol version {version}")
    try:
        kind = MsgType(msg_type)
    except ValueError:
        raise FrameError(f"unknown message type 0x{msg_type:02x}") from None
    payload = stream.read(length) if length else b""
    if len(payload) < length:
        raise FrameError("truncated frame payload")
    return kind, payload


@dataclass
class SessionState:
    peer: str = ""
    frames_in: int = 0
    frames_out: int = 0
    errors: int = 0


class AdminServer:
    """Accepts admin connections and funnels their forms into the node's
    control queue; each EVAL is answered in order, PING with PONG, BYE
    closes, and a bad header closes the connection immediately."""

    def __init__(self, node: "NodeRuntime", host: str = "127.0.0.1", port: int = 0,
                 eval_timeout: float | None = 60.0):
        self.node = node
        self.host = host
        self.port = port
        self.eval_timeout = eval_timeout
        self.sessions: list[SessionState] = []
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._conns_lock = threading.Lock()
        self._conns: set[socket.socket] = set()
        self._stopping = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        return self._listener.getsockname()[:2]

    def start(self) -> tuple[str, int]:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen()
        # A blocked accept() does not wake on close(); poll so stop() returns promptly.
        listener.settimeout(0.25)
        self._listener = listener
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="cvm-admin-accept", daemon=True
        )
        self._accept_thread.start()
        return self.address

    def stop(self) -> None:
        self._stopping.set()
        if self._listener is not None:
            self._listener.close()
        with self._conns_lock:
            for conn in list(self._conns):
                conn.close()
        if self._accept_thread is not None:
            self._accept_thread.join(5)

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                conn, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(None)
            with self._conns_lock:
                self._conns.add(conn)
            threading.Thread(
                target=self._serve_connection, args=(conn, addr),
                name=f"cvm-admin-{addr[0]}:{addr[1]}", daemon=True,
            ).start()

    def _serve_connection(self, conn: socket.socket, addr) -> None:
        session = SessionState(peer=f"{addr[0]}:{addr[1]}")
        self.sessions.append(session)
        stream = conn.makefile("rb")
        try:
            while True:
                try:
                    frame = read_frame(stream)
                except FrameError:
                    return  # bad magic/version/type: close immediately
                if frame is None:
                    return
                kind, payload = frame
                session.frames_in += 1
                if kind is MsgType.BYE:
                    return
                if kind is MsgType.PING:
                    self._send(conn, session, MsgType.PONG)
                elif kind is MsgType.EVAL:
                    self._handle_eval(conn, session, payload)
                else:
                    return  # clients must not send replies
        except OSError:
            return
        finally:
            stream.close()
            conn.close()
            with self._conns_lock:
                self._conns.discard(conn)

    def _handle_eval(self, conn: socket.socket, session: SessionState, payload: bytes) -> None:
        try:
            form, consumed = decode_ast(payload)
            if consumed != len(payload):
                raise DecodeError(f"{len(payload) - consumed} trailing bytes after form")
        except DecodeError as exc:
            self._send_error(conn, session, f"decode: {exc}")
            return
        try:
            ok, result = self.node.submit_form(form, timeout=self.eval_timeout)
        except Exception as exc:
            self._send_error(conn, session, str(exc) or type(exc).__name__)
            return
        if not ok:
            self._send_error(conn, session, str(result))
            return
        try:
            reply_payload = encode_ast(value_to_ast(result))
        except Exception as exc:
            self._send_error(conn, session, f"result not encodable: {exc}")
            return
        self._send(conn, session, MsgType.RESULT, reply_payload)

    def _send(self, conn: socket.socket, session: SessionState, kind: MsgType,
              payload: bytes = b"") -> None:
        conn.sendall(encode_frame(kind, payload))
        session.frames_out += 1

    def _send_error(self, conn: socket.socket, session: SessionState, text: str) -> None:
        session.errors += 1
        self._send(conn, session, MsgType.ERROR, text.encode("utf-8"))

    def total_frames_in(self) -> int:
        return sum(s.frames_in for s in self.sessions)


# --- client ------------------------------------------------------------------


@dataclass
class FormResult:
    index: int
    ok: bool
    value: Value = None
    error: str = ""
    payload: bytes = b""  # raw RESULT payload, for byte-level comparisons


def parse_address(address: str | tuple[str, int]) -> tuple[str, int]:
    if isinstance(address, tuple):
        return address
    host, _, port = address.rpartition(":")
    if not host:
        raise ValueError(f"expected host:port, got {address!r}")
    return host, int(port)


class AdminConnection:
    """One client connection with strict request-reply alternation."""

    def __init__(self, address: str | tuple[str, int], timeout: float = 30.0):
        self.address = parse_address(address)
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._stream = None

    def connect(self) -> None:
        sock = socket.create_connection(self.address, timeout=self.timeout)
        self._sock = sock
        self._stream = sock.makefile("rb")

    def close(self) -> None:
        if self._stream is not None:
            self._stream.close()
            self._stream = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, *exc):
        self.close()

    def _require(self) -> socket.socket:
        if self._sock is None:
            raise ProtocolViolationError("connection is not open")
        return self._sock

    def _read_reply(self) -> tuple[MsgType, bytes]:
        frame = read_frame(self._stream)
        if frame is None:
            raise ConnectionError("server closed the connection mid-reply")
        return frame

    def eval_form(self, form: AstNode) -> FormResult:
        sock = self._require()
        sock.sendall(encode_frame(MsgType.EVAL, encode_ast(form)))
        kind, payload = self._read_reply()
        if kind is MsgType.RESULT:
            node, _ = decode_ast(payload)
            return FormResult(0, True, value=ast_to_value(node), payload=payload)
        if kind is MsgType.ERROR:
            return FormResult(0, False, error=payload.decode("utf-8", errors="replace"))
        raise ProtocolViolationError(f"expected RESULT or ERROR, got {kind.name}")

    def ping(self) -> None:
        sock = self._require()
        sock.sendall(encode_frame(MsgType.PING))
        kind, payload = self._read_reply()
        if kind is not MsgType.PONG or payload:
            raise ProtocolViolationError(f"expected empty PONG, got {kind.name}")

    def bye(self) -> None:
        if self._sock is not None:
            try:
                self._sock.sendall(encode_frame(MsgType.BYE))
            except OSError:
                pass
        self.close()


def submit(address: str | tuple[str, int], script: Script, *, keep_going: bool = False,
           timeout: float = 30.0) -> list[FormResult]:
    """Send a script's forms as successive EVAL frames, collecting replies in
    order; stops at the first ERROR unless keep_going is set."""
    results: list[FormResult] = []
    with AdminConnection(address, timeout=timeout) as conn:
        for index, form in enumerate(script.forms):
            result = conn.eval_form(form)
            result.index = index
            results.append(result)
            if not result.ok and not keep_going:
                break
        conn.bye()
    return results


def serve(address: str | tuple[str, int], node: "NodeRuntime",
          bootstrap_script: str | None = None) -> None:
    """Blocking server entry: run the bootstrap script, listen, and consume
    the control queue until shutdown."""
    from .lang.reader import parse

    if bootstrap_script is not None:
        with open(bootstrap_script, "r", encoding="utf-8") as f:
            for form in parse(f.read()).forms:
                node.eval_form(form)  # a failing bootstrap refuses to serve
    host, port = parse_address(address)
    server = AdminServer(node, host, port)
    server.start()
    try:
        node.control_loop()
    finally:
        server.stop()
