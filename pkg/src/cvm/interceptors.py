"""Hook layer crossed by every request: four fixed interception points,
ordered callback chains, and piggybacked per-request slot data."""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import Callable

MAX_SLOT_ID = 0xFFFF

# Monitoring stamps its receive-side timestamp here by convention.
SLOT_MONITOR_TIMESTAMP = 1


class InterceptionPoint(enum.Enum):
    CLIENT_SEND_REQUEST = "client_send_request"
    SERVER_RECEIVE_REQUEST = "server_receive_request"
    SERVER_SEND_REPLY = "server_send_reply"
    CLIENT_RECEIVE_REPLY = "client_receive_reply"


# Traversal order of a single synchronous request.
TRAVERSAL_ORDER = (
    InterceptionPoint.CLIENT_SEND_REQUEST,
    InterceptionPoint.SERVER_RECEIVE_REQUEST,
    InterceptionPoint.SERVER_SEND_REPLY,
    InterceptionPoint.CLIENT_RECEIVE_REPLY,
)

ALL_POINTS = frozenset(InterceptionPoint)


class ReplyStatus(enum.Enum):
    PENDING = "PENDING"
    SUCCESSFUL = "SUCCESSFUL"
    EXCEPTION = "EXCEPTION"


@dataclass
class RequestInfo:
    """What a callback may observe about one in-flight request.

    Confined to a single request's traversal; slot writes at an earlier
    point are visible at the later points of the same request.
    """

    request_id: int
    operation: str
    sender: int
    target_component: int
    target_interface: str
    arguments_text: str
    response_expected: bool = True
    reply_status: ReplyStatus = ReplyStatus.PENDING
    exception_text: str = ""
    slots: dict[int, bytes] = field(default_factory=dict)

    def slot_set(self, slot_id: int, data: bytes) -> None:
        if not 0 <= slot_id <= MAX_SLOT_ID:
            raise ValueError(f"slot id out of range: {slot_id}")
        self.slots[slot_id] = bytes(data)

    def slot_get(self, slot_id: int) -> bytes | None:
        return self.slots.get(slot_id)

    @property
    def target_impl(self) -> str:
        # target_interface is always IDL:<impl>:1.0
        return self.target_interface[4:-4]


InterceptorCallback = Callable[[InterceptionPoint, RequestInfo], None]


@dataclass(frozen=True)
class Registration:
    registration_id: int
    points: frozenset[InterceptionPoint]
    callback: InterceptorCallback


class InterceptorRegistry:
    """Node-global ordered chains; chain order per point is registration order.

    Requests capture one immutable snapshot at send time, so registration and
    removal take effect for requests started afterwards.
    """

    def __init__(self, id_allocator: Callable[[], int]):
        self._lock = threading.Lock()
        self._registrations: tuple[Registration, ...] = ()
        self._next_id = id_allocator

    def register(self, points, callback: InterceptorCallback) -> int:
        points = frozenset(points)
        bad = points - ALL_POINTS
        if bad:
            raise ValueError(f"unknown interception points: {bad}")
        with self._lock:
            reg = Registration(self._next_id(), points, callback)
            self._registrations = self._registrations + (reg,)
            return reg.registration_id

    def unregister(self, registration_id: int) -> bool:
        with self._lock:
            kept = tuple(r for r in self._registrations if r.registration_id != registration_id)
            changed = len(kept) != len(self._registrations)
            self._registrations = kept
            return changed

    def snapshot(self) -> tuple[Registration, ...]:
        return self._registrations

    @staticmethod
    def fire(regs: tuple[Registration, ...], point: InterceptionPoint, info: RequestInfo) -> None:
        for reg in regs:
            if point in reg.points:
                reg.callback(point, info)
