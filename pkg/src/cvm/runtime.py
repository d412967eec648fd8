"""In-process component middleware.

Containers host component instances with named facets (provided ports) and
receptacles (required ports). A connection table routes synchronous requests
from a receptacle to a facet, through the interceptor chain. The table plus
the instance and container registries form one immutable snapshot that is
swapped wholesale on every mutation: a request observes either the entire
old configuration or the entire new one, never a mix. That swap is what
makes live rewiring loss-free.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from .interceptors import (
    InterceptionPoint,
    InterceptorRegistry,
    ReplyStatus,
    RequestInfo,
)
from .lang.values import Handle, HandleKind, Value, value_to_ast
from .lang.ast import print_form


class RuntimeFault(Exception):
    """Base for component-runtime failures."""


class UnknownImplError(RuntimeFault):
    pass


class UnknownComponentError(RuntimeFault):
    pass


class UnknownContainerError(RuntimeFault):
    pass


class UnknownPortError(RuntimeFault):
    pass


class UnknownOperationError(RuntimeFault):
    pass


class ReceptacleAlreadyBoundError(RuntimeFault):
    pass


class UnboundReceptacleError(RuntimeFault):
    pass


class StillConnectedError(RuntimeFault):
    pass


class IntegrityError(RuntimeFault):
    """A mutation left a connection endpoint without its component."""


@dataclass(frozen=True)
class MethodVersion:
    number: int
    body: Callable[["CallContext", list[Value]], Value]


class ComponentImpl:
    """A component implementation: named, versioned operations plus declared ports.

    Version lists are append-only and the active version is always the newest;
    old versions stay listed, so calls already executing finish on the version
    they resolved.
    """

    def __init__(
        self,
        impl_name: str,
        *,
        operations: dict[str, Callable[["CallContext", list[Value]], Value]] | None = None,
        facets: set[str] | None = None,
        receptacles: set[str] | None = None,
        init: Callable[["CallContext", list[Value]], None] | None = None,
        static_ops: dict[str, Callable[..., Value]] | None = None,
    ):
        self.impl_name = impl_name
        self.facets = frozenset(facets or ())
        self.receptacles = frozenset(receptacles or ())
        self.init = init
        self.static_ops = dict(static_ops or {})
        self._versions: dict[str, list[MethodVersion]] = {
            name: [MethodVersion(1, body)] for name, body in (operations or {}).items()
        }

    def operation_names(self) -> list[str]:
        return sorted(self._versions)

    def has_operation(self, operation: str) -> bool:
        return operation in self._versions

    def active_version(self, operation: str) -> MethodVersion:
        try:
            return self._versions[operation][-1]
        except KeyError:
            raise UnknownOperationError(
                f"{self.impl_name} has no operation {operation!r}"
            ) from None

    def versions(self, operation: str) -> tuple[MethodVersion, ...]:
        if operation not in self._versions:
            raise UnknownOperationError(f"{self.impl_name} has no operation {operation!r}")
        return tuple(self._versions[operation])

    def append_version(self, operation: str, body) -> int:
        if operation not in self._versions:
            raise UnknownOperationError(f"{self.impl_name} has no operation {operation!r}")
        chain = self._versions[operation]
        version = MethodVersion(chain[-1].number + 1, body)
        chain.append(version)  # append is the redirection instant
        return version.number


@dataclass(frozen=True)
class Connection:
    source: tuple[int, str]  # (component id, receptacle)
    target: tuple[int, str]  # (component id, facet)


@dataclass(frozen=True)
class Request:
    request_id: int
    operation: str
    args: tuple[Value, ...]
    sender: int
    slots: dict[int, bytes]


@dataclass(frozen=True)
class Reply:
    status: ReplyStatus
    payload: Value  # value on SUCCESSFUL, error text on EXCEPTION
    slots: dict[int, bytes]


@dataclass
class Instance:
    component_id: int
    container_id: int
    impl: ComponentImpl
    state: dict[str, Any] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class CallContext:
    """Handed to operation bodies; the state record is exclusively theirs
    for the duration of the call."""

    runtime: "ComponentRuntime"
    component_id: int
    impl: ComponentImpl
    state: dict[str, Any]

    def forward(self, receptacle: str, operation: str, args: list[Value]) -> Reply:
        return self.runtime.send_request(self.component_id, receptacle, operation, args)

    def self_call(self, operation: str, args: list[Value]) -> Value:
        """Direct intra-component call, resolved through the version table."""
        return self.impl.active_version(operation).body(self, args)


@dataclass(frozen=True)
class Snapshot:
    containers: dict[int, frozenset[int]]  # container id -> component ids
    instances: dict[int, Instance]
    connections: dict[tuple[int, str], tuple[int, str]]


@dataclass(frozen=True)
class RewireAction:
    kind: str  # "connect" | "disconnect"
    source: int
    receptacle: str
    target: int | None = None
    facet: str | None = None


def connect_action(source: int, receptacle: str, target: int, facet: str) -> RewireAction:
    return RewireAction("connect", source, receptacle, target, facet)


def disconnect_action(source: int, receptacle: str) -> RewireAction:
    return RewireAction("disconnect", source, receptacle)


class ComponentRuntime:
    """Registries, routing and dispatch for one node process.

    Mutating operations are serialized through `control_lock` (the CVM's
    single control context); request dispatch only reads snapshots and may
    run from any number of application threads.
    """

    def __init__(self):
        self.control_lock = threading.RLock()
        self.interceptors = InterceptorRegistry(self.next_id)
        self._snapshot = Snapshot({}, {}, {})
        self._ids = itertools.count(1)
        self._id_lock = threading.Lock()
        self._request_ids = itertools.count(1)
        self._request_id_lock = threading.Lock()
        self._impls: dict[str, ComponentImpl] = {}
        self._handles: dict[int, tuple[HandleKind, Any]] = {}
        self.on_topology_change: Callable[[], None] | None = None

    # --- identity ---------------------------------------------------------

    def next_id(self) -> int:
        with self._id_lock:
            return next(self._ids)

    def _next_request_id(self) -> int:
        with self._request_id_lock:
            return next(self._request_ids)

    def register_handle(self, kind: HandleKind, obj: Any) -> Handle:
        handle = Handle(kind, self.next_id())
        with self.control_lock:
            self._handles[handle.id] = (kind, obj)
        return handle

    def resolve_handle(self, handle: Handle) -> Any:
        entry = self._handles.get(handle.id)
        if entry is None or entry[0] is not handle.kind:
            raise RuntimeFault(f"dangling handle: {handle}")
        return entry[1]

    # --- implementations ----------------------------------------------------

    def register_impl(self, impl: ComponentImpl) -> None:
        with self.control_lock:
            self._impls[impl.impl_name] = impl

    def impl_registered(self, name: str) -> bool:
        return name in self._impls

    def get_impl(self, name: str) -> ComponentImpl:
        try:
            return self._impls[name]
        except KeyError:
            raise UnknownImplError(f"unknown implementation: {name}") from None

    def replace_method(self, impl_name: str, operation: str, body) -> int:
        with self.control_lock:
            return self.get_impl(impl_name).append_version(operation, body)

    # --- registry mutations --------------------------------------------------

    def create_container(self) -> int:
        with self.control_lock:
            snap = self._snapshot
            container_id = self.next_id()
            containers = dict(snap.containers)
            containers[container_id] = frozenset()
            self._commit(Snapshot(containers, snap.instances, snap.connections))
            return container_id

    def deploy_component(self, container_id: int, impl_name: str, init_args: list[Value] | None = None) -> int:
        with self.control_lock:
            snap = self._snapshot
            if container_id not in snap.containers:
                raise UnknownContainerError(f"unknown container: {container_id}")
            impl = self.get_impl(impl_name)
            component_id = self.next_id()
            instance = Instance(component_id, container_id, impl)
            if impl.init is not None:
                ctx = CallContext(self, component_id, impl, instance.state)
                impl.init(ctx, list(init_args or []))
            containers = dict(snap.containers)
            containers[container_id] = snap.containers[container_id] | {component_id}
            instances = dict(snap.instances)
            instances[component_id] = instance
            self._commit(Snapshot(containers, instances, snap.connections))
            return component_id

    def remove_component(self, component_id: int) -> None:
        with self.control_lock:
            snap = self._snapshot
            if component_id not in snap.instances:
                raise UnknownComponentError(f"unknown component: {component_id}")
            dangling = [
                Connection(src, dst)
                for src, dst in snap.connections.items()
                if src[0] == component_id or dst[0] == component_id
            ]
            if dangling:
                raise StillConnectedError(
                    f"component {component_id} still has connections: {dangling}"
                )
            instances = dict(snap.instances)
            instance = instances.pop(component_id)
            containers = dict(snap.containers)
            containers[instance.container_id] = containers[instance.container_id] - {component_id}
            self._commit(Snapshot(containers, instances, snap.connections))

    def connect(self, source: int, receptacle: str, target: int, facet: str) -> None:
        self.atomic_rewire([connect_action(source, receptacle, target, facet)])

    def disconnect(self, source: int, receptacle: str) -> None:
        self.atomic_rewire([disconnect_action(source, receptacle)])

    def atomic_rewire(self, actions: list[RewireAction]) -> None:
        """Validate the whole action list against the current table, then
        apply it in one swap; a validation failure applies nothing."""
        with self.control_lock:
            snap = self._snapshot
            work = dict(snap.connections)
            for action in actions:
                key = (action.source, action.receptacle)
                if action.kind == "disconnect":
                    if key not in work:
                        raise UnboundReceptacleError(
                            f"receptacle {action.receptacle!r} of component {action.source} is not connected"
                        )
                    del work[key]
                elif action.kind == "connect":
                    src = snap.instances.get(action.source)
                    dst = snap.instances.get(action.target)
                    if src is None:
                        raise UnknownComponentError(f"unknown component: {action.source}")
                    if dst is None:
                        raise UnknownComponentError(f"unknown component: {action.target}")
                    if action.receptacle not in src.impl.receptacles:
                        raise UnknownPortError(
                            f"{src.impl.impl_name} declares no receptacle {action.receptacle!r}"
                        )
                    if action.facet not in dst.impl.facets:
                        raise UnknownPortError(
                            f"{dst.impl.impl_name} declares no facet {action.facet!r}"
                        )
                    if key in work:
                        raise ReceptacleAlreadyBoundError(
                            f"receptacle {action.receptacle!r} of component {action.source} is already bound"
                        )
                    work[key] = (action.target, action.facet)
                else:
                    raise ValueError(f"unknown rewire action kind: {action.kind}")
            self._commit(Snapshot(snap.containers, snap.instances, work))

    def _commit(self, snapshot: Snapshot) -> None:
        for (src, _), (dst, _) in snapshot.connections.items():
            if src not in snapshot.instances or dst not in snapshot.instances:
                raise IntegrityError(f"connection references absent component: {src}->{dst}")
        self._snapshot = snapshot
        if self.on_topology_change is not None:
            self.on_topology_change()

    # --- dispatch -------------------------------------------------------------

    def send_request(self, source: int, receptacle: str, operation: str, args: list[Value]) -> Reply:
        snap = self._snapshot  # one atomic capture; the request lives on it
        route = snap.connections.get((source, receptacle))
        if route is None:
            raise UnboundReceptacleError(
                f"receptacle {receptacle!r} of component {source} is not connected"
            )
        target_id, _facet = route
        instance = snap.instances[target_id]
        regs = self.interceptors.snapshot()

        request_id = self._next_request_id()
        slots: dict[int, bytes] = {}
        info = RequestInfo(
            request_id=request_id,
            operation=operation,
            sender=source,
            target_component=target_id,
            target_interface=f"IDL:{instance.impl.impl_name}:1.0",
            arguments_text=",".join(print_form(value_to_ast(a)) for a in args),
            slots=slots,
        )

        fire = self.interceptors.fire
        fire(regs, InterceptionPoint.CLIENT_SEND_REQUEST, info)
        fire(regs, InterceptionPoint.SERVER_RECEIVE_REQUEST, info)

        status = ReplyStatus.SUCCESSFUL
        payload: Value
        with instance.lock:
            try:
                version = instance.impl.active_version(operation)
                ctx = CallContext(self, target_id, instance.impl, instance.state)
                payload = version.body(ctx, list(args))
            except Exception as exc:
                status = ReplyStatus.EXCEPTION
                payload = str(exc) or type(exc).__name__
                info.exception_text = payload

        info.reply_status = status
        fire(regs, InterceptionPoint.SERVER_SEND_REPLY, info)
        fire(regs, InterceptionPoint.CLIENT_RECEIVE_REPLY, info)
        return Reply(status, payload, slots)

    # --- introspection ----------------------------------------------------------

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def list_containers(self) -> list[int]:
        return sorted(self._snapshot.containers)

    def list_components(self, container_id: int | None = None) -> list[int]:
        snap = self._snapshot
        if container_id is None:
            return sorted(snap.instances)
        if container_id not in snap.containers:
            raise UnknownContainerError(f"unknown container: {container_id}")
        return sorted(snap.containers[container_id])

    def list_connections(self) -> list[Connection]:
        snap = self._snapshot
        return [Connection(src, dst) for src, dst in sorted(snap.connections.items())]

    def instance(self, component_id: int) -> Instance:
        try:
            return self._snapshot.instances[component_id]
        except KeyError:
            raise UnknownComponentError(f"unknown component: {component_id}") from None

