"""Encrypting system-oriented component and its live interposition.

The COS sits between a sender and a receiver: its `send` operation encrypts
the message payload through its own replaceable `encrypt` method and forwards
downstream. Interposition deploys a COS and reroutes an existing connection
around it in one atomic table swap, so traffic in flight never observes a
half-rewired topology.

Message payloads travel as strings under a latin-1 byte convention: any byte
sequence maps to exactly one codepoint sequence and back, so ciphertext fits
the value model without a dedicated bytes type. Ciphers here are desk-scale
(rolling XOR, byte shift); the point is the integration mechanics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

from .interceptors import ReplyStatus
from .runtime import (
    CallContext,
    ComponentImpl,
    RuntimeFault,
    connect_action,
    disconnect_action,
)

if TYPE_CHECKING:
    from .runtime import ComponentRuntime

COS_IMPL_NAME = "CryptoCOS"
DEFAULT_KEY = b"\x5a"  # no zero bytes: ciphertext never equals plaintext


class InterpositionError(RuntimeFault):
    pass


@dataclass(frozen=True)
class CipherSpec:
    """An invertible byte transform pair under a fixed key."""

    name: str
    key: bytes
    encrypt: Callable[[bytes], bytes]
    decrypt: Callable[[bytes], bytes]


def xor_cipher(key: bytes = DEFAULT_KEY) -> CipherSpec:
    if not key:
        raise ValueError("xor key must be non-empty")

    def transform(data: bytes) -> bytes:
        return bytes(b ^ key[i % len(key)] for i, b in enumerate(data))

    return CipherSpec("xor", key, transform, transform)


def caesar_cipher(shift: int) -> CipherSpec:
    def enc(data: bytes) -> bytes:
        return bytes((b + shift) % 256 for b in data)

    def dec(data: bytes) -> bytes:
        return bytes((b - shift) % 256 for b in data)

    return CipherSpec(f"caesar{shift:+d}", bytes([shift % 256]), enc, dec)


def payload_to_bytes(payload: str) -> bytes:
    return payload.encode("latin-1")


def bytes_to_payload(data: bytes) -> str:
    return data.decode("latin-1")


def caesar_encrypt_body(shift: int):
    """Replacement body for the COS `encrypt` operation."""

    def encrypt(ctx: CallContext, args):
        data = payload_to_bytes(args[0])
        return bytes_to_payload(bytes((b + shift) % 256 for b in data))

    return encrypt


def _init(ctx: CallContext, args) -> None:
    key = payload_to_bytes(args[0]) if args else DEFAULT_KEY
    ctx.state["key"] = key


def _encrypt(ctx: CallContext, args):
    key = ctx.state["key"]
    data = payload_to_bytes(args[0])
    return bytes_to_payload(bytes(b ^ key[i % len(key)] for i, b in enumerate(data)))


def _set_key(ctx: CallContext, args):
    ctx.state["key"] = payload_to_bytes(args[0])
    return None


def _send(ctx: CallContext, args):
    seq, payload = args[0]
    ciphertext = ctx.self_call("encrypt", [payload])
    reply = ctx.forward("out", "send", [(seq, ciphertext)])
    if reply.status is ReplyStatus.EXCEPTION:
        raise RuntimeFault(f"downstream send failed: {reply.payload}")
    return reply.payload


def cos_impl() -> ComponentImpl:
    return ComponentImpl(
        COS_IMPL_NAME,
        operations={"send": _send, "encrypt": _encrypt, "set_key": _set_key},
        facets={"in"},
        receptacles={"out"},
        init=_init,
    )


def interpose(
    runtime: "ComponentRuntime",
    container_id: int,
    source: tuple[int, str],
    target: tuple[int, str],
    cos_impl_name: str = COS_IMPL_NAME,
) -> int:
    """Deploy a COS into `container_id` and atomically reroute source->target
    through it. Returns the COS component id. If the connection precondition
    fails, nothing is deployed and nothing is rewired."""
    src_id, receptacle = source
    dst_id, facet = target
    with runtime.control_lock:
        current = runtime.snapshot.connections.get((src_id, receptacle))
        if current != (dst_id, facet):
            raise InterpositionError(
                f"precondition failed: {src_id}.{receptacle} is not connected to {dst_id}.{facet}"
            )
        cos_id = runtime.deploy_component(container_id, cos_impl_name)
        try:
            runtime.atomic_rewire(
                [
                    disconnect_action(src_id, receptacle),
                    connect_action(src_id, receptacle, cos_id, "in"),
                    connect_action(cos_id, "out", dst_id, facet),
                ]
            )
        except RuntimeFault:
            runtime.remove_component(cos_id)
            raise
        return cos_id


def deinterpose(runtime: "ComponentRuntime", cos_id: int) -> None:
    """Inverse of interpose for any two-port shape: restore the direct
    connection and remove the component."""
    with runtime.control_lock:
        connections = runtime.snapshot.connections
        inbound = [(src, dst) for src, dst in connections.items() if dst[0] == cos_id]
        outbound = [(src, dst) for src, dst in connections.items() if src[0] == cos_id]
        if len(inbound) != 1 or len(outbound) != 1:
            raise InterpositionError(
                f"component {cos_id} is not in a 1-in/1-out shape "
                f"({len(inbound)} inbound, {len(outbound)} outbound)"
            )
        (up_comp, up_recep), _ = inbound[0]
        (_, cos_recep), (down_comp, down_facet) = outbound[0]
        runtime.atomic_rewire(
            [
                disconnect_action(up_comp, up_recep),
                disconnect_action(cos_id, cos_recep),
                connect_action(up_comp, up_recep, down_comp, down_facet),
            ]
        )
        runtime.remove_component(cos_id)
