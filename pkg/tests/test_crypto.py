import pytest
from hypothesis import given, strategies as st

from cvm.interceptors import ReplyStatus
from cvm.runtime import ComponentRuntime, UnknownComponentError
from cvm.crypto import (
    DEFAULT_KEY,
    InterpositionError,
    bytes_to_payload,
    caesar_cipher,
    caesar_encrypt_body,
    cos_impl,
    deinterpose,
    interpose,
    payload_to_bytes,
    xor_cipher,
)
from cvm.demo import deploy_demo, register_demo_impls, sink_impl


@given(st.binary(max_size=200), st.binary(min_size=1, max_size=16))
def test_xor_decrypt_inverts_encrypt(message, key):
    cipher = xor_cipher(key)
    assert cipher.decrypt(cipher.encrypt(message)) == message


@given(st.binary(max_size=200), st.integers(min_value=0, max_value=255))
def test_caesar_decrypt_inverts_encrypt(message, shift):
    cipher = caesar_cipher(shift)
    assert cipher.decrypt(cipher.encrypt(message)) == message


@given(st.binary(max_size=200))
def test_single_byte_xor_is_an_involution(message):
    cipher = xor_cipher(b"\x5a")
    assert cipher.encrypt(cipher.encrypt(message)) == message


@given(st.binary(max_size=100))
def test_payload_byte_convention_round_trips(data):
    assert payload_to_bytes(bytes_to_payload(data)) == data


def _cos_runtime():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    rt.register_impl(sink_impl())
    register_demo_impls(rt)
    container = rt.create_container()
    caller = rt.deploy_component(container, "Caller")
    sink = rt.deploy_component(container, "SeqSink")
    return rt, container, caller, sink


def test_cos_declares_its_ports():
    rt, container, _, _ = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS", ["k"])
    instance = rt.instance(cos)
    assert instance.impl.facets == frozenset({"in"})
    assert instance.impl.receptacles == frozenset({"out"})
    assert instance.state["key"] == b"k"


def test_zero_key_send_leaves_payload_unchanged():
    rt, container, caller, sink = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS", [bytes_to_payload(b"\x00")])
    rt.connect(caller, "out", cos, "in")
    rt.connect(cos, "out", sink, "in")
    reply = rt.send_request(caller, "out", "send", [(1, "hello")])
    assert reply.status is ReplyStatus.SUCCESSFUL
    rec = rt.instance(sink).state["received"]
    assert rec == [(1, "hello")]


def test_send_then_decrypt_recovers_plaintext():
    rt, container, caller, sink = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS")
    rt.connect(caller, "out", cos, "in")
    rt.connect(cos, "out", sink, "in")
    rt.send_request(caller, "out", "send", [(1, "hello")])
    ((seq, payload),) = rt.instance(sink).state["received"]
    assert seq == 1
    assert payload != "hello"
    cipher = xor_cipher(DEFAULT_KEY)
    assert bytes_to_payload(cipher.decrypt(payload_to_bytes(payload))) == "hello"


def test_replaced_caesar_body_shifts_bytes():
    rt, container, caller, sink = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS")
    rt.connect(caller, "out", cos, "in")
    rt.connect(cos, "out", sink, "in")
    rt.replace_method("CryptoCOS", "encrypt", caesar_encrypt_body(3))
    rt.send_request(caller, "out", "send", [(1, "abc")])
    ((_, payload),) = rt.instance(sink).state["received"]
    assert payload == "def"


def test_set_key_changes_the_cipher():
    rt, container, caller, sink = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS")
    rt.connect(caller, "out", cos, "in")
    rt.connect(cos, "out", sink, "in")
    new_key = b"\x11\x22"
    reply = rt.send_request(caller, "out", "set_key", [bytes_to_payload(new_key)])
    assert reply.status is ReplyStatus.SUCCESSFUL
    rt.send_request(caller, "out", "send", [(1, "secret")])
    ((_, payload),) = rt.instance(sink).state["received"]
    cipher = xor_cipher(new_key)
    assert bytes_to_payload(cipher.decrypt(payload_to_bytes(payload))) == "secret"


def test_deinterpose_accepts_any_two_port_shape():
    from cvm.runtime import ComponentImpl

    rt = ComponentRuntime()
    rt.register_impl(
        ComponentImpl(
            "Relay",
            operations={"send": lambda ctx, a: ctx.forward("out", "send", a).payload},
            facets={"in"},
            receptacles={"out"},
        )
    )
    topo = deploy_demo(rt, interval_ms=0, count=1)
    topo.wait(10)
    before = rt.snapshot.connections
    relay = interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"), "Relay")
    assert rt.instance(relay).impl.impl_name == "Relay"
    deinterpose(rt, relay)  # not a crypto COS; the shape is what matters
    assert rt.snapshot.connections == before


def test_send_with_unbound_out_is_exception_reply():
    rt, container, caller, _ = _cos_runtime()
    cos = rt.deploy_component(container, "CryptoCOS")
    rt.connect(caller, "out", cos, "in")
    reply = rt.send_request(caller, "out", "send", [(1, "x")])
    assert reply.status is ReplyStatus.EXCEPTION
    assert "not connected" in reply.payload


def test_interpose_rewires_through_cos():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0, count=50)
    assert topo.wait(10)
    cos = interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))
    assert rt.snapshot.connections == {
        (topo.emitter, "out"): (cos, "in"),
        (cos, "out"): (topo.sink, "in"),
    }


def test_interpose_requires_existing_connection():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0, count=1)
    topo.wait(10)
    rt.disconnect(topo.emitter, "out")
    components_before = rt.list_components()
    with pytest.raises(InterpositionError):
        interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))
    assert rt.list_components() == components_before  # nothing deployed


def test_interpose_twice_fails_precondition():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0, count=1)
    topo.wait(10)
    interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))
    with pytest.raises(InterpositionError):
        interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))


def test_deinterpose_restores_original_table():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0, count=1)
    topo.wait(10)
    before = rt.snapshot.connections
    cos = interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))
    deinterpose(rt, cos)
    assert rt.snapshot.connections == before
    with pytest.raises(UnknownComponentError):
        rt.instance(cos)


def test_deinterpose_requires_two_port_shape():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0, count=1)
    topo.wait(10)
    with pytest.raises(InterpositionError):
        deinterpose(rt, topo.sink)  # only one inbound, no outbound
    with pytest.raises(InterpositionError):
        deinterpose(rt, 987654)


def test_interposition_under_live_traffic_is_loss_free():
    rt = ComponentRuntime()
    rt.register_impl(cos_impl())
    topo = deploy_demo(rt, interval_ms=0.2, count=2000)
    while len(topo.received()) < 300:
        pass
    interpose(rt, topo.container_a, (topo.emitter, "out"), (topo.sink, "in"))
    assert topo.wait(30)
    assert topo.failures == []
    received = topo.received()
    assert [seq for seq, _ in received] == list(range(1, 2001))
    cipher = xor_cipher(DEFAULT_KEY)
    kinds = []
    for seq, payload in received:
        expected = f"msg-{seq}"
        if payload == expected:
            kinds.append("plain")
        elif bytes_to_payload(cipher.decrypt(payload_to_bytes(payload))) == expected:
            kinds.append("cipher")
        else:
            kinds.append("neither")
    assert "neither" not in kinds
    cutover = kinds.index("cipher")
    assert 0 < cutover < len(kinds)
    assert all(k == "plain" for k in kinds[:cutover])
    assert all(k == "cipher" for k in kinds[cutover:])
