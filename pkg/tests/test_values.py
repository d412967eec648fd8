import pytest
from hypothesis import given, strategies as st

from cvm.lang import (
    Handle,
    HandleKind,
    Int,
    ListNode,
    Symbol,
    ast_to_value,
    render_value,
    value_to_ast,
)


def test_unit_maps_to_empty_list():
    assert value_to_ast(None) == ListNode(())
    assert ast_to_value(ListNode(())) is None


def test_handle_maps_to_marker_triple():
    h = Handle(HandleKind.RUNTIME, 9)
    node = value_to_ast(h)
    assert node == ListNode((Symbol("handle"), Int(1), Int(9)))
    assert ast_to_value(node) == h


def test_bool_maps_to_marker_symbols():
    assert value_to_ast(True) == Symbol("true")
    assert ast_to_value(Symbol("false")) is False


def test_plain_symbol_is_not_a_value_encoding():
    with pytest.raises(ValueError):
        ast_to_value(Symbol("whatever"))


def test_render_value():
    assert render_value(None) == "unit"
    assert render_value(3) == "3"
    assert render_value("a") == '"a"'
    assert render_value(Handle(HandleKind.COMPONENT, 4)) == "#<component:4>"
    assert render_value((1, "x")) == '(1 "x")'


_values = st.recursive(
    st.one_of(
        st.none(),
        st.booleans(),
        st.integers(min_value=-(2**63), max_value=2**63 - 1),
        st.floats(allow_nan=False),
        st.text(max_size=15),
        st.builds(
            Handle,
            st.sampled_from(list(HandleKind)),
            st.integers(min_value=0, max_value=2**62),
        ),
    ),
    lambda inner: st.lists(inner, min_size=1, max_size=4).map(tuple),
    max_leaves=25,
)


@given(_values)
def test_value_ast_round_trip(value):
    assert ast_to_value(value_to_ast(value)) == value
