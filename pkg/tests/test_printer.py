import random

import pytest
from hypothesis import given, strategies as st

from cvm.lang import Float, Int, ListNode, Str, Symbol, parse, print_form
from treegen import random_tree


def test_symbol_prints_bare():
    assert print_form(Symbol("x")) == "x"


def test_string_reescapes_quotes():
    assert print_form(Str('a"b')) == '"a\\"b"'
    assert print_form(Str("a\\b")) == '"a\\\\b"'


def test_list_prints_with_single_spaces():
    form = ListNode((Symbol("define"), Symbol("clazz"), Str("Monitor")))
    assert print_form(form) == '(define clazz "Monitor")'


def test_float_rendering_avoids_exponent_notation():
    assert print_form(Float(1.0)) == "1.0"
    assert print_form(Float(-0.5)) == "-0.5"
    assert "e" not in print_form(Float(1e30)).lower()
    assert "e" not in print_form(Float(5e-324)).lower()


@pytest.mark.parametrize("x", [0.0, -0.0, 1.5, -2.25, 1e308, 5e-324, 3.141592653589793, 1e16])
def test_float_text_round_trips_exactly(x):
    reparsed = parse(print_form(Float(x))).forms[0]
    assert isinstance(reparsed, Float)
    assert repr(reparsed.value) == repr(x)


def test_symbol_constructor_rejects_delimiters_and_number_shapes():
    for bad in ["", "a b", "a(b", 'a"b', "a;b", "12", "-3", "1.5", "+.5"]:
        with pytest.raises(ValueError):
            Symbol(bad)


def _symbols():
    return st.from_regex(r"[A-Za-z_*/<>=!?+-][A-Za-z0-9_*/<>=!?+.-]{0,11}", fullmatch=True).filter(
        _constructible
    )


def _constructible(name):
    try:
        Symbol(name)
        return True
    except ValueError:
        return False


_ast_nodes = st.recursive(
    st.one_of(
        _symbols().map(Symbol),
        st.text(max_size=20).map(Str),
        st.integers(min_value=-(2**63), max_value=2**63 - 1).map(Int),
        st.floats(allow_nan=False, allow_infinity=False).map(Float),
    ),
    lambda inner: st.lists(inner, max_size=5).map(lambda xs: ListNode(tuple(xs))),
    max_leaves=40,
)


@given(_ast_nodes)
def test_print_then_parse_is_identity(node):
    script = parse(print_form(node))
    assert len(script) == 1
    assert script.forms[0] == node


def test_print_parse_identity_on_seeded_corpus():
    rng = random.Random(0xC0DE)
    for _ in range(300):
        node = random_tree(rng)
        assert parse(print_form(node)).forms[0] == node
