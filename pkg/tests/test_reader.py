import pytest

from cvm.lang import Float, Int, ListNode, ParseError, Str, Symbol, parse, parse_form


def test_define_form():
    script = parse('(define clazz "Monitor")')
    assert script.forms == (
        ListNode((Symbol("define"), Symbol("clazz"), Str("Monitor"))),
    )


def test_parentheses_inside_strings_are_literal():
    form = parse_form('(define sign "(Ljava/lang/Object;)V")')
    assert isinstance(form, ListNode)
    assert form.children[2] == Str("(Ljava/lang/Object;)V")


def test_empty_list_form():
    assert parse("()").forms == (ListNode(()),)


def test_empty_input_is_empty_script():
    assert parse("").forms == ()
    assert parse("  ; only a comment\n").forms == ()


def test_unterminated_string_reports_position():
    with pytest.raises(ParseError) as exc:
        parse('"(a')
    assert "unterminated string" in str(exc.value)
    assert exc.value.line == 1


def test_missing_close_paren():
    with pytest.raises(ParseError) as exc:
        parse("(a (b c)")
    assert "unbalanced" in str(exc.value)
    assert (exc.value.line, exc.value.column) == (1, 1)


def test_stray_close_paren():
    with pytest.raises(ParseError) as exc:
        parse("a)\n)")
    assert "unexpected ')'" in str(exc.value)


def test_error_position_is_line_and_column():
    with pytest.raises(ParseError) as exc:
        parse('(ok)\n(bad "x')
    assert exc.value.line == 2
    assert exc.value.column == 6


def test_numbers_and_symbols():
    forms = parse("1 +42 -7 3.5 -0.25 1. .5 +1.2.3 - abc a1").forms
    assert forms == (
        Int(1),
        Int(42),
        Int(-7),
        Float(3.5),
        Float(-0.25),
        Float(1.0),
        Float(0.5),
        Symbol("+1.2.3"),
        Symbol("-"),
        Symbol("abc"),
        Symbol("a1"),
    )


def test_integer_out_of_64_bit_range_is_a_parse_error():
    with pytest.raises(ParseError) as exc:
        parse(str(2**63))
    assert "64-bit" in str(exc.value)
    assert parse(str(2**63 - 1)).forms == (Int(2**63 - 1),)
    assert parse(str(-(2**63))).forms == (Int(-(2**63)),)


def test_string_escapes():
    assert parse_form('"a\\"b"') == Str('a"b')
    assert parse_form('"a\\\\b"') == Str("a\\b")
    with pytest.raises(ParseError) as exc:
        parse('"a\\nb"')
    assert "escape" in str(exc.value)


def test_comments_run_to_end_of_line():
    script = parse("(a ; ignore (this\n b) ; tail comment")
    assert script.forms == (ListNode((Symbol("a"), Symbol("b"))),)


def test_semicolon_inside_string_is_literal():
    assert parse_form('"a;b"') == Str("a;b")


def test_nesting_guard():
    deep = "(" * 600 + ")" * 600
    with pytest.raises(ParseError) as exc:
        parse(deep)
    assert "nesting" in str(exc.value)


def test_parse_form_rejects_multiple_forms():
    with pytest.raises(ParseError):
        parse_form("(a) (b)")
