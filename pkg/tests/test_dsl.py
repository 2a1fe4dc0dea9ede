import pytest
from hypothesis import given, settings

from commnet.dsl import (
    ParseError, builtin, builtin_names, builtin_source, load_process, parse_process, pretty,
)
from commnet.process import (
    Bridge, Distribute, Duplicator, Duploser, Loser, Par, Restrict, Stop,
)

from gen import processes


def test_parse_atoms():
    assert parse_process("0") == Stop()
    assert parse_process("a -> b") == Bridge("a", "b")
    assert parse_process("a => [b, c]") == Distribute("a", ("b", "c"))
    assert parse_process("a => []") == Distribute("a", ())
    assert parse_process("?a") == Loser("a")
    assert parse_process("+a") == Duplicator("a")
    assert parse_process("*a") == Duploser("a")


def test_par_is_right_nested_and_lowest_precedence():
    p = parse_process("a -> b | new c in { c -> d } | ?e")
    assert p == Par(Bridge("a", "b"), Par(Restrict("c", Bridge("c", "d")), Loser("e")))


def test_restrict_with_several_binders():
    assert parse_process("new a b in { a -> b }") == Restrict("a", Restrict("b", Bridge("a", "b")))


def test_comments_and_canonical_names():
    p = parse_process("# a comment\n#0 -> b  # trailing\n")
    assert p == Bridge("#0", "b")


def test_primed_names():
    assert parse_process("a' -> a''") == Bridge("a'", "a''")


@pytest.mark.parametrize("text,offset", [
    ("a -> ", 5),
    ("a -> b | | c", 9),
    ("new in { 0 }", 4),
    ("a => [b,", 8),
    ("a $ b", 2),
    ("(a -> b", 7),
])
def test_parse_errors_carry_spans(text, offset):
    with pytest.raises(ParseError) as err:
        parse_process(text)
    assert err.value.span.start == offset


def test_parse_error_lists_expected_tokens():
    with pytest.raises(ParseError) as err:
        parse_process("a b")
    assert "->" in err.value.expected and "=>" in err.value.expected


def test_pretty_parenthesizes_left_nested_par():
    p = Par(Par(Loser("a"), Loser("b")), Loser("c"))
    assert pretty(p) == "(?a | ?b) | ?c"
    assert parse_process(pretty(p)) == p


@pytest.mark.parametrize("name", builtin_names())
def test_builtins_roundtrip(name):
    p = builtin(name)
    assert parse_process(pretty(p)) == p
    assert builtin_source(name).strip()


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin("nope")


def test_load_process_from_file(tmp_path):
    f = tmp_path / "x.cn"
    f.write_text("new m in { a -> m | m -> b }\n")
    assert load_process(str(f)) == Restrict("m", Par(Bridge("a", "m"), Bridge("m", "b")))
    assert load_process("builtin:D") == builtin("D")


@settings(max_examples=300, deadline=None)
@given(processes)
def test_parse_pretty_roundtrip(p):
    assert parse_process(pretty(p)) == p
