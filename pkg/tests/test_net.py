import pytest
from hypothesis import given, settings

from commnet.dsl import builtin, parse_process
from commnet.net import CommNet, Place, Transition, to_net, to_process, unreliability_profile
from commnet.process import normalize

from gen import processes


def test_golden_counts():
    d, m = to_net(builtin("D")), to_net(builtin("M"))
    assert (len(d.places), len(d.transitions)) == (9, 10)
    assert (len(m.places), len(m.transitions)) == (13, 19)
    assert d.local_places == ("m",)
    assert m.local_places == ("l01", "l02", "l13", "l23", "l30")
    assert set(m.free_places) == {"s0", "s1", "s2", "s3", "r0", "r1", "r2", "r3"}


def test_one_input_per_transition_and_duplicates_kept():
    n = to_net(parse_process("a -> b | a -> b | ?a"))
    assert [t.input for t in n.transitions] == ["a", "a", "a"]
    assert len(n.transitions) == 3


def test_clashing_binders_get_distinct_places():
    n = to_net(parse_process("new m in { a -> m } | new m in { m -> b }"))
    assert n.local_places == ("m", "m'")


def test_undeclared_endpoint_rejected():
    with pytest.raises(ValueError):
        CommNet((Place("a"),), (Transition("a", ("b",)),))
    with pytest.raises(ValueError):
        CommNet((Place("a"), Place("a")), ())


def test_unreliability_profile():
    prof = unreliability_profile(to_net(builtin("lossyD")))
    assert prof["m"] == "duploser"
    assert prof["r0"] == "loser"
    assert prof["s0"] == "none"
    assert unreliability_profile(to_net(parse_process("+a")))["a"] == "duplicator"


def test_same_as_ignores_order():
    a = to_net(parse_process("x => [y, z] | ?y"))
    b = to_net(parse_process("?y | x => [z, y]"))
    assert a.same_as(b)
    assert not a.same_as(to_net(parse_process("x => [y] | ?y")))


@pytest.mark.parametrize("name", ["D", "M", "lossyM", "fig7"])
def test_to_process_inverts_to_net_on_builtins(name):
    p = builtin(name)
    assert normalize(to_process(to_net(p))) == normalize(p)


@settings(max_examples=300, deadline=None)
@given(processes)
def test_to_process_inverts_to_net(p):
    assert normalize(to_process(to_net(p))) == normalize(p)
    n = to_net(p)
    assert to_net(to_process(n)).same_as(n)
