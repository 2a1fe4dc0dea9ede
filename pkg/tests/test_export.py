import re
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from hypothesis import given, settings

from commnet.dsl import builtin, builtin_names, parse_process as P
from commnet.export import RenderOptions, from_pnml, to_dot, to_pnml
from commnet.net import CommNet, to_net

from gen import processes

GOLDEN = Path(__file__).parent / "golden"


def dot_counts(text):
    places = re.findall(r'^\s*"p:([^"]+)" \[shape=circle, label="([^"]*)"(, style=dashed)?\];', text, re.M)
    boxes = re.findall(r'^\s*"t:\d+" \[shape=box', text, re.M)
    arcs = re.findall(r"->", text)
    return places, boxes, arcs


def pnml_counts(text):
    """Independent reading: count elements by local tag name, ignore our toolspecific data."""
    root = ET.fromstring(text)
    tags = [el.tag.rsplit("}", 1)[-1] for el in root.iter()]
    return tags.count("place"), tags.count("transition"), tags.count("arc")


@pytest.mark.parametrize("name", ["D", "M"])
def test_dot_matches_golden(name):
    assert to_dot(to_net(builtin(name))) == (GOLDEN / f"{name}.dot").read_text()


def test_dot_structure_of_direct_broadcast():
    places, boxes, _ = dot_counts(to_dot(to_net(builtin("D"))))
    assert len(places) == 9 and len(boxes) == 8
    m = [p for p in places if p[0] == "m"][0]
    assert m[1] == "m\\n*" and m[2]


def test_dot_structure_of_multicast():
    places, boxes, _ = dot_counts(to_dot(to_net(builtin("M"))))
    assert len(places) == 13 and len(boxes) == 9
    assert sum(1 for p in places if p[2]) == 5


def test_dot_is_deterministic():
    n = to_net(builtin("fig7"))
    assert to_dot(n) == to_dot(n)
    shuffled = CommNet(tuple(reversed(n.places)), tuple(reversed(n.transitions)))
    assert to_dot(shuffled) == to_dot(n)


def test_empty_net():
    text = to_dot(to_net(P("0")))
    assert text.startswith("digraph") and "->" not in text
    assert pnml_counts(to_pnml(to_net(P("0")))) == (0, 0, 0)


def test_explicit_duploser():
    places, boxes, _ = dot_counts(to_dot(to_net(P("*a")), RenderOptions(sugar_glyphs=False)))
    assert len(boxes) == 2 and places[0][1] == "a"
    assert '"t:1" -> "p:a" [label="2"]' in to_dot(to_net(P("*a")), RenderOptions(sugar_glyphs=False))


def test_marking_rendering():
    text = to_dot(to_net(P("a -> b")), RenderOptions(include_marking=True), {"a": 2, "b": 5})
    assert 'label="a\\n\u2022\u2022"' in text and 'label="b\\n5\u2022"' in text


def test_pnml_bridge():
    assert pnml_counts(to_pnml(to_net(P("a -> b")))) == (2, 1, 2)


def test_pnml_weights_and_locality():
    text = to_pnml(to_net(P("new a in { +a | s -> a }")))
    root = ET.fromstring(text)
    ns = {"p": "http://www.pnml.org/version-2009/grammar/pnml"}
    weights = [el.text for el in root.iterfind(".//p:arc/p:inscription/p:text", ns)]
    assert weights == ["2"]
    local = [el.text for el in root.iterfind(".//p:place/p:toolspecific/p:local", ns)]
    assert local == ["true", "false"]


@pytest.mark.parametrize("name", builtin_names())
def test_pnml_counts_on_builtins(name):
    n = to_net(builtin(name))
    text = to_pnml(n)
    places, transitions, arcs = pnml_counts(text)
    assert places == len(n.places) and transitions == len(n.transitions)
    assert arcs == sum(1 + len(set(t.outputs)) for t in n.transitions)
    assert from_pnml(text).same_as(n)


def test_pnml_multicast_counts():
    assert pnml_counts(to_pnml(to_net(builtin("M"))))[:2] == (13, 19)


@settings(max_examples=150, deadline=None)
@given(processes)
def test_pnml_roundtrip(p):
    n = to_net(p)
    back = from_pnml(to_pnml(n))
    assert back.same_as(n)
    assert pnml_counts(to_pnml(back)) == pnml_counts(to_pnml(n))
