"""DOT and PNML renderings of communication nets.

No coordinates are emitted; layout is left to the consumer.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .net import CommNet, Place, Transition

__all__ = ["RenderOptions", "to_dot", "to_pnml", "from_pnml", "PNML_NS"]

PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"
PTNET = "http://www.pnml.org/version-2009/grammar/ptnet"
TOOL = "commnet"


@dataclass(frozen=True)
class RenderOptions:
    sugar_glyphs: bool = True       # fold loser/duplicator transitions into ?/+/* marks
    include_marking: bool = False   # show token counts given to ``to_dot``


def _glyph(loses: bool, dups: bool) -> str:
    return {(True, False): "?", (False, True): "+", (True, True): "*"}.get((loses, dups), "")


def _quote(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def _sorted_transitions(n: CommNet) -> list[Transition]:
    return sorted(n.transitions, key=lambda t: (t.input, t.outputs))


def to_dot(n: CommNet, opts: RenderOptions = RenderOptions(),
           marking: Mapping[str, int] | None = None) -> str:
    """Graphviz text: circles for places (dashed when local), filled boxes for
    transitions, arc labels for output multiplicities above one."""
    folded: dict[str, tuple[bool, bool]] = {}
    shown = _sorted_transitions(n)
    if opts.sugar_glyphs:
        keep = []
        for t in shown:
            if not t.outputs or t.outputs == (t.input, t.input):
                loses, dups = folded.get(t.input, (False, False))
                folded[t.input] = (loses or not t.outputs, dups or bool(t.outputs))
            else:
                keep.append(t)
        shown = keep
    lines = ["digraph commnet {", "  rankdir=LR;"]
    for p in sorted(n.places, key=lambda p: p.id):
        label = p.id
        glyph = _glyph(*folded.get(p.id, (False, False)))
        if glyph:
            label += "\\n" + glyph
        tokens = marking.get(p.id, 0) if opts.include_marking and marking else 0
        if tokens:
            label += "\\n" + ("\u2022" * tokens if tokens <= 3 else f"{tokens}\u2022")
        attrs = ["shape=circle", f"label={_quote(label)}"]
        if p.local:
            attrs.append("style=dashed")
        lines.append(f"  {_quote('p:' + p.id)} [{', '.join(attrs)}];")
    for i, t in enumerate(shown):
        tid = _quote(f"t:{i}")
        lines.append(f'  {tid} [shape=box, style=filled, fillcolor=black, label="", width=0.12, height=0.4];')
        lines.append(f"  {_quote('p:' + t.input)} -> {tid};")
        for out, k in sorted(Counter(t.outputs).items()):
            extra = f" [label={_quote(str(k))}]" if k > 1 else ""
            lines.append(f"  {tid} -> {_quote('p:' + out)}{extra};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_pnml(n: CommNet) -> str:
    """Place/transition PNML with one page; locality in a toolspecific block."""
    ET.register_namespace("", PNML_NS)
    q = lambda tag: f"{{{PNML_NS}}}{tag}"  # noqa: E731
    root = ET.Element(q("pnml"))
    net = ET.SubElement(root, q("net"), id="net", type=PTNET)
    page = ET.SubElement(net, q("page"), id="page0")
    pid = {}
    for i, p in enumerate(n.places):
        pid[p.id] = f"p{i}"
        el = ET.SubElement(page, q("place"), id=pid[p.id])
        ET.SubElement(ET.SubElement(el, q("name")), q("text")).text = p.id
        tool = ET.SubElement(el, q("toolspecific"), tool=TOOL, version="1")
        ET.SubElement(tool, q("local")).text = "true" if p.local else "false"
    arcs = 0
    for i, t in enumerate(n.transitions):
        tid = f"t{i}"
        ET.SubElement(page, q("transition"), id=tid)
        ET.SubElement(page, q("arc"), id=f"a{arcs}", source=pid[t.input], target=tid)
        arcs += 1
        for out, k in Counter(t.outputs).items():
            arc = ET.SubElement(page, q("arc"), id=f"a{arcs}", source=tid, target=pid[out])
            arcs += 1
            if k > 1:
                ET.SubElement(ET.SubElement(arc, q("inscription")), q("text")).text = str(k)
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def from_pnml(text: str) -> CommNet:
    """Read back what ``to_pnml`` writes.  Output order within a transition
    follows arc order, so nets compare with ``CommNet.same_as``."""
    q = lambda tag: f"{{{PNML_NS}}}{tag}"  # noqa: E731
    root = ET.fromstring(text)
    page = root.find(f"{q('net')}/{q('page')}")
    if page is None:
        raise ValueError("no net page in PNML document")
    names, places = {}, []
    for el in page.findall(q("place")):
        name = el.findtext(f"{q('name')}/{q('text')}", default=el.get("id"))
        local = el.findtext(f"{q('toolspecific')}/{q('local')}", default="false") == "true"
        names[el.get("id")] = name
        places.append(Place(name, local))
    inputs: dict[str, str] = {}
    outputs: dict[str, list[str]] = {el.get("id"): [] for el in page.findall(q("transition"))}
    for arc in page.findall(q("arc")):
        src, dst = arc.get("source"), arc.get("target")
        weight = int(arc.findtext(f"{q('inscription')}/{q('text')}", default="1"))
        if dst in outputs:
            if dst in inputs:
                raise ValueError(f"transition {dst} has more than one input place")
            inputs[dst] = names[src]
        else:
            outputs[src].extend([names[dst]] * weight)
    transitions = []
    for tid, outs in outputs.items():
        if tid not in inputs:
            raise ValueError(f"transition {tid} has no input place")
        transitions.append(Transition(inputs[tid], tuple(outs)))
    return CommNet(tuple(places), tuple(transitions))
