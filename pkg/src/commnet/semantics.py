"""Finite open-net semantics under an environment budget and a counter abstraction.

The environment may inject a packet into any free channel (``in``) while
budget remains and may withdraw an available packet from a free channel
(``out``).  Every distributor firing is silent.  Counts live in
``{0, ..., cap}`` plus a saturated top value; decrementing top may leave top
or drop to ``cap``.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .net import CommNet, Place, Transition
from .process import fresh_name
from .partition import weak_refine

__all__ = [
    "AbstractionParams", "Label", "Config", "Lts", "StateLimitExceeded",
    "TAU", "env_in", "env_out", "successors", "build_lts", "build_reduced_lts",
    "weak_closure", "default_state_limit",
]

DEFAULT_STATE_LIMIT = 10**6


def default_state_limit() -> int:
    return int(os.environ.get("COMMNET_STATE_LIMIT", DEFAULT_STATE_LIMIT))


@dataclass(frozen=True)
class AbstractionParams:
    env_budget: int = 1
    cap: int = 1
    mode: str = "saturating"
    colors: int = 1

    def __post_init__(self):
        if self.env_budget < 0:
            raise ValueError("env_budget must be nonnegative")
        if self.cap < 1:
            raise ValueError("cap must be at least 1")
        if self.colors < 1:
            raise ValueError("colors must be at least 1")
        if self.mode not in ("saturating", "hard"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def top(self) -> int:
        return self.cap + 1

    def describe(self) -> str:
        return f"budget={self.env_budget} cap={self.cap} mode={self.mode} colors={self.colors}"

    def as_dict(self) -> dict:
        return {"budget": self.env_budget, "cap": self.cap, "mode": self.mode, "colors": self.colors}


class Label(NamedTuple):
    kind: str          # "in", "out" or "tau"
    channel: str = ""
    color: int = 0

    def __str__(self):
        if self.kind == "tau":
            return "tau"
        col = f":{self.color}" if self.color else ""
        return f"{self.kind}({self.channel}{col})"


TAU = Label("tau")


def env_in(channel: str, color: int = 0) -> Label:
    return Label("in", channel, color)


def env_out(channel: str, color: int = 0) -> Label:
    return Label("out", channel, color)


class Config(NamedTuple):
    marking: tuple[int, ...]
    budget_left: int
    core: int = -1     # class of the local subnet in a reduced LTS, else -1


class StateLimitExceeded(RuntimeError):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"state-count limit of {limit} exceeded; use smaller parameters "
                         f"or raise COMMNET_STATE_LIMIT")


@dataclass
class Lts:
    net: CommNet
    params: AbstractionParams
    slots: tuple[str, ...]            # place name for each marking position
    states: list[Config]
    labels: list[Label]
    edges: list[tuple[int, int, int]]  # (src, label index, dst)
    initial: int = 0
    core_names: list[str] = field(default_factory=list)
    reduced: bool = False

    def __len__(self):
        return len(self.states)

    def labelled_edges(self):
        for s, l, t in self.edges:
            yield self.states[s], self.labels[l], self.states[t]

    def describe(self, i: int) -> str:
        """Short digest of a state: nonzero counts, core class, budget."""
        c = self.states[i]
        top = self.params.top
        parts = [f"{name}={'T' if v == top else v}" for name, v in zip(self.slots, c.marking) if v]
        if self.reduced and self.core_names:
            parts.append(f"core[{self.core_names[c.core]}]")
        return f"{' '.join(parts) or 'empty'} / budget {c.budget_left}"


def _slot_names(places, colors):
    if colors == 1:
        return tuple(places)
    return tuple(f"{p}:{k}" for p in places for k in range(colors))


class _Counter:
    """Increment/decrement rules of the counter abstraction."""

    def __init__(self, params: AbstractionParams):
        self.cap = params.cap
        self.top = params.top
        self.saturating = params.mode == "saturating"

    def inc(self, m: list, i: int) -> bool:
        v = m[i]
        if v >= self.cap:
            if not self.saturating:
                return False
            m[i] = self.top
        else:
            m[i] = v + 1
        return True

    def dec(self, m: tuple, i: int) -> list[list]:
        v = m[i]
        if v == self.top:
            lowered = list(m)
            lowered[i] = self.cap
            return [list(m), lowered]
        out = list(m)
        out[i] = v - 1
        return [out]


class _Stepper:
    def __init__(self, net: CommNet, params: AbstractionParams, interface=()):
        self.params = params
        extra = [c for c in sorted(interface) if c not in {p.id for p in net.places}]
        self.places = [p.id for p in net.places] + extra
        self.free = [p.id for p in net.places if not p.local] + extra
        k = params.colors
        idx = {p: i for i, p in enumerate(self.places)}
        self.k = k
        self.slots = _slot_names(self.places, k)
        self.counter = _Counter(params)
        self.labels: list[Label] = [TAU]
        self.label_id = {TAU: 0}
        for kind in ("in", "out"):
            for f in sorted(self.free):
                for col in range(k):
                    lab = Label(kind, f, col)
                    self.label_id[lab] = len(self.labels)
                    self.labels.append(lab)
        self.env = [(idx[f] * k + col, self.label_id[env_in(f, col)], self.label_id[env_out(f, col)])
                    for f in sorted(self.free) for col in range(k)]
        self.trans = [(idx[t.input], [idx[o] for o in t.outputs]) for t in net.transitions]

    def initial(self) -> Config:
        return Config((0,) * (len(self.places) * self.k), self.params.env_budget)

    def step(self, m: tuple, budget: int):
        ctr = self.counter
        out = []
        if budget > 0:
            for slot, lin, _ in self.env:
                mm = list(m)
                if ctr.inc(mm, slot):
                    out.append((lin, tuple(mm), budget - 1))
        for slot, _, lout in self.env:
            if m[slot]:
                for mm in ctr.dec(m, slot):
                    out.append((lout, tuple(mm), budget))
        k = self.k
        for src, outs in self.trans:
            for col in range(k):
                slot = src * k + col
                if not m[slot]:
                    continue
                for mm in ctr.dec(m, slot):
                    if all(ctr.inc(mm, o * k + col) for o in outs):
                        out.append((0, tuple(mm), budget))
        return out


def successors(net: CommNet, c: Config, params: AbstractionParams) -> list[tuple[Label, Config]]:
    st = _Stepper(net, params)
    return [(st.labels[l], Config(m, b)) for l, m, b in st.step(c.marking, c.budget_left)]


def _avoid_interface(net: CommNet, interface) -> CommNet:
    """Rename local places whose names coincide with interface channels."""
    clash = {p.id for p in net.places if p.local} & set(interface)
    if not clash:
        return net
    taken = {p.id for p in net.places} | set(interface)
    ren = {}
    for c in sorted(clash):
        ren[c] = fresh_name(c, taken)
        taken.add(ren[c])
    r = lambda c: ren.get(c, c)  # noqa: E731
    return CommNet(tuple(Place(r(p.id), p.local) for p in net.places),
                   tuple(Transition(r(t.input), tuple(map(r, t.outputs))) for t in net.transitions))


def build_lts(net: CommNet, params: AbstractionParams, *, interface=(),
              state_limit: int | None = None) -> Lts:
    """Exhaustive reachability from the empty marking with full budget.

    ``interface`` adds free channels the net does not mention, so two nets
    can be compared over the same environment.
    """
    limit = default_state_limit() if state_limit is None else state_limit
    net = _avoid_interface(net, interface)
    st = _Stepper(net, params, interface)
    init = st.initial()
    index = {(init.marking, init.budget_left): 0}
    states = [init]
    edges = set()
    queue = deque([0])
    while queue:
        s = queue.popleft()
        c = states[s]
        for lab, m, b in st.step(c.marking, c.budget_left):
            key = (m, b)
            t = index.get(key)
            if t is None:
                if len(states) >= limit:
                    raise StateLimitExceeded(limit)
                t = index[key] = len(states)
                states.append(Config(m, b))
                queue.append(t)
            edges.add((s, lab, t))
    return Lts(net, params, st.slots, states, st.labels, sorted(edges))


# -- compositional reduction of the local subnet ------------------------------

def build_reduced_lts(net: CommNet, params: AbstractionParams, *, interface=(),
                      state_limit: int | None = None) -> Lts:
    """LTS of ``net`` with the local subnet replaced by its weak quotient.

    The local places and the transitions reading from them form a component
    that talks to the free places only by receiving packets (firings of
    transitions with a free input and local outputs) and emitting packets into
    free places.  That component is explored alone, minimised up to weak
    bisimilarity over those interactions, and composed back with the free
    places.  Weak bisimilarity is a congruence for this composition, so the
    result is weakly bisimilar to :func:`build_lts` while being much smaller.
    """
    limit = default_state_limit() if state_limit is None else state_limit
    net = _avoid_interface(net, interface)
    st = _Stepper(net, params, interface)
    local = set(net.local_places)
    if not local:
        lts = build_lts(net, params, interface=interface, state_limit=limit)
        lts.reduced = True
        return lts
    k = params.colors
    ctr = st.counter
    lpos = {p: i for i, p in enumerate(net.local_places)}
    fpos = {p: i for i, p in enumerate(st.free)}
    free_env = [(fpos[f] * k + col, st.label_id[env_in(f, col)], st.label_id[env_out(f, col)])
                for f in sorted(st.free) for col in range(k)]

    core_moves = []     # (local input, local outputs, free outputs)
    recv = []           # (free input, local outputs, free outputs)
    free_only = []      # (free input, free outputs)
    for t in net.transitions:
        louts = [lpos[o] for o in t.outputs if o in local]
        fouts = [fpos[o] for o in t.outputs if o not in local]
        if t.input in local:
            core_moves.append((lpos[t.input], louts, tuple(sorted(fouts))))
        elif louts:
            recv.append((fpos[t.input], louts, fouts))
        else:
            free_only.append((fpos[t.input], fouts))

    # explore the local component on its own
    core_labels: dict = {"tau": 0}
    zero = (0,) * (len(lpos) * k)
    cindex = {zero: 0}
    cstates = [zero]
    cedges = set()
    queue = deque([0])
    while queue:
        s = queue.popleft()
        m = cstates[s]
        succ = []
        for src, louts, fouts in core_moves:
            for col in range(k):
                if not m[src * k + col]:
                    continue
                emitted = tuple((f, col) for f in fouts)
                lab = core_labels.setdefault(("emit", emitted), len(core_labels)) if fouts else 0
                for mm in ctr.dec(m, src * k + col):
                    if all(ctr.inc(mm, o * k + col) for o in louts):
                        succ.append((lab, tuple(mm)))
        for r, (_, louts, _) in enumerate(recv):
            for col in range(k):
                lab = core_labels.setdefault(("recv", r, col), len(core_labels))
                mm = list(m)
                if all(ctr.inc(mm, o * k + col) for o in louts):
                    succ.append((lab, tuple(mm)))
        for lab, mm in succ:
            t = cindex.get(mm)
            if t is None:
                if len(cstates) >= limit:
                    raise StateLimitExceeded(limit)
                t = cindex[mm] = len(cstates)
                cstates.append(mm)
                queue.append(t)
            cedges.add((s, lab, t))
    ref = weak_refine(len(cstates), cedges, 0)
    blk = ref.block
    cls_of = [blk[ref.comp[s]] for s in range(len(cstates))]
    n_cls = max(cls_of) + 1
    rep = [None] * n_cls
    for s, c in enumerate(cls_of):
        if rep[c] is None:
            rep[c] = s
    # renumber classes so the empty local marking is class 0, then by representative
    order = sorted(range(n_cls), key=lambda c: rep[c])
    renum = {c: i for i, c in enumerate(order)}
    cls_of = [renum[c] for c in cls_of]
    rep = [rep[c] for c in order]
    qedges: list[dict] = [dict() for _ in range(n_cls)]
    for s, lab, t in cedges:
        qedges[cls_of[s]].setdefault(lab, set()).add(cls_of[t])
    tau_moves = [sorted(q.get(0, ())) for q in qedges]
    emit_moves = [[(key[1], sorted(q[lab])) for key, lab in core_labels.items()
                   if key != "tau" and key[0] == "emit" and lab in q] for q in qedges]
    recv_moves = {key[1:]: lab for key, lab in core_labels.items() if key != "tau" and key[0] == "recv"}

    lnames = _slot_names(net.local_places, k)
    top = params.top

    def core_name(c):
        m = cstates[rep[c]]
        return " ".join(f"{n}={'T' if v == top else v}" for n, v in zip(lnames, m) if v) or "empty"

    # compose the quotient with the free places
    def step(cls, m, budget):
        out = []
        if budget > 0:
            for slot, lin, _ in free_env:
                mm = list(m)
                if ctr.inc(mm, slot):
                    out.append((lin, cls, tuple(mm), budget - 1))
        for slot, _, lout in free_env:
            if m[slot]:
                for mm in ctr.dec(m, slot):
                    out.append((lout, cls, tuple(mm), budget))
        for src, fouts in free_only:
            for col in range(k):
                if m[src * k + col]:
                    for mm in ctr.dec(m, src * k + col):
                        if all(ctr.inc(mm, o * k + col) for o in fouts):
                            out.append((0, cls, tuple(mm), budget))
        for r, (src, _, fouts) in enumerate(recv):
            for col in range(k):
                if not m[src * k + col]:
                    continue
                targets = qedges[cls].get(recv_moves[(r, col)], ())
                if not targets:
                    continue
                for mm in ctr.dec(m, src * k + col):
                    if all(ctr.inc(mm, o * k + col) for o in fouts):
                        mt = tuple(mm)
                        out.extend((0, c2, mt, budget) for c2 in sorted(targets))
        for c2 in tau_moves[cls]:
            out.append((0, c2, m, budget))
        for emitted, targets in emit_moves[cls]:
            mm = list(m)
            if all(ctr.inc(mm, f * k + col) for f, col in emitted):
                mt = tuple(mm)
                out.extend((0, c2, mt, budget) for c2 in targets)
        return out

    init = Config((0,) * (len(st.free) * k), params.env_budget, cls_of[0])
    index = {init: 0}
    states = [init]
    edges = set()
    queue = deque([0])
    while queue:
        s = queue.popleft()
        c = states[s]
        for lab, cls, m, b in step(c.core, c.marking, c.budget_left):
            nc = Config(m, b, cls)
            t = index.get(nc)
            if t is None:
                if len(states) >= limit:
                    raise StateLimitExceeded(limit)
                t = index[nc] = len(states)
                states.append(nc)
                queue.append(t)
            edges.add((s, lab, t))
    return Lts(net, params, _slot_names(st.free, k), states, st.labels, sorted(edges),
               core_names=[core_name(c) for c in range(n_cls)], reduced=True)


def weak_closure(lts: Lts) -> Lts:
    """Saturated LTS: ``s =a=> t`` for ``s tau* a tau* t``, and ``s =tau=> t`` for ``s tau* t``.

    Quadratic in the worst case; intended for small systems and as an oracle.
    """
    n = len(lts.states)
    tau_succ = [[] for _ in range(n)]
    for s, l, t in lts.edges:
        if lts.labels[l] == TAU:
            tau_succ[s].append(t)
    closure = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v in tau_succ[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        closure.append(seen)
    tau_id = lts.labels.index(TAU)
    edges = set()
    for s in range(n):
        for u in closure[s]:
            edges.add((s, tau_id, u))
    by_src = [[] for _ in range(n)]
    for s, l, t in lts.edges:
        if l != tau_id:
            by_src[s].append((l, t))
    for s in range(n):
        for u in closure[s]:
            for l, v in by_src[u]:
                for w in closure[v]:
                    edges.add((s, l, w))
    return Lts(lts.net, lts.params, lts.slots, list(lts.states), list(lts.labels), sorted(edges),
               lts.initial, list(lts.core_names), lts.reduced)
