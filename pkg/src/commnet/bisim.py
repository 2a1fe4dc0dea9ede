"""Weak bisimilarity with counterexample strategies, and equivalence up to loss."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from .net import to_net
from .partition import Refinement, weak_refine
from .process import Loser, Process, free_channels, par_all
from .semantics import TAU, AbstractionParams, Label, Lts, build_lts, build_reduced_lts

__all__ = [
    "Equivalent", "Inequivalent", "BisimResult", "Move", "Position", "weak_bisim",
    "up_to_loss", "check", "check_up_to_loss", "verify_partition", "replay_strategy",
    "audit", "format_counterexample", "LEFT", "RIGHT",
]

LEFT, RIGHT = "left", "right"


@dataclass
class Move:
    side: str                    # which system the attacker moves in
    label: Label
    target: int                  # state id (representative) in that system
    responses: dict[int, "Position"] = field(default_factory=dict)


@dataclass
class Position:
    left: int
    right: int
    move: Move | None = None     # None only if the position is not separated


@dataclass
class Equivalent:
    left: Lts
    right: Lts
    blocks: list[list[tuple[int, int]]]   # (0 = left / 1 = right, state id)

    equivalent = True

    def __bool__(self):
        return True


@dataclass
class Inequivalent:
    left: Lts
    right: Lts
    strategy: Position
    depth: int
    comp: list[int] = field(repr=False, default_factory=list)

    equivalent = False

    def __bool__(self):
        return False

    def trace_labels(self) -> set[Label]:
        """Every label appearing anywhere in the attacker strategy."""
        seen, out, stack = set(), set(), [self.strategy]
        while stack:
            pos = stack.pop()
            if id(pos) in seen or pos.move is None:
                continue
            seen.add(id(pos))
            out.add(pos.move.label)
            stack.extend(pos.move.responses.values())
        return out

    def main_line(self) -> list[tuple[str, Label]]:
        """Attacker moves along the first defender response at each step."""
        line, pos = [], self.strategy
        while pos is not None and pos.move is not None:
            line.append((pos.move.side, pos.move.label))
            pos = next(iter(pos.move.responses.values()), None)
        return line


BisimResult = Union[Equivalent, Inequivalent]


class _Union:
    """Disjoint union of two LTSs over a shared label table."""

    def __init__(self, a: Lts, b: Lts):
        self.a, self.b = a, b
        self.off = len(a.states)
        self.n = len(a.states) + len(b.states)
        self.labels: list[Label] = [TAU]
        lid = {TAU: 0}
        for lab in sorted(set(a.labels) | set(b.labels)):
            if lab not in lid:
                lid[lab] = len(self.labels)
                self.labels.append(lab)
        self.lid = lid
        self.edges = [(s, lid[a.labels[l]], t) for s, l, t in a.edges]
        self.edges += [(s + self.off, lid[b.labels[l]], t + self.off) for s, l, t in b.edges]

    def split(self, u: int) -> tuple[int, int]:
        return (0, u) if u < self.off else (1, u - self.off)


def weak_bisim(a: Lts, b: Lts) -> BisimResult:
    """Decide weak bisimilarity of the initial states of ``a`` and ``b``."""
    if a.params.env_budget != b.params.env_budget:
        raise ValueError("both systems must be explored with the same environment budget")
    u = _Union(a, b)
    ref = weak_refine(u.n, u.edges, 0)
    x, y = ref.comp[a.initial], ref.comp[b.initial + u.off]
    if ref.block[x] == ref.block[y]:
        groups: dict[int, list] = {}
        for s in range(u.n):
            groups.setdefault(ref.block[ref.comp[s]], []).append(u.split(s))
        return Equivalent(a, b, list(groups.values()))
    game = _Game(u, ref)
    root = game.attack(x, y)
    return Inequivalent(a, b, root, ref.separation(x, y), list(ref.comp))


class _Game:
    """Builds a depth-minimal attacker strategy from the refinement history."""

    def __init__(self, u: _Union, ref: Refinement):
        self.u, self.ref = u, ref
        self.rep: list[int] = [-1] * ref.n_nodes
        for s in range(u.n - 1, -1, -1):
            self.rep[ref.comp[s]] = s
        self._reach: dict[int, frozenset] = {}
        self._weak: dict[tuple[int, int], frozenset] = {}
        self._memo: dict[tuple[int, int], Position] = {}

    def reach(self, c: int) -> frozenset:
        r = self._reach.get(c)
        if r is None:
            seen, stack = {c}, [c]
            while stack:
                for d in self.ref.tau_succ[stack.pop()]:
                    if d not in seen:
                        seen.add(d)
                        stack.append(d)
            r = self._reach[c] = frozenset(seen)
        return r

    def weak(self, c: int, label: int) -> frozenset:
        key = (c, label)
        r = self._weak.get(key)
        if r is None:
            if label == 0:
                r = self.reach(c)
            else:
                out = set()
                for v in self.reach(c):
                    for l, d in self.ref.vis[v]:
                        if l == label:
                            out |= self.reach(d)
                r = frozenset(out)
            self._weak[key] = r
        return r

    def enabled(self, c: int) -> list[int]:
        labels = {0}
        for v in self.reach(c):
            labels.update(l for l, _ in self.ref.vis[v])
        return sorted(labels, key=lambda l: self.u.labels[l])

    def config(self, node: int):
        side, s = self.u.split(self.rep[node])
        return (self.u.a, self.u.b)[side].states[s]

    def state(self, node: int) -> int:
        return self.u.split(self.rep[node])[1]

    def attack(self, x: int, y: int) -> Position:
        key = (x, y)
        if key in self._memo:
            return self._memo[key]
        pos = Position(self.state(x), self.state(y))
        self._memo[key] = pos
        k = self.ref.separation(x, y)
        if k is None:
            return pos
        best = None
        for side, me, other in ((LEFT, x, y), (RIGHT, y, x)):
            for l in self.enabled(me):
                replies = self.weak(other, l)
                for t in self.weak(me, l):
                    if all(0 < (self.ref.separation(t, r) or k) < k for r in replies):
                        cand = (self.u.labels[l], len(replies), side, self.config(t))
                        if best is None or cand < best[0]:
                            best = (cand, side, l, t, replies)
        if best is None:
            raise AssertionError("refinement history admits no distinguishing move")
        _, side, l, t, replies = best
        move = Move(side, self.u.labels[l], self.state(t))
        pos.move = move
        for r in sorted(replies, key=self.config):
            nxt = self.attack(t, r) if side == LEFT else self.attack(r, t)
            move.responses[self.state(r)] = nxt
        return pos


# -- independent audits --------------------------------------------------------

def _adjacency(lts: Lts):
    tau = [[] for _ in lts.states]
    vis = [[] for _ in lts.states]
    for s, l, t in lts.edges:
        (tau if lts.labels[l] == TAU else vis)[s].append((lts.labels[l], t))
    return tau, vis


def _weak_moves(lts: Lts, adj, s: int, label: Label) -> set[int]:
    """States reachable by tau* label tau* (tau*: just the silent closure)."""
    tau, vis = adj

    def closure(starts):
        seen, stack = set(starts), list(starts)
        while stack:
            for _, v in tau[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    pre = closure([s])
    if label == TAU:
        return pre
    mid = [t for u in pre for lab, t in vis[u] if lab == label]
    return closure(mid)


def verify_partition(result: Equivalent) -> bool:
    """Check that ``result.blocks`` is a weak bisimulation relating the initial states.

    Works directly on the original edges with a least-fixpoint computation of
    weak capabilities (per label, a bitmask of reachable blocks), sharing no
    code with the refinement engine.
    """
    systems = (result.left, result.right)
    block: dict[tuple[int, int], int] = {}
    for i, members in enumerate(result.blocks):
        for m in members:
            block[m] = i
    if len(block) != sum(len(lts.states) for lts in systems):
        return False
    if block.get((0, result.left.initial)) != block.get((1, result.right.initial)):
        return False

    weak: dict[tuple[int, int], dict[Label, int]] = {}
    preds: dict[tuple[int, int], list] = {}
    succs: dict[tuple[int, int], list] = {}
    for side, lts in enumerate(systems):
        for s in range(len(lts.states)):
            weak[(side, s)] = {TAU: 1 << block[(side, s)]}
        for s, l, t in lts.edges:
            lab = lts.labels[l]
            preds.setdefault((side, t), []).append(((side, s), lab))
            succs.setdefault((side, s), []).append((lab, block[(side, t)]))

    queue = deque(weak)
    queued = set(weak)
    while queue:
        node = queue.popleft()
        queued.discard(node)
        w = weak[node]
        for src, lab in preds.get(node, ()):
            ws = weak[src]
            changed = False
            adds = w.items() if lab == TAU else ((lab, w[TAU]),)
            for l2, bits in adds:
                old = ws.get(l2, 0)
                if bits & ~old:
                    ws[l2] = old | bits
                    changed = True
            if changed and src not in queued:
                queued.add(src)
                queue.append(src)

    for members in result.blocks:
        need: dict[Label, int] = {}
        for m in members:
            for lab, b in succs.get(m, ()):
                need[lab] = need.get(lab, 0) | (1 << b)
        for m in members:
            have = weak[m]
            if any(bits & ~have.get(lab, 0) for lab, bits in need.items()):
                return False
    return True


def replay_strategy(result: Inequivalent) -> bool:
    """Play the attacker strategy against every weak defender reply.

    Defender replies are recomputed from the original edges.  Replies are
    grouped by the silent component recorded in the result; the grouping is
    itself checked (grouped states must reach each other silently).
    """
    systems = (result.left, result.right)
    adjs = tuple(_adjacency(lts) for lts in systems)
    off = len(result.left.states)
    comp = result.comp

    def node(side, s):
        return comp[s + (off if side else 0)]

    reach_cache: dict = {}

    def silent(side, s):
        key = (side, s)
        if key not in reach_cache:
            reach_cache[key] = _weak_moves(systems[side], adjs[side], s, TAU)
        return reach_cache[key]

    visited = set()
    stack = [result.strategy]
    while stack:
        pos = stack.pop()
        if id(pos) in visited:
            continue
        visited.add(id(pos))
        mv = pos.move
        if mv is None:
            return False
        me, other = (0, 1) if mv.side == LEFT else (1, 0)
        here = (pos.left, pos.right)
        if mv.target not in _weak_moves(systems[me], adjs[me], here[me], mv.label):
            return False
        replies = _weak_moves(systems[other], adjs[other], here[other], mv.label)
        by_node: dict = {}
        for r in replies:
            by_node.setdefault(node(other, r), []).append(r)
        keyed = {node(other, r): nxt for r, nxt in mv.responses.items()}
        if set(by_node) != set(keyed):
            return False
        for n, members in by_node.items():
            rep = next(r for r in mv.responses if node(other, r) == n)
            for r in members:
                if rep not in silent(other, r) or r not in silent(other, rep):
                    return False
            nxt = keyed[n]
            expected = (mv.target, rep) if me == 0 else (rep, mv.target)
            if (nxt.left, nxt.right) != expected:
                return False
            stack.append(nxt)
    return True


def audit(result: BisimResult) -> bool:
    if isinstance(result, Equivalent):
        return verify_partition(result)
    return replay_strategy(result)


# -- front ends ----------------------------------------------------------------

def up_to_loss(p: Process, chans: Iterable[str]) -> Process:
    """``?r1 | ... | ?rn | p``."""
    chans = list(chans)
    free = free_channels(p)
    for c in chans:
        if c not in free:
            raise ValueError(f"channel {c!r} is not free in the process")
    if not chans:
        return p
    return par_all([*(Loser(c) for c in chans), p])


def _lts(p: Process, params: AbstractionParams, interface, reduce: bool, state_limit) -> Lts:
    build = build_reduced_lts if reduce else build_lts
    return build(to_net(p), params, interface=interface, state_limit=state_limit)


def check(p: Process, q: Process, params: AbstractionParams = AbstractionParams(), *,
          reduce: bool = True, state_limit: int | None = None) -> BisimResult:
    """Weak bisimilarity of two processes over the union of their free channels.

    ``reduce`` swaps each local subnet for its weak quotient before composing
    (exact up to weak bisimilarity, far fewer states).
    """
    interface = free_channels(p) | free_channels(q)
    return weak_bisim(_lts(p, params, interface, reduce, state_limit),
                      _lts(q, params, interface, reduce, state_limit))


def check_up_to_loss(p: Process, q: Process, chans: Iterable[str],
                     params: AbstractionParams = AbstractionParams(), *,
                     reduce: bool = True, state_limit: int | None = None) -> BisimResult:
    chans = list(chans)
    for c in chans:
        if c not in free_channels(q):
            raise ValueError(f"channel {c!r} is not free in the process")
    return check(up_to_loss(p, chans), up_to_loss(q, chans), params,
                 reduce=reduce, state_limit=state_limit)


def format_counterexample(result: Inequivalent, max_lines: int | None = None) -> str:
    """Indented text: one line per attacker move and per defender reply.

    A position reached a second time is printed once and then referenced.
    """
    systems = {LEFT: result.left, RIGHT: result.right}
    lines: list[str] = []
    seen: dict[int, int] = {}

    def emit(pos: Position, depth: int):
        mv = pos.move
        pad = "  " * depth
        if id(pos) in seen:
            lines.append(f"{pad}(as at position {seen[id(pos)]})")
            return
        seen[id(pos)] = len(seen) + 1
        attacker = systems[mv.side]
        defender_side = RIGHT if mv.side == LEFT else LEFT
        lines.append(f"{pad}attack {mv.side} {mv.label} -> {attacker.describe(mv.target)}")
        if not mv.responses:
            lines.append(f"{pad}  {defender_side} stuck: no weak {mv.label} reply")
        for r, nxt in mv.responses.items():
            lines.append(f"{pad}  reply {defender_side} {mv.label} -> {systems[defender_side].describe(r)}")
            emit(nxt, depth + 2)

    emit(result.strategy, 0)
    if max_lines is not None and len(lines) > max_lines:
        hidden = len(lines) - max_lines
        lines = lines[:max_lines] + [f"... {hidden} more lines"]
    return "\n".join(lines)
