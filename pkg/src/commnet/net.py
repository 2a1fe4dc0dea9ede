"""Communication nets: Petri nets whose transitions have exactly one input place."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .process import Distribute, Flat, Process, Restrict, flatten, par_all

__all__ = ["Place", "Transition", "CommNet", "to_net", "to_process", "unreliability_profile"]


@dataclass(frozen=True)
class Place:
    id: str
    local: bool = False


@dataclass(frozen=True)
class Transition:
    input: str
    outputs: tuple[str, ...] = ()

    def output_multiset(self) -> Counter:
        return Counter(self.outputs)


@dataclass(frozen=True)
class CommNet:
    places: tuple[Place, ...] = ()
    transitions: tuple[Transition, ...] = ()

    def __post_init__(self):
        ids = [p.id for p in self.places]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate place ids")
        known = set(ids)
        for t in self.transitions:
            for c in (t.input, *t.outputs):
                if c not in known:
                    raise ValueError(f"transition endpoint {c!r} is not a declared place")

    @property
    def free_places(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.places if not p.local)

    @property
    def local_places(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.places if p.local)

    def place(self, pid: str) -> Place:
        for p in self.places:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def same_as(self, other: "CommNet") -> bool:
        """Equality up to ordering of places, transitions and output lists."""
        tkey = lambda t: (t.input, tuple(sorted(t.outputs)))  # noqa: E731
        return (set(self.places) == set(other.places)
                and Counter(map(tkey, self.transitions)) == Counter(map(tkey, other.transitions)))


def _net_of_flat(f: Flat) -> CommNet:
    binders = set(f.binders)
    free: list[str] = []
    for src, ts in f.dists:
        for c in (src, *ts):
            if c not in binders and c not in free:
                free.append(c)
    places = tuple(Place(b, True) for b in f.binders) + tuple(Place(c) for c in free)
    return CommNet(places, tuple(Transition(src, ts) for src, ts in f.dists))


def to_net(p: Process) -> CommNet:
    """Flatten ``p``: one place per channel, one transition per distributor.

    Local places keep the binder's surface name (primed when it would clash)
    and come first, in binder order.  Duplicate transitions are kept.
    """
    return _net_of_flat(flatten(p))


def to_process(n: CommNet) -> Process:
    body = par_all(Distribute(t.input, t.outputs) for t in n.transitions)
    for pid in reversed(n.local_places):
        body = Restrict(pid, body)
    return body


def unreliability_profile(n: CommNet) -> dict[str, str]:
    """Which unreliability glyph each place would carry in a drawing."""
    profile = {}
    for p in n.places:
        loses = any(t.input == p.id and not t.outputs for t in n.transitions)
        dups = any(t.input == p.id and t.outputs == (p.id, p.id) for t in n.transitions)
        profile[p.id] = {(False, False): "none", (True, False): "loser",
                         (False, True): "duplicator", (True, True): "duploser"}[(loses, dups)]
    return profile
