"""Abstract syntax of the communication language.

Core forms are ``Stop``, ``Par``, ``Restrict`` and ``Distribute``; ``Bridge``,
``Loser``, ``Duplicator`` and ``Duploser`` are sugar that :func:`desugar`
expands into distributors.  Channels are plain strings.  Canonical bound
names produced by :func:`normalize` have the form ``#0``, ``#1``, ...
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "Stop", "Par", "Restrict", "Distribute", "Bridge", "Loser", "Duplicator",
    "Duploser", "Process", "Flat", "desugar", "free_channels", "channels",
    "substitute", "par_over", "par_all", "flatten", "from_flat", "normalize",
    "is_core", "count_distributors", "fresh_name", "STOP",
]


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Restrict:
    channel: str
    body: "Process"


@dataclass(frozen=True)
class Distribute:
    source: str
    targets: tuple[str, ...] = ()

    def __post_init__(self):
        # accept lists for convenience, store tuples so values stay hashable
        if not isinstance(self.targets, tuple):
            object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class Bridge:
    source: str
    target: str


@dataclass(frozen=True)
class Loser:
    channel: str


@dataclass(frozen=True)
class Duplicator:
    channel: str


@dataclass(frozen=True)
class Duploser:
    channel: str


Process = Union[Stop, Par, Restrict, Distribute, Bridge, Loser, Duplicator, Duploser]

STOP = Stop()

_CANONICAL = re.compile(r"#\d+")


def desugar(p: Process) -> Process:
    """Expand bridges, losers, duplicators and duplosers into distributors."""
    if isinstance(p, (Stop, Distribute)):
        return p
    if isinstance(p, Par):
        return Par(desugar(p.left), desugar(p.right))
    if isinstance(p, Restrict):
        return Restrict(p.channel, desugar(p.body))
    if isinstance(p, Bridge):
        return Distribute(p.source, (p.target,))
    if isinstance(p, Loser):
        return Distribute(p.channel, ())
    if isinstance(p, Duplicator):
        return Distribute(p.channel, (p.channel, p.channel))
    if isinstance(p, Duploser):
        return Par(Distribute(p.channel, ()), Distribute(p.channel, (p.channel, p.channel)))
    raise TypeError(f"not a process: {p!r}")


def is_core(p: Process) -> bool:
    if isinstance(p, (Stop, Distribute)):
        return True
    if isinstance(p, Par):
        return is_core(p.left) and is_core(p.right)
    if isinstance(p, Restrict):
        return is_core(p.body)
    return False


def _atom_channels(p: Process) -> tuple[str, ...]:
    if isinstance(p, Distribute):
        return (p.source, *p.targets)
    if isinstance(p, Bridge):
        return (p.source, p.target)
    return (p.channel,)


def free_channels(p: Process) -> frozenset[str]:
    if isinstance(p, Stop):
        return frozenset()
    if isinstance(p, Par):
        return free_channels(p.left) | free_channels(p.right)
    if isinstance(p, Restrict):
        return free_channels(p.body) - {p.channel}
    return frozenset(_atom_channels(p))


def channels(p: Process) -> frozenset[str]:
    """All channel names occurring in ``p``, free or bound, binders included."""
    if isinstance(p, Stop):
        return frozenset()
    if isinstance(p, Par):
        return channels(p.left) | channels(p.right)
    if isinstance(p, Restrict):
        return channels(p.body) | {p.channel}
    return frozenset(_atom_channels(p))


def count_distributors(p: Process) -> int:
    p = desugar(p)
    if isinstance(p, Distribute):
        return 1
    if isinstance(p, Par):
        return count_distributors(p.left) + count_distributors(p.right)
    if isinstance(p, Restrict):
        return count_distributors(p.body)
    return 0


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """Prime ``base`` until it avoids every name in ``avoid``."""
    avoid = set(avoid)
    name = base
    while name in avoid:
        name += "'"
    return name


def substitute(p: Process, s: Mapping[str, str]) -> Process:
    """Capture-avoiding renaming of free channels."""
    s = {k: v for k, v in s.items() if k != v}
    if not s:
        return p
    if isinstance(p, Stop):
        return p
    if isinstance(p, Par):
        return Par(substitute(p.left, s), substitute(p.right, s))
    if isinstance(p, Restrict):
        inner = {k: v for k, v in s.items() if k != p.channel}
        if not inner:
            return p
        body_free = free_channels(p.body)
        inner = {k: v for k, v in inner.items() if k in body_free}
        if not inner:
            return p
        if p.channel in inner.values():
            avoid = body_free | set(inner.values()) | set(inner) | channels(p.body)
            new = fresh_name(p.channel, avoid)
            body = substitute(p.body, {p.channel: new})
            return Restrict(new, substitute(body, inner))
        return Restrict(p.channel, substitute(p.body, inner))
    r = lambda c: s.get(c, c)  # noqa: E731
    if isinstance(p, Distribute):
        return Distribute(r(p.source), tuple(r(t) for t in p.targets))
    if isinstance(p, Bridge):
        return Bridge(r(p.source), r(p.target))
    return type(p)(r(p.channel))


def par_all(parts: Iterable[Process]) -> Process:
    """Right-nested parallel composition; the empty composition is ``Stop``."""
    parts = list(parts)
    if not parts:
        return STOP
    result = parts[-1]
    for q in reversed(parts[:-1]):
        result = Par(q, result)
    return result


def par_over(binder: str, chans: Iterable[str], template: Process) -> Process:
    """``template[b1/binder] | ... | template[bn/binder]``."""
    return par_all(substitute(template, {binder: b}) for b in chans)


# -- flat form ---------------------------------------------------------------

@dataclass(frozen=True)
class Flat:
    """A core process as one binder block over a multiset of distributors.

    Every process is congruent to such a block; ``binders`` are distinct and
    disjoint from the free channels.
    """

    binders: tuple[str, ...]
    dists: tuple[tuple[str, tuple[str, ...]], ...]

    def free(self) -> frozenset[str]:
        names = {c for src, ts in self.dists for c in (src, *ts)}
        return frozenset(names - set(self.binders))

    def names(self) -> frozenset[str]:
        return frozenset({c for src, ts in self.dists for c in (src, *ts)} | set(self.binders))


def _walk(p: Process, env: dict, binders: list, dists: list, taken: set) -> None:
    if isinstance(p, Stop):
        return
    if isinstance(p, Par):
        _walk(p.left, env, binders, dists, taken)
        _walk(p.right, env, binders, dists, taken)
        return
    if isinstance(p, Restrict):
        name = fresh_name(p.channel, taken)
        taken.add(name)
        binders.append(name)
        _walk(p.body, {**env, p.channel: name}, binders, dists, taken)
        return
    if isinstance(p, Distribute):
        dists.append((env.get(p.source, p.source), tuple(env.get(t, t) for t in p.targets)))
        return
    _walk(desugar(p), env, binders, dists, taken)


def flatten(p: Process) -> Flat:
    """Pull every binder to the top, keeping surface names where possible.

    Binders that clash with a free channel or an earlier binder are primed.
    Unused binders are dropped.  Distributors keep their traversal order.
    """
    binders: list[str] = []
    dists: list = []
    _walk(p, {}, binders, dists, set(free_channels(p)))
    used = {c for src, ts in dists for c in (src, *ts)}
    return Flat(tuple(b for b in binders if b in used), tuple(dists))


def from_flat(f: Flat) -> Process:
    body = par_all(Distribute(src, ts) for src, ts in f.dists)
    for b in reversed(f.binders):
        body = Restrict(b, body)
    return body


# -- canonical labelling of bound channels -------------------------------------

def _enc(c, free):
    return (0, c) if c in free else (1, c)


def _refine(bound, dists, free, colour):
    """Colour refinement of bound names; colours are name-independent ranks."""
    while True:
        sigs = {}
        for b in bound:
            occ = []
            for src, ts in dists:
                chans = (src, *ts)
                if b not in chans:
                    continue
                shape = tuple(("f", c) if c in free else ("b", colour[c], c == b) for c in chans)
                occ.append(shape)
            sigs[b] = (colour[b], tuple(sorted(occ)))
        ranks = {sig: i for i, sig in enumerate(sorted(set(sigs.values())))}
        new = {b: ranks[sigs[b]] for b in bound}
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def _key(order, dists, free):
    idx = {b: i for i, b in enumerate(order)}

    def enc(c):
        return (0, c, 0) if c in free else (1, "", idx[c])

    return tuple(sorted((enc(s), tuple(enc(t) for t in ts)) for s, ts in dists))


def _canonical_order(bound, dists, free):
    best = None
    stack = [_refine(bound, dists, free, {b: 0 for b in bound})]
    while stack:
        colour = stack.pop()
        classes: dict[int, list] = {}
        for b in bound:
            classes.setdefault(colour[b], []).append(b)
        cell = next((sorted(v) for k, v in sorted(classes.items()) if len(v) > 1), None)
        if cell is None:
            order = sorted(bound, key=colour.__getitem__)
            key = _key(order, dists, free)
            if best is None or key < best[0]:
                best = (key, order)
            continue
        for b in cell:
            # individualise b below the rest of its cell, then refine again
            indiv = {x: 2 * colour[x] + (0 if x == b else 1) for x in bound}
            stack.append(_refine(bound, dists, free, indiv))
    return best[1] if best else []


def normalize(p: Process, canonical_names: bool = True) -> Process:
    """Representative of ``p`` modulo the structural laws.

    The result is a block of binders over a right-nested parallel composition
    of distributors sorted by source and targets; unused binders are dropped.
    With ``canonical_names`` bound channels are renamed ``#0, #1, ...``
    (canonical up to alpha-conversion); otherwise their surface names are kept
    and binders are sorted by name.
    """
    f = flatten(p)
    free = f.free()
    if not canonical_names:
        return from_flat(Flat(tuple(sorted(f.binders)), tuple(sorted(f.dists))))
    order = _canonical_order(list(f.binders), f.dists, free)
    names = (n for n in (f"#{i}" for i in itertools.count()) if n not in free)
    rename = {b: n for b, n in zip(order, names)}
    r = lambda c: rename.get(c, c)  # noqa: E731
    dists = [(r(s), tuple(r(t) for t in ts)) for s, ts in f.dists]
    idx = {n: i for i, n in enumerate(rename[b] for b in order)}

    def key(d):
        enc = lambda c: (1, "", idx[c]) if c in idx else (0, c, 0)  # noqa: E731
        return (enc(d[0]), tuple(enc(t) for t in d[1]))

    dists.sort(key=key)
    return from_flat(Flat(tuple(rename[b] for b in order), tuple(dists)))


def iter_atoms(p: Process) -> Iterator[Process]:
    """Non-``Par``, non-``Restrict`` leaves in left-to-right order."""
    if isinstance(p, Par):
        yield from iter_atoms(p.left)
        yield from iter_atoms(p.right)
    elif isinstance(p, Restrict):
        yield from iter_atoms(p.body)
    elif not isinstance(p, Stop):
        yield p
