"""Random small processes for property tests."""

import random

from hypothesis import strategies as st

from commnet.process import (
    Bridge, Distribute, Duplicator, Duploser, Loser, Par, Restrict, Stop,
)

NAMES = ("a", "b", "c", "x")


def random_atom(rng: random.Random, names=NAMES):
    kind = rng.randrange(7)
    pick = lambda: rng.choice(names)  # noqa: E731
    if kind == 0:
        return Stop()
    if kind == 1:
        return Bridge(pick(), pick())
    if kind == 2:
        return Distribute(pick(), tuple(pick() for _ in range(rng.randrange(4))))
    if kind == 3:
        return Loser(pick())
    if kind == 4:
        return Duplicator(pick())
    if kind == 5:
        return Duploser(pick())
    return Distribute(pick(), (pick(),))


def random_process(rng: random.Random, leaves: int = 4, names=NAMES):
    """A random term with about ``leaves`` atoms and occasional binders."""
    if leaves <= 1:
        p = random_atom(rng, names)
    else:
        k = rng.randrange(1, leaves)
        p = Par(random_process(rng, k, names), random_process(rng, leaves - k, names))
    if rng.random() < 0.25:
        p = Restrict(rng.choice(names), p)
    return p


def corpus(n: int, seed: int = 20240601, leaves: int = 4):
    rng = random.Random(seed)
    return [random_process(rng, rng.randrange(1, leaves + 1)) for _ in range(n)]


names = st.sampled_from(NAMES)
atoms = st.one_of(
    st.just(Stop()),
    st.builds(Bridge, names, names),
    st.builds(Distribute, names, st.lists(names, max_size=3).map(tuple)),
    st.builds(Loser, names),
    st.builds(Duplicator, names),
    st.builds(Duploser, names),
)
processes = st.recursive(
    atoms,
    lambda kids: st.one_of(st.builds(Par, kids, kids), st.builds(Restrict, names, kids)),
    max_leaves=5,
)
