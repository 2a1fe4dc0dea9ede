"""Weak-bisimulation partition refinement on integer-labelled graphs.

States that can reach each other silently are weakly bisimilar, so silent
strongly connected components are collapsed first.  Refinement then runs on
the silent DAG with signatures over the saturated (weak) transition relation,
computed by one bottom-up pass per round instead of materialising the closure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = ["Refinement", "weak_refine"]


@dataclass
class Refinement:
    comp: list[int]                      # state -> silent SCC node
    tau_succ: list[tuple[int, ...]]      # node -> silent successor nodes (DAG)
    vis: list[tuple[tuple[int, int], ...]]  # node -> (label, node) visible edges
    order: list[int]                     # topological order of the silent DAG
    history: list[list[int]] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.tau_succ)

    @property
    def block(self) -> list[int]:
        return self.history[-1]

    def separation(self, x: int, y: int) -> int | None:
        """First round in which nodes ``x`` and ``y`` fall into different blocks."""
        for k, blk in enumerate(self.history):
            if blk[x] != blk[y]:
                return k
        return None


def _sccs(n: int, tau_edges: list[tuple[int, int]]) -> list[int]:
    if n == 0:
        return []
    if not tau_edges:
        return list(range(n))
    src, dst = zip(*tau_edges)
    graph = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection="strong")
    # renumber by first occurrence so node ids are stable across scipy versions
    remap: dict[int, int] = {}
    return [remap.setdefault(int(c), len(remap)) for c in labels]


def _topological(n: int, succ: list[tuple[int, ...]]) -> list[int]:
    indeg = [0] * n
    for ss in succ:
        for d in ss:
            indeg[d] += 1
    ready = [c for c in range(n) if indeg[c] == 0]
    order = []
    while ready:
        c = ready.pop()
        order.append(c)
        for d in succ[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
    if len(order) != n:
        raise AssertionError("silent graph still cyclic after SCC collapse")
    return order


def weak_refine(n: int, edges, tau: int, initial: list[int] | None = None) -> Refinement:
    """Coarsest weak bisimulation of a graph with ``n`` states.

    ``edges`` is an iterable of ``(src, label, dst)`` integer triples and
    ``tau`` the silent label.  ``initial`` optionally seeds the partition.
    """
    edges = list(edges)
    comp = _sccs(n, [(s, t) for s, l, t in edges if l == tau])
    nodes = max(comp, default=-1) + 1
    tau_sets: list[set] = [set() for _ in range(nodes)]
    vis_sets: list[set] = [set() for _ in range(nodes)]
    for s, l, t in edges:
        cs, ct = comp[s], comp[t]
        if l == tau:
            if cs != ct:
                tau_sets[cs].add(ct)
        else:
            vis_sets[cs].add((l, ct))
    tau_succ = [tuple(sorted(x)) for x in tau_sets]
    vis = [tuple(sorted(x)) for x in vis_sets]
    order = _topological(nodes, tau_succ)
    ref = Refinement(comp, tau_succ, vis, order)

    if initial is None:
        blk = [0] * nodes
    else:
        seed: dict = {}
        blk = [0] * nodes
        for s in range(n):
            blk[comp[s]] = seed.setdefault(initial[s], len(seed))
    ref.history.append(blk)
    count = len(set(blk))
    bottom_up = order[::-1]
    while True:
        reach: list = [None] * nodes
        for c in bottom_up:
            acc = {blk[c]}
            for d in tau_succ[c]:
                acc |= reach[d]
            reach[c] = frozenset(acc)
        weak: list = [None] * nodes
        for c in bottom_up:
            acc = set()
            for l, d in vis[c]:
                acc.update((l, b) for b in reach[d])
            for d in tau_succ[c]:
                acc |= weak[d]
            weak[c] = frozenset(acc)
        ids: dict = {}
        new = [ids.setdefault((blk[c], reach[c], weak[c]), len(ids)) for c in range(nodes)]
        ref.history.append(new)
        if len(ids) == count:
            break
        count = len(ids)
        blk = new
    return ref
