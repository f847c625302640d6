"""Digraph representation, feedback-vertex-set heuristic, and graph copies.

Cycle copies: for an ordered feedback vertex set (v*_1, ..., v*_m) of the
PDP subgraph, the i-th copy contains exactly the arcs that lie on at least
one simple cycle of length <= K through v*_i among the PDPs still present
when v*_i was selected.  Every feasible cycle of the instance then appears
in exactly one copy (the copy of its first-removed vertex).

Chain copies: one per NDD; all PDP arcs, the NDD's own out-arcs, and a
zero-weight dummy arc from every PDP to the sink ``TAU``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

from .instances import Instance

#: Dummy chain sink ("tau"): receives one zero-weight arc from every PDP.
TAU = -1

ORDERINGS = ("max-in", "max-out", "total", "index")


class Digraph:
    """Adjacency-list digraph with vertex roles and arc weights."""

    def __init__(self, pdps, ndds, arcs):
        self.pdps: Tuple[int, ...] = tuple(pdps)
        self.ndds: Tuple[int, ...] = tuple(ndds)
        self.pdp_set = frozenset(self.pdps)
        self.ndd_set = frozenset(self.ndds)
        self.out: Dict[int, List[int]] = {v: [] for v in self.pdps + self.ndds}
        self.inn: Dict[int, List[int]] = {v: [] for v in self.pdps + self.ndds}
        self.w: Dict[Tuple[int, int], float] = {}
        for (u, v, wt) in arcs:
            self.out[u].append(v)
            self.inn[v].append(u)
            self.w[(u, v)] = float(wt)
        for v in self.out:
            self.out[v].sort()
            self.inn[v].sort()

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self.pdps + self.ndds

    @property
    def n_arcs(self) -> int:
        return len(self.w)

    def has_arc(self, u: int, v: int) -> bool:
        return (u, v) in self.w

    def is_pdp(self, v: int) -> bool:
        return v in self.pdp_set


def build_digraph(inst: Instance) -> Digraph:
    return Digraph(inst.pdps, inst.ndds, inst.arcs)


@dataclass(frozen=True)
class FeedbackVertexSet:
    """Ordered feedback vertices; removal makes the PDP subgraph acyclic."""
    vertices: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


@dataclass(frozen=True)
class CycleCopy:
    """One per feedback vertex: all its cycles pass through ``anchor``."""
    index: int
    anchor: int
    vertices: FrozenSet[int]
    arcs: FrozenSet[Tuple[int, int]]

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


@dataclass(frozen=True)
class ChainCopy:
    """One per NDD: chains start at ``ndd``, dummy arcs end at TAU."""
    index: int
    ndd: int
    pdps: Tuple[int, ...]
    arcs: FrozenSet[Tuple[int, int]]  # includes (pdp, TAU) dummies

    @property
    def vertices(self) -> FrozenSet[int]:
        return frozenset(self.pdps) | {self.ndd, TAU}


# ---------------------------------------------------------------------------
# FVS heuristic + copy construction
# ---------------------------------------------------------------------------

def _pdp_subgraph_acyclic(g: Digraph, active: set) -> bool:
    indeg = {v: 0 for v in active}
    for v in active:
        for u in g.out[v]:
            if u in active:
                indeg[u] += 1
    queue = deque(v for v in active if indeg[v] == 0)
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for u in g.out[v]:
            if u in active:
                indeg[u] -= 1
                if indeg[u] == 0:
                    queue.append(u)
    return seen == len(active)


def _residual_score(g: Digraph, v: int, active: set, ordering: str) -> int:
    din = sum(1 for u in g.inn[v] if u in active)
    dout = sum(1 for u in g.out[v] if u in active)
    if ordering == "max-in":
        return din
    if ordering == "max-out":
        return dout
    if ordering == "total":
        return din + dout
    raise ValueError(f"unknown ordering {ordering!r}")


def _bfs_ball(g: Digraph, anchor: int, active: set, K: int) -> set:
    """Vertices u with hop-dist(anchor,u) + hop-dist(u,anchor) <= K."""
    def bfs(start, forward):
        dist = {start: 0}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            nbrs = g.out[x] if forward else g.inn[x]
            for y in nbrs:
                if y in active and y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    d_from = bfs(anchor, True)
    d_to = bfs(anchor, False)
    ball = {anchor}
    for u in active:
        if u in d_from and u in d_to and d_from[u] + d_to[u] <= K:
            ball.add(u)
    return ball


def _arcs_on_short_cycles(g: Digraph, anchor: int, allowed: set, K: int) -> set:
    """Arcs lying on >= 1 simple cycle of length <= K through ``anchor``.

    Depth-first search from the anchor over ``allowed``, pruned by the
    remaining-hops bound dist(u, anchor).
    """
    dist_back: Dict[int, int] = {anchor: 0}
    queue = deque([anchor])
    while queue:
        x = queue.popleft()
        for y in g.inn[x]:
            if y in allowed and y not in dist_back:
                dist_back[y] = dist_back[x] + 1
                queue.append(y)

    kept: set = set()
    path = [anchor]
    on_path = {anchor}

    def extend(u: int) -> None:
        depth = len(path)  # vertices placed so far
        for v in g.out[u]:
            if v == anchor and depth >= 2:
                for k in range(len(path) - 1):
                    kept.add((path[k], path[k + 1]))
                kept.add((u, anchor))
            elif (v in allowed and v not in on_path and depth < K
                  and v in dist_back and depth + dist_back[v] <= K):
                path.append(v)
                on_path.add(v)
                extend(v)
                path.pop()
                on_path.remove(v)

    extend(anchor)
    return kept


def find_fvs(g: Digraph, K: int, ordering: str = "max-in"
             ) -> Tuple[FeedbackVertexSet, List[CycleCopy]]:
    """Greedy FVS over the PDP subgraph plus reduced cycle copies.

    Scores are recomputed on the residual subgraph after each removal;
    ties go to the smallest vertex id.  ``ordering="index"`` takes PDPs in
    increasing id order.  Copies that contain no feasible cycle are dropped.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")
    active = set(g.pdps)
    order: List[int] = []
    copies: List[CycleCopy] = []
    while active and not _pdp_subgraph_acyclic(g, active):
        if ordering == "index":
            pick = min(active)
        else:
            pick = max(active, key=lambda v: (_residual_score(g, v, active, ordering), -v))
        order.append(pick)
        ball = _bfs_ball(g, pick, active, K)
        arcs = _arcs_on_short_cycles(g, pick, ball, K)
        if arcs:
            verts = {u for (u, _) in arcs} | {v for (_, v) in arcs}
            copies.append(CycleCopy(index=len(copies), anchor=pick,
                                    vertices=frozenset(verts),
                                    arcs=frozenset(arcs)))
        active.remove(pick)
    return FeedbackVertexSet(tuple(order)), copies


def verify_fvs(g: Digraph, fvs: FeedbackVertexSet) -> bool:
    """True iff the PDP subgraph minus the fvs is acyclic."""
    residual = set(g.pdps) - set(fvs.vertices)
    return _pdp_subgraph_acyclic(g, residual)


def build_chain_copies(g: Digraph) -> List[ChainCopy]:
    """One copy per NDD (in id order); arcs of other NDDs are excluded."""
    pdp_arcs = [(u, v) for (u, v) in g.w if u in g.pdp_set and v in g.pdp_set]
    copies = []
    for idx, ndd in enumerate(sorted(g.ndds)):
        arcs = set(pdp_arcs)
        arcs.update((ndd, v) for v in g.out[ndd])
        arcs.update((p, TAU) for p in g.pdps)
        copies.append(ChainCopy(index=idx, ndd=ndd, pdps=tuple(g.pdps),
                                arcs=frozenset(arcs)))
    return copies


def copy_arc_weight(g: Digraph, u: int, v: int) -> float:
    """Arc weight within a copy; dummy arcs into TAU score zero."""
    if v == TAU:
        return 0.0
    return g.w[(u, v)]
