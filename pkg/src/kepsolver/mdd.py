"""Layered decision diagrams over exchange-graph copies.

A cycle diagram encodes (root -> terminal paths) the feasible cycles of one
copy, anchored at its feedback vertex; a chain diagram encodes, as path
prefixes, feasible chains out of one non-directed donor.  Diagrams are built
once and kept immutable; dual prices, branching bans, and forced-arc charges
enter only at evaluation time, so one build serves the whole search tree.

Chain diagrams are deliberately restricted (capped successor exploration,
optionally truncated length): they may miss chains but never encode an
infeasible or duplicated sequence.  Cycle diagrams are exact up to their
length cap.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import (Dict, FrozenSet, Iterator, List, Mapping, Optional,
                    Sequence, Set, Tuple)

from .graphs import TAU, ChainCopy, CycleCopy, Digraph

# a reduced cost must clear this to count as improving
EPS = 1e-6

Arc = Tuple[int, int]


@dataclass(frozen=True)
class MddBuildConfig:
    """Size/accuracy trade-offs for diagram construction.

    ``restrict_cycles=None`` resolves automatically (restrict when K >= 4 and
    the pool has more than 500 pairs); ``chain_successor_fraction=None``
    resolves to 0.20, or 0.10 past 250 non-directed donors.
    """
    restrict_cycles: Optional[bool] = None
    restricted_cycle_len: int = 3
    full_K_fraction: float = 0.10
    chain_successor_fraction: Optional[float] = None
    restricted_chain_len: int = 3

    def __post_init__(self) -> None:
        if not (0.0 < self.full_K_fraction <= 1.0):
            raise ValueError("full_K_fraction must be in (0, 1]")
        if self.chain_successor_fraction is not None and not (
                0.0 < self.chain_successor_fraction <= 1.0):
            raise ValueError("chain_successor_fraction must be in (0, 1]")
        if self.restricted_cycle_len < 2 or self.restricted_chain_len < 2:
            raise ValueError("restricted lengths must be >= 2")

    def cycles_restricted(self, K: int, n_pdps: int) -> bool:
        if self.restrict_cycles is not None:
            return self.restrict_cycles
        return K >= 4 and n_pdps > 500

    def chain_fraction(self, n_ndds: int) -> float:
        if self.chain_successor_fraction is not None:
            return self.chain_successor_fraction
        return 0.10 if n_ndds > 250 else 0.20

    def chains_truncated(self, n_pdps: int) -> bool:
        return n_pdps > 500


def _frac_ceil(fraction: float, n: int) -> int:
    """ceil(fraction * n) robust to binary-float fuzz (0.2*10 -> 2, not 3)."""
    return int(math.ceil(fraction * n - 1e-9)) if n > 0 else 0


def plan_cycle_lengths(n_copies: int, K: int, n_pdps: int,
                       cfg: MddBuildConfig) -> List[int]:
    """Per-copy length caps; the top-ranked copies keep the true K."""
    if n_copies == 0:
        return []
    if not cfg.cycles_restricted(K, n_pdps):
        return [K] * n_copies
    keep_full = _frac_ceil(cfg.full_K_fraction, n_copies)
    short = min(K, cfg.restricted_cycle_len)
    return [K if i < keep_full else short for i in range(n_copies)]


@dataclass(frozen=True)
class Column:
    """One cycle or chain, as generated by pricing or enumeration."""
    kind: str                       # "cycle" | "chain"
    copy_index: int
    sequence: Tuple[int, ...]       # cycle: starts at the copy's anchor
    arcs: Tuple[Arc, ...]           # cycle: includes the closing arc
    weight: float
    reduced_cost: float

    def key(self) -> Tuple[str, Tuple[int, ...]]:
        return (self.kind, self.sequence)

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self.sequence


@dataclass
class MddArc:
    tail: int
    head: int
    label: int


@dataclass
class MddNode:
    layer: int
    out: List[int] = field(default_factory=list)
    inn: List[int] = field(default_factory=list)


@dataclass
class Mdd:
    kind: str                       # "cycle" | "chain"
    copy_index: int
    anchor: int                     # feedback vertex / non-directed donor
    max_len: int                    # length cap the diagram was built with
    nodes: List[MddNode]
    arcs: List[MddArc]
    root: int
    terminal: int                   # cycle: t node; chain: last-layer collector
    close: int                      # cycle close-up collector, -1 for chains
    w: Dict[Arc, float]             # graph arc weights within the copy
    is_exact: bool
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def layers(self) -> List[List[int]]:
        depth = max((n.layer for n in self.nodes), default=0)
        out: List[List[int]] = [[] for _ in range(depth)]
        for i, n in enumerate(self.nodes):
            out[n.layer - 1].append(i)
        return out


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

class _TmpNode:
    __slots__ = ("layer", "out")

    def __init__(self, layer: int) -> None:
        self.layer = layer
        self.out: List[Tuple[int, int]] = []   # (label, head)


def _materialize(tmp: List[_TmpNode], root: int, terminal: int, close: int,
                 kind: str, copy_index: int, anchor: int, max_len: int,
                 w: Dict[Arc, float], is_exact: bool) -> Mdd:
    """Compact reachable temp nodes into dense arrays, root first."""
    order: List[int] = []
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        order.append(u)
        for _, h in sorted(tmp[u].out):
            if h not in seen:
                seen.add(h)
                queue.append(h)
    # keep terminal/close even when unreachable, for stable structure
    for extra in (close, terminal):
        if extra >= 0 and extra not in seen:
            seen.add(extra)
            order.append(extra)
    order.sort(key=lambda u: (tmp[u].layer, u))
    remap = {old: new for new, old in enumerate(order)}
    nodes = [MddNode(layer=tmp[old].layer) for old in order]
    arcs: List[MddArc] = []
    raw = []
    for old in order:
        for label, head in tmp[old].out:
            if head in remap:
                raw.append((remap[old], label, remap[head]))
    raw.sort()
    assert len(set(raw)) == len(raw), "duplicate parallel arc"
    for tail, label, head in raw:
        aid = len(arcs)
        arcs.append(MddArc(tail, head, label))
        nodes[tail].out.append(aid)
        nodes[head].inn.append(aid)
    m = Mdd(kind=kind, copy_index=copy_index, anchor=anchor, max_len=max_len,
            nodes=nodes, arcs=arcs, root=remap[root],
            terminal=remap.get(terminal, -1), close=remap.get(close, -1),
            w=w, is_exact=is_exact)
    reduce_diagram(m)
    return m


def reduce_diagram(m: Mdd) -> int:
    """Merge same-layer nodes with identical labelled successor sets.

    Returns the number of nodes removed; applying it to an already reduced
    diagram is a no-op.
    """
    canon = list(range(len(m.nodes)))
    by_layer: Dict[int, List[int]] = {}
    for i, n in enumerate(m.nodes):
        by_layer.setdefault(n.layer, []).append(i)
    merged = 0
    for layer in sorted(by_layer, reverse=True):
        groups: Dict[Tuple, int] = {}
        for i in by_layer[layer]:
            sig = tuple(sorted((m.arcs[a].label, canon[m.arcs[a].head])
                               for a in m.nodes[i].out))
            if sig in groups and i != m.root:
                canon[i] = groups[sig]
                merged += 1
            else:
                groups[sig] = i
    if merged == 0:
        return 0
    keep = sorted(i for i in range(len(m.nodes)) if canon[i] == i)
    remap = {old: new for new, old in enumerate(keep)}
    nodes = [MddNode(layer=m.nodes[old].layer) for old in keep]
    raw = sorted({(remap[canon[a.tail]], a.label, remap[canon[a.head]])
                  for a in m.arcs})
    arcs: List[MddArc] = []
    for tail, label, head in raw:
        aid = len(arcs)
        arcs.append(MddArc(tail, head, label))
        nodes[tail].out.append(aid)
        nodes[head].inn.append(aid)
    m.nodes = nodes
    m.arcs = arcs
    m.root = remap[canon[m.root]]
    m.terminal = remap[canon[m.terminal]] if m.terminal >= 0 else -1
    m.close = remap[canon[m.close]] if m.close >= 0 else -1
    return merged


def build_cycle_mdd(g: Digraph, copy: CycleCopy, K_eff: int,
                    K_full: Optional[int] = None) -> Mdd:
    """Exact diagram of the copy's cycles with at most K_eff vertices.

    Forward pass on (visited set, current vertex) states; a placement whose
    vertex can reach the anchor also emits a close-up arc, so cycles of every
    length share the single terminal arc labelled with the anchor.
    """
    if K_eff < 2:
        raise ValueError("cycle length cap must be >= 2")
    anchor = copy.anchor
    allowed = copy.arcs
    out_adj: Dict[int, List[int]] = {}
    for (u, v) in allowed:
        out_adj.setdefault(u, []).append(v)
    for u in out_adj:
        out_adj[u].sort()

    tmp: List[_TmpNode] = []

    def new_node(layer: int) -> int:
        tmp.append(_TmpNode(layer))
        return len(tmp) - 1

    root = new_node(1)
    first = new_node(2)
    tmp[root].out.append((anchor, first))
    close = new_node(K_eff + 1)
    term = new_node(K_eff + 2)
    frontier: Dict[Tuple[FrozenSet[int], int], int] = {
        (frozenset((anchor,)), anchor): first}
    closing = False
    for k in range(2, K_eff + 1):
        nxt: Dict[Tuple[FrozenSet[int], int], int] = {}
        for (S, cur), nid in sorted(frontier.items(),
                                    key=lambda kv: (sorted(kv[0][0]), kv[0][1])):
            for v in out_adj.get(cur, ()):
                if v == anchor or v in S:
                    continue
                if k < K_eff:
                    key = (S | {v}, v)
                    head = nxt.get(key)
                    if head is None:
                        head = new_node(k + 1)
                        nxt[key] = head
                    tmp[nid].out.append((v, head))
                if (v, anchor) in allowed:
                    tmp[nid].out.append((v, close))
                    closing = True
        frontier = nxt
    if closing:
        tmp[close].out.append((anchor, term))

    # dead-end pruning, deepest nodes first (creation order is layer order
    # except close/term, which were created early — handle them explicitly)
    alive = [False] * len(tmp)
    alive[term] = True
    alive[close] = closing
    for i in range(len(tmp) - 1, -1, -1):
        if i in (term, close):
            continue
        tmp[i].out = [(lab, h) for (lab, h) in tmp[i].out if alive[h]]
        alive[i] = bool(tmp[i].out)
    w = {(u, v): g.w[(u, v)] for (u, v) in allowed}
    is_exact = K_full is None or K_eff >= K_full
    return _materialize(tmp, root, term if closing else -1,
                        close if closing else -1, "cycle", copy.index,
                        anchor, K_eff, w, is_exact)


def build_chain_mdd(g: Digraph, copy: ChainCopy, L_eff: int,
                    cfg: MddBuildConfig,
                    cap_full: Optional[int] = None) -> Mdd:
    """Restricted diagram of chains out of one donor, up to L_eff transplants.

    One node per (layer, current vertex); successor candidates exclude every
    vertex visited on ANY path into the node (union state), which can only
    drop continuations, never create invalid ones.  Exploration is capped at
    ceil(fraction * candidates), preferring heavier arcs then smaller ids.
    Exactness is tracked conservatively via the intersection state.
    """
    if L_eff < 1:
        raise ValueError("chain length cap must be >= 1")
    ndd = copy.ndd
    real = {(u, v) for (u, v) in copy.arcs if v != TAU}
    out_adj: Dict[int, List[int]] = {}
    for (u, v) in real:
        out_adj.setdefault(u, []).append(v)
    for u in out_adj:
        out_adj[u].sort()
    fraction = cfg.chain_fraction(len(g.ndds))

    tmp: List[_TmpNode] = []

    def new_node(layer: int) -> int:
        tmp.append(_TmpNode(layer))
        return len(tmp) - 1

    root = new_node(1)
    first = new_node(2)
    tmp[root].out.append((ndd, first))
    term = new_node(L_eff + 2)
    union: Dict[int, Set[int]] = {first: {ndd}}
    inter: Dict[int, Set[int]] = {first: {ndd}}
    frontier: Dict[int, int] = {ndd: first}
    lost = False
    for k in range(2, L_eff + 2):
        nxt: Dict[int, int] = {}
        for cur in sorted(frontier):
            nid = frontier[cur]
            cand = [v for v in out_adj.get(cur, ()) if v not in union[nid]]
            cap = _frac_ceil(fraction, len(cand))
            chosen = sorted(cand, key=lambda v: (-g.w[(cur, v)], v))[:cap]
            reachable = set(out_adj.get(cur, ())) - inter[nid]
            if not reachable <= set(chosen):
                lost = True
            for v in chosen:
                if k + 1 == L_eff + 2:
                    tmp[nid].out.append((v, term))
                    continue
                head = nxt.get(v)
                if head is None:
                    head = new_node(k + 1)
                    nxt[v] = head
                    union[head] = union[nid] | {v}
                    inter[head] = inter[nid] | {v}
                else:
                    union[head] |= union[nid] | {v}
                    inter[head] &= inter[nid] | {v}
                tmp[nid].out.append((v, head))
        frontier = nxt
    w = {(u, v): g.w[(u, v)] for (u, v) in real}
    is_exact = (not lost) and (cap_full is None or L_eff >= cap_full)
    return _materialize(tmp, root, term, -1, "chain", copy.index, ndd,
                        L_eff, w, is_exact)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_NEG = float("-inf")


def _arc_values(m: Mdd, lam: Mapping[int, float], banned: Set[Arc],
                mu: Mapping[Arc, float]
                ) -> Tuple[List[float], List[int]]:
    """Longest-path recursion over arcs under reduced-cost contributions.

    Traversing from a predecessor arc labelled u into an arc labelled v
    contributes w_uv - lambda_u - mu_uv; banned graph arcs contribute -M
    with M exceeding the total absolute weight, so no surviving optimum
    can use one.
    """
    big_m = 1.0 + sum(abs(x) for x in m.w.values())
    eta = [_NEG] * len(m.arcs)
    pred = [-1] * len(m.arcs)
    order = sorted(range(len(m.nodes)), key=lambda i: (m.nodes[i].layer, i))
    for nid in order:
        node = m.nodes[nid]
        for aid in node.out:
            v = m.arcs[aid].label
            if nid == m.root:
                eta[aid] = 0.0
                continue
            best, barg = _NEG, -1
            for pid in node.inn:
                if eta[pid] == _NEG:
                    continue
                u = m.arcs[pid].label
                if (u, v) in banned:
                    contrib = -big_m
                else:
                    contrib = m.w[(u, v)] - lam.get(u, 0.0) - mu.get((u, v), 0.0)
                cand = eta[pid] + contrib
                if cand > best:
                    best, barg = cand, pid
            eta[aid], pred[aid] = best, barg
    return eta, pred


def _backtrack(m: Mdd, pred: List[int], arc_id: int) -> Tuple[int, ...]:
    labels: List[int] = []
    a = arc_id
    while a >= 0:
        labels.append(m.arcs[a].label)
        a = pred[a]
    return tuple(reversed(labels))


def best_cycle(m: Mdd, lam: Mapping[int, float],
               banned: Optional[Set[Arc]] = None,
               mu: Optional[Mapping[Arc, float]] = None) -> Optional[Column]:
    """Maximum reduced-cost cycle in the diagram, if any clears EPS."""
    assert m.kind == "cycle"
    banned = banned or set()
    mu = mu or {}
    if m.terminal < 0 or not m.nodes[m.terminal].inn:
        return None
    eta, pred = _arc_values(m, lam, banned, mu)
    term_arc = m.nodes[m.terminal].inn[0]
    value = eta[term_arc]
    if value <= EPS:
        return None
    seq = _backtrack(m, pred, pred[term_arc])
    arcs = tuple(zip(seq, seq[1:])) + ((seq[-1], seq[0]),)
    weight = sum(m.w[a] for a in arcs)
    return Column(kind="cycle", copy_index=m.copy_index, sequence=seq,
                  arcs=arcs, weight=weight, reduced_cost=value)


def best_chains(m: Mdd, lam: Mapping[int, float],
                banned: Optional[Set[Arc]] = None,
                mu: Optional[Mapping[Arc, float]] = None,
                max_count: int = 15) -> List[Column]:
    """Up to max_count distinct chains with reduced cost above EPS.

    A chain may stop at any arc from layer two onward; its value is the
    prefix recursion minus the last vertex's dual price.
    """
    assert m.kind == "chain"
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    banned = banned or set()
    mu = mu or {}
    eta, pred = _arc_values(m, lam, banned, mu)
    scored: List[Tuple[float, int]] = []
    for aid, a in enumerate(m.arcs):
        if a.tail == m.root or eta[aid] == _NEG:
            continue
        value = eta[aid] - lam.get(a.label, 0.0)
        if value > EPS:
            scored.append((value, aid))
    scored.sort(key=lambda t: (-t[0], t[1]))
    out: List[Column] = []
    seen: Set[Tuple[int, ...]] = set()
    for value, aid in scored:
        seq = _backtrack(m, pred, aid)
        if seq in seen:
            continue
        seen.add(seq)
        arcs = tuple(zip(seq, seq[1:]))
        weight = sum(m.w[a] for a in arcs)
        out.append(Column(kind="chain", copy_index=m.copy_index, sequence=seq,
                          arcs=arcs, weight=weight, reduced_cost=value))
        if len(out) >= max_count:
            break
    return out


def enumerate_paths(m: Mdd) -> List[Tuple[int, ...]]:
    """Every encoded cycle, or every encoded chain prefix, exactly once."""
    out: List[Tuple[int, ...]] = []
    if m.kind == "cycle":
        if m.terminal < 0:
            return []

        def walk_cycle(nid: int, acc: List[int]) -> None:
            for aid in m.nodes[nid].out:
                a = m.arcs[aid]
                if a.head == m.terminal:
                    out.append(tuple(acc))
                else:
                    acc.append(a.label)
                    walk_cycle(a.head, acc)
                    acc.pop()

        walk_cycle(m.root, [])
        return out

    def walk_chain(nid: int, acc: List[int]) -> None:
        for aid in m.nodes[nid].out:
            a = m.arcs[aid]
            acc.append(a.label)
            if len(acc) >= 2:
                out.append(tuple(acc))
            walk_chain(a.head, acc)
            acc.pop()

    walk_chain(m.root, [])
    return out


def count_paths(m: Mdd) -> int:
    """Number of encoded cycles / chain prefixes, by dynamic programming."""
    order = sorted(range(len(m.nodes)), key=lambda i: (m.nodes[i].layer, i))
    paths_to = [0] * len(m.nodes)
    paths_to[m.root] = 1
    for nid in order:
        for aid in m.nodes[nid].out:
            paths_to[m.arcs[aid].head] += paths_to[nid]
    if m.kind == "cycle":
        return paths_to[m.terminal] if m.terminal >= 0 else 0
    return sum(paths_to[a.tail] for a in m.arcs if a.tail != m.root)


def diagram_stats(m: Mdd) -> Dict[str, object]:
    widths = [len(layer) for layer in m.layers]
    return {
        "kind": m.kind,
        "copy": m.copy_index,
        "anchor": m.anchor,
        "max_len": m.max_len,
        "nodes": len(m.nodes),
        "arcs": len(m.arcs),
        "paths": count_paths(m),
        "exact": m.is_exact,
        "layer_widths": widths,
    }


def stats_table(mdds: Sequence[Mdd]) -> str:
    header = f"{'kind':<6} {'copy':>4} {'anchor':>6} {'len':>4} " \
             f"{'nodes':>6} {'arcs':>6} {'paths':>8} {'exact':>5}  widths"
    lines = [header, "-" * len(header)]
    for m in mdds:
        s = diagram_stats(m)
        lines.append(f"{s['kind']:<6} {s['copy']:>4} {s['anchor']:>6} "
                     f"{s['max_len']:>4} {s['nodes']:>6} {s['arcs']:>6} "
                     f"{s['paths']:>8} {str(s['exact']):>5}  "
                     f"{'/'.join(map(str, s['layer_widths']))}")
    return "\n".join(lines)
