"""Brute-force ground truth, kept algorithmically independent of the solver.

Plain DFS enumeration of feasible cycles and chains, exact optima by
set-packing over the full enumeration, the copy-indexed arc formulation
with lazy long-subtour elimination, and a demonstration of why dropping
those elimination rows breaks the arc formulation once chains exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .graphs import TAU, Digraph, build_chain_copies, build_digraph, find_fvs
from .instances import Instance
from .lpkernel import EQ, GE, LE, LpModel, solve_mip

ENUMERATION_GUARD = 5000


class OracleGuardError(RuntimeError):
    """Instance too large for exhaustive ground truth."""


def enumerate_cycles(g: Digraph, K: int) -> List[Tuple[int, ...]]:
    """All simple PDP cycles with <= K vertices, as minimal rotations.

    Each cycle is reported once, rooted at its smallest vertex; the DFS
    only walks vertices larger than the root, so no rotation duplicates.
    """
    cycles: List[Tuple[int, ...]] = []
    pdps = sorted(g.pdps)
    for root in pdps:
        path = [root]
        on_path = {root}

        def extend(u: int) -> None:
            for v in g.out[u]:
                if v == root and len(path) >= 2:
                    cycles.append(tuple(path))
                elif (v in g.pdp_set and v > root and v not in on_path
                      and len(path) < K):
                    path.append(v)
                    on_path.add(v)
                    extend(v)
                    path.pop()
                    on_path.remove(v)

        extend(root)
    return cycles


def enumerate_chains(g: Digraph, L: Optional[int]) -> List[Tuple[int, ...]]:
    """All feasible chains (1..L transplants) as (ndd, pdp, ...) tuples."""
    cap = len(g.pdps) if L is None else min(L, len(g.pdps))
    if cap <= 0:
        return []
    chains: List[Tuple[int, ...]] = []
    for ndd in sorted(g.ndds):
        path = [ndd]
        on_path: Set[int] = set()

        def extend(u: int) -> None:
            for v in g.out[u]:
                if v in g.pdp_set and v not in on_path:
                    path.append(v)
                    on_path.add(v)
                    chains.append(tuple(path))
                    if len(path) - 1 < cap:
                        extend(v)
                    path.pop()
                    on_path.remove(v)

        extend(ndd)
    return chains


def cycle_weight(g: Digraph, cyc: Sequence[int]) -> float:
    total = 0.0
    for k in range(len(cyc)):
        total += g.w[(cyc[k], cyc[(k + 1) % len(cyc)])]
    return total


def chain_weight(g: Digraph, ch: Sequence[int]) -> float:
    return sum(g.w[(ch[k], ch[k + 1])] for k in range(len(ch) - 1))


def optimal_by_enumeration(inst: Instance) -> Tuple[float, Dict[str, list]]:
    """Exact maximum-weight vertex-disjoint packing of cycles and chains."""
    g = build_digraph(inst)
    cols: List[Tuple[str, Tuple[int, ...], float]] = []
    for cyc in enumerate_cycles(g, inst.K):
        cols.append(("cycle", cyc, cycle_weight(g, cyc)))
    for ch in enumerate_chains(g, inst.L):
        cols.append(("chain", ch, chain_weight(g, ch)))
    if len(cols) > ENUMERATION_GUARD:
        raise OracleGuardError(f"{len(cols)} columns exceed the guard "
                               f"({ENUMERATION_GUARD})")
    m = LpModel("packing")
    for kind, seq, w in cols:
        m.add_var(obj=w, ub=1.0, integer=True)
    by_vertex: Dict[int, List[int]] = {}
    for j, (kind, seq, w) in enumerate(cols):
        for v in seq:
            by_vertex.setdefault(v, []).append(j)
    for v in sorted(by_vertex):
        m.add_row([(j, 1.0) for j in by_vertex[v]], LE, 1.0)
    sol = solve_mip(m)
    if not sol.is_optimal:
        raise OracleGuardError(f"packing MIP ended with {sol.status}")
    chosen = [cols[j] for j in range(len(cols)) if sol.x[j] > 0.5]
    matching = {
        "cycles": [list(seq) for kind, seq, _ in chosen if kind == "cycle"],
        "chains": [list(seq) for kind, seq, _ in chosen if kind == "chain"],
    }
    # report the recomputed weight of the selection, not the solver's dot
    # product, so integer-weight values are exact
    return sum(w for _, _, w in chosen), matching


# ---------------------------------------------------------------------------
# Copy-indexed arc formulation
# ---------------------------------------------------------------------------

@dataclass
class _ArcModel:
    model: LpModel
    var_of: Dict[Tuple[str, int, int, int], int]  # (kind, copy, u, v) -> var
    chain_copy_arcs: Dict[int, List[Tuple[int, int]]]
    cycle_copy_arcs: Dict[int, List[Tuple[int, int]]]


def _build_arc_model(inst: Instance, g: Digraph, dummy_weight: float) -> _ArcModel:
    """Shared builder: per-copy arc variables plus the static rows.

    The chain length row counts transplants (real arcs only), keeping the
    cap consistent with L as a transplant budget.
    """
    fvs, cycle_copies = find_fvs(g, inst.K)
    chain_cap = inst.chain_cap()
    chain_copies = build_chain_copies(g) if chain_cap >= 1 else []

    m = LpModel("arc-form")
    var_of: Dict[Tuple[str, int, int, int], int] = {}
    cycle_copy_arcs: Dict[int, List[Tuple[int, int]]] = {}
    chain_copy_arcs: Dict[int, List[Tuple[int, int]]] = {}

    for cc in cycle_copies:
        arcs = sorted(cc.arcs)
        cycle_copy_arcs[cc.index] = arcs
        for (u, v) in arcs:
            var_of[("cycle", cc.index, u, v)] = m.add_var(
                obj=g.w[(u, v)], ub=1.0, integer=True,
                name=f"xc{cc.index}_{u}_{v}")
    for ch in chain_copies:
        arcs = sorted(ch.arcs)
        chain_copy_arcs[ch.index] = arcs
        for (u, v) in arcs:
            wt = dummy_weight if v == TAU else g.w[(u, v)]
            var_of[("chain", ch.index, u, v)] = m.add_var(
                obj=wt, ub=1.0, integer=True, name=f"xp{ch.index}_{u}_{v}")

    # one donation per donor, across every copy (dummy arcs spend it too)
    for u in sorted(g.vertices):
        coeffs = [(j, 1.0) for key, j in var_of.items() if key[2] == u]
        if coeffs:
            m.add_row(coeffs, LE, 1.0)

    # per-copy flow balance
    for cc in cycle_copies:
        verts = {x for (a, b) in cycle_copy_arcs[cc.index] for x in (a, b)}
        for u in sorted(verts):
            outs = [(var_of[("cycle", cc.index, a, b)], 1.0)
                    for (a, b) in cycle_copy_arcs[cc.index] if a == u]
            ins = [(var_of[("cycle", cc.index, a, b)], -1.0)
                   for (a, b) in cycle_copy_arcs[cc.index] if b == u]
            m.add_row(outs + ins, EQ, 0.0)
    for ch in chain_copies:
        for u in ch.pdps:
            outs = [(var_of[("chain", ch.index, a, b)], 1.0)
                    for (a, b) in chain_copy_arcs[ch.index] if a == u]
            ins = [(var_of[("chain", ch.index, a, b)], -1.0)
                   for (a, b) in chain_copy_arcs[ch.index] if b == u]
            if outs or ins:
                m.add_row(outs + ins, EQ, 0.0)

    # length caps
    for cc in cycle_copies:
        m.add_row([(var_of[("cycle", cc.index, a, b)], 1.0)
                   for (a, b) in cycle_copy_arcs[cc.index]], LE, float(inst.K))
    for ch in chain_copies:
        real = [(var_of[("chain", ch.index, a, b)], 1.0)
                for (a, b) in chain_copy_arcs[ch.index] if b != TAU]
        if real:
            m.add_row(real, LE, float(chain_cap))

    # a cycle copy opens only if its feedback vertex is used in it
    for cc in cycle_copies:
        anchor_out = [(a, b) for (a, b) in cycle_copy_arcs[cc.index] if a == cc.anchor]
        verts = {x for (a, b) in cycle_copy_arcs[cc.index] for x in (a, b)}
        for u in sorted(verts):
            if u == cc.anchor:
                continue
            coeffs = [(var_of[("cycle", cc.index, a, b)], 1.0)
                      for (a, b) in cycle_copy_arcs[cc.index] if a == u]
            coeffs += [(var_of[("cycle", cc.index, a, b)], -1.0)
                       for (a, b) in anchor_out]
            if coeffs:
                m.add_row(coeffs, LE, 0.0)

    return _ArcModel(m, var_of, chain_copy_arcs, cycle_copy_arcs)


def _support_subtours(arcs: List[Tuple[int, int]]) -> List[List[int]]:
    """Directed simple cycles in an integral support (excluding TAU)."""
    nxt = {u: v for (u, v) in arcs if v != TAU}
    seen: Set[int] = set()
    subtours = []
    for start in sorted(nxt):
        if start in seen:
            continue
        walk = [start]
        pos = {start: 0}
        u = start
        while u in nxt:
            u = nxt[u]
            if u in pos:
                cyc = walk[pos[u]:]
                if all(x not in seen for x in cyc):
                    subtours.append(cyc)
                break
            if u in seen:
                break
            pos[u] = len(walk)
            walk.append(u)
        seen.update(walk)
    return subtours


def _chain_support_parts(ndd: int, arcs: List[Tuple[int, int]]
                         ) -> Tuple[List[int], List[List[int]]]:
    """Split a chain copy's support into the NDD path and leftover subtours."""
    nxt = {u: v for (u, v) in arcs}
    path = [ndd]
    u = ndd
    while u in nxt and nxt[u] != TAU:
        u = nxt[u]
        if u in path:  # defensive: malformed support
            break
        path.append(u)
    path_arcs = set(zip(path, path[1:]))
    rest = [(a, b) for (a, b) in arcs if (a, b) not in path_arcs and b != TAU
            and a not in path]
    return path, _support_subtours(rest)


def ieef_solve(inst: Instance) -> Tuple[float, Dict[str, list]]:
    """Copy-indexed arc formulation with lazy elimination of long subtours.

    Subtours of length <= K found in chain copies are legitimate cycles and
    are returned as such; only subtours longer than K trigger new rows.
    """
    g = build_digraph(inst)
    built = _build_arc_model(inst, g, dummy_weight=0.0)
    m = built.model
    for _round in range(1 + 4 * max(1, len(inst.pdps))):
        sol = solve_mip(m)
        if not sol.is_optimal:
            raise OracleGuardError(f"arc model ended with {sol.status}")
        cuts = 0
        for ci, arcs in built.chain_copy_arcs.items():
            support = [(u, v) for (u, v) in arcs
                       if sol.x[built.var_of[("chain", ci, u, v)]] > 0.5]
            for sub in _support_subtours(support):
                if len(sub) > inst.K:
                    coeffs = [(built.var_of[("chain", ci, sub[k],
                                             sub[(k + 1) % len(sub)])], 1.0)
                              for k in range(len(sub))]
                    m.add_row(coeffs, LE, float(len(sub) - 1))
                    cuts += 1
        if cuts == 0:
            return sol.obj, _extract_matching(inst, built, sol)
    raise OracleGuardError("subtour elimination did not converge")


def _extract_matching(inst: Instance, built: _ArcModel, sol) -> Dict[str, list]:
    cycles: List[List[int]] = []
    chains: List[List[int]] = []
    for ci, arcs in built.cycle_copy_arcs.items():
        support = [(u, v) for (u, v) in arcs
                   if sol.x[built.var_of[("cycle", ci, u, v)]] > 0.5]
        cycles.extend(_support_subtours(support))
    g = build_digraph(inst)
    chain_copies = {c.index: c for c in build_chain_copies(g)}
    for ci, arcs in built.chain_copy_arcs.items():
        support = [(u, v) for (u, v) in arcs
                   if sol.x[built.var_of[("chain", ci, u, v)]] > 0.5]
        if not support:
            continue
        path, subtours = _chain_support_parts(chain_copies[ci].ndd, support)
        if len(path) > 1:
            chains.append(path)
        cycles.extend(subtours)
    return {"cycles": cycles, "chains": chains}


def eef_flaw_demo(inst: Instance, max_rounds: int = 50
                  ) -> Tuple[float, List[Tuple[str, int, int, int]]]:
    """The same arc model with NO subtour-elimination rows.

    Chain-termination (dummy) arcs are scored like transplants here — the
    naive reading under which the arc model's optimum can strictly exceed
    the true optimum by hiding an over-long subtour in a chain copy.  When
    several optima exist, the search walks the optimal face until it finds
    one whose chain-copy support contains a subtour longer than K (or gives
    up after ``max_rounds`` and returns the first optimum).
    """
    g = build_digraph(inst)
    built = _build_arc_model(inst, g, dummy_weight=1.0)
    m = built.model
    sol = solve_mip(m)
    if not sol.is_optimal:
        raise OracleGuardError(f"flaw model ended with {sol.status}")
    best_obj = sol.obj
    first = sol

    def selection(s) -> List[Tuple[str, int, int, int]]:
        return [key for key, j in sorted(built.var_of.items(), key=lambda kv: kv[1])
                if s.x[j] > 0.5]

    def has_long_subtour(s) -> bool:
        for ci, arcs in built.chain_copy_arcs.items():
            support = [(u, v) for (u, v) in arcs
                       if s.x[built.var_of[("chain", ci, u, v)]] > 0.5]
            if any(len(sub) > inst.K for sub in _support_subtours(support)):
                return True
        return False

    pinned = False
    for _ in range(max_rounds):
        if has_long_subtour(sol):
            return best_obj, selection(sol)
        if not pinned:
            m.add_row([(j, m.vars[j].obj) for j in range(m.n_vars)
                       if m.vars[j].obj], GE, best_obj - 1e-7)
            pinned = True
        chosen = [j for j in range(m.n_vars) if sol.x[j] > 0.5]
        m.add_row([(j, 1.0) for j in chosen], LE, float(len(chosen) - 1))
        sol = solve_mip(m)
        if not sol.is_optimal:
            break
    return best_obj, selection(first)
