"""Three-phase pricing for the column-generation master.

Phase 1 evaluates the stored decision diagrams (cheap, possibly restricted).
Phase 2 prices chains exactly through a longest-path relaxation on the graph
with dummy endpoints, adding lazy long-subtour rows and escalating to a MIP;
its zero objective certifies that no improving chain exists.  Phase 3 prices
cycles exactly by depth-first search over the graph copies, falling back to
an arc-budget flow MIP when the search times out.  Restricted diagrams are
never accepted as a certificate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .graphs import ChainCopy, CycleCopy, Digraph
from .lpkernel import EQ, LE, LpModel, solve_lp, solve_mip
from .master import DualPrices
from .mdd import EPS, Column, Mdd, best_chains, best_cycle

Arc = Tuple[int, int]

MAX_CHAIN_COLUMNS = 15
_SRC = -2            # dummy source feeding the donors in the path relaxation
_SNK = -3            # dummy sink collecting every pair

# generous safety caps on lazy-row loops; each round must add a violated row
_MAX_CUT_ROUNDS = 400


@dataclass
class PricingContext:
    """Per-solve immutable pricing state shared across the search tree."""
    g: Digraph
    K: int
    chain_cap: int
    cycle_copies: List[CycleCopy]
    chain_copies: List[ChainCopy]
    cycle_mdds: List[Mdd]
    chain_mdds: List[Mdd]
    t_e: float = 20.0

    @property
    def cycles_exact(self) -> bool:
        return all(m.is_exact for m in self.cycle_mdds)

    @property
    def chains_exact(self) -> bool:
        return all(m.is_exact for m in self.chain_mdds)


@dataclass
class PricingResult:
    columns: List[Column]
    proven_optimal: bool
    stats: Dict[str, Dict[str, float]] = field(default_factory=dict)


def column_reduced_cost(col: Column, duals: DualPrices) -> float:
    """Independent recomputation: weight minus vertex prices minus forced
    arc prices, straight from the column's own arcs."""
    rc = col.weight
    for v in col.sequence:
        rc -= duals.lam_of(v)
    for a in col.arcs:
        rc -= duals.mu.get(a, 0.0)
    return rc


def _copy_of_cycle(seq: Sequence[int], cycle_copies: List[CycleCopy]) -> int:
    """First copy whose feedback vertex lies on the cycle (the partition
    rule: a cycle belongs to the earliest copy that can hold it)."""
    verts = set(seq)
    for copy in cycle_copies:
        if copy.anchor in verts:
            return copy.index
    raise AssertionError(f"cycle {seq} misses every feedback vertex")


def _rooted_at(seq: Sequence[int], root: int) -> Tuple[int, ...]:
    i = list(seq).index(root)
    return tuple(seq[i:]) + tuple(seq[:i])


def _reduced_cost_of(seq: Sequence[int], arcs: Sequence[Arc], weight: float,
                     duals: DualPrices) -> float:
    rc = weight - sum(duals.lam_of(v) for v in seq)
    rc -= sum(duals.mu.get(a, 0.0) for a in arcs)
    return rc


def _make_cycle_column(g: Digraph, seq: Sequence[int],
                       cycle_copies: List[CycleCopy],
                       duals: DualPrices) -> Column:
    copy_index = _copy_of_cycle(seq, cycle_copies)
    anchor = cycle_copies[copy_index].anchor
    rooted = _rooted_at(seq, anchor)
    arcs = tuple(zip(rooted, rooted[1:])) + ((rooted[-1], rooted[0]),)
    weight = sum(g.w[a] for a in arcs)
    return Column(kind="cycle", copy_index=copy_index, sequence=rooted,
                  arcs=arcs, weight=weight,
                  reduced_cost=_reduced_cost_of(rooted, arcs, weight, duals))


def _make_chain_column(g: Digraph, seq: Sequence[int],
                       chain_copies: List[ChainCopy],
                       duals: DualPrices) -> Column:
    copy_index = next(c.index for c in chain_copies if c.ndd == seq[0])
    arcs = tuple(zip(seq, seq[1:]))
    weight = sum(g.w[a] for a in arcs)
    return Column(kind="chain", copy_index=copy_index, sequence=tuple(seq),
                  arcs=arcs, weight=weight,
                  reduced_cost=_reduced_cost_of(seq, arcs, weight, duals))


# ---------------------------------------------------------------------------
# Phase 2: longest-path chain pricing with lazy subtour rows
# ---------------------------------------------------------------------------

def _simple_cycles_in(arcs: Iterable[Arc], limit: int = 20000
                      ) -> List[List[int]]:
    """All directed simple cycles among the given arcs (rooted at their
    smallest vertex, visiting only larger ones — each cycle found once)."""
    out: Dict[int, List[int]] = {}
    for (u, v) in arcs:
        out.setdefault(u, []).append(v)
    for u in out:
        out[u].sort()
    found: List[List[int]] = []
    verts = sorted(out)
    for root in verts:
        stack = [root]
        on = {root}

        def extend(u: int) -> bool:
            for v in out.get(u, ()):
                if v == root:
                    found.append(list(stack))
                    if len(found) >= limit:
                        return False
                elif v > root and v not in on:
                    stack.append(v)
                    on.add(v)
                    ok = extend(v)
                    stack.pop()
                    on.remove(v)
                    if not ok:
                        return False
            return True

        if not extend(root):
            break
    return found


def separate_infeasible_cycles(support: Iterable[Arc], K: int
                               ) -> List[List[int]]:
    """Simple cycles longer than K inside the support (candidate lazy rows)."""
    return [c for c in _simple_cycles_in(support) if len(c) > K]


def _trace_path(nxt: Dict[int, int]) -> Optional[List[int]]:
    """Follow the unique successor map from source to sink; None if the walk
    dies, revisits, or never reaches the sink."""
    path = []
    u = _SRC
    seen = set()
    while u in nxt:
        u = nxt[u]
        if u == _SNK:
            return path
        if u in seen:
            return None
        seen.add(u)
        path.append(u)
    return None


def phase2_longest_path(g: Digraph, duals: DualPrices, forced: Set[Arc],
                        banned: Set[Arc], K: int, chain_cap: int,
                        cycle_copies: List[CycleCopy],
                        chain_copies: List[ChainCopy],
                        eps: float = EPS) -> Dict[str, object]:
    """Chain pricing on the dummy-endpoint graph.

    The LP is a relaxation of the chain subproblems combined, so objective
    <= eps certifies that no chain prices out.  Fractional optima are mined
    for near-integral paths and short subtours; long subtours add their lazy
    row; when nothing works the model is solved as a MIP with the same lazy
    rows plus the arc budget.
    """
    arcs: List[Arc] = [( _SRC, n) for n in g.ndds]
    arcs += [(p, _SNK) for p in g.pdps]
    arcs += [a for a in sorted(g.w) if a not in banned]
    weights = {a: 0.0 for a in arcs}
    for a in g.w:
        if a in weights:
            weights[a] = g.w[a]

    m = LpModel("chain-path")
    idx: Dict[Arc, int] = {}
    for a in arcs:
        u, v = a
        coef = 0.0
        if u != _SRC:
            coef = weights[a] - duals.lam_of(u) - duals.mu.get(a, 0.0)
        idx[a] = m.add_var(obj=coef, ub=1.0, integer=True)
    out_of: Dict[int, List[Arc]] = {}
    into: Dict[int, List[Arc]] = {}
    for (u, v) in arcs:
        out_of.setdefault(u, []).append((u, v))
        into.setdefault(v, []).append((u, v))
    # conservation at every real vertex; the source is a <=1 capacity so the
    # zero solution stays feasible and the objective is never negative
    for vert in sorted(g.vertices):
        coeffs = [(idx[a], 1.0) for a in out_of.get(vert, [])]
        coeffs += [(idx[a], -1.0) for a in into.get(vert, [])]
        m.add_row(coeffs, EQ, 0.0)
    m.add_row([(idx[a], 1.0) for a in out_of.get(_SRC, [])], LE, 1.0)
    for vert in sorted(g.vertices):
        outs = [(idx[a], 1.0) for a in out_of.get(vert, [])]
        if outs:
            m.add_row(outs, LE, 1.0)

    real_arcs = [a for a in arcs if a[0] != _SRC and a[1] != _SNK]
    cuts_added = 0
    result_cols: List[Column] = []

    def extract_columns(x: Sequence[float], threshold: float) -> List[Column]:
        cols: List[Column] = []
        nxt = {u: v for (u, v) in arcs if x[idx[(u, v)]] >= threshold}
        path = _trace_path(nxt)
        if path and 1 <= len(path) - 1 <= chain_cap:
            col = _make_chain_column(g, path, chain_copies, duals)
            if col.reduced_cost > eps:
                cols.append(col)
        taken = set(path or [])
        loose = [(u, v) for (u, v) in real_arcs
                 if x[idx[(u, v)]] >= threshold and u not in taken]
        for cyc in _simple_cycles_in(loose):
            if len(cyc) <= K:
                col = _make_cycle_column(g, cyc, cycle_copies, duals)
                if col.reduced_cost > eps:
                    cols.append(col)
        return cols

    objective = float("-inf")
    for _ in range(_MAX_CUT_ROUNDS):
        sol = solve_lp(m)
        if sol.status != "optimal":
            raise RuntimeError(f"chain path LP ended with {sol.status}")
        objective = sol.obj
        if objective <= eps:
            return {"columns": [], "chain_certificate": True,
                    "objective": objective, "cuts": cuts_added}
        cols = extract_columns(sol.x, 0.9)
        if cols:
            return {"columns": cols, "chain_certificate": False,
                    "objective": objective, "cuts": cuts_added}
        support = [a for a in real_arcs if sol.x[idx[a]] > eps]
        new_rows = 0
        for cyc in separate_infeasible_cycles(support, K):
            carc = list(zip(cyc, cyc[1:])) + [(cyc[-1], cyc[0])]
            lhs = sum(sol.x[idx[a]] for a in carc)
            if lhs > len(cyc) - 1 + 1e-9:
                m.add_row([(idx[a], 1.0) for a in carc], LE,
                          float(len(cyc) - 1))
                new_rows += 1
        cuts_added += new_rows
        if new_rows == 0:
            break

    # escalate: arc budget + integrality, still with lazy long-subtour rows
    m.add_row([(idx[a], 1.0) for a in arcs], LE, float(chain_cap + 2))
    for _ in range(_MAX_CUT_ROUNDS):
        sol = solve_mip(m)
        if sol.status != "optimal":
            raise RuntimeError(f"chain path MIP ended with {sol.status}")
        objective = sol.obj
        support = [a for a in real_arcs if sol.x[idx[a]] > 0.5]
        long_cycles = separate_infeasible_cycles(support, K)
        if long_cycles:
            for cyc in long_cycles:
                carc = list(zip(cyc, cyc[1:])) + [(cyc[-1], cyc[0])]
                m.add_row([(idx[a], 1.0) for a in carc], LE,
                          float(len(cyc) - 1))
                cuts_added += 1
            continue
        if objective <= eps:
            return {"columns": [], "chain_certificate": True,
                    "objective": objective, "cuts": cuts_added}
        cols = extract_columns(sol.x, 0.5)
        return {"columns": cols, "chain_certificate": False,
                "objective": objective, "cuts": cuts_added}
    raise RuntimeError("lazy subtour separation did not converge")


# ---------------------------------------------------------------------------
# Phase 3: exact cycle pricing
# ---------------------------------------------------------------------------

def phase3_exhaustive(copies: List[CycleCopy], g: Digraph,
                      duals: DualPrices, banned: Set[Arc], K: int,
                      t_e: float, eps: float = EPS
                      ) -> Tuple[str, Optional[Column]]:
    """Depth-first search per copy, cheapest feedback vertices first.

    Returns ("column", col) on the first positive-price cycle, ("exhausted",
    None) when every copy is searched out, ("timeout", None) past t_e.
    """
    deadline = time.monotonic() + t_e
    if t_e <= 0:
        return ("timeout", None)
    order = sorted(copies, key=lambda c: (duals.lam_of(c.anchor), c.index))
    for copy in order:
        anchor = copy.anchor
        adj: Dict[int, List[int]] = {}
        for (u, v) in copy.arcs:
            if (u, v) not in banned:
                adj.setdefault(u, []).append(v)
        for u in adj:
            adj[u].sort()
        path = [anchor]
        on = {anchor}
        found: List[Optional[Column]] = [None]

        def dfs(u: int, acc: float) -> bool:
            """acc = partial reduced cost excluding the closing arc."""
            if time.monotonic() > deadline:
                return False
            for v in adj.get(u, ()):
                if v == anchor:
                    if len(path) >= 2:
                        close = acc + g.w[(u, anchor)] \
                            - duals.mu.get((u, anchor), 0.0)
                        if close > eps:
                            seq = tuple(path)
                            arcs = tuple(zip(seq, seq[1:])) + ((seq[-1],
                                                                seq[0]),)
                            weight = sum(g.w[a] for a in arcs)
                            found[0] = Column(
                                kind="cycle", copy_index=copy.index,
                                sequence=seq, arcs=arcs, weight=weight,
                                reduced_cost=close)
                            return False
                elif v not in on and len(path) < K:
                    path.append(v)
                    on.add(v)
                    step = acc + g.w[(u, v)] - duals.lam_of(v) \
                        - duals.mu.get((u, v), 0.0)
                    ok = dfs(v, step)
                    path.pop()
                    on.remove(v)
                    if not ok:
                        return False
            return True

        completed = dfs(anchor, -duals.lam_of(anchor))
        if found[0] is not None:
            return ("column", found[0])
        if not completed:
            return ("timeout", None)
    return ("exhausted", None)


def phase3_mip(g: Digraph, duals: DualPrices, forced: Set[Arc],
               banned: Set[Arc], K: int, cycle_copies: List[CycleCopy],
               eps: float = EPS) -> List[Column]:
    """Arc-budget flow MIP over pair-to-pair arcs.

    Balanced degree rows plus a global budget of K arcs mean any optimal
    support splits into vertex-disjoint cycles no longer than K; every
    individually positive-price cycle in the split is returned.
    """
    arcs = [a for a in sorted(g.w)
            if a not in banned and g.is_pdp(a[0]) and g.is_pdp(a[1])]
    m = LpModel("cycle-budget")
    idx: Dict[Arc, int] = {}
    for a in arcs:
        u, v = a
        coef = g.w[a] - duals.lam_of(u) - duals.mu.get(a, 0.0)
        idx[a] = m.add_var(obj=coef, ub=1.0, integer=True)
    out_of: Dict[int, List[Arc]] = {}
    into: Dict[int, List[Arc]] = {}
    for (u, v) in arcs:
        out_of.setdefault(u, []).append((u, v))
        into.setdefault(v, []).append((u, v))
    for vert in sorted(set(out_of) | set(into)):
        coeffs = [(idx[a], 1.0) for a in out_of.get(vert, [])]
        coeffs += [(idx[a], -1.0) for a in into.get(vert, [])]
        m.add_row(coeffs, EQ, 0.0)
        outs = [(idx[a], 1.0) for a in out_of.get(vert, [])]
        if outs:
            m.add_row(outs, LE, 1.0)
    if arcs:
        m.add_row([(idx[a], 1.0) for a in arcs], LE, float(K))
    sol = solve_mip(m)
    if sol.status != "optimal":
        raise RuntimeError(f"cycle budget MIP ended with {sol.status}")
    if sol.obj <= eps:
        return []
    support = [a for a in arcs if sol.x[idx[a]] > 0.5]
    cols: List[Column] = []
    for cyc in _simple_cycles_in(support):
        col = _make_cycle_column(g, cyc, cycle_copies, duals)
        if col.reduced_cost > eps:
            cols.append(col)
    return cols


# ---------------------------------------------------------------------------
# exact per-copy optima (Lagrangian support)
# ---------------------------------------------------------------------------

def exact_subproblem_values(g: Digraph, cycle_copies: List[CycleCopy],
                            chain_copies: List[ChainCopy],
                            duals: DualPrices, banned: Set[Arc], K: int,
                            chain_cap: int
                            ) -> Tuple[List[float], List[float]]:
    """True optimum reduced cost per copy (0 when no exchange exists).

    Exhaustive and ban-aware, with the forced-arc prices charged on use;
    intended for bound computation, not pricing speed.
    """
    cycle_vals: List[float] = []
    for copy in cycle_copies:
        adj: Dict[int, List[int]] = {}
        for (u, v) in copy.arcs:
            if (u, v) not in banned:
                adj.setdefault(u, []).append(v)
        for u in adj:
            adj[u].sort()
        anchor = copy.anchor
        best = [0.0]
        path = [anchor]
        on = {anchor}

        def dfs_c(u: int, acc: float) -> None:
            for v in adj.get(u, ()):
                if v == anchor:
                    if len(path) >= 2:
                        close = acc + g.w[(u, anchor)] \
                            - duals.mu.get((u, anchor), 0.0)
                        if close > best[0]:
                            best[0] = close
                elif v not in on and len(path) < K:
                    path.append(v)
                    on.add(v)
                    dfs_c(v, acc + g.w[(u, v)] - duals.lam_of(v)
                          - duals.mu.get((u, v), 0.0))
                    path.pop()
                    on.remove(v)

        dfs_c(anchor, -duals.lam_of(anchor))
        cycle_vals.append(best[0])

    chain_vals: List[float] = []
    for copy in chain_copies:
        adj = {}
        for (u, v) in copy.arcs:
            if v >= 0 and (u, v) not in banned:
                adj.setdefault(u, []).append(v)
        for u in adj:
            adj[u].sort()
        best = [0.0]
        on = {copy.ndd}

        def dfs_p(u: int, acc: float, depth: int) -> None:
            if depth >= chain_cap:
                return
            for v in adj.get(u, ()):
                if v not in on:
                    val = acc + g.w[(u, v)] - duals.mu.get((u, v), 0.0) \
                        - duals.lam_of(v)
                    if val > best[0]:
                        best[0] = val
                    on.add(v)
                    dfs_p(v, val, depth + 1)
                    on.remove(v)

        dfs_p(copy.ndd, -duals.lam_of(copy.ndd), 0)
        chain_vals.append(best[0])
    return cycle_vals, chain_vals


# ---------------------------------------------------------------------------
# controller
# ---------------------------------------------------------------------------

def price(ctx: PricingContext, duals: DualPrices, banned: Set[Arc],
          forced: Set[Arc], eps: float = EPS) -> PricingResult:
    """Run the phases in order, stopping at the first that yields columns.

    proven_optimal requires BOTH a cycle certificate (exact diagrams that
    price nothing, an exhausted search, or a zero budget-MIP) AND a chain
    certificate (no donors, exact diagrams that price nothing, or a zero
    path relaxation).  Restricted diagrams never certify anything.
    """
    stats: Dict[str, Dict[str, float]] = {
        "phase1": {"invocations": 0, "columns": 0, "time": 0.0},
        "phase2": {"invocations": 0, "columns": 0, "cuts": 0, "time": 0.0},
        "phase3": {"invocations": 0, "columns": 0, "time": 0.0},
    }
    mu = duals.mu

    t0 = time.monotonic()
    stats["phase1"]["invocations"] = 1
    cols: List[Column] = []
    for m in ctx.cycle_mdds:
        col = best_cycle(m, duals.lam, banned, mu)
        if col is not None:
            cols.append(col)
    chain_cols_found = False
    for m in ctx.chain_mdds:
        got = best_chains(m, duals.lam, banned, mu,
                          max_count=MAX_CHAIN_COLUMNS)
        if got:
            chain_cols_found = True
            cols.extend(got)
    stats["phase1"]["time"] = time.monotonic() - t0
    stats["phase1"]["columns"] = len(cols)
    if cols:
        return PricingResult(columns=cols, proven_optimal=False, stats=stats)

    chains_apply = bool(ctx.chain_copies) and ctx.chain_cap >= 1
    chain_certified = not chains_apply or (ctx.chains_exact
                                           and not chain_cols_found)
    cycle_certified = ctx.cycles_exact

    if chains_apply and not chain_certified:
        t0 = time.monotonic()
        stats["phase2"]["invocations"] = 1
        got = phase2_longest_path(ctx.g, duals, forced, banned, ctx.K,
                                  ctx.chain_cap, ctx.cycle_copies,
                                  ctx.chain_copies, eps=eps)
        stats["phase2"]["time"] = time.monotonic() - t0
        stats["phase2"]["cuts"] = got["cuts"]
        stats["phase2"]["columns"] = len(got["columns"])
        if got["columns"]:
            return PricingResult(columns=list(got["columns"]),
                                 proven_optimal=False, stats=stats)
        chain_certified = bool(got["chain_certificate"])

    if not cycle_certified:
        t0 = time.monotonic()
        stats["phase3"]["invocations"] = 1
        status, col = phase3_exhaustive(ctx.cycle_copies, ctx.g, duals,
                                        banned, ctx.K, ctx.t_e, eps=eps)
        if status == "column":
            stats["phase3"]["columns"] = 1
            stats["phase3"]["time"] = time.monotonic() - t0
            return PricingResult(columns=[col], proven_optimal=False,
                                 stats=stats)
        if status == "exhausted":
            cycle_certified = True
        else:  # timeout: one shot at the budget MIP decides
            mip_cols = phase3_mip(ctx.g, duals, forced, banned, ctx.K,
                                  ctx.cycle_copies, eps=eps)
            stats["phase3"]["columns"] = len(mip_cols)
            stats["phase3"]["time"] = time.monotonic() - t0
            if mip_cols:
                return PricingResult(columns=mip_cols, proven_optimal=False,
                                     stats=stats)
            cycle_certified = True
        stats["phase3"]["time"] = time.monotonic() - t0

    return PricingResult(columns=[],
                         proven_optimal=chain_certified and cycle_certified,
                         stats=stats)
