"""Branch-and-price driver: node tree, bounding, branching, incumbents.

One column pool is shared across the whole tree.  Every node runs column
generation to a proven optimum (or an honest stall/timeout), then solves the
integer restriction of its master for an incumbent, and finally branches on
the arc whose total fractional usage is closest to one half.  Reported
bounds never lean on an unconverged LP value: a node closed without proof
contributes min(inherited bound, Lagrangian bound at its last duals with
exact subproblem optima), and nodes still open at the time limit contribute
their inherited bounds.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .graphs import (ChainCopy, CycleCopy, Digraph, build_chain_copies,
                     build_digraph, find_fvs)
from .instances import Instance
from .lpkernel import INT_TOL
from .master import (Arc, ColumnPool, DualPrices, Key, add_columns,
                     build_and_solve_rmp, infinite_relaxation_bound,
                     lagrangian_bound)
from .mdd import (Column, Mdd, MddBuildConfig, best_chains, best_cycle,
                  build_chain_mdd, build_cycle_mdd, diagram_stats,
                  plan_cycle_lengths)
from .pricing import (MAX_CHAIN_COLUMNS, PricingContext,
                      _make_chain_column, _make_cycle_column,
                      exact_subproblem_values, price)


@dataclass
class SolverConfig:
    """Knobs for :func:`solve`; defaults match the intended service limits."""
    time_limit_s: float = 1800.0
    t_e: float = 20.0                 # per-node exhaustive-search budget
    eps: float = 1e-6
    mdd: MddBuildConfig = field(default_factory=MddBuildConfig)
    max_nodes: Optional[int] = None
    seed: Optional[int] = None        # echoed into reports; solve is deterministic
    fvs_ordering: str = "max-in"


@dataclass(frozen=True)
class BnbNode:
    """One node of the search tree (both arc sets grow down the tree)."""
    banned: FrozenSet[Arc]
    forced: FrozenSet[Arc]
    bound: float                      # inherited upper bound, always valid
    depth: int

    def __post_init__(self) -> None:
        assert not (self.banned & self.forced)


@dataclass
class Solution:
    """Final matching plus the search's certificate and counters."""
    cycles: List[Tuple[int, ...]]
    chains: List[Tuple[int, ...]]
    objective: float
    status: str                       # "optimal" | "feasible" | "infeasible"
    bound: float
    stats: Dict[str, object]


def verify_matching(inst: Instance, sol: Solution) -> bool:
    """True iff the solution is a feasible matching of the instance."""
    g = build_digraph(inst)
    cap = inst.chain_cap()
    used: Set[int] = set()
    total = 0.0
    for raw in sol.cycles:
        seq = tuple(raw)
        if not (2 <= len(seq) <= inst.K) or len(set(seq)) != len(seq):
            return False
        if any(v not in g.pdp_set for v in seq):
            return False
        if used & set(seq):
            return False
        used |= set(seq)
        for (u, v) in zip(seq, seq[1:] + (seq[0],)):
            if not g.has_arc(u, v):
                return False
            total += g.w[(u, v)]
    for raw in sol.chains:
        seq = tuple(raw)
        if len(seq) < 2 or len(seq) - 1 > cap or len(set(seq)) != len(seq):
            return False
        if seq[0] not in g.ndd_set or any(v not in g.pdp_set for v in seq[1:]):
            return False
        if used & set(seq):
            return False
        used |= set(seq)
        for (u, v) in zip(seq, seq[1:]):
            if not g.has_arc(u, v):
                return False
            total += g.w[(u, v)]
    return abs(total - sol.objective) <= 1e-6 * (1.0 + abs(total))


def select_branch_arc(values: Dict[Key, float], pool: ColumnPool,
                      exclude: FrozenSet[Arc] = frozenset()
                      ) -> Optional[Arc]:
    """Arc with total usage closest to 0.5; ties to the smallest (u, v).

    Usage sums the LP values of every column containing the arc; candidate
    arcs are those appearing in at least one fractional column (all others
    have usage pinned to an integer already).
    """
    usage: Dict[Arc, float] = {}
    candidates: Set[Arc] = set()
    for key, val in values.items():
        col = pool.get(key)
        for a in col.arcs:
            usage[a] = usage.get(a, 0.0) + val
        if INT_TOL < val < 1.0 - INT_TOL:
            candidates.update(col.arcs)
    candidates -= exclude
    if not candidates:
        return None
    return min(candidates, key=lambda a: (abs(usage[a] - 0.5), a))


def _seed_columns(ctx: PricingContext) -> List[Column]:
    """One diagram pricing pass at zero prices, to warm-start the pool."""
    cols: List[Column] = []
    for m in ctx.cycle_mdds:
        col = best_cycle(m, {})
        if col is not None:
            cols.append(col)
    for m in ctx.chain_mdds:
        cols.extend(best_chains(m, {}, max_count=MAX_CHAIN_COLUMNS))
    return cols


def _columns_through(g: Digraph, arc: Arc, K: int, cap: int,
                     banned: Set[Arc], cycle_copies: List[CycleCopy],
                     chain_copies: List[ChainCopy]) -> List[Column]:
    """Every feasible cycle and chain that uses ``arc`` and no banned arc.

    Only called when the master is infeasible under forced arcs, so the pool
    provably lacks covering columns; exhaustive generation restores them (or
    proves the node truly infeasible, since columns not covering a forced
    arc can never help satisfy its row).
    """
    u, v = arc
    cols: List[Column] = []
    zero = DualPrices()
    if arc in banned or not g.has_arc(u, v):
        return cols
    if cycle_copies and u in g.pdp_set and v in g.pdp_set:
        def grow_cycle(seq: Tuple[int, ...]) -> None:
            cur = seq[-1]
            if len(seq) >= 2 and g.has_arc(cur, u) and (cur, u) not in banned:
                cols.append(_make_cycle_column(g, seq, cycle_copies, zero))
            if len(seq) < K:
                for w in g.out[cur]:
                    if (w in g.pdp_set and w not in seq
                            and (cur, w) not in banned):
                        grow_cycle(seq + (w,))
        grow_cycle((u, v))
    if chain_copies and v in g.pdp_set and cap >= 1:
        def grow_chain(seq: Tuple[int, ...], hit: bool) -> None:
            if hit:
                cols.append(_make_chain_column(g, seq, chain_copies, zero))
            if len(seq) - 1 >= cap or (not hit and v in seq):
                return
            cur = seq[-1]
            for w in g.out[cur]:
                if (w in g.pdp_set and w not in seq
                        and (cur, w) not in banned):
                    grow_chain(seq + (w,), hit or (cur, w) == arc)
        if u in g.ndd_set:
            grow_chain((u,), False)
        elif u in g.pdp_set:
            for copy in chain_copies:
                grow_chain((copy.ndd,), False)
    return cols


def solve(inst: Instance, cfg: Optional[SolverConfig] = None) -> Solution:
    """Exact branch-and-price over the instance's cycles and chains."""
    cfg = cfg if cfg is not None else SolverConfig()
    t_start = time.monotonic()
    deadline = t_start + cfg.time_limit_s
    g = build_digraph(inst)
    K, cap = inst.K, inst.chain_cap()

    cycle_copies: List[CycleCopy] = []
    cycle_mdds: List[Mdd] = []
    if K >= 2 and g.pdps:
        _, cycle_copies = find_fvs(g, K, ordering=cfg.fvs_ordering)
        caps = plan_cycle_lengths(len(cycle_copies), K, len(g.pdps), cfg.mdd)
        cycle_mdds = [build_cycle_mdd(g, c, k_eff, K_full=K)
                      for c, k_eff in zip(cycle_copies, caps)]
    chain_copies: List[ChainCopy] = build_chain_copies(g) if cap >= 1 else []
    chain_mdds: List[Mdd] = []
    if chain_copies:
        l_eff = (min(cap, cfg.mdd.restricted_chain_len)
                 if cfg.mdd.chains_truncated(len(g.pdps)) else cap)
        chain_mdds = [build_chain_mdd(g, c, l_eff, cfg.mdd, cap_full=cap)
                      for c in chain_copies]
    ctx = PricingContext(g=g, K=K, chain_cap=cap, cycle_copies=cycle_copies,
                         chain_copies=chain_copies, cycle_mdds=cycle_mdds,
                         chain_mdds=chain_mdds, t_e=cfg.t_e)

    stats: Dict[str, object] = {
        "nodes": 0, "nodes_pruned": 0, "lp_solves": 0, "mip_solves": 0,
        "pricing_rounds": 0, "cuts": 0, "hit_limit": False,
        "columns_by_phase": {"seed": 0, "cover": 0, "phase1": 0,
                             "phase2": 0, "phase3": 0},
        "times": {"build_s": 0.0, "master_s": 0.0, "pricing_s": 0.0,
                  "total_s": 0.0},
    }
    by_phase: Dict[str, int] = stats["columns_by_phase"]
    times: Dict[str, float] = stats["times"]

    stats["diagrams"] = [diagram_stats(m) for m in cycle_mdds + chain_mdds]
    inf_bound = infinite_relaxation_bound(inst)
    stats["infinite_relaxation_bound"] = inf_bound

    pool = ColumnPool(g, K, cap)
    by_phase["seed"] = add_columns(pool, _seed_columns(ctx))
    times["build_s"] = time.monotonic() - t_start

    best_cols: List[Column] = []
    best_obj = 0.0

    def timed_rmp(node: BnbNode, integral: bool):
        t0 = time.monotonic()
        res = build_and_solve_rmp(pool, set(node.forced), set(node.banned),
                                  integral=integral)
        times["master_s"] += time.monotonic() - t0
        stats["mip_solves" if integral else "lp_solves"] += 1
        return res

    def cover_forced(node: BnbNode) -> bool:
        added = 0
        for a in sorted(node.forced):
            cols = _columns_through(g, a, K, cap, set(node.banned),
                                    cycle_copies, chain_copies)
            added += add_columns(pool, cols)
        by_phase["cover"] += added
        return added > 0

    def residual_bound(node: BnbNode,
                       duals: Optional[DualPrices]) -> float:
        if duals is None:
            return node.bound
        cv, pv = exact_subproblem_values(g, cycle_copies, chain_copies,
                                         duals, set(node.banned), K, cap)
        return min(node.bound, lagrangian_bound(duals, cv, pv))

    def run_node(node: BnbNode):
        duals: Optional[DualPrices] = None
        tried_cover = False
        while True:
            rmp = timed_rmp(node, integral=False)
            if rmp.status != "optimal":
                if node.forced and not tried_cover:
                    tried_cover = True
                    if cover_forced(node):
                        continue
                return "infeasible", None, None
            duals = rmp.duals
            if time.monotonic() > deadline:
                return "timeout", rmp, duals
            t0 = time.monotonic()
            res = price(ctx, duals, set(node.banned), set(node.forced),
                        eps=cfg.eps)
            times["pricing_s"] += time.monotonic() - t0
            stats["pricing_rounds"] += 1
            for ph in ("phase1", "phase2", "phase3"):
                by_phase[ph] += int(res.stats[ph]["columns"])
            stats["cuts"] += int(res.stats["phase2"]["cuts"])
            if res.columns:
                if add_columns(pool, res.columns) > 0:
                    continue
                return "stalled", rmp, duals     # defensive: only duplicates
            if res.proven_optimal:
                return "converged", rmp, duals
            return "stalled", rmp, duals

    heap: List[Tuple[float, int, int, BnbNode]] = []
    counter = itertools.count()

    def push(node: BnbNode) -> None:
        heapq.heappush(heap, (-node.bound, -node.depth, next(counter), node))

    push(BnbNode(banned=frozenset(), forced=frozenset(),
                 bound=inf_bound, depth=0))
    unproven: List[float] = []

    while heap:
        if (time.monotonic() > deadline
                or (cfg.max_nodes is not None
                    and stats["nodes"] >= cfg.max_nodes)):
            stats["hit_limit"] = True
            break
        _, _, _, node = heapq.heappop(heap)
        stats["nodes"] += 1
        # the root always runs to convergence so that every report carries
        # its LP and Lagrangian values; deeper nodes prune on the bound
        if node.depth > 0 and node.bound <= best_obj + cfg.eps:
            stats["nodes_pruned"] += 1
            continue
        kind, rmp, duals = run_node(node)
        if kind == "infeasible":
            continue
        if kind in ("timeout", "stalled"):
            r = residual_bound(node, duals)
            if r > best_obj + cfg.eps:
                unproven.append(r)
            if kind == "timeout":
                stats["hit_limit"] = True
                break
            continue

        node_bound = min(node.bound, rmp.objective)
        if node.depth == 0 and "root" not in stats:
            cv, pv = exact_subproblem_values(g, cycle_copies, chain_copies,
                                             duals, set(node.banned), K, cap)
            stats["root"] = {"lp_bound": rmp.objective,
                             "lagrangian_bound": lagrangian_bound(duals,
                                                                  cv, pv)}
        if node_bound <= best_obj + cfg.eps:
            stats["nodes_pruned"] += 1
            continue
        mip = timed_rmp(node, integral=True)
        if mip.status == "optimal" and mip.objective > best_obj + 1e-9:
            chosen = [pool.get(k) for k, x in mip.values.items() if x > 0.5]
            # score the incumbent by the recomputed column weights: exact
            # for integer data, unlike the kernel's dot product
            cand_obj = sum(c.weight for c in chosen)
            cand = Solution(
                cycles=[c.sequence for c in chosen if c.kind == "cycle"],
                chains=[c.sequence for c in chosen if c.kind == "chain"],
                objective=cand_obj, status="feasible",
                bound=node_bound, stats={})
            assert verify_matching(inst, cand), "incumbent fails verification"
            if cand_obj > best_obj:
                best_obj, best_cols = cand_obj, chosen
        fractional = any(INT_TOL < x < 1.0 - INT_TOL
                         for x in rmp.values.values())
        if not fractional:
            continue                   # node solved integrally; closed
        if node_bound <= best_obj + cfg.eps:
            continue                   # the restriction already met the bound
        arc = select_branch_arc(rmp.values, pool,
                                exclude=node.banned | node.forced)
        if arc is None:                # defensive: nothing left to branch on
            r = residual_bound(node, duals)
            if r > best_obj + cfg.eps:
                unproven.append(r)
            continue
        for child in (BnbNode(banned=node.banned | {arc},
                              forced=node.forced,
                              bound=node_bound, depth=node.depth + 1),
                      BnbNode(banned=node.banned,
                              forced=node.forced | frozenset({arc}),
                              bound=node_bound, depth=node.depth + 1)):
            if child.bound > best_obj + cfg.eps:
                push(child)
            else:
                stats["nodes_pruned"] += 1

    open_bounds = [entry[3].bound for entry in heap]
    residuals = [b for b in unproven + open_bounds if b > best_obj + cfg.eps]
    if residuals:
        status, bound = "feasible", max(residuals)
    else:
        status, bound = "optimal", best_obj

    best_cols.sort(key=lambda c: (c.kind, c.sequence))
    times["total_s"] = time.monotonic() - t_start
    return Solution(
        cycles=[tuple(c.sequence) for c in best_cols if c.kind == "cycle"],
        chains=[tuple(c.sequence) for c in best_cols if c.kind == "chain"],
        objective=best_obj, status=status, bound=bound, stats=stats)
