"""Restricted master problem over pooled columns, duals, and dual bounds.

The master is a set-packing LP/MIP: one variable per pooled cycle or chain,
one <=1 row per covered vertex, and one =1 row per forced arc at branching
nodes.  Dual prices of the vertex rows are the Lagrange multipliers used by
pricing; the Lagrangian combiner and the degree-constrained flow relaxation
provide search-tree bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .graphs import Digraph
from .instances import Instance
from .lpkernel import EQ, GE, LE, LpModel, solve_lp, solve_mip
from .mdd import Column

Arc = Tuple[int, int]
Key = Tuple[str, int, Tuple[int, ...]]


@dataclass
class DualPrices:
    """Vertex prices (duals of the packing rows, >= 0) and forced-arc prices."""
    lam: Dict[int, float] = field(default_factory=dict)
    mu: Dict[Arc, float] = field(default_factory=dict)

    def lam_of(self, v: int) -> float:
        return self.lam.get(v, 0.0)


def canonical_key(col: Column) -> Key:
    """Pool key: cycles keyed by their lexicographically minimal rotation."""
    seq = col.sequence
    if col.kind == "cycle":
        rots = [seq[i:] + seq[:i] for i in range(len(seq))]
        seq = min(rots)
    return (col.kind, col.copy_index, seq)


class ColumnPool:
    """Deduplicated column store shared across the whole search tree."""

    def __init__(self, g: Digraph, K: int, chain_cap: int) -> None:
        self._g = g
        self._K = K
        self._chain_cap = chain_cap
        self._cols: Dict[Key, Column] = {}

    def __len__(self) -> int:
        return len(self._cols)

    def __contains__(self, key: Key) -> bool:
        return key in self._cols

    def get(self, key: Key) -> Column:
        return self._cols[key]

    def items(self) -> List[Tuple[Key, Column]]:
        return sorted(self._cols.items())

    def validate(self, col: Column) -> Optional[str]:
        seq = col.sequence
        if len(set(seq)) != len(seq):
            return f"repeated vertex in {seq}"
        if col.kind == "cycle":
            if not (2 <= len(seq) <= self._K):
                return f"cycle length {len(seq)} outside [2, {self._K}]"
            arcs = list(zip(seq, seq[1:])) + [(seq[-1], seq[0])]
            if any(v not in self._g.pdp_set for v in seq):
                return f"cycle {seq} contains a non-pair vertex"
        elif col.kind == "chain":
            if not (1 <= len(seq) - 1 <= self._chain_cap):
                return (f"chain with {len(seq) - 1} transplants outside "
                        f"[1, {self._chain_cap}]")
            arcs = list(zip(seq, seq[1:]))
            if seq[0] not in self._g.ndd_set:
                return f"chain {seq} does not start at a non-directed donor"
            if any(v not in self._g.pdp_set for v in seq[1:]):
                return f"chain {seq} visits a non-pair vertex"
        else:
            return f"unknown column kind {col.kind!r}"
        for (u, v) in arcs:
            if not self._g.has_arc(u, v):
                return f"missing arc ({u}, {v}) in {col.kind} {seq}"
        expect = sum(self._g.w[a] for a in arcs)
        if abs(expect - col.weight) > 1e-9 * (1.0 + abs(expect)):
            return f"weight {col.weight} != arc sum {expect} for {seq}"
        return None


def add_columns(pool: ColumnPool, cols: Iterable[Column]) -> int:
    """Add columns, dropping canonical-key duplicates; returns count added."""
    added = 0
    for col in cols:
        problem = pool.validate(col)
        if problem is not None:
            raise ValueError(f"rejected column: {problem}")
        key = canonical_key(col)
        if key not in pool._cols:
            pool._cols[key] = col
            added += 1
    return added


@dataclass
class RmpResult:
    status: str                       # "optimal" | "infeasible"
    objective: float
    duals: Optional[DualPrices]       # filled for LP solves only
    values: Dict[Key, float]          # primal value per included column


def build_and_solve_rmp(pool: ColumnPool, forced: Set[Arc],
                        banned: Set[Arc], integral: bool) -> RmpResult:
    """Solve the packing master over pooled columns.

    Columns containing banned arcs are filtered out of this model (never
    deleted from the pool).  Vertex rows exist only for covered vertices;
    the prices of missing rows default to zero.  Forced arcs add =1 rows;
    with no covering column those rows are unsatisfiable and the caller
    receives an infeasible signal (it then prices for covering columns).
    """
    included: List[Tuple[Key, Column]] = [
        (key, col) for key, col in pool.items()
        if not any(a in banned for a in col.arcs)]
    m = LpModel("rmp")
    for key, col in included:
        m.add_var(obj=col.weight, ub=1.0, integer=True)

    by_vertex: Dict[int, List[int]] = {}
    for j, (key, col) in enumerate(included):
        for v in col.sequence:
            by_vertex.setdefault(v, []).append(j)
    vertex_rows: List[int] = []
    for v in sorted(by_vertex):
        m.add_row([(j, 1.0) for j in by_vertex[v]], LE, 1.0)
        vertex_rows.append(v)

    forced_rows: List[Arc] = []
    for a in sorted(forced):
        covering = [j for j, (key, col) in enumerate(included)
                    if a in col.arcs]
        m.add_row([(j, 1.0) for j in covering], EQ, 1.0)
        forced_rows.append(a)

    if integral:
        sol = solve_mip(m)
    else:
        sol = solve_lp(m)
    if sol.status != "optimal":
        return RmpResult(status="infeasible", objective=float("-inf"),
                         duals=None, values={})
    values = {key: sol.x[j] for j, (key, col) in enumerate(included)}
    duals = None
    if not integral:
        lam = {v: max(0.0, sol.duals[i]) for i, v in enumerate(vertex_rows)}
        mu = {a: sol.duals[len(vertex_rows) + i]
              for i, a in enumerate(forced_rows)}
        duals = DualPrices(lam=lam, mu=mu)
    return RmpResult(status="optimal", objective=sol.obj, duals=duals,
                     values=values)


def lagrangian_bound(duals: DualPrices, cycle_values: Sequence[float],
                     chain_values: Sequence[float]) -> float:
    """Combine per-copy subproblem optima into a dual bound.

    Each subproblem optimum is floored at zero (the empty selection is
    always feasible); the constant collects every vertex price and, at
    branching nodes, the forced-arc prices whose rows were dualized.
    """
    total = sum(max(0.0, z) for z in cycle_values)
    total += sum(max(0.0, z) for z in chain_values)
    total += sum(duals.lam.values())
    total += sum(duals.mu.values())
    return total


def infinite_relaxation_bound(inst: Instance) -> float:
    """LP value of the degree-constrained flow relaxation (no length caps).

    Every vertex donates at most once, every pair receives at most once,
    and a pair donates only if it receives (out <= in) — the one-sided form
    is what keeps chain tails feasible, since a chain's last pair receives
    without donating.
    """
    arcs = sorted((u, v) for (u, v, w) in inst.arcs)
    weights = {(u, v): w for (u, v, w) in inst.arcs}
    m = LpModel("flow-relax")
    idx = {a: m.add_var(obj=weights[a], ub=1.0) for a in arcs}
    out_of: Dict[int, List[int]] = {}
    into: Dict[int, List[int]] = {}
    for (u, v) in arcs:
        out_of.setdefault(u, []).append(idx[(u, v)])
        into.setdefault(v, []).append(idx[(u, v)])
    for u in sorted(out_of):
        m.add_row([(j, 1.0) for j in out_of[u]], LE, 1.0)
    pdps = set(inst.pdps)
    for v in sorted(pdps):
        if v in into:
            m.add_row([(j, 1.0) for j in into[v]], LE, 1.0)
    for v in sorted(pdps):
        outs = [(j, 1.0) for j in out_of.get(v, [])]
        ins = [(j, -1.0) for j in into.get(v, [])]
        if outs:
            m.add_row(outs + ins, LE, 0.0)
    sol = solve_lp(m)
    if sol.status != "optimal":
        raise RuntimeError(f"flow relaxation ended with {sol.status}")
    return sol.obj
