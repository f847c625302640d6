"""Self-contained dense LP/MIP kernel (maximization).

Two-phase tableau simplex with Dantzig pricing, falling back to Bland's
rule after a degenerate streak; duals recovered from the final basis.
Integer models run through LP-based branch and bound (most-fractional
branching, best-bound node order).  Models here are desk scale (a few
thousand variables); no presolve, no warm starts.

An optional backend hook delegates plain LP solves to scipy when
installed; everything in the acceptance path runs on the builtin solver.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9
DEGEN_LIMIT = 40

LE, EQ, GE = "<=", "=", ">="

#: Module default backend for solve_lp ("builtin" or "scipy").
DEFAULT_BACKEND = "builtin"


class KernelError(RuntimeError):
    pass


@dataclass
class _Var:
    obj: float
    lb: float
    ub: float  # np.inf for none
    integer: bool
    name: str


class LpModel:
    """Maximization model: variables with bounds, rows with <=, =, >=."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: List[_Var] = []
        self.rows: List[Tuple[List[Tuple[int, float]], str, float]] = []

    def add_var(self, obj: float = 0.0, lb: float = 0.0, ub: Optional[float] = None,
                integer: bool = False, name: str = "") -> int:
        if ub is None:
            ub = np.inf
        if not np.isfinite(lb):
            raise KernelError("variables need a finite lower bound")
        if ub < lb:
            raise KernelError(f"ub {ub} < lb {lb}")
        self.vars.append(_Var(float(obj), float(lb), float(ub), integer,
                              name or f"x{len(self.vars)}"))
        return len(self.vars) - 1

    def add_row(self, coeffs: Iterable[Tuple[int, float]], sense: str, rhs: float,
                name: str = "") -> int:
        if sense not in (LE, EQ, GE):
            raise KernelError(f"bad sense {sense!r}")
        clean = [(int(j), float(a)) for j, a in coeffs if a != 0.0]
        for j, a in clean:
            if not (0 <= j < len(self.vars)):
                raise KernelError(f"row references unknown variable {j}")
            if not np.isfinite(a):
                raise KernelError("non-finite row coefficient")
        self.rows.append((clean, sense, float(rhs)))
        return len(self.rows) - 1

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def integer_indices(self) -> List[int]:
        return [j for j, v in enumerate(self.vars) if v.integer]


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | numerical-failure
    obj: float = 0.0
    x: List[float] = field(default_factory=list)
    duals: List[float] = field(default_factory=list)  # per caller row (LP only)
    dual_obj: float = 0.0
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def write_lp(m: LpModel) -> str:
    """Dump in the common text LP format (debug aid)."""
    def term(j, a):
        sign = "+" if a >= 0 else "-"
        return f"{sign} {abs(a):.12g} {m.vars[j].name}"

    out = ["Maximize", " obj: " + " ".join(term(j, v.obj) for j, v in enumerate(m.vars) if v.obj)]
    out.append("Subject To")
    for k, (coeffs, sense, rhs) in enumerate(m.rows):
        body = " ".join(term(j, a) for j, a in coeffs) or "0 x0"
        out.append(f" r{k}: {body} {sense} {rhs:.12g}")
    out.append("Bounds")
    for j, v in enumerate(m.vars):
        hi = "inf" if not np.isfinite(v.ub) else f"{v.ub:.12g}"
        out.append(f" {v.lb:.12g} <= {v.name} <= {hi}")
    ints = [v.name for v in m.vars if v.integer]
    if ints:
        out.append("General")
        out.append(" " + " ".join(ints))
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Builtin simplex
# ---------------------------------------------------------------------------

class _Tableau:
    """Standard-form tableau over shifted variables (x' = x - lb >= 0)."""

    def __init__(self, m: LpModel, lb: np.ndarray, ub: np.ndarray):
        n = m.n_vars
        self.n_struct = n
        self.obj_const = float(np.dot([v.obj for v in m.vars], lb))
        # caller rows then upper-bound rows
        rows: List[Tuple[np.ndarray, str, float]] = []
        self.caller_flip: List[float] = []
        self.caller_row_pos: List[int] = []
        for coeffs, sense, rhs in m.rows:
            dense = np.zeros(n)
            for j, a in coeffs:
                dense[j] += a
            rhs_shift = rhs - float(np.dot(dense, lb))
            flip = 1.0
            if rhs_shift < 0:
                dense, rhs_shift, flip = -dense, -rhs_shift, -1.0
                sense = {LE: GE, GE: LE, EQ: EQ}[sense]
            self.caller_flip.append(flip)
            self.caller_row_pos.append(len(rows))
            rows.append((dense, sense, rhs_shift))
        for j in range(n):
            cap = ub[j] - lb[j]
            if np.isfinite(cap):
                dense = np.zeros(n)
                dense[j] = 1.0
                rows.append((dense, LE, float(cap)))

        nrows = len(rows)
        slack_cols, art_cols = [], []
        blocks = [np.zeros((nrows, n))]
        for i, (dense, sense, rhs) in enumerate(rows):
            blocks[0][i, :] = dense
        extra = []
        basis = [-1] * nrows
        col = n
        for i, (dense, sense, rhs) in enumerate(rows):
            if sense == LE:
                e = np.zeros(nrows)
                e[i] = 1.0
                extra.append(e)
                slack_cols.append(col)
                basis[i] = col
                col += 1
            elif sense == GE:
                e = np.zeros(nrows)
                e[i] = -1.0
                extra.append(e)
                slack_cols.append(col)
                col += 1
                a = np.zeros(nrows)
                a[i] = 1.0
                extra.append(a)
                art_cols.append(col)
                basis[i] = col
                col += 1
            else:
                a = np.zeros(nrows)
                a[i] = 1.0
                extra.append(a)
                art_cols.append(col)
                basis[i] = col
                col += 1
        A = np.hstack([blocks[0]] + [e.reshape(-1, 1) for e in extra]) if extra else blocks[0]
        self.A = A
        self.b = np.array([r[2] for r in rows])
        self.basis = basis
        self.art = set(art_cols)
        self.ncols = A.shape[1]
        self.A0 = A.copy()  # untouched copy for dual recovery
        self.b0 = self.b.copy()
        self.obj_struct = np.array([v.obj for v in m.vars])

    def _phase_costs(self, phase: int) -> np.ndarray:
        c = np.zeros(self.ncols)
        if phase == 1:
            for j in self.art:
                c[j] = -1.0
        else:
            c[:self.n_struct] = self.obj_struct
        return c

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        cb = c[self.basis]
        return c - cb @ self.A

    def _pivot(self, row: int, col: int) -> None:
        piv = self.A[row, col]
        self.A[row, :] /= piv
        self.b[row] /= piv
        factors = self.A[:, col].copy()
        factors[row] = 0.0
        self.A -= np.outer(factors, self.A[row, :])
        self.b -= factors * self.b[row]
        self.basis[row] = col

    def run_phase(self, phase: int, allowed: np.ndarray, max_iter: int
                  ) -> Tuple[str, int]:
        c = self._phase_costs(phase)
        bland = False
        degen_streak = 0
        it = 0
        last_obj = None
        while True:
            if it >= max_iter:
                return "iteration-limit", it
            z = self._reduced_costs(c)
            z[~allowed] = -np.inf
            if bland:
                cand = np.flatnonzero(z > FEAS_TOL)
                if cand.size == 0:
                    return "optimal", it
                enter = int(cand[0])
            else:
                enter = int(np.argmax(z))
                if z[enter] <= FEAS_TOL:
                    return "optimal", it
            colvals = self.A[:, enter]
            mask = colvals > PIVOT_TOL
            if not mask.any():
                return "unbounded", it
            ratios = np.full_like(self.b, np.inf)
            ratios[mask] = self.b[mask] / colvals[mask]
            best = ratios.min()
            tied = np.flatnonzero(np.isclose(ratios, best, rtol=0.0, atol=1e-12))
            # smallest basis index among ties keeps the walk deterministic
            leave = int(min(tied, key=lambda i: self.basis[i]))
            self._pivot(leave, enter)
            it += 1
            obj_now = float(c[self.basis] @ self.b)
            if last_obj is not None and obj_now <= last_obj + 1e-12:
                degen_streak += 1
                if degen_streak >= DEGEN_LIMIT:
                    bland = True
            else:
                degen_streak = 0
            last_obj = obj_now

    def drive_out_artificials(self) -> None:
        """After phase 1: pivot zero-valued basic artificials out, or drop rows."""
        drop_rows = []
        for i in range(self.A.shape[0]):
            if self.basis[i] in self.art:
                choices = [j for j in range(self.ncols)
                           if j not in self.art and abs(self.A[i, j]) > 1e-8]
                if choices:
                    self._pivot(i, choices[0])
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep = [i for i in range(self.A.shape[0]) if i not in set(drop_rows)]
            self.A = self.A[keep, :]
            self.A0 = self.A0[keep, :]
            self.b = self.b[keep]
            self.b0 = self.b0[keep]
            self.basis = [self.basis[i] for i in keep]
            pos_map = {old: new for new, old in enumerate(keep)}
            self.caller_row_pos = [pos_map.get(p, -1) for p in self.caller_row_pos]


def _solve_lp_builtin(m: LpModel, lb: np.ndarray, ub: np.ndarray) -> LpSolution:
    n = m.n_vars
    if n == 0:
        for coeffs, sense, rhs in m.rows:
            bad = ((sense == LE and 0 > rhs + FEAS_TOL)
                   or (sense == GE and 0 < rhs - FEAS_TOL)
                   or (sense == EQ and abs(rhs) > FEAS_TOL))
            if bad:
                return LpSolution("infeasible")
        return LpSolution("optimal", 0.0, [], [0.0] * m.n_rows, 0.0, 0)
    if np.any(lb > ub + FEAS_TOL):
        return LpSolution("infeasible")

    t = _Tableau(m, lb, ub)
    max_iter = 20000 + 60 * (t.A.shape[0] + t.ncols)
    allowed = np.ones(t.ncols, dtype=bool)

    if t.art:
        status, it1 = t.run_phase(1, allowed, max_iter)
        if status == "iteration-limit":
            return LpSolution("numerical-failure")
        infeas = -float(t._phase_costs(1)[t.basis] @ t.b)
        if infeas > 1e-6:
            return LpSolution("infeasible", iterations=it1)
        t.drive_out_artificials()
    else:
        it1 = 0
    for j in t.art:
        allowed[j] = False

    status, it2 = t.run_phase(2, allowed, max_iter)
    if status == "iteration-limit":
        return LpSolution("numerical-failure")
    if status == "unbounded":
        return LpSolution("unbounded", iterations=it1 + it2)

    xs = np.zeros(t.ncols)
    xs[t.basis] = t.b
    x_struct = xs[:t.n_struct] + lb
    obj = float(t.obj_struct @ xs[:t.n_struct]) + t.obj_const

    # duals from the final basis: solve B^T y = c_B on the original columns
    c2 = t._phase_costs(2)
    B = t.A0[:, t.basis]
    try:
        y = np.linalg.solve(B.T, c2[t.basis])
    except np.linalg.LinAlgError:
        y, *_ = np.linalg.lstsq(B.T, c2[t.basis], rcond=None)
    duals = []
    for k in range(m.n_rows):
        pos = t.caller_row_pos[k]
        duals.append(0.0 if pos < 0 else float(t.caller_flip[k] * y[pos]))
    dual_obj = float(y @ t.b0) + t.obj_const
    return LpSolution("optimal", obj, [float(v) for v in x_struct], duals,
                      dual_obj, it1 + it2)


def solve_lp(m: LpModel, backend: Optional[str] = None) -> LpSolution:
    """Solve the LP relaxation (integer marks ignored)."""
    backend = backend or DEFAULT_BACKEND
    lb = np.array([v.lb for v in m.vars])
    ub = np.array([v.ub for v in m.vars])
    if backend == "builtin":
        return _solve_lp_builtin(m, lb, ub)
    if backend == "scipy":
        return _solve_lp_scipy(m, lb, ub)
    raise KernelError(f"unknown backend {backend!r}")


def _solve_lp_scipy(m: LpModel, lb: np.ndarray, ub: np.ndarray) -> LpSolution:
    try:
        from scipy.optimize import linprog
    except ImportError as exc:  # pragma: no cover
        raise KernelError("scipy backend requested but scipy is unavailable") from exc
    n = m.n_vars
    if n == 0:
        return _solve_lp_builtin(m, lb, ub)
    c = -np.array([v.obj for v in m.vars])
    A_ub, b_ub, ub_idx, A_eq, b_eq, eq_idx = [], [], [], [], [], []
    for k, (coeffs, sense, rhs) in enumerate(m.rows):
        dense = np.zeros(n)
        for j, a in coeffs:
            dense[j] += a
        if sense == EQ:
            A_eq.append(dense)
            b_eq.append(rhs)
            eq_idx.append(k)
        elif sense == LE:
            A_ub.append(dense)
            b_ub.append(rhs)
            ub_idx.append(k)
        else:
            A_ub.append(-dense)
            b_ub.append(-rhs)
            ub_idx.append(k)
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=list(zip(lb, [u if np.isfinite(u) else None for u in ub])),
                  method="highs")
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if not res.success:
        return LpSolution("numerical-failure")
    duals = [0.0] * m.n_rows
    if res.ineqlin is not None:
        for pos, k in enumerate(ub_idx):
            d = -float(res.ineqlin.marginals[pos])
            duals[k] = d if m.rows[k][1] == LE else -d
    if res.eqlin is not None:
        for pos, k in enumerate(eq_idx):
            duals[k] = -float(res.eqlin.marginals[pos])
    obj = -float(res.fun)
    return LpSolution("optimal", obj, [float(v) for v in res.x], duals, obj,
                      int(res.nit))


# ---------------------------------------------------------------------------
# Branch and bound for integer marks
# ---------------------------------------------------------------------------

def solve_mip(m: LpModel, node_limit: int = 200_000) -> LpSolution:
    """LP-based branch and bound; exact for integer data at desk scale."""
    int_idx = m.integer_indices()
    base_lb = np.array([v.lb for v in m.vars])
    base_ub = np.array([v.ub for v in m.vars])
    root = _solve_lp_builtin(m, base_lb, base_ub)
    if root.status in ("infeasible", "numerical-failure"):
        return LpSolution(root.status)
    if root.status == "unbounded":
        return LpSolution("unbounded")
    if not int_idx:
        return root

    best: Optional[LpSolution] = None
    best_obj = -np.inf
    counter = 0
    heap = [(-root.obj, counter, base_lb, base_ub, root)]
    nodes = 0
    while heap:
        neg_bound, _, nlb, nub, sol = heapq.heappop(heap)
        nodes += 1
        if nodes > node_limit:
            return LpSolution("numerical-failure")
        if -neg_bound <= best_obj + 1e-9:
            continue
        frac_j, frac_dist = -1, -1.0
        for j in int_idx:
            f = sol.x[j] - np.floor(sol.x[j] + INT_TOL)
            if f > INT_TOL and f < 1 - INT_TOL:
                d = abs(f - 0.5)
                if frac_j < 0 or d < frac_dist - 1e-12:
                    frac_j, frac_dist = j, d
        if frac_j < 0:
            xr = [round(sol.x[j]) if j in int_idx else sol.x[j]
                  for j in range(m.n_vars)]
            objr = float(np.dot([v.obj for v in m.vars], xr))
            if objr > best_obj + 1e-9:
                best_obj = objr
                best = LpSolution("optimal", objr, [float(v) for v in xr], [],
                                  objr, sol.iterations)
            continue
        val = sol.x[frac_j]
        for lo, hi in (((nlb[frac_j]), np.floor(val)), (np.ceil(val), nub[frac_j])):
            clb, cub = nlb.copy(), nub.copy()
            clb[frac_j], cub[frac_j] = max(clb[frac_j], lo), min(cub[frac_j], hi)
            if clb[frac_j] > cub[frac_j] + 1e-12:
                continue
            child = _solve_lp_builtin(m, clb, cub)
            if child.status != "optimal":
                continue
            if child.obj <= best_obj + 1e-9:
                continue
            counter += 1
            heapq.heappush(heap, (-child.obj, counter, clb, cub, child))
    if best is None:
        return LpSolution("infeasible")
    return best
