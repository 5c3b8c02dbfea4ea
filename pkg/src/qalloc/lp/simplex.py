"""Two-phase primal simplex on a dense tableau.

Entering columns follow Dantzig's rule; the leaving row uses a
lexicographic ratio test (over the B^-1 block carried by the initial
basic columns) with a pivot-magnitude filter that protects tableau
conditioning.  Heavily degenerate instances (the shape-constrained
estimation problems have O(n^2) constraints meeting at each vertex) are
handled by the standard perturbation device: the right-hand side is
nudged by a tiny deterministic random amount so every vertex becomes
non-degenerate, the perturbed problem is solved, and the final basis is
then re-evaluated against the true right-hand side.  The resulting
point is verified for feasibility and exact optimality; on failure the
solve is retried with a smaller perturbation.
Bounds are folded into the tableau by variable shifts (finite lower
bounds), reflections (upper-bounded-only variables), splits (free
variables) and explicit upper-bound rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (EQ, GE, INF, ITERATION_LIMIT, LE, MAXIMIZE, INFEASIBLE,
                    OPTIMAL, UNBOUNDED, LinearProgram, Solution,
                    check_feasible)


@dataclass
class SolverOptions:
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-9
    integrality_tol: float = 1e-6
    pivot_tol: float = 1e-9
    max_iterations: int = 200_000
    stall_threshold: int = 50  # degenerate pivots before pure lexicographic mode
    node_limit: int = 100_000
    depth_limit: int = 10_000


@dataclass
class _StdForm:
    """Standard form min c'u, A u (rel) b, u >= 0, plus the inverse map."""

    c: np.ndarray
    A: np.ndarray
    relations: list[str]
    b: np.ndarray
    # var j of the original LP is offset[j] + sum(coef * u[k] for k, coef in terms[j])
    offsets: np.ndarray
    terms: list[list[tuple[int, float]]]
    row_flip: np.ndarray          # +1/-1 per original row (b-sign normalization)
    num_orig_rows: int
    const_shift: float            # objective constant from shifts/fixed vars
    negated: bool                 # True when the original sense was maximize


def _to_standard_form(lp: LinearProgram) -> _StdForm:
    n = lp.num_vars
    c = lp.c.copy()
    negated = lp.sense == MAXIMIZE
    if negated:
        c = -c

    offsets = np.zeros(n)
    terms: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    ub_rows: list[tuple[int, float]] = []   # (std var index, upper bound)
    k = 0
    for j in range(n):
        lo, hi = lp.bounds[j]
        if lo == hi:
            offsets[j] = lo  # fixed variable, substituted out
            continue
        if lo == -INF and hi == INF:
            terms[j] = [(k, 1.0), (k + 1, -1.0)]
            k += 2
        elif lo != -INF:
            offsets[j] = lo
            terms[j] = [(k, 1.0)]
            if hi != INF:
                ub_rows.append((k, hi - lo))
            k += 1
        else:  # upper bound only: x = hi - u
            offsets[j] = hi
            terms[j] = [(k, -1.0)]
            k += 1
    ns = k

    dense = lp.A.toarray()
    m0 = lp.num_rows
    m = m0 + len(ub_rows)
    A = np.zeros((m, ns))
    b = np.empty(m)
    relations = list(lp.relations) + [LE] * len(ub_rows)
    for i in range(m0):
        row = dense[i]
        b[i] = lp.b[i] - row @ offsets
        for j in range(n):
            if row[j] != 0.0:
                for kk, coef in terms[j]:
                    A[i, kk] += row[j] * coef
    for r, (kk, ub) in enumerate(ub_rows):
        A[m0 + r, kk] = 1.0
        b[m0 + r] = ub

    c_std = np.zeros(ns)
    const = 0.0
    for j in range(n):
        const += c[j] * offsets[j]
        for kk, coef in terms[j]:
            c_std[kk] += c[j] * coef

    row_flip = np.ones(m)
    for i in range(m):
        if b[i] < 0.0:
            A[i] = -A[i]
            b[i] = -b[i]
            row_flip[i] = -1.0
            if relations[i] == LE:
                relations[i] = GE
            elif relations[i] == GE:
                relations[i] = LE

    return _StdForm(c_std, A, relations, b, offsets, terms, row_flip, m0,
                    const, negated)


class _Tableau:
    def __init__(self, std: _StdForm, opts: SolverOptions):
        self.opts = opts
        m, ns = std.A.shape
        self.m = m
        self.ns = ns
        n_slack = sum(1 for r in std.relations if r == LE)
        n_surp = sum(1 for r in std.relations if r == GE)
        n_art = sum(1 for r in std.relations if r in (GE, EQ))
        ncols = ns + n_slack + n_surp + n_art
        self.ncols = ncols
        self.art_start = ns + n_slack + n_surp

        T = np.zeros((m, ncols + 1))
        T[:, :ns] = std.A
        T[:, -1] = std.b
        basis = np.empty(m, dtype=int)
        s = ns
        a = self.art_start
        for i, rel in enumerate(std.relations):
            if rel == LE:
                T[i, s] = 1.0
                basis[i] = s
                s += 1
            elif rel == GE:
                T[i, s] = -1.0
                s += 1
                T[i, a] = 1.0
                basis[i] = a
                a += 1
            else:
                T[i, a] = 1.0
                basis[i] = a
                a += 1
        self.T = T
        self.basis = basis
        # the initial basic columns carry B^-1 throughout; they order the
        # lexicographic ratio test
        self.ref_cols = basis.copy()
        # pristine copy of [columns | b] for periodic refactorization
        self.A_ext = T.copy()
        self.iterations = 0

    def refactorize(self) -> bool:
        """Rebuild the tableau as B^-1 [A | b] from the pristine data.

        Long pivot sequences accumulate round-off in the updated tableau;
        highly degenerate problems (the estimation LPs) need thousands of
        pivots, so the drift must be reset periodically or the walk starts
        chasing phantom reduced costs and can even leave the feasible set.
        """
        B = self.A_ext[:, self.basis]
        try:
            fresh = np.linalg.solve(B, self.A_ext)
        except np.linalg.LinAlgError:
            return False
        self.T[:, :] = fresh
        # basis columns are exactly unit vectors in exact arithmetic
        self.T[:, self.basis] = 0.0
        self.T[np.arange(self.m), self.basis] = 1.0
        return True

    def _pivot(self, row: int, col: int):
        T = self.T
        piv = T[row, col]
        T[row] /= piv
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row])
        # kill residual round-off in the pivot column
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def _lexicographic_leaving(self, ties: np.ndarray, colv: np.ndarray) -> int:
        """Leaving row among ratio ties: lexicographic minimum of the row
        scaled by its pivot element, compared over rhs then the B^-1 block.

        The B^-1 block rows are linearly independent, so the comparison
        always singles out one row; choosing it strictly decreases the
        tableau in lexicographic order, which rules out basis cycling.
        """
        if ties.size == 1:
            return int(ties[0])
        idx = ties
        vals = np.maximum(self.T[idx, -1], 0.0) / colv[idx]
        keep = vals <= np.min(vals) + 1e-12 * (1.0 + np.min(vals))
        idx = idx[keep]
        for c in self.ref_cols:
            if idx.size == 1:
                break
            vals = self.T[idx, c] / colv[idx]
            mn = np.min(vals)
            idx = idx[vals <= mn + 1e-12 * (1.0 + abs(mn))]
        return int(idx[0])

    def run_phase(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        """Minimize cost over the current tableau. Returns a status token."""
        T = self.T
        m = self.m
        opts = self.opts
        # reduced costs r = c - c_B B^-1 A, objective value z = c_B B^-1 b
        c_b = cost[self.basis]
        red = cost[: self.ncols] - c_b @ T[:, : self.ncols]
        obj = float(c_b @ T[:, -1])
        degenerate_run = 0
        since_refresh = 0
        while True:
            if self.iterations >= opts.max_iterations:
                return ITERATION_LIMIT
            if since_refresh >= 200:
                # incremental updates accumulate round-off; rebuild the
                # tableau and the reduced costs exactly from the basis
                self.refactorize()
                c_b = cost[self.basis]
                red = cost[: self.ncols] - c_b @ T[:, : self.ncols]
                obj = float(c_b @ T[:, -1])
                since_refresh = 0
            cand = np.where(allowed & (red < -opts.optimality_tol))[0]
            if cand.size == 0:
                self.refactorize()
                c_b = cost[self.basis]
                red = cost[: self.ncols] - c_b @ T[:, : self.ncols]
                cand = np.where(allowed & (red < -opts.optimality_tol))[0]
                if cand.size == 0:
                    self._obj = float(c_b @ T[:, -1])
                    return OPTIMAL
                since_refresh = 0
            col = int(cand[np.argmin(red[cand])])
            colv = T[:, col]
            pos = np.where(colv > opts.pivot_tol)[0]
            if pos.size == 0:
                return UNBOUNDED
            # negative rhs is round-off; treating it as zero preserves
            # feasibility instead of amplifying the error
            ratios = np.maximum(T[pos, -1], 0.0) / colv[pos]
            best = np.min(ratios)
            ties = pos[ratios <= best + 1e-9 * (1.0 + best)]
            if degenerate_run < opts.stall_threshold:
                # never divide by a pivot element far smaller than the best
                # available one; tiny pivots destroy tableau conditioning.
                # On a long degenerate stall the filter is dropped so the
                # lexicographic rule's termination argument applies.
                ties = ties[colv[ties] >= 0.01 * np.max(colv[ties])]
            row = self._lexicographic_leaving(ties, colv)
            if best <= opts.pivot_tol:
                degenerate_run += 1
            else:
                degenerate_run = 0
            entering_red = red[col]
            self._pivot(row, col)
            # update reduced costs by the same elimination
            red -= entering_red * T[row, : self.ncols]
            red[col] = 0.0
            obj += entering_red * T[row, -1]
            self.iterations += 1
            since_refresh += 1


# right-hand-side perturbation scales tried in order; each retry uses a
# fresh deterministic perturbation, the last rung solves unperturbed
_PERTURBATION_LADDER = (1e-7, 1e-9, 0.0)


def solve_lp_simplex(lp: LinearProgram, options: SolverOptions | None = None) -> Solution:
    opts = options or SolverOptions()
    std = _to_standard_form(lp)
    m, ns = std.A.shape

    if ns == 0:
        # every variable fixed; check feasibility directly
        ok = all(
            (rel == LE and bi >= -opts.feasibility_tol)
            or (rel == GE and bi <= opts.feasibility_tol)
            or (rel == EQ and abs(bi) <= opts.feasibility_tol)
            for rel, bi in zip(std.relations, std.b)
        )
        if not ok:
            return Solution(INFEASIBLE)
        x = std.offsets.copy()
        obj = float(lp.c @ x)
        return Solution(OPTIMAL, x=x, objective_value=obj,
                        duals=np.zeros(lp.num_rows))

    last: Solution | None = None
    for attempt, scale in enumerate(_PERTURBATION_LADDER):
        sol = _solve_attempt(lp, std, opts, scale, attempt)
        if sol.status == UNBOUNDED:
            return sol  # rhs-independent once feasible
        if sol.status == INFEASIBLE and scale == 0.0:
            return sol  # trusted only without perturbation
        if sol.status == OPTIMAL:
            return sol
        last = sol
    return last


def _solve_attempt(lp: LinearProgram, std: _StdForm, opts: SolverOptions,
                   scale: float, attempt: int) -> Solution:
    """One full two-phase solve, optionally on a perturbed right-hand side.

    Returns a verified OPTIMAL solution, INFEASIBLE/UNBOUNDED, or
    ITERATION_LIMIT when the walk ran out of pivots or the final basis
    failed verification against the true right-hand side.
    """
    m, ns = std.A.shape
    if scale > 0.0:
        rng = np.random.default_rng(attempt)
        delta = scale * (1.0 + std.b) * rng.random(m)
    else:
        delta = np.zeros(m)
    work = _StdForm(std.c, std.A, std.relations, std.b + delta, std.offsets,
                    std.terms, std.row_flip, std.num_orig_rows,
                    std.const_shift, std.negated)

    tab = _Tableau(work, opts)
    ncols = tab.ncols
    art_start = tab.art_start

    allowed = np.ones(ncols, dtype=bool)
    if art_start < ncols:
        phase1_cost = np.zeros(ncols)
        phase1_cost[art_start:] = 1.0
        status = tab.run_phase(phase1_cost, allowed)
        if status == ITERATION_LIMIT:
            return Solution(ITERATION_LIMIT, iterations=tab.iterations)
        slack = opts.feasibility_tol * (1.0 + float(np.sum(work.b)))
        if tab._obj > slack + float(np.sum(delta)):
            return Solution(INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, opts)

    phase2_cost = np.zeros(ncols)
    phase2_cost[:ns] = std.c
    allowed = np.ones(ncols, dtype=bool)
    allowed[art_start:] = False
    status = tab.run_phase(phase2_cost, allowed)
    if status == ITERATION_LIMIT:
        return Solution(ITERATION_LIMIT, iterations=tab.iterations)
    if status == UNBOUNDED:
        return Solution(UNBOUNDED, iterations=tab.iterations)

    # re-evaluate the final basis against the true right-hand side and
    # verify the vertex before reporting it
    B = tab.A_ext[:, tab.basis]
    try:
        xb = np.linalg.solve(B, std.b)
    except np.linalg.LinAlgError:
        return Solution(ITERATION_LIMIT, iterations=tab.iterations)
    b_scale = 1.0 + float(np.max(np.abs(std.b))) if m else 1.0
    if np.min(xb, initial=0.0) < -opts.feasibility_tol * b_scale:
        return Solution(ITERATION_LIMIT, iterations=tab.iterations)
    xb = np.maximum(xb, 0.0)

    u = np.zeros(ncols)
    u[tab.basis] = xb
    if float(np.max(u[art_start:], initial=0.0)) > opts.feasibility_tol * b_scale:
        return Solution(ITERATION_LIMIT, iterations=tab.iterations)
    x = std.offsets.copy()
    for j, tj in enumerate(std.terms):
        for kk, coef in tj:
            x[j] += coef * u[kk]
    if not check_feasible(lp, x, tol=10.0 * opts.feasibility_tol):
        return Solution(ITERATION_LIMIT, iterations=tab.iterations)
    obj = float(lp.c @ x)
    duals = _recover_duals(lp, std, tab, phase2_cost)
    return Solution(OPTIMAL, x=x, objective_value=obj, duals=duals,
                    iterations=tab.iterations)


def _drive_out_artificials(tab: _Tableau, opts: SolverOptions):
    """Pivot basic artificials (at value zero) onto structural columns."""
    for i in range(tab.m):
        if tab.basis[i] >= tab.art_start:
            row = tab.T[i, : tab.art_start]
            nz = np.where(np.abs(row) > opts.pivot_tol)[0]
            if nz.size:
                tab._pivot(i, int(nz[0]))
            # else: redundant row; the artificial stays basic at zero and is
            # barred from re-entering, so it cannot become positive


def _recover_duals(lp: LinearProgram, std: _StdForm, tab: _Tableau,
                   cost: np.ndarray) -> np.ndarray | None:
    """Duals of the original rows via c_B B^{-1} on the standard form."""
    try:
        n_std_rows = tab.m
        B = np.zeros((n_std_rows, n_std_rows))
        A_full = np.zeros((n_std_rows, tab.ncols))
        A_full[:, : tab.ns] = std.A
        s = tab.ns
        a = tab.art_start
        for i, rel in enumerate(std.relations):
            if rel == LE:
                A_full[i, s] = 1.0
                s += 1
            elif rel == GE:
                A_full[i, s] = -1.0
                s += 1
                A_full[i, a] = 1.0
                a += 1
            else:
                A_full[i, a] = 1.0
                a += 1
        B[:, :] = A_full[:, tab.basis]
        y = np.linalg.solve(B.T, cost[tab.basis])
    except np.linalg.LinAlgError:
        return None
    y = y[: std.num_orig_rows] * std.row_flip[: std.num_orig_rows]
    if std.negated:
        y = -y
    return y
