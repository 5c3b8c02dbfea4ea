"""Branch-and-bound over binary variables on top of an LP solve callable.

Best-bound node selection, branching on the most fractional binary.
Node and depth caps return the incumbent with an explicit bound gap
instead of failing silently.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .model import (INFEASIBLE, ITERATION_LIMIT, MAXIMIZE, OPTIMAL, UNBOUNDED,
                    LinearProgram, MilpProgram, Solution)
from .simplex import SolverOptions, solve_lp_simplex


def solve_milp_bb(mip: MilpProgram, options: SolverOptions | None = None,
                  lp_solver=solve_lp_simplex) -> Solution:
    opts = options or SolverOptions()
    lp = mip.base
    binaries = sorted(mip.binary_vars)
    if not binaries:
        return lp_solver(lp, opts)
    maximize = lp.sense == MAXIMIZE
    sign = -1.0 if maximize else 1.0  # heap orders by sign * bound

    incumbent: Solution | None = None
    incumbent_obj = -np.inf if maximize else np.inf

    def relax(fixings: dict[int, float]) -> Solution:
        bounds = list(lp.bounds)
        for j, v in fixings.items():
            bounds[j] = (v, v)
        sub = LinearProgram(lp.sense, lp.c, lp.A, lp.relations, lp.b, bounds,
                            var_names=lp.var_names, row_names=lp.row_names)
        return lp_solver(sub, opts)

    counter = itertools.count()
    root = relax({})
    if root.status == INFEASIBLE:
        return Solution(INFEASIBLE)
    if root.status == UNBOUNDED:
        return Solution(UNBOUNDED)
    if root.status == ITERATION_LIMIT:
        return Solution(ITERATION_LIMIT)

    heap = [(sign * root.objective_value, next(counter), {}, root, 0)]
    nodes = 0
    best_bound = root.objective_value
    limit_hit = False

    def better(obj):
        return obj > incumbent_obj + 1e-12 if maximize else obj < incumbent_obj - 1e-12

    while heap:
        key, _, fixings, sol, depth = heapq.heappop(heap)
        bound = sign * key
        best_bound = bound
        if incumbent is not None:
            if maximize and bound <= incumbent_obj + 1e-9:
                break
            if not maximize and bound >= incumbent_obj - 1e-9:
                break
        x = sol.x
        frac = {j: abs(x[j] - round(x[j])) for j in binaries if j not in fixings}
        fractional = {j: f for j, f in frac.items() if f > opts.integrality_tol}
        if not fractional:
            if incumbent is None or better(sol.objective_value):
                incumbent = sol
                incumbent_obj = sol.objective_value
            continue
        if nodes >= opts.node_limit or depth >= opts.depth_limit:
            limit_hit = True
            continue
        branch_var = max(fractional, key=fractional.get)
        for v in (0.0, 1.0):
            child_fix = dict(fixings)
            child_fix[branch_var] = v
            child = relax(child_fix)
            nodes += 2 if v else 0  # count pairs once both solved
            if child.status != OPTIMAL:
                continue
            if incumbent is not None:
                if maximize and child.objective_value <= incumbent_obj + 1e-9:
                    continue
                if not maximize and child.objective_value >= incumbent_obj - 1e-9:
                    continue
            heapq.heappush(heap, (sign * child.objective_value, next(counter),
                                  child_fix, child, depth + 1))

    if incumbent is None:
        if limit_hit:
            return Solution(ITERATION_LIMIT, nodes=nodes)
        return Solution(INFEASIBLE, nodes=nodes)

    x = incumbent.x.copy()
    for j in binaries:
        x[j] = round(x[j])
    status = OPTIMAL
    gap = None
    if limit_hit or heap:
        # remaining open nodes may still beat the incumbent
        open_bounds = [sign * k for k, *_ in heap] + ([best_bound] if limit_hit else [])
        if open_bounds:
            outstanding = max(open_bounds) if maximize else min(open_bounds)
            gap = abs(outstanding - incumbent_obj)
            if limit_hit and gap > 1e-9 * (1.0 + abs(incumbent_obj)):
                status = ITERATION_LIMIT
    return Solution(status, x=x, objective_value=incumbent.objective_value,
                    gap=gap, nodes=nodes)
