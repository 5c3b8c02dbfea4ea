"""Pluggable solver backends behind a common contract.

A backend exposes solve_lp(lp, options) and solve_milp(mip, options), both
returning a Solution. 'builtin' is the dense two-phase simplex plus
branch-and-bound; 'scipy' wraps scipy.optimize (HiGHS) and serves as an
independent cross-check in the test suite.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize, sparse

from ..errors import ConfigError
from .model import (EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, MAXIMIZE,
                    OPTIMAL, UNBOUNDED, LinearProgram, MilpProgram, Solution)
from .branch_bound import solve_milp_bb
from .simplex import SolverOptions, solve_lp_simplex


class BuiltinBackend:
    name = "builtin"

    def solve_lp(self, lp: LinearProgram, options: SolverOptions | None = None) -> Solution:
        return solve_lp_simplex(lp, options)

    def solve_milp(self, mip: MilpProgram, options: SolverOptions | None = None) -> Solution:
        return solve_milp_bb(mip, options)


class ScipyBackend:
    name = "scipy"

    @staticmethod
    def _split(lp: LinearProgram):
        A = lp.A.tocsr()
        rel = np.array(lp.relations)
        le = rel == LE
        ge = rel == GE
        eq = rel == EQ
        A_ub = sparse.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
        b_ub = np.concatenate([lp.b[le], -lp.b[ge]]) if A_ub is not None else None
        A_eq = A[eq] if eq.any() else None
        b_eq = lp.b[eq] if A_eq is not None else None
        return A_ub, b_ub, A_eq, b_eq

    @staticmethod
    def _status(res) -> str:
        return {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(
            res.status, INFEASIBLE)

    def solve_lp(self, lp: LinearProgram, options: SolverOptions | None = None) -> Solution:
        c = lp.c if lp.sense != MAXIMIZE else -lp.c
        A_ub, b_ub, A_eq, b_eq = self._split(lp)
        bounds = [(lo if lo != -np.inf else None, hi if hi != np.inf else None)
                  for lo, hi in lp.bounds]
        res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                               bounds=bounds, method="highs")
        status = self._status(res)
        if status != OPTIMAL:
            return Solution(status)
        obj = float(lp.c @ res.x)
        return Solution(OPTIMAL, x=np.asarray(res.x), objective_value=obj,
                        iterations=int(res.nit))

    def solve_milp(self, mip: MilpProgram, options: SolverOptions | None = None) -> Solution:
        lp = mip.base
        c = lp.c if lp.sense != MAXIMIZE else -lp.c
        rel = np.array(lp.relations)
        lb = np.where(rel == LE, -np.inf, lp.b)
        ub = np.where(rel == GE, np.inf, lp.b)
        constraints = optimize.LinearConstraint(lp.A, lb, ub)
        integrality = np.zeros(lp.num_vars)
        for j in mip.binary_vars:
            integrality[j] = 1
        bnds = optimize.Bounds(np.array([b[0] for b in lp.bounds]),
                               np.array([b[1] for b in lp.bounds]))
        res = optimize.milp(c, constraints=constraints, integrality=integrality,
                            bounds=bnds)
        if res.status == 0:
            obj = float(lp.c @ res.x)
            return Solution(OPTIMAL, x=np.asarray(res.x), objective_value=obj)
        return Solution({2: INFEASIBLE, 3: UNBOUNDED, 1: ITERATION_LIMIT}.get(
            res.status, INFEASIBLE))


_REGISTRY: dict[str, object] = {}


def register_backend(name: str, backend) -> None:
    _REGISTRY[name] = backend


def get_backend(name: str):
    if name not in _REGISTRY:
        raise ConfigError(
            f"unknown solver backend {name!r}; registered: {sorted(_REGISTRY)}")
    return _REGISTRY[name]


def available_backends() -> list[str]:
    return sorted(_REGISTRY)


register_backend("builtin", BuiltinBackend())
register_backend("scipy", ScipyBackend())


def solve_lp(lp: LinearProgram, backend: str = "builtin",
             options: SolverOptions | None = None) -> Solution:
    return get_backend(backend).solve_lp(lp, options)


def solve_milp(mip: MilpProgram, backend: str = "builtin",
               options: SolverOptions | None = None) -> Solution:
    return get_backend(backend).solve_milp(mip, options)
