"""The four quantile resource-allocation programs over fitted frontiers.

Model keys:
    lp6    reallocation between and within deciles, no exit (LP)
    milp7  between and within deciles, exit allowed (MILP)
    lp8    within deciles only, no exit (LP)
    milp9  within deciles only, exit allowed (MILP)

Each decile's technology is a min-of-affine frontier; pseudo-DMUs are
counterfactual units tied to a decile, not to any observed firm. Only the
frontier coefficients and the aggregate input totals enter the programs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cqr import FrontierSet, QuantileFrontier, evaluate_frontier
from .data_model import IndustryTotals
from .errors import AuditError, ConfigError, SolverError, ValidationError
from .lp import (EQ, LE, MAXIMIZE, MilpProgram, ProgramBuilder, Solution,
                 SolverOptions, get_backend)

MODELS = ("lp6", "milp7", "lp8", "milp9")

BETWEEN_AND_WITHIN = "between_and_within"
WITHIN_ONLY = "within_only"


@dataclass(frozen=True)
class AllocationScenario:
    mode: str = BETWEEN_AND_WITHIN
    exit_allowed: bool = False
    gamma: float = 1.0              # aggregate-input scale (1.01 = +1%)
    pseudo_dmus_per_decile: int = 1
    big_m_output: np.ndarray | None = None   # per-decile override
    big_m_input: np.ndarray | None = None    # per-input-component override

    def __post_init__(self):
        if self.mode not in (BETWEEN_AND_WITHIN, WITHIN_ONLY):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.gamma > 0.0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.pseudo_dmus_per_decile < 1:
            raise ValidationError("need at least one pseudo-DMU per decile")

    @property
    def model(self) -> str:
        if self.mode == BETWEEN_AND_WITHIN:
            return "milp7" if self.exit_allowed else "lp6"
        return "milp9" if self.exit_allowed else "lp8"

    @classmethod
    def for_model(cls, model: str, **kwargs) -> "AllocationScenario":
        if model not in MODELS:
            raise ConfigError(f"unknown model {model!r}; valid: {MODELS}")
        mode = BETWEEN_AND_WITHIN if model in ("lp6", "milp7") else WITHIN_ONLY
        exit_allowed = model in ("milp7", "milp9")
        return cls(mode=mode, exit_allowed=exit_allowed, **kwargs)


def pseudo_dmus_for_sample(n_dmus: int) -> int:
    """ceil(N / 10) pseudo-DMUs per decile."""
    return -(-n_dmus // 10)


@dataclass(frozen=True)
class AllocationResult:
    model: str
    x_alloc: np.ndarray      # (deciles, pseudo, d)
    y_alloc: np.ndarray      # (deciles, pseudo)
    b_active: np.ndarray     # (deciles, pseudo) bool, all True without exit
    total_output: float
    gamma: float
    status: str = "optimal"
    gap: float | None = None

    @property
    def decile_inputs(self) -> np.ndarray:
        return self.x_alloc.sum(axis=1)

    @property
    def decile_outputs(self) -> np.ndarray:
        return self.y_alloc.sum(axis=1)


def _normalize_frontiers(frontiers) -> list[QuantileFrontier]:
    if isinstance(frontiers, FrontierSet):
        return list(frontiers.frontiers)
    return list(frontiers)


def _normalize_totals(totals, n_deciles: int, d: int):
    """Returns (X, X_per_decile or None)."""
    if isinstance(totals, IndustryTotals):
        total, per = totals.total_inputs, totals.per_decile
    elif isinstance(totals, tuple):
        total, per = totals
    else:
        total, per = np.asarray(totals, dtype=float), None
    total = np.asarray(total, dtype=float)
    if total.shape != (d,):
        raise ValidationError(f"totals dimension {total.shape} != ({d},)")
    if np.any(total < 0):
        raise ValidationError("negative component in aggregate inputs")
    if per is not None:
        per = np.asarray(per, dtype=float)
        if per.shape != (n_deciles, d):
            raise ValidationError(
                f"per-decile totals shape {per.shape} != ({n_deciles}, {d})")
    return total, per


def compute_big_m(frontiers, totals, scenario: AllocationScenario):
    """Deactivation constants: per-decile output caps and the input vector.

    The output M for decile t is the frontier value at the full (scaled)
    aggregate input plus a unit safety margin; monotonicity makes this an
    upper bound on any single unit's output. The input M is gamma * X
    componentwise.
    """
    fronts = _normalize_frontiers(frontiers)
    d = fronts[0].input_dim
    X, _ = _normalize_totals(totals, len(fronts), d)
    cap = scenario.gamma * X
    m_out = np.array([evaluate_frontier(f, cap) + 1.0 for f in fronts])
    if scenario.big_m_output is not None:
        m_out = np.asarray(scenario.big_m_output, dtype=float)
    m_in = cap.copy()
    if scenario.big_m_input is not None:
        m_in = np.asarray(scenario.big_m_input, dtype=float)
    if not (np.all(np.isfinite(m_out)) and np.all(np.isfinite(m_in))):
        raise ValidationError("Big-M values must be finite")
    return m_out, m_in


def build_allocation_program(frontiers, totals, scenario: AllocationScenario):
    fronts = _normalize_frontiers(frontiers)
    K = len(fronts)
    d = fronts[0].input_dim
    n = scenario.pseudo_dmus_per_decile
    X, Xper = _normalize_totals(totals, K, d)
    if scenario.mode == WITHIN_ONLY and Xper is None:
        raise ConfigError("within-decile models need per-decile totals")
    gamma = scenario.gamma

    b = ProgramBuilder()
    for t in range(K):
        for i in range(n):
            b.add_var(f"y[{t},{i}]", lb=-np.inf, ub=np.inf)
            for j in range(d):
                b.add_var(f"x[{t},{i},{j}]")
            if scenario.exit_allowed:
                b.add_var(f"b[{t},{i}]", binary=True)

    if scenario.exit_allowed:
        m_out, m_in = compute_big_m(fronts, totals, scenario)

    for t, f in enumerate(fronts):
        alphas, betas = f.unique_hyperplanes()
        for i in range(n):
            for h in range(alphas.shape[0]):
                terms = {f"y[{t},{i}]": 1.0}
                for j in range(d):
                    terms[f"x[{t},{i},{j}]"] = -betas[h, j]
                rhs = float(alphas[h])
                if scenario.exit_allowed:
                    # y <= alpha + beta x + (1 - b) M
                    terms[f"b[{t},{i}]"] = float(m_out[t])
                    rhs += float(m_out[t])
                b.add_constraint(terms, LE, rhs, name=f"tech[{t},{i},{h}]")
            if scenario.exit_allowed:
                b.add_constraint({f"y[{t},{i}]": 1.0,
                                  f"b[{t},{i}]": -float(m_out[t])}, LE, 0.0,
                                 name=f"yoff[{t},{i}]")
                for j in range(d):
                    b.add_constraint({f"x[{t},{i},{j}]": 1.0,
                                      f"b[{t},{i}]": -float(m_in[j])}, LE, 0.0,
                                     name=f"xoff[{t},{i},{j}]")

    rel = LE if scenario.exit_allowed else EQ
    if scenario.mode == BETWEEN_AND_WITHIN:
        for j in range(d):
            terms = {f"x[{t},{i},{j}]": 1.0 for t in range(K) for i in range(n)}
            b.add_constraint(terms, rel, float(gamma * X[j]), name=f"res[{j}]")
    else:
        for t in range(K):
            for j in range(d):
                terms = {f"x[{t},{i},{j}]": 1.0 for i in range(n)}
                b.add_constraint(terms, rel, float(gamma * Xper[t, j]),
                                 name=f"res[{t},{j}]")
        if scenario.exit_allowed:
            # the printed formulation carries the (redundant) global row too
            for j in range(d):
                terms = {f"x[{t},{i},{j}]": 1.0
                         for t in range(K) for i in range(n)}
                b.add_constraint(terms, LE, float(gamma * X[j]),
                                 name=f"res_total[{j}]")

    b.set_objective(MAXIMIZE, {f"y[{t},{i}]": 1.0
                               for t in range(K) for i in range(n)})
    return b.build()


def _extract_result(program, sol: Solution, scenario: AllocationScenario,
                    K: int, n: int, d: int) -> AllocationResult:
    lp = program.base if isinstance(program, MilpProgram) else program
    names = lp.var_names
    idx = {name: k for k, name in enumerate(names)}
    x_alloc = np.zeros((K, n, d))
    y_alloc = np.zeros((K, n))
    b_active = np.ones((K, n), dtype=bool)
    for t in range(K):
        for i in range(n):
            y_alloc[t, i] = sol.x[idx[f"y[{t},{i}]"]]
            for j in range(d):
                x_alloc[t, i, j] = sol.x[idx[f"x[{t},{i},{j}]"]]
            if scenario.exit_allowed:
                b_active[t, i] = sol.x[idx[f"b[{t},{i}]"]] > 0.5
    x_alloc[np.abs(x_alloc) < 1e-11] = 0.0
    x_alloc[~b_active, :] = 0.0
    y_alloc[~b_active] = 0.0
    return AllocationResult(
        model=scenario.model, x_alloc=x_alloc, y_alloc=y_alloc,
        b_active=b_active, total_output=float(sol.objective_value),
        gamma=scenario.gamma, status=sol.status, gap=sol.gap)


def solve_allocation(frontiers, totals, scenario: AllocationScenario,
                     backend: str = "builtin",
                     options: SolverOptions | None = None,
                     audit: bool = True) -> AllocationResult:
    fronts = _normalize_frontiers(frontiers)
    K = len(fronts)
    d = fronts[0].input_dim
    n = scenario.pseudo_dmus_per_decile
    program = build_allocation_program(fronts, totals, scenario)
    be = get_backend(backend)
    if isinstance(program, MilpProgram):
        sol = be.solve_milp(program, options)
    else:
        sol = be.solve_lp(program, options)
    if sol.status not in ("optimal", "iteration_limit") or sol.x is None:
        raise SolverError(f"allocation model {scenario.model} failed: "
                          f"status={sol.status}")
    result = _extract_result(program, sol, scenario, K, n, d)
    if audit and result.status == "optimal":
        audit_allocation(result, fronts, totals, scenario)
    return result


def solve_baseline(frontiers, totals, scenario=None, **kw) -> AllocationResult:
    scenario = scenario or AllocationScenario.for_model("lp6")
    _expect(scenario, BETWEEN_AND_WITHIN, False)
    return solve_allocation(frontiers, totals, scenario, **kw)


def solve_exit(frontiers, totals, scenario=None, **kw) -> AllocationResult:
    scenario = scenario or AllocationScenario.for_model("milp7")
    _expect(scenario, BETWEEN_AND_WITHIN, True)
    return solve_allocation(frontiers, totals, scenario, **kw)


def solve_within(frontiers, totals, scenario=None, **kw) -> AllocationResult:
    scenario = scenario or AllocationScenario.for_model("lp8")
    _expect(scenario, WITHIN_ONLY, False)
    return solve_allocation(frontiers, totals, scenario, **kw)


def solve_within_exit(frontiers, totals, scenario=None, **kw) -> AllocationResult:
    scenario = scenario or AllocationScenario.for_model("milp9")
    _expect(scenario, WITHIN_ONLY, True)
    return solve_allocation(frontiers, totals, scenario, **kw)


def _expect(scenario: AllocationScenario, mode: str, exit_allowed: bool):
    if scenario.mode != mode or scenario.exit_allowed != exit_allowed:
        raise ConfigError(
            f"scenario ({scenario.mode}, exit={scenario.exit_allowed}) does "
            f"not match the requested model")


def audit_allocation(result: AllocationResult, frontiers, totals,
                     scenario: AllocationScenario, tol: float = 1e-6) -> None:
    """Re-check the returned plan against the raw constraints, independently
    of whichever solver produced it."""
    fronts = _normalize_frontiers(frontiers)
    K = len(fronts)
    d = fronts[0].input_dim
    X, Xper = _normalize_totals(totals, K, d)
    gamma = result.gamma
    scale = tol * (1.0 + float(np.abs(X).sum()))

    if np.any(result.x_alloc < -scale):
        raise AuditError("negative allocated input")
    for t, f in enumerate(fronts):
        cap = evaluate_frontier(f, result.x_alloc[t])
        active = result.b_active[t]
        if np.any(result.y_alloc[t][active] > cap[active] + tol *
                  (1.0 + np.abs(cap[active]))):
            raise AuditError(f"technology violated in decile index {t}")
        if np.any(np.abs(result.y_alloc[t][~active]) > tol) or \
           np.any(np.abs(result.x_alloc[t][~active]) > scale):
            raise AuditError("inactive unit with nonzero plan")

    used_total = result.x_alloc.sum(axis=(0, 1))
    if scenario.mode == BETWEEN_AND_WITHIN:
        if scenario.exit_allowed:
            if np.any(used_total > gamma * X + scale):
                raise AuditError("aggregate resource cap exceeded")
        else:
            if np.any(np.abs(used_total - gamma * X) > scale):
                raise AuditError("aggregate resource equality violated")
    else:
        used = result.x_alloc.sum(axis=1)
        if scenario.exit_allowed:
            if np.any(used > gamma * Xper + scale):
                raise AuditError("per-decile resource cap exceeded")
            if np.any(used_total > gamma * X + scale):
                raise AuditError("aggregate resource cap exceeded")
        else:
            if np.any(np.abs(used - gamma * Xper) > scale):
                raise AuditError("per-decile resource equality violated")


def share_table(result: AllocationResult, totals) -> dict:
    """Percent of each input and of output taken by each decile.

    Rows are reported top decile first (decile 1 = best performers), the
    layout used for publication tables; raw optima are only rounded here.
    """
    K, n, d = result.x_alloc.shape
    input_totals = result.x_alloc.sum(axis=(0, 1))
    output_total = result.y_alloc.sum()
    if abs(output_total) < 1e-12:
        raise ValidationError("total output is zero; shares undefined")
    rows = []
    for decile in range(1, K + 1):
        t = K - decile  # decile 1 corresponds to the highest tau index
        with np.errstate(divide="ignore", invalid="ignore"):
            in_shares = np.where(input_totals > 0,
                                 100.0 * result.x_alloc[t].sum(axis=0) / input_totals,
                                 0.0)
        out_share = 100.0 * result.y_alloc[t].sum() / output_total
        rows.append({"decile": decile,
                     "input_shares": in_shares,
                     "output_share": float(out_share),
                     "input_shares_rounded": [int(round(v)) for v in in_shares],
                     "output_share_rounded": int(round(out_share))})
    return {"model": result.model, "rows": rows}
