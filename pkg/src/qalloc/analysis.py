"""Derived economics outputs: marginal products, allocative efficiency,
out-of-sample prediction accuracy, and the enveloping-frontier benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import AllocationResult
from .cqr import (FrontierSet, QuantileFrontier, evaluate_frontier,
                  fit_dea, fit_frontier_set, nearest_quantile)
from .data_model import Panel
from .errors import ConfigError, SolverError, ValidationError
from .lp import EQ, LE, MAXIMIZE, ProgramBuilder, get_backend

_ACTIVE_TOL = 1e-9


def supporting_gradient(frontier: QuantileFrontier, x: np.ndarray) -> np.ndarray:
    """Slope of the supporting hyperplane at x.

    Where several hyperplanes achieve the minimum (a kink), their slopes
    are averaged (subgradient midpoint).
    """
    x = np.asarray(x, dtype=float)
    vals = frontier.alpha + frontier.beta @ x
    vmin = float(np.min(vals))
    active = np.abs(vals - vmin) <= _ACTIVE_TOL * (1.0 + abs(vmin))
    # identical hyperplanes must not be double-counted in the average
    rows = np.unique(np.round(np.column_stack(
        [frontier.alpha[active], frontier.beta[active]]), 9), axis=0)
    return rows[:, 1:].mean(axis=0)


@dataclass(frozen=True)
class MarginalProductReport:
    dmu_ids: tuple[str, ...]
    nearest_tau: np.ndarray          # (n,)
    marginal_products: np.ndarray    # (n, d)
    mean_marginal_product: np.ndarray        # (d,)
    mean_unit_cost: np.ndarray | None        # (d,)
    cost_to_product_ratio: np.ndarray | None  # (d,)
    notice: str | None = None


def marginal_products(frontier_set: FrontierSet,
                      cross_section: Panel) -> MarginalProductReport:
    """Per-DMU slopes at the nearest-quantile supporting hyperplane, with
    industry means and unit-cost ratios when costs are available."""
    n = len(cross_section)
    if n == 0:
        raise ValidationError("empty cross-section")
    d = cross_section.input_dim
    taus = np.empty(n)
    mp = np.empty((n, d))
    for k, obs in enumerate(cross_section.observations):
        tau = nearest_quantile(frontier_set, obs)
        taus[k] = tau
        mp[k] = supporting_gradient(frontier_set.for_tau(tau),
                                    np.asarray(obs.inputs_x))
    mean_mp = mp.mean(axis=0)
    costs = [o.unit_costs for o in cross_section.observations]
    if all(c is not None for c in costs):
        mean_cost = np.array(costs, dtype=float).mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(mean_mp != 0.0, mean_cost / mean_mp, np.nan)
        notice = None
    else:
        mean_cost = None
        ratio = None
        notice = "unit costs missing for some DMUs; ratios omitted"
    return MarginalProductReport(
        dmu_ids=tuple(cross_section.dmu_ids()), nearest_tau=taus,
        marginal_products=mp, mean_marginal_product=mean_mp,
        mean_unit_cost=mean_cost, cost_to_product_ratio=ratio, notice=notice)


@dataclass(frozen=True)
class EfficiencyReport:
    current_output: float
    optimal_output: dict[str, float]          # model -> Y*
    allocative_efficiency: dict[str, float]   # model -> percent
    potential_gain: dict[str, float]          # model -> percent


def allocative_efficiency(cross_section: Panel,
                          results: dict[str, AllocationResult] | list[AllocationResult]
                          ) -> EfficiencyReport:
    """current_Y / Y* x 100 per model, plus the implied potential gains."""
    if not isinstance(results, dict):
        results = {r.model: r for r in results}
    current = float(cross_section.outputs_vector().sum())
    if abs(current) < 1e-12:
        raise ValidationError("current output is zero; efficiency undefined")
    optimal = {m: r.total_output for m, r in results.items()}
    eff = {m: 100.0 * current / y for m, y in optimal.items()}
    gain = {m: 100.0 * (y / current - 1.0) for m, y in optimal.items()}
    return EfficiencyReport(current, optimal, eff, gain)


@dataclass(frozen=True)
class MsePrediction:
    target_years: tuple[int, ...]
    mse_cqr: np.ndarray
    mse_dea: np.ndarray
    joined_counts: tuple[int, ...]
    excluded_counts: tuple[int, ...]

    @property
    def average_cqr(self) -> float:
        return float(np.mean(self.mse_cqr))

    @property
    def average_dea(self) -> float:
        return float(np.mean(self.mse_dea))


def oos_mse(panel: Panel, rts: str = "vrs", backend: str = "builtin",
            options=None) -> MsePrediction:
    """Year-ahead prediction accuracy of the nearest-quantile rule versus
    carrying the enveloping-frontier residual forward.

    For each consecutive year pair (t, t+1): frontiers fitted on year t,
    DMUs inner-joined on id; CQR predicts f_t^{tau_i}(x_{t+1}), DEA
    predicts f_t^{env}(x_{t+1}) - eps_minus_{t,i}.
    """
    years = panel.periods
    if len(years) < 2:
        raise ValidationError("need at least two periods")
    targets, mses_c, mses_d, joins, excls = [], [], [], [], []
    for t, t1 in zip(years[:-1], years[1:]):
        base = panel.cross_section(t)
        nxt = panel.cross_section(t1)
        nxt_by_id = {o.dmu_id: o for o in nxt.observations}
        fs = fit_frontier_set(base, rts=rts, backend=backend, options=options)
        dea = fit_dea(base, rts=rts, backend=backend, options=options)
        dea_resid = {o.dmu_id: dea.eps_minus[k]
                     for k, o in enumerate(base.observations)}
        errs_c, errs_d = [], []
        excluded = 0
        for obs in base.observations:
            if obs.dmu_id not in nxt_by_id:
                excluded += 1
                continue
            new = nxt_by_id[obs.dmu_id]
            x_new = np.asarray(new.inputs_x)
            tau = nearest_quantile(fs, obs)
            y_cqr = evaluate_frontier(fs.for_tau(tau), x_new)
            y_dea = evaluate_frontier(dea, x_new) - dea_resid[obs.dmu_id]
            errs_c.append((y_cqr - new.output_y) ** 2)
            errs_d.append((y_dea - new.output_y) ** 2)
        excluded += sum(1 for i in nxt_by_id if i not in set(base.dmu_ids()))
        if not errs_c:
            raise ValidationError(f"no DMUs present in both {t} and {t1}")
        targets.append(t1)
        mses_c.append(float(np.mean(errs_c)))
        mses_d.append(float(np.mean(errs_d)))
        joins.append(len(errs_c))
        excls.append(excluded)
    return MsePrediction(tuple(targets), np.array(mses_c), np.array(mses_d),
                         tuple(joins), tuple(excls))


def benchmark_dea_allocation(cross_section: Panel,
                             lower: float = 0.9, upper: float = 1.3,
                             aggregate_scale: float = 1.01,
                             aggregate_fixed: bool = False,
                             rts: str = "vrs", backend: str = "builtin",
                             options=None) -> float:
    """Optimal total output when every DMU moves along the enveloping
    frontier within per-DMU input-change bounds.

    lower/upper scale each DMU's observed inputs; the aggregate row is an
    equality at the observed total when aggregate_fixed, otherwise a cap
    at aggregate_scale times the observed total.
    """
    if lower > upper:
        raise ConfigError("lower bound factor exceeds upper bound factor")
    frontier = fit_dea(cross_section, rts=rts, backend=backend, options=options)
    x_obs = cross_section.inputs_matrix()
    n, d = x_obs.shape
    alphas, betas = frontier.unique_hyperplanes()
    b = ProgramBuilder()
    for i in range(n):
        b.add_var(f"y[{i}]", lb=-np.inf, ub=np.inf)
        for j in range(d):
            b.add_var(f"x[{i},{j}]", lb=float(lower * x_obs[i, j]),
                      ub=float(upper * x_obs[i, j]))
    for i in range(n):
        for h in range(alphas.shape[0]):
            terms = {f"y[{i}]": 1.0}
            for j in range(d):
                terms[f"x[{i},{j}]"] = -betas[h, j]
            b.add_constraint(terms, LE, float(alphas[h]))
    total = x_obs.sum(axis=0)
    rel = EQ if aggregate_fixed else LE
    scale = 1.0 if aggregate_fixed else aggregate_scale
    for j in range(d):
        b.add_constraint({f"x[{i},{j}]": 1.0 for i in range(n)}, rel,
                         float(scale * total[j]))
    b.set_objective(MAXIMIZE, {f"y[{i}]": 1.0 for i in range(n)})
    sol = get_backend(backend).solve_lp(b.build(), options)
    if not sol.is_optimal:
        raise SolverError(f"DEA benchmark allocation failed: {sol.status}")
    return float(sol.objective_value)
