"""Convex quantile regression frontiers, the DEA limit, and decile machinery.

A fitted frontier is a min-of-affine function f(x) = min_i {alpha_i + beta_i x}
with beta >= 0 (monotone) and the concavity constraints satisfied at the
sample points. Ten frontiers at tau = 0.05, 0.15, ..., 0.95 make up a
FrontierSet, one per performance decile.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .data_model import Observation, Panel
from .errors import SolverError, ValidationError
from .lp import EQ, LE, MINIMIZE, ProgramBuilder, SolverOptions, get_backend

TAU_GRID: tuple[float, ...] = tuple(round(0.05 + 0.1 * k, 2) for k in range(10))
DEA_LIMIT = "dea"

VRS = "vrs"
CRS = "crs"


@dataclass(frozen=True)
class QuantileFrontier:
    """Per-observation hyperplane coefficients for one quantile."""

    tau: float | str           # a value in (0, 1) or DEA_LIMIT
    rts: str
    alpha: np.ndarray          # (n,)
    beta: np.ndarray           # (n, d)
    eps_plus: np.ndarray       # (n,)
    eps_minus: np.ndarray      # (n,)
    objective_value: float
    dmu_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta",
                           np.atleast_2d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "eps_plus", np.asarray(self.eps_plus, dtype=float))
        object.__setattr__(self, "eps_minus", np.asarray(self.eps_minus, dtype=float))
        if self.beta.shape[0] != self.alpha.shape[0]:
            raise ValidationError("alpha/beta row counts disagree")

    @classmethod
    def from_hyperplanes(cls, tau, alpha, beta, rts: str = VRS) -> "QuantileFrontier":
        """Synthetic frontier from raw hyperplanes (no fit residuals)."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        n = alpha.shape[0]
        z = np.zeros(n)
        return cls(tau, rts, alpha, beta, z, z.copy(), 0.0)

    @property
    def num_hyperplanes(self) -> int:
        return self.alpha.shape[0]

    @property
    def input_dim(self) -> int:
        return self.beta.shape[1]

    def unique_hyperplanes(self, decimals: int = 9) -> tuple[np.ndarray, np.ndarray]:
        """Distinct (alpha, beta) rows; CQR solutions repeat most of them."""
        stacked = np.round(np.column_stack([self.alpha, self.beta]), decimals)
        _, idx = np.unique(stacked, axis=0, return_index=True)
        return self.alpha[idx], self.beta[idx]

    def __call__(self, x) -> np.ndarray | float:
        return evaluate_frontier(self, x)

    def check_fit(self, x: np.ndarray, y: np.ndarray, tol: float = 1e-6) -> None:
        """Assert problem invariants at the sample points."""
        if np.min(self.beta) < -tol:
            raise ValidationError("negative beta component")
        fit = self.alpha + np.einsum("ij,ij->i", self.beta, x)
        resid = y - fit - self.eps_plus + self.eps_minus
        if np.max(np.abs(resid)) > tol:
            raise ValidationError("regression identity violated")
        # concavity: own hyperplane is the active minimum at the own point
        env = evaluate_frontier(self, x)
        if np.max(fit - env) > tol:
            raise ValidationError("concavity constraints violated at data points")
        if self.rts == CRS and np.max(np.abs(self.alpha)) > tol:
            raise ValidationError("CRS frontier with nonzero intercepts")


def evaluate_frontier(frontier: QuantileFrontier, x) -> np.ndarray | float:
    """Min-of-affine evaluation f(x) = min_i {alpha_i + beta_i . x}."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != frontier.input_dim:
        raise ValidationError(
            f"input dimension {pts.shape[1]} != frontier dimension "
            f"{frontier.input_dim}")
    vals = np.min(frontier.alpha[None, :] + pts @ frontier.beta.T, axis=1)
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class FrontierSet:
    """The ten decile frontiers fitted on one cross-section."""

    frontiers: tuple[QuantileFrontier, ...]
    dmu_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        taus = tuple(f.tau for f in self.frontiers)
        if taus != TAU_GRID:
            raise ValidationError(
                f"FrontierSet needs frontiers at {TAU_GRID}, got {taus}")

    def __iter__(self):
        return iter(self.frontiers)

    def __len__(self):
        return len(self.frontiers)

    def for_tau(self, tau: float) -> QuantileFrontier:
        return self.frontiers[TAU_GRID.index(tau)]


@dataclass(frozen=True)
class DecileAssignment:
    """dmu_id -> (decile 1..10, nearest tau). Decile 1 is the top 90-100%."""

    mapping: dict[str, tuple[int, float]]

    def __post_init__(self):
        sizes = np.bincount([d for d, _ in self.mapping.values()], minlength=11)[1:]
        nonzero = sizes[sizes > 0]
        if nonzero.size and nonzero.max() - nonzero.min() > 1:
            raise ValidationError("decile sizes differ by more than one")

    def decile_of(self, dmu_id: str) -> int:
        return self.mapping[dmu_id][0]

    def nearest_tau_of(self, dmu_id: str) -> float:
        return self.mapping[dmu_id][1]

    def __len__(self):
        return len(self.mapping)


def _check_cross_section(cross_section: Panel) -> tuple[np.ndarray, np.ndarray]:
    if len(cross_section) == 0:
        raise ValidationError("empty cross-section")
    if len(cross_section.periods) > 1:
        raise ValidationError(
            f"cross-section spans periods {cross_section.periods}; "
            "estimate one period at a time")
    return cross_section.inputs_matrix(), cross_section.outputs_vector()


def _build_shape_constrained_lp(x: np.ndarray, y: np.ndarray, tau,
                                rts: str) -> ProgramBuilder:
    """Shared constraint skeleton of the quantile and DEA problems."""
    n, d = x.shape
    b = ProgramBuilder()
    free = (0.0, 0.0) if rts == CRS else (-np.inf, np.inf)
    for i in range(n):
        b.add_var(f"alpha[{i}]", lb=free[0], ub=free[1])
    for i in range(n):
        for j in range(d):
            b.add_var(f"beta[{i},{j}]")
    for i in range(n):
        b.add_var(f"em[{i}]")
    if tau != DEA_LIMIT:
        for i in range(n):
            b.add_var(f"ep[{i}]")
    for i in range(n):
        terms = {f"alpha[{i}]": 1.0, f"em[{i}]": -1.0}
        for j in range(d):
            terms[f"beta[{i},{j}]"] = x[i, j]
        if tau != DEA_LIMIT:
            terms[f"ep[{i}]"] = 1.0
        b.add_constraint(terms, EQ, float(y[i]), name=f"fit[{i}]")
    for i in range(n):
        for h in range(n):
            if i == h:
                continue
            terms = {f"alpha[{i}]": 1.0, f"alpha[{h}]": -1.0}
            for j in range(d):
                terms[f"beta[{i},{j}]"] = terms.get(f"beta[{i},{j}]", 0.0) + x[i, j]
                terms[f"beta[{h},{j}]"] = terms.get(f"beta[{h},{j}]", 0.0) - x[i, j]
            b.add_constraint(terms, LE, 0.0, name=f"concave[{i},{h}]")
    return b


def _extract_frontier(sol, n: int, d: int, tau, rts: str,
                      dmu_ids) -> QuantileFrontier:
    x = sol.x
    alpha = np.array(x[:n])
    beta = np.array(x[n:n + n * d]).reshape(n, d)
    em = np.array(x[n + n * d: n + n * d + n])
    if tau == DEA_LIMIT:
        ep = np.zeros(n)
    else:
        ep = np.array(x[n + n * d + n: n + n * d + 2 * n])
    # clip solver round-off on the sign-constrained pieces
    beta = np.maximum(beta, 0.0)
    em = np.maximum(em, 0.0)
    ep = np.maximum(ep, 0.0)
    if rts == CRS:
        alpha = np.zeros(n)
    return QuantileFrontier(tau, rts, alpha, beta, ep, em,
                            float(sol.objective_value), dmu_ids)


def fit_cqr(cross_section: Panel, tau: float, rts: str = VRS,
            backend: str = "builtin",
            options: SolverOptions | None = None) -> QuantileFrontier:
    """Fit the tau-th quantile frontier by the asymmetric-deviation LP.

    Minimizes tau * sum(eps_plus) + (1 - tau) * sum(eps_minus) subject to
    the regression identity, pairwise concavity rows and beta >= 0.
    """
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    x, y = _check_cross_section(cross_section)
    n, d = x.shape
    b = _build_shape_constrained_lp(x, y, tau, rts)
    obj = {f"ep[{i}]": tau for i in range(n)}
    obj.update({f"em[{i}]": 1.0 - tau for i in range(n)})
    b.set_objective(MINIMIZE, obj)
    lp = b.build()
    sol = get_backend(backend).solve_lp(lp, options)
    if not sol.is_optimal:
        raise SolverError(
            f"quantile fit failed: status={sol.status}, n={n}, d={d}, "
            f"tau={tau}, rows={lp.num_rows}, vars={lp.num_vars}")
    return _extract_frontier(sol, n, d, tau, rts,
                             tuple(cross_section.dmu_ids()))


def fit_dea(cross_section: Panel, rts: str = VRS, backend: str = "builtin",
            options: SolverOptions | None = None) -> QuantileFrontier:
    """Fit the enveloping frontier (the tau -> 1 limit): min sum(eps_minus).

    Per-DMU inefficiency is read off the eps_minus residuals.
    """
    x, y = _check_cross_section(cross_section)
    n, d = x.shape
    b = _build_shape_constrained_lp(x, y, DEA_LIMIT, rts)
    b.set_objective(MINIMIZE, {f"em[{i}]": 1.0 for i in range(n)})
    lp = b.build()
    sol = get_backend(backend).solve_lp(lp, options)
    if not sol.is_optimal:
        raise SolverError(
            f"DEA fit failed: status={sol.status}, n={n}, d={d}, "
            f"rows={lp.num_rows}, vars={lp.num_vars}")
    return _extract_frontier(sol, n, d, DEA_LIMIT, rts,
                             tuple(cross_section.dmu_ids()))


def fit_frontier_set(cross_section: Panel, rts: str = VRS,
                     backend: str = "builtin",
                     options: SolverOptions | None = None) -> FrontierSet:
    """Fit all ten decile frontiers (independent solves)."""
    frontiers = tuple(fit_cqr(cross_section, tau, rts, backend, options)
                      for tau in TAU_GRID)
    return FrontierSet(frontiers, tuple(cross_section.dmu_ids()))


def nearest_quantile(frontier_set: FrontierSet, obs: Observation) -> float:
    """Tau whose fitted value at x_i is closest to y_i; ties go low."""
    if frontier_set.dmu_ids is not None and obs.dmu_id not in frontier_set.dmu_ids:
        raise LookupError(
            f"DMU {obs.dmu_id!r} is not in the fitted cross-section")
    x = np.asarray(obs.inputs_x, dtype=float)
    residuals = np.array([abs(obs.output_y - evaluate_frontier(f, x))
                          for f in frontier_set])
    return TAU_GRID[int(np.argmin(residuals))]


def _efficiency_keys(frontier_set: FrontierSet, x: np.ndarray,
                     y: np.ndarray) -> np.ndarray:
    """Ranking keys: (highest tau with frontier below y, mid-frontier ratio)."""
    n = x.shape[0]
    fitted = np.column_stack([evaluate_frontier(f, x) for f in frontier_set])
    below = fitted <= y[:, None] + 1e-9
    primary = np.where(below.any(axis=1),
                       below.shape[1] - 1 - np.argmax(below[:, ::-1], axis=1),
                       -1)
    mid = 0.5 * (fitted[:, 4] + fitted[:, 5])  # between tau=0.45 and 0.55
    with np.errstate(divide="ignore", invalid="ignore"):
        secondary = np.where(mid > 0, y / mid, y)
    return np.rec.fromarrays([primary, secondary], names=["p", "s"])


def partition_deciles(frontier_set: FrontierSet,
                      cross_section: Panel) -> DecileAssignment:
    """Rank DMUs by productive efficiency and cut into ten balanced groups."""
    x, y = _check_cross_section(cross_section)
    keys = _efficiency_keys(frontier_set, x, y)
    # descending by (primary, secondary); stable for determinism
    order = np.lexsort((-keys.s, -keys.p))
    n_total = len(cross_section)
    base, extra = divmod(n_total, 10)
    sizes = [base + (1 if g < extra else 0) for g in range(10)]
    ids = cross_section.dmu_ids()
    mapping: dict[str, tuple[int, float]] = {}
    pos = 0
    for g, size in enumerate(sizes, start=1):
        for k in order[pos:pos + size]:
            obs = cross_section.observations[int(k)]
            mapping[ids[int(k)]] = (g, nearest_quantile(frontier_set, obs))
        pos += size
    return DecileAssignment(mapping)


# --- frontier export/import ---------------------------------------------

def export_frontiers(frontiers, stream) -> None:
    """Tabular dump (17 significant digits) so allocation can run from
    coefficients alone."""
    if isinstance(frontiers, (QuantileFrontier,)):
        frontiers = [frontiers]
    frontiers = list(frontiers)
    d = frontiers[0].input_dim
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tau", "dmu_index", "alpha"]
                    + [f"beta_{j + 1}" for j in range(d)]
                    + ["eps_plus", "eps_minus"])
    for f in frontiers:
        tau_s = DEA_LIMIT if f.tau == DEA_LIMIT else f"{f.tau:.17g}"
        for i in range(f.num_hyperplanes):
            writer.writerow([tau_s, i, f"{f.alpha[i]:.17g}"]
                            + [f"{v:.17g}" for v in f.beta[i]]
                            + [f"{f.eps_plus[i]:.17g}", f"{f.eps_minus[i]:.17g}"])


def import_frontiers(stream, rts: str = VRS):
    """Read export_frontiers output; returns a FrontierSet when the file
    holds exactly the standard tau grid, otherwise a list of frontiers."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader)
    d = len(header) - 5
    groups: dict[str, list[list[float]]] = {}
    order: list[str] = []
    for row in reader:
        if not row:
            continue
        tau_s = row[0]
        if tau_s not in groups:
            groups[tau_s] = []
            order.append(tau_s)
        groups[tau_s].append([float(v) for v in row[2:]])
    frontiers = []
    for tau_s in order:
        rows = np.array(groups[tau_s])
        tau = DEA_LIMIT if tau_s == DEA_LIMIT else float(tau_s)
        frontiers.append(QuantileFrontier(
            tau, rts, rows[:, 0], rows[:, 1:1 + d], rows[:, 1 + d],
            rows[:, 2 + d], 0.0))
    taus = tuple(f.tau for f in frontiers)
    if taus == TAU_GRID:
        return FrontierSet(tuple(frontiers))
    return frontiers
