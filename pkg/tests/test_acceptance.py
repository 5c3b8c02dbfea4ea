"""Top-level acceptance gate.

Each test prints one PASS/FAIL line on the terminal (bypassing capture) so
the run can be audited at a glance. Tests that depend on the public PWT
10.01 extract skip loudly when the data file has not been fetched; see
scripts/fetch_pwt.py.
"""

import os
import time

import numpy as np
import pytest

from qalloc.allocation import (AllocationScenario, build_allocation_program,
                               solve_allocation, solve_baseline, solve_exit,
                               solve_within)
from qalloc.analysis import (allocative_efficiency, benchmark_dea_allocation,
                             oos_mse)
from qalloc.cqr import (TAU_GRID, FrontierSet, QuantileFrontier,
                        evaluate_frontier, fit_cqr, fit_dea,
                        fit_frontier_set, partition_deciles)
from qalloc.data_model import (ColumnSchema, Observation, Panel,
                               aggregate_totals, load_panel)
from qalloc.lp import (INF, LE, MAXIMIZE, MINIMIZE, LinearProgram,
                       MilpProgram, solve_lp, solve_milp)
from qalloc.random_alloc import RandomAllocationConfig, simulate
from oracles import lp_vertex_enumeration, milp_exhaustive_fixing

PWT_PATH = os.path.join(os.path.dirname(__file__), os.pardir, "data",
                        "pwt1001_oecd_2015_2019.csv")
PWT_SCHEMA = ColumnSchema(dmu_id="country", period="year", output="cgdpo",
                          inputs=("emp", "cn"))


def _report(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} "
              f"- {detail}")
    assert ok, f"acceptance criterion {criterion}: {detail}"


def _panel(x, y, period=2005):
    return Panel(tuple(
        Observation(f"d{i}", period, float(y[i]), tuple(np.atleast_1d(x[i])))
        for i in range(len(y))))


def _random_dataset(rng, n_lo=6, n_hi=20):
    n = int(rng.integers(n_lo, n_hi + 1))
    d = int(rng.integers(1, 4))
    x = rng.uniform(0.2, 6.0, (n, d))
    y = np.maximum(0.3 + np.sqrt(x).sum(axis=1) + rng.normal(0.0, 0.4, n),
                   0.05)
    return _panel(x, y)


def _bounded_lp(rng):
    n = int(rng.integers(2, 9))                      # <= 8 vars
    m = int(rng.integers(1, 12))                     # <= 12 rows incl. cap
    A = rng.uniform(-1.0, 2.0, size=(m, n))
    b = rng.uniform(0.5, 3.0, size=m)
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, rng.uniform(2.0, 6.0))
    c = rng.uniform(-2.0, 2.0, size=n)
    sense = MAXIMIZE if rng.random() < 0.5 else MINIMIZE
    return LinearProgram(sense, c, A, [LE] * (m + 1), b, [(0.0, INF)] * n)


def _bounded_milp(rng):
    n_cont = int(rng.integers(1, 4))
    k = int(rng.integers(1, 7))                      # <= 6 binaries
    n = n_cont + k
    m = int(rng.integers(2, 8))
    A = rng.uniform(-1.0, 2.0, size=(m, n))
    b = rng.uniform(0.5, 4.0, size=m)
    A = np.vstack([A, np.concatenate([np.ones(n_cont), np.zeros(k)])])
    b = np.append(b, rng.uniform(2.0, 5.0))
    c = rng.uniform(-2.0, 2.0, size=n)
    sense = MAXIMIZE if rng.random() < 0.5 else MINIMIZE
    bounds = [(0.0, INF)] * n_cont + [(0.0, 1.0)] * k
    lp = LinearProgram(sense, c, A, [LE] * (m + 1), b, bounds)
    return MilpProgram(lp, frozenset(range(n_cont, n)))


def test_criterion_1_solver_oracle_equivalence(capsys):
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        lp = _bounded_lp(rng)
        sol = solve_lp(lp)
        oracle = lp_vertex_enumeration(lp)
        assert sol.is_optimal and oracle is not None
        worst = max(worst, abs(sol.objective_value - oracle))
    worst_milp = 0.0
    for _ in range(100):
        mip = _bounded_milp(rng)
        sol = solve_milp(mip)
        oracle = milp_exhaustive_fixing(mip)
        assert sol.is_optimal and oracle is not None
        worst_milp = max(worst_milp, abs(sol.objective_value - oracle))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and worst_milp <= 1e-6 and elapsed < 60.0
    _report(capsys, "1 solver-oracle", ok,
            f"200 LPs worst {worst:.2e}, 100 MILPs worst {worst_milp:.2e}, "
            f"{elapsed:.1f}s")


def test_criterion_2_cqr_structural_suite(capsys):
    rng = np.random.default_rng(1002)
    worst_obj = 0.0
    for _ in range(50):
        panel = _random_dataset(rng)
        x = panel.inputs_matrix()
        y = panel.outputs_vector()
        d = x.shape[1]
        for tau in TAU_GRID:
            f = fit_cqr(panel, tau, backend="builtin")
            f.check_fit(x, y, tol=1e-6)  # beta >= 0 and at-sample concavity
            ref = fit_cqr(panel, tau, backend="scipy")
            worst_obj = max(worst_obj,
                            abs(f.objective_value - ref.objective_value))
            a = rng.uniform(0.0, 8.0, size=(1000, d))
            b = rng.uniform(0.0, 8.0, size=(1000, d))
            fa, fb = evaluate_frontier(f, a), evaluate_frontier(f, b)
            fmid = evaluate_frontier(f, 0.5 * (a + b))
            assert np.all(fmid >= 0.5 * (fa + fb) - 1e-9)
            assert np.all(evaluate_frontier(f, np.maximum(a, b)) >= fa - 1e-9)
    ok = worst_obj <= 1e-6
    _report(capsys, "2 quantile-fit structure", ok,
            f"50 datasets x 10 taus, worst objective gap vs independent "
            f"backend {worst_obj:.2e}")


def test_criterion_3_envelopment_limit(capsys):
    rng = np.random.default_rng(1003)
    worst_env = -np.inf
    for _ in range(20):
        panel = _random_dataset(rng)
        f = fit_dea(panel)
        fitted = evaluate_frontier(f, panel.inputs_matrix())
        worst_env = max(worst_env,
                        float(np.max(panel.outputs_vector() - fitted)))
        hi = fit_cqr(panel, 0.99)
        mid = fit_cqr(panel, 0.5)
        assert hi.eps_plus.sum() <= mid.eps_plus.sum() + 1e-9
    ok = worst_env <= 1e-6
    _report(capsys, "3 enveloping limit", ok,
            f"20 datasets enveloped, worst violation {worst_env:.2e}; "
            f"tau=0.99 never exceeds tau=0.5 in upward error mass")


def test_criterion_4_statistical_coverage(capsys):
    taus = (0.25, 0.5, 0.75)
    checks = passes = 0
    fractions = {t: [] for t in taus}
    for seed in range(20):
        rng = np.random.default_rng(9000 + seed)
        x = rng.uniform(0.5, 5.0, size=(200, 1))
        y = 1.0 + 2.0 * np.sqrt(x[:, 0]) + rng.normal(0.0, 0.5, 200)
        panel = _panel(x, np.maximum(y, 0.05))
        for tau in taus:
            f = fit_cqr(panel, tau, backend="scipy")
            fitted = evaluate_frontier(f, x)
            frac_above = float(np.mean(panel.outputs_vector() > fitted))
            fractions[tau].append(frac_above)
            checks += 1
            # a tau-quantile frontier leaves about (1 - tau) of the sample
            # above it
            if abs(frac_above - (1.0 - tau)) <= 0.1:
                passes += 1
    rate = passes / checks
    means = {t: float(np.mean(v)) for t, v in fractions.items()}
    ok = rate >= 0.9
    _report(capsys, "4 coverage", ok,
            f"{passes}/{checks} checks within 0.1 of nominal; mean fraction "
            f"above: " + ", ".join(f"tau={t}: {m:.3f}"
                                   for t, m in means.items()))


def _random_frontier_instance(rng, K=10):
    fronts = []
    for _ in range(K):
        beta = np.sort(rng.uniform(0.1, 2.0, size=(2, 1)), axis=0)[::-1]
        alpha = np.sort(rng.uniform(-0.5, 1.5, 2))
        fronts.append(QuantileFrontier.from_hyperplanes(0.5, alpha, beta))
    Xper = rng.uniform(0.5, 3.0, size=(K, 1))
    return fronts, (Xper.sum(axis=0), Xper)


def test_criterion_5_ordering_chain(capsys):
    rng = np.random.default_rng(1005)
    worst = -np.inf
    for _ in range(50):
        fronts, totals = _random_frontier_instance(rng)
        vals = {}
        for model in ("lp6", "milp7", "lp8", "milp9"):
            scen = AllocationScenario.for_model(model,
                                                pseudo_dmus_per_decile=1)
            vals[model] = solve_allocation(fronts, totals, scen).total_output
        gaps = (vals["lp8"] - vals["lp6"], vals["lp6"] - vals["milp7"],
                vals["lp8"] - vals["milp9"], vals["milp9"] - vals["milp7"])
        bigger = solve_allocation(
            fronts, totals, AllocationScenario.for_model(
                "lp6", gamma=1.01, pseudo_dmus_per_decile=1)).total_output
        gaps += (vals["lp6"] - bigger,)
        worst = max(worst, max(gaps))
    ok = worst <= 1e-6
    _report(capsys, "5 ordering chain", ok,
            f"50 instances, worst chain violation {worst:.2e} "
            f"(within <= between <= exit, and 1% more input never hurts)")


def test_criterion_6_exit_gap(capsys):
    front = [QuantileFrontier.from_hyperplanes(0.5, [-1.0], [[1.0]])]
    X = np.array([1.0])
    base = solve_baseline(front, X, AllocationScenario.for_model(
        "lp6", pseudo_dmus_per_decile=2))
    ex = solve_exit(front, X, AllocationScenario.for_model(
        "milp7", pseudo_dmus_per_decile=2))
    gap = ex.total_output - base.total_output
    program = build_allocation_program(front, X, AllocationScenario.for_model(
        "milp7", pseudo_dmus_per_decile=2))
    oracle = milp_exhaustive_fixing(program)
    ok = (abs(gap - 1.0) <= 1e-6
          and abs(ex.total_output - oracle) <= 1e-6)
    _report(capsys, "6 exit semantics", ok,
            f"planted fixture gap {gap:.9f} (expected 1), exit optimum "
            f"matches binary enumeration at {oracle:.9f}")


def test_criterion_7_random_draw_feasibility(capsys):
    rng = np.random.default_rng(1007)
    worst = -np.inf
    for k in range(20):
        fronts, totals = _random_frontier_instance(rng, K=10)
        cfg = RandomAllocationConfig(draws=50, seed=k,
                                     pseudo_dmus_per_decile=2)
        out = simulate(fronts, totals, cfg)
        again = simulate(fronts, totals, cfg)
        assert out.samples.tobytes() == again.samples.tobytes()
        best = solve_within(fronts, totals, AllocationScenario.for_model(
            "lp8", pseudo_dmus_per_decile=2)).total_output
        worst = max(worst, float(np.max(out.samples) - best))
    ok = worst <= 1e-6
    _report(capsys, "7 random-draw feasibility", ok,
            f"20 instances x 50 draws never exceed the within-decile "
            f"optimum (worst margin {worst:.2e}); reruns byte-identical")


def _load_pwt():
    with open(PWT_PATH) as fh:
        return load_panel(fh, PWT_SCHEMA)


def _skip_pwt(capsys, criterion):
    with capsys.disabled():
        print(f"\nACCEPTANCE {criterion}: SKIP - {PWT_PATH} not found; "
              f"run scripts/fetch_pwt.py on a machine with network access")
    pytest.skip("PWT extract not available")


def test_criterion_8_pwt_prediction_ordering(capsys):
    if not os.path.exists(PWT_PATH):
        _skip_pwt(capsys, "8 PWT prediction")
    t0 = time.perf_counter()
    panel = _load_pwt()
    pred = oos_mse(panel, backend="scipy")
    wins = int(np.sum(pred.mse_cqr < pred.mse_dea))
    elapsed = time.perf_counter() - t0
    ok = (wins >= 3 and pred.average_cqr < pred.average_dea
          and elapsed < 300.0)
    _report(capsys, "8 PWT prediction", ok,
            f"quantile rule beats enveloping carry-forward in {wins}/4 "
            f"year-pairs; averages {pred.average_cqr:.1f} vs "
            f"{pred.average_dea:.1f}; {elapsed:.0f}s")


def test_criterion_9_pwt_allocation_ordering(capsys):
    if not os.path.exists(PWT_PATH):
        _skip_pwt(capsys, "9 PWT allocation")
    panel = _load_pwt()
    cs = panel.cross_section(panel.periods[0])
    fs = fit_frontier_set(cs, backend="scipy")
    deciles = partition_deciles(fs, cs)
    totals = aggregate_totals(cs, deciles)
    bench = benchmark_dea_allocation(cs, backend="scipy")
    ok = True
    details = [f"benchmark {bench:.1f}"]
    for model in ("lp6", "milp7", "lp8", "milp9"):
        base = solve_allocation(fs, totals, AllocationScenario.for_model(
            model, pseudo_dmus_per_decile=1), backend="scipy").total_output
        grown = solve_allocation(fs, totals, AllocationScenario.for_model(
            model, gamma=1.01, pseudo_dmus_per_decile=1),
            backend="scipy").total_output
        ok = ok and base >= bench - 1e-6 and grown >= base - 1e-6
        details.append(f"{model}: {base:.1f}/{grown:.1f}")
    _report(capsys, "9 PWT allocation", ok, "; ".join(details))


def test_criterion_10_within_vs_between_efficiency(capsys):
    rng = np.random.default_rng(1010)
    worst = -np.inf
    for _ in range(5):
        panel = _random_dataset(rng, n_lo=15, n_hi=25)
        fs = fit_frontier_set(panel)
        deciles = partition_deciles(fs, panel)
        totals = aggregate_totals(panel, deciles)
        results = {}
        for model in ("lp6", "lp8"):
            scen = AllocationScenario.for_model(model,
                                                pseudo_dmus_per_decile=1)
            results[model] = solve_allocation(fs, totals, scen)
        report = allocative_efficiency(panel, results)
        gap = (report.allocative_efficiency["lp6"]
               - report.allocative_efficiency["lp8"])
        worst = max(worst, gap)
    ok = worst <= 1e-6
    _report(capsys, "10 within vs between efficiency", ok,
            f"5 synthetic industries: reallocating only within deciles "
            f"never scores below full reallocation (worst gap {worst:.2e})")
