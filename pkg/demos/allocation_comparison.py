"""Compare the four centralized reallocation programs on one industry.

Fits decile frontiers on synthetic firms, aggregates observed inputs per
decile, then asks: how much output could the industry produce if the
planner could (a) move resources anywhere, (b) additionally let units
exit, (c) only rebalance within each decile, or (d) rebalance within
deciles with exit. Prints the resulting ordering and efficiency scores.
"""

import numpy as np

from qalloc.allocation import (MODELS, AllocationScenario,
                               pseudo_dmus_for_sample, solve_allocation)
from qalloc.analysis import allocative_efficiency
from qalloc.cqr import fit_frontier_set, partition_deciles
from qalloc.data_model import Observation, Panel, aggregate_totals

rng = np.random.default_rng(7)
n = 24
x = rng.uniform(0.5, 6.0, (n, 2))
y = np.maximum(0.5 + np.sqrt(x).sum(axis=1) + rng.normal(0.0, 0.5, n), 0.1)
panel = Panel(tuple(Observation(f"firm{i:02d}", 2020, float(y[i]),
                                tuple(x[i])) for i in range(n)))

frontier_set = fit_frontier_set(panel)
deciles = partition_deciles(frontier_set, panel)
totals = aggregate_totals(panel, deciles)
n_pseudo = pseudo_dmus_for_sample(n)
print(f"{n} firms -> {n_pseudo} pseudo-units per decile")
print(f"observed industry output: {y.sum():.2f}\n")

results = {}
for model in MODELS:
    scenario = AllocationScenario.for_model(
        model, pseudo_dmus_per_decile=n_pseudo)
    # the exit programs carry one binary per pseudo-unit; the HiGHS
    # backend dispatches them quickly at this size
    results[model] = solve_allocation(frontier_set, totals, scenario,
                                      backend="scipy")
    grown = solve_allocation(frontier_set, totals,
                             AllocationScenario.for_model(
                                 model, gamma=1.01,
                                 pseudo_dmus_per_decile=n_pseudo),
                             backend="scipy")
    print(f"{model:6s} optimal output {results[model].total_output:8.2f}"
          f"   with 1% more input {grown.total_output:8.2f}")

report = allocative_efficiency(panel, results)
print("\nallocative efficiency (current / optimal, percent):")
for model in MODELS:
    print(f"  {model:6s} {report.allocative_efficiency[model]:6.1f}%"
          f"   potential gain {report.potential_gain[model]:6.1f}%")

# the within-decile program is the most constrained, exit the least
assert results["lp8"].total_output <= results["lp6"].total_output + 1e-6
assert results["lp6"].total_output <= results["milp7"].total_output + 1e-6
assert results["milp9"].total_output <= results["milp7"].total_output + 1e-6
print("\nordering verified: within <= between <= between-with-exit")
