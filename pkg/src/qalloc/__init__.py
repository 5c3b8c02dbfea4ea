"""Quantile production frontiers and centralized resource allocation.

Estimate monotone concave quantile frontiers from cross-section production
data, solve the four decile allocation programs over the fitted frontiers,
and derive marginal products, allocative efficiency, random-allocation
baselines and out-of-sample prediction benchmarks.
"""

__version__ = "0.1.0"

from .data_model import (ColumnSchema, DeflatorTable, IndustryTotals,
                         Observation, Panel, aggregate_totals, deflate,
                         filter_panel, load_panel, save_panel)
from .cqr import (CRS, DEA_LIMIT, TAU_GRID, VRS, DecileAssignment,
                  FrontierSet, QuantileFrontier, evaluate_frontier,
                  export_frontiers, fit_cqr, fit_dea, fit_frontier_set,
                  import_frontiers, nearest_quantile, partition_deciles)
from .allocation import (AllocationResult, AllocationScenario, MODELS,
                         audit_allocation, compute_big_m,
                         pseudo_dmus_for_sample, share_table,
                         solve_allocation, solve_baseline, solve_exit,
                         solve_within, solve_within_exit)
from .random_alloc import (RandomAllocationConfig, RandomAllocationSummary,
                           simulate)
from .analysis import (EfficiencyReport, MarginalProductReport, MsePrediction,
                       allocative_efficiency, benchmark_dea_allocation,
                       marginal_products, oos_mse, supporting_gradient)
from .errors import (AuditError, ConfigError, ParseError, QallocError,
                     SolverError, ValidationError)
