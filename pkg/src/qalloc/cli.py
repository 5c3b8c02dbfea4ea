"""Command-line pipeline: estimate | allocate | random | mse | report.

Every command reads a JSON config, writes delimiter-separated tables with
'#'-prefixed metadata headers into the output directory, and is
deterministic given identical config and inputs (timings go to the log,
never into output files). Exit codes: 0 success, 1 data/config error,
2 solver failure, 3 feasibility-audit violation.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
import time

from . import __version__
from .allocation import (AllocationScenario, pseudo_dmus_for_sample,
                         share_table, solve_allocation)
from .analysis import oos_mse
from .cqr import (TAU_GRID, fit_cqr, FrontierSet, export_frontiers,
                  import_frontiers, partition_deciles)
from .data_model import (ColumnSchema, DeflatorTable, aggregate_totals,
                         deflate, filter_panel, load_panel)
from .errors import AuditError, ConfigError, ParseError, SolverError, \
    ValidationError
from .random_alloc import RandomAllocationConfig, simulate

log = logging.getLogger("qalloc")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_SOLVER = 2
EXIT_AUDIT = 3


class RunConfig:
    """Validated view over the JSON run configuration."""

    def __init__(self, raw: dict, base_dir: str = "."):
        self.raw = raw
        self.base_dir = base_dir
        data = raw.get("data")
        if not data or "path" not in data or "schema" not in data:
            raise ConfigError("config needs data.path and data.schema")
        self.data_path = os.path.join(base_dir, data["path"])
        self.schema = ColumnSchema.from_dict(data["schema"])
        self.filters = raw.get("filters", [])
        self.deflator = raw.get("deflator")
        self.rts = raw.get("rts", "vrs")
        self.backend = raw.get("backend", "builtin")
        self.seed = int(raw.get("seed", 0))
        self.output_dir = os.path.join(base_dir, raw.get("output_dir", "out"))
        grid = raw.get("tau_grid", list(TAU_GRID))
        if any(not 0.0 < t < 1.0 for t in grid) or \
                any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("tau_grid must be strictly increasing in (0, 1)")
        self.tau_grid = tuple(grid)
        self.scenarios = raw.get("scenarios", [])
        self.random = raw.get("random", {})
        self.periods = raw.get("periods")

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config is not valid JSON: {e}")
        return cls(raw, base_dir=os.path.dirname(os.path.abspath(path)))

    def load_prepared_panel(self):
        with open(self.data_path) as fh:
            panel = load_panel(fh, self.schema)
        if panel.dropped_rows:
            log.info("dropped %d rows with missing values", panel.dropped_rows)
        for f in self.filters:
            panel = filter_panel(panel, f["field"], float(f["min"]))
        if self.deflator:
            table = self._deflator_table()
            fields = tuple(self.deflator.get("fields", ["output_y"]))
            panel = deflate(panel, table, fields)
        return panel

    def _deflator_table(self) -> DeflatorTable:
        base_year = int(self.deflator["base_year"])
        if "values" in self.deflator:
            vals = {int(k): float(v) for k, v in self.deflator["values"].items()}
        else:
            vals = {}
            with open(os.path.join(self.base_dir, self.deflator["path"])) as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    year, value = line.replace(",", " ").split()
                    vals[int(year)] = float(value)
        return DeflatorTable.rebased(vals, base_year)


def _fingerprint(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _metadata(cfg: RunConfig, command: str, extra: dict | None = None) -> list[str]:
    lines = [
        f"# qalloc {__version__} {command}",
        f"# data={os.path.basename(cfg.data_path)} "
        f"sha256={_fingerprint(cfg.data_path)}",
        f"# backend={cfg.backend} rts={cfg.rts} seed={cfg.seed}",
        "# tolerances: feasibility=1e-7 optimality=1e-9 integrality=1e-6",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={v}")
    return lines


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(cfg: RunConfig, command: str, filename: str, header: list[str],
          rows: list[list], extra_meta: dict | None = None) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    buf = io.StringIO()
    for line in _metadata(cfg, command, extra_meta):
        buf.write(line + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    path = os.path.join(cfg.output_dir, filename)
    _write_atomic(path, buf.getvalue())
    return path


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _select_periods(cfg: RunConfig, panel) -> list[int]:
    if cfg.periods:
        missing = [p for p in cfg.periods if p not in panel.periods]
        if missing:
            raise ConfigError(f"periods {missing} absent from the data")
        return list(cfg.periods)
    return panel.periods


def cmd_estimate(cfg: RunConfig) -> int:
    panel = cfg.load_prepared_panel()
    if tuple(cfg.tau_grid) != TAU_GRID:
        log.warning("non-standard tau grid %s; decile tooling expects %s",
                    cfg.tau_grid, TAU_GRID)
    for period in _select_periods(cfg, panel):
        cs = panel.cross_section(period)
        frontiers = []
        log_rows = []
        for tau in cfg.tau_grid:
            t0 = time.perf_counter()
            f = fit_cqr(cs, tau, rts=cfg.rts, backend=cfg.backend)
            log.info("period %d tau %.2f: objective %.6g (%.2fs)",
                     period, tau, f.objective_value, time.perf_counter() - t0)
            frontiers.append(f)
            log_rows.append([tau, f.objective_value, f.num_hyperplanes])
        buf = io.StringIO()
        export_frontiers(frontiers, buf)
        os.makedirs(cfg.output_dir, exist_ok=True)
        meta = "\n".join(_metadata(cfg, "estimate", {"period": period})) + "\n"
        _write_atomic(os.path.join(cfg.output_dir, f"frontiers_{period}.csv"),
                      meta + buf.getvalue())
        _emit(cfg, "estimate", f"estimation_log_{period}.csv",
              ["tau", "objective", "hyperplanes"], log_rows,
              {"period": period})
    return EXIT_OK


def _read_frontiers(cfg: RunConfig, period: int):
    path = os.path.join(cfg.output_dir, f"frontiers_{period}.csv")
    if not os.path.exists(path):
        raise ConfigError(
            f"missing frontier file {path}; run 'qalloc estimate' first")
    with open(path) as fh:
        body = "".join(ln for ln in fh if not ln.startswith("#"))
    return import_frontiers(body, rts=cfg.rts)


def _totals_for(cfg: RunConfig, panel, period: int, frontier_set):
    cs = panel.cross_section(period)
    deciles = partition_deciles(frontier_set, cs)
    return cs, aggregate_totals(cs, deciles)


def cmd_allocate(cfg: RunConfig) -> int:
    if not cfg.scenarios:
        raise ConfigError("scenario list is empty; nothing to allocate")
    panel = cfg.load_prepared_panel()
    for period in _select_periods(cfg, panel):
        frontier_set = _read_frontiers(cfg, period)
        if not isinstance(frontier_set, FrontierSet):
            raise ConfigError("frontier file does not hold the standard grid")
        cs, totals = _totals_for(cfg, panel, period, frontier_set)
        n_pseudo = pseudo_dmus_for_sample(len(cs))
        comparison = []
        for entry in cfg.scenarios:
            model = entry.get("model")
            scenario = AllocationScenario.for_model(
                model, gamma=float(entry.get("gamma", 1.0)),
                pseudo_dmus_per_decile=int(entry.get("pseudo_dmus", n_pseudo)))
            result = solve_allocation(frontier_set, totals, scenario,
                                      backend=cfg.backend)
            rows = []
            for t in range(result.x_alloc.shape[0]):
                for i in range(result.x_alloc.shape[1]):
                    rows.append([f"{TAU_GRID[t]:.2f}", i,
                                 *result.x_alloc[t, i].tolist(),
                                 result.y_alloc[t, i],
                                 int(result.b_active[t, i])])
            d = result.x_alloc.shape[2]
            _emit(cfg, "allocate",
                  f"allocation_{period}_{model}_gamma{scenario.gamma:g}.csv",
                  ["tau", "pseudo_dmu", *[f"x_{j + 1}" for j in range(d)],
                   "y", "active"],
                  rows, {"period": period, "model": model,
                         "gamma": scenario.gamma, "status": result.status})
            shares = share_table(result, totals)
            _emit(cfg, "allocate",
                  f"shares_{period}_{model}_gamma{scenario.gamma:g}.csv",
                  ["decile", *[f"input_{j + 1}_pct" for j in range(d)],
                   "output_pct"],
                  [[r["decile"], *r["input_shares_rounded"],
                    r["output_share_rounded"]] for r in shares["rows"]],
                  {"period": period, "model": model})
            comparison.append([model, scenario.gamma, result.total_output])
        _emit(cfg, "allocate", f"comparison_{period}.csv",
              ["model", "gamma", "total_output"], comparison,
              {"period": period})
    return EXIT_OK


def cmd_random(cfg: RunConfig) -> int:
    panel = cfg.load_prepared_panel()
    for period in _select_periods(cfg, panel):
        frontier_set = _read_frontiers(cfg, period)
        cs, totals = _totals_for(cfg, panel, period, frontier_set)
        rc = RandomAllocationConfig(
            draws=int(cfg.random.get("draws", 1000)),
            seed=int(cfg.random.get("seed", cfg.seed)),
            totals_interpretation=cfg.random.get(
                "totals_interpretation", "per_decile_observed"),
            pseudo_dmus_per_decile=pseudo_dmus_for_sample(len(cs)))
        summary = simulate(frontier_set, totals, rc)
        _emit(cfg, "random", f"random_{period}.csv",
              ["statistic", "value"],
              [["mean", summary.mean_output],
               ["median", summary.median_output],
               ["draws", rc.draws], ["seed", rc.seed]],
              {"period": period,
               "totals_interpretation": rc.totals_interpretation})
        if cfg.random.get("keep_samples", False):
            _emit(cfg, "random", f"random_samples_{period}.csv",
                  ["draw", "total_output"],
                  [[k, v] for k, v in enumerate(summary.samples)],
                  {"period": period})
    return EXIT_OK


def cmd_mse(cfg: RunConfig) -> int:
    panel = cfg.load_prepared_panel()
    pred = oos_mse(panel, rts=cfg.rts, backend=cfg.backend)
    rows = [["cqr", *pred.mse_cqr.tolist(), pred.average_cqr],
            ["dea", *pred.mse_dea.tolist(), pred.average_dea]]
    _emit(cfg, "mse", "mse.csv",
          ["method", *[str(y) for y in pred.target_years], "average"], rows,
          {"joined": ";".join(map(str, pred.joined_counts))})
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    panel = cfg.load_prepared_panel()
    for period in _select_periods(cfg, panel):
        comp_path = os.path.join(cfg.output_dir, f"comparison_{period}.csv")
        rand_path = os.path.join(cfg.output_dir, f"random_{period}.csv")
        for path, producer in ((comp_path, "qalloc allocate"),
                               (rand_path, "qalloc random")):
            if not os.path.exists(path):
                raise ConfigError(
                    f"missing artifact {path}; run '{producer}' first")
        current = float(panel.cross_section(period).outputs_vector().sum())
        bars = [["current", current, 0.0]]
        with open(rand_path) as fh:
            for line in fh:
                if line.startswith(("#", "statistic")):
                    continue
                stat, value = line.strip().split(",")
                if stat in ("mean", "median"):
                    v = float(value)
                    bars.append([f"random_{stat}", v,
                                 100.0 * (v / current - 1.0)])
        with open(comp_path) as fh:
            for line in fh:
                if line.startswith(("#", "model")):
                    continue
                model, gamma, y = line.strip().split(",")
                v = float(y)
                bars.append([f"{model}_gamma{float(gamma):g}", v,
                             100.0 * (v / current - 1.0)])
        _emit(cfg, "report", f"report_{period}.csv",
              ["allocation", "total_output", "pct_change_vs_current"],
              bars, {"period": period})
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "allocate": cmd_allocate,
    "random": cmd_random,
    "mse": cmd_mse,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qalloc",
        description="Quantile frontier estimation and resource allocation")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--output-dir", help="override config output_dir")
    parser.add_argument("--backend", help="solver backend override")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else
        logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.output_dir:
            cfg.output_dir = args.output_dir
        if args.backend:
            cfg.backend = args.backend
        if args.seed is not None:
            cfg.seed = args.seed
        return COMMANDS[args.command](cfg)
    except AuditError as e:
        log.error("feasibility audit failed: %s", e)
        return EXIT_AUDIT
    except SolverError as e:
        log.error("solver failure: %s", e)
        return EXIT_SOLVER
    except (ConfigError, ParseError, ValidationError, OSError, LookupError) as e:
        log.error("%s", e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
