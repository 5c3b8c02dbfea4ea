"""Panel ingestion, validation, deflation, filtering and aggregation.

Monetary quantities are plain 64-bit floats (thousands of currency units);
rows with missing values in mapped columns are dropped and counted, never
imputed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError, ValidationError


@dataclass(frozen=True)
class Observation:
    """One DMU-period record: output, inputs and optional per-input unit costs."""

    dmu_id: str
    period: int
    output_y: float
    inputs_x: tuple[float, ...]
    unit_costs: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.output_y > 0.0:
            raise ValidationError(
                f"{self.dmu_id}/{self.period}: output must be positive, "
                f"got {self.output_y}")
        if any(v < 0.0 for v in self.inputs_x):
            raise ValidationError(
                f"{self.dmu_id}/{self.period}: negative input component")
        if self.unit_costs is not None:
            if len(self.unit_costs) != len(self.inputs_x):
                raise ValidationError(
                    f"{self.dmu_id}/{self.period}: unit cost dimension "
                    f"{len(self.unit_costs)} != input dimension {len(self.inputs_x)}")
            if any(v < 0.0 for v in self.unit_costs):
                raise ValidationError(
                    f"{self.dmu_id}/{self.period}: negative unit cost")


@dataclass(frozen=True)
class Panel:
    """Immutable collection of observations with a shared input dimension."""

    observations: tuple[Observation, ...]
    dropped_rows: int = 0

    def __post_init__(self):
        dims = {len(o.inputs_x) for o in self.observations}
        if len(dims) > 1:
            raise ValidationError(f"mixed input dimensions {sorted(dims)}")
        seen = set()
        for o in self.observations:
            key = (o.dmu_id, o.period)
            if key in seen:
                raise ValidationError(f"duplicate observation {key}")
            seen.add(key)

    def __len__(self):
        return len(self.observations)

    @property
    def input_dim(self) -> int:
        return len(self.observations[0].inputs_x) if self.observations else 0

    @property
    def periods(self) -> list[int]:
        return sorted({o.period for o in self.observations})

    def cross_section(self, period: int) -> "Panel":
        return Panel(tuple(o for o in self.observations if o.period == period))

    def inputs_matrix(self) -> np.ndarray:
        return np.array([o.inputs_x for o in self.observations], dtype=float)

    def outputs_vector(self) -> np.ndarray:
        return np.array([o.output_y for o in self.observations], dtype=float)

    def dmu_ids(self) -> list[str]:
        return [o.dmu_id for o in self.observations]


@dataclass(frozen=True)
class DeflatorTable:
    """period -> deflator, normalized so the base year equals 1.0 exactly."""

    values: dict[int, float]
    base_year: int

    def __post_init__(self):
        if self.base_year not in self.values:
            raise ValidationError(f"base year {self.base_year} not in table")
        if self.values[self.base_year] != 1.0:
            raise ValidationError("base-year deflator must equal 1.0 exactly")
        if any(v <= 0.0 for v in self.values.values()):
            raise ValidationError("deflators must be positive")

    @classmethod
    def rebased(cls, raw: dict[int, float], base_year: int) -> "DeflatorTable":
        base = raw[base_year]
        vals = {p: v / base for p, v in raw.items()}
        vals[base_year] = 1.0
        return cls(vals, base_year)

    def deflator(self, period: int) -> float:
        if period not in self.values:
            raise LookupError(f"no deflator for period {period}")
        return self.values[period]


@dataclass(frozen=True)
class IndustryTotals:
    """Cross-section input totals plus per-quantile-group splits.

    per_decile indexes the tau grid in increasing order: position 0 is the
    lowest quantile (worst decile), position 9 the highest.
    """

    total_inputs: np.ndarray
    per_decile: np.ndarray  # shape (10, d)

    def __post_init__(self):
        object.__setattr__(self, "total_inputs",
                           np.asarray(self.total_inputs, dtype=float))
        object.__setattr__(self, "per_decile",
                           np.asarray(self.per_decile, dtype=float))
        gap = np.abs(self.per_decile.sum(axis=0) - self.total_inputs).sum()
        if gap > 1e-6 * max(1.0, np.abs(self.total_inputs).sum()):
            raise ValidationError(
                "per-decile totals do not sum to the cross-section total")


@dataclass(frozen=True)
class ColumnSchema:
    """Maps logical fields to column names of a delimited text file."""

    dmu_id: str
    period: str
    output: str
    inputs: tuple[str, ...]
    unit_costs: tuple[str, ...] | None = None
    delimiter: str = ","

    def __post_init__(self):
        if self.unit_costs is not None and len(self.unit_costs) != len(self.inputs):
            raise ConfigError("unit_costs must name one column per input")

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        try:
            return cls(dmu_id=d["dmu_id"], period=d["period"],
                       output=d["output"], inputs=tuple(d["inputs"]),
                       unit_costs=tuple(d["unit_costs"]) if d.get("unit_costs") else None,
                       delimiter=d.get("delimiter", ","))
        except KeyError as e:
            raise ConfigError(f"schema missing required key {e.args[0]!r}")


def _parse_cell(raw: str, row: int, column: str) -> float | None:
    raw = raw.strip()
    if raw == "" or raw.lower() in ("na", "nan", "."):
        return None
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"row {row}, column {column!r}: "
                         f"cannot parse {raw!r} as a number")


def load_panel(source, schema: ColumnSchema) -> Panel:
    """Read a delimited text stream (header row mandatory) into a Panel.

    Rows with missing values in any mapped column are dropped and counted
    in Panel.dropped_rows.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source, delimiter=schema.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input: header row is mandatory")
    header = [h.strip() for h in header]
    col = {name: i for i, name in enumerate(header)}
    needed = [schema.dmu_id, schema.period, schema.output, *schema.inputs]
    if schema.unit_costs:
        needed += list(schema.unit_costs)
    for name in needed:
        if name not in col:
            raise ConfigError(f"column {name!r} not found in header {header}")

    observations = []
    dropped = 0
    for rownum, row in enumerate(reader, start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"row {rownum}: expected {len(header)} cells, "
                             f"got {len(row)}")
        dmu = row[col[schema.dmu_id]].strip()
        period_raw = row[col[schema.period]].strip()
        try:
            period = int(period_raw)
        except ValueError:
            raise ParseError(f"row {rownum}, column {schema.period!r}: "
                             f"cannot parse {period_raw!r} as a year")
        values = {}
        missing = False
        for name in [schema.output, *schema.inputs,
                     *(schema.unit_costs or ())]:
            v = _parse_cell(row[col[name]], rownum, name)
            if v is None:
                missing = True
                break
            values[name] = v
        if missing or dmu == "":
            dropped += 1
            continue
        costs = (tuple(values[c] for c in schema.unit_costs)
                 if schema.unit_costs else None)
        observations.append(Observation(
            dmu_id=dmu, period=period, output_y=values[schema.output],
            inputs_x=tuple(values[c] for c in schema.inputs),
            unit_costs=costs))
    return Panel(tuple(observations), dropped_rows=dropped)


def save_panel(panel: Panel, stream, schema: ColumnSchema) -> None:
    """Write a Panel back to delimited text (inverse of load_panel)."""
    writer = csv.writer(stream, delimiter=schema.delimiter, lineterminator="\n")
    header = [schema.dmu_id, schema.period, schema.output, *schema.inputs]
    if schema.unit_costs:
        header += list(schema.unit_costs)
    writer.writerow(header)
    for o in panel.observations:
        row = [o.dmu_id, o.period, f"{o.output_y:.17g}"]
        row += [f"{v:.17g}" for v in o.inputs_x]
        if schema.unit_costs:
            if o.unit_costs is None:
                raise ValidationError(
                    f"{o.dmu_id}/{o.period}: schema expects unit costs")
            row += [f"{v:.17g}" for v in o.unit_costs]
        writer.writerow(row)


def _field_value(obs: Observation, fieldname: str) -> float:
    if fieldname == "output_y":
        return obs.output_y
    if fieldname.startswith("inputs_x["):
        return obs.inputs_x[int(fieldname[9:-1])]
    raise ConfigError(f"unknown field {fieldname!r}; use 'output_y' or "
                      f"'inputs_x[j]'")


def filter_panel(panel: Panel, fieldname: str, minimum: float) -> Panel:
    """Keep observations with field >= minimum (threshold exclusion rule)."""
    kept = tuple(o for o in panel.observations
                 if _field_value(o, fieldname) >= minimum)
    return Panel(kept, dropped_rows=panel.dropped_rows)


def deflate(panel: Panel, table: DeflatorTable,
            monetary_fields: tuple[str, ...] = ("output_y",)) -> Panel:
    """Divide each monetary field by its period's deflator.

    monetary_fields entries are 'output_y', 'inputs_x[j]' or 'unit_costs[j]'.
    """
    for o in panel.observations:
        table.deflator(o.period)  # fail fast on missing periods
    out = []
    for o in panel.observations:
        d = table.deflator(o.period)
        y = o.output_y
        x = list(o.inputs_x)
        costs = list(o.unit_costs) if o.unit_costs is not None else None
        for fieldname in monetary_fields:
            if fieldname == "output_y":
                y = y / d
            elif fieldname.startswith("inputs_x["):
                j = int(fieldname[9:-1])
                x[j] = x[j] / d
            elif fieldname.startswith("unit_costs["):
                if costs is None:
                    raise ConfigError("panel carries no unit costs to deflate")
                j = int(fieldname[11:-1])
                costs[j] = costs[j] / d
            else:
                raise ConfigError(f"unknown monetary field {fieldname!r}")
        out.append(Observation(o.dmu_id, o.period, y, tuple(x),
                               tuple(costs) if costs is not None else None))
    return Panel(tuple(out), dropped_rows=panel.dropped_rows)


def aggregate_totals(cross_section: Panel, deciles) -> IndustryTotals:
    """Sum inputs over the cross-section and within each quantile group.

    deciles is a DecileAssignment (see qalloc.cqr); every DMU of the
    cross-section must be covered exactly once.
    """
    if len(cross_section) == 0:
        raise ValidationError("empty cross-section")
    d = cross_section.input_dim
    total = np.zeros(d)
    per_decile = np.zeros((10, d))
    for o in cross_section.observations:
        try:
            decile = deciles.decile_of(o.dmu_id)
        except KeyError:
            raise ValidationError(
                f"decile assignment does not cover DMU {o.dmu_id!r}")
        x = np.asarray(o.inputs_x)
        total += x
        per_decile[10 - decile] += x  # decile 1 (top) sits at tau index 9
    return IndustryTotals(total, per_decile)
