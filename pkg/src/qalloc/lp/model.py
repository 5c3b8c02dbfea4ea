"""Problem containers and a name-based builder for LPs and mixed-binary programs.

Constraint matrices are stored in scipy CSR form so that large, sparse
estimation problems (tens of thousands of rows) stay cheap to build and
hand off to backends; the dense simplex densifies on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import ValidationError

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

INF = float("inf")


@dataclass
class LinearProgram:
    """min/max c'x subject to rows (A x rel b) and per-variable bounds."""

    sense: str
    c: np.ndarray
    A: sparse.csr_matrix
    relations: list[str]
    b: np.ndarray
    bounds: list[tuple[float, float]]
    var_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if not sparse.issparse(self.A):
            self.A = sparse.csr_matrix(np.atleast_2d(np.asarray(self.A, dtype=float)))
        else:
            self.A = self.A.tocsr()
        self.validate()

    def validate(self):
        n = self.c.shape[0]
        if n < 1:
            raise ValidationError("LP must have at least one variable")
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise ValidationError(f"unknown sense {self.sense!r}")
        m = self.A.shape[0]
        if self.A.shape[1] != n:
            raise ValidationError(
                f"A has {self.A.shape[1]} columns, expected {n}"
            )
        if len(self.relations) != m or self.b.shape[0] != m:
            raise ValidationError("rows, relations and rhs lengths disagree")
        for rel in self.relations:
            if rel not in _RELATIONS:
                raise ValidationError(f"unknown relation {rel!r}")
        if not np.all(np.isfinite(self.b)):
            raise ValidationError("rhs must be finite")
        if len(self.bounds) != n:
            raise ValidationError("one bound pair per variable required")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValidationError(f"empty bound interval ({lo}, {hi})")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class MilpProgram:
    """An LP plus a set of variable indices restricted to {0, 1}."""

    base: LinearProgram
    binary_vars: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        self.binary_vars = frozenset(self.binary_vars)
        n = self.base.num_vars
        for j in self.binary_vars:
            if not 0 <= j < n:
                raise ValidationError(f"binary index {j} out of range")
            lo, hi = self.base.bounds[j]
            if lo != 0.0 or hi != 1.0:
                raise ValidationError(
                    f"binary variable {j} must have bounds [0, 1], got ({lo}, {hi})"
                )


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class Solution:
    status: str
    x: np.ndarray | None = None
    objective_value: float | None = None
    duals: np.ndarray | None = None
    gap: float | None = None
    iterations: int = 0
    nodes: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, program, name: str) -> float:
        """Look up a variable by registry name (builder-produced programs)."""
        lp = program.base if isinstance(program, MilpProgram) else program
        if lp.var_names is None:
            raise ValidationError("program carries no variable names")
        return float(self.x[lp.var_names.index(name)])


def check_feasible(lp: LinearProgram, x: np.ndarray, tol: float = 1e-7) -> bool:
    """Row and bound feasibility at relative tolerance tol * (1 + |rhs|)."""
    x = np.asarray(x, dtype=float)
    ax = lp.A @ x
    for i, rel in enumerate(lp.relations):
        slack = tol * (1.0 + abs(lp.b[i]))
        if rel == LE and ax[i] > lp.b[i] + slack:
            return False
        if rel == GE and ax[i] < lp.b[i] - slack:
            return False
        if rel == EQ and abs(ax[i] - lp.b[i]) > slack:
            return False
    for j, (lo, hi) in enumerate(lp.bounds):
        span = tol * (1.0 + max(abs(lo) if np.isfinite(lo) else 0.0,
                                abs(hi) if np.isfinite(hi) else 0.0))
        if x[j] < lo - span or x[j] > hi + span:
            return False
    return True


class ProgramBuilder:
    """Column-major builder with a variable-name registry.

    Estimation and allocation code refers to variables by name only; raw
    column indices never leak out of this module.
    """

    def __init__(self):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._bounds: list[tuple[float, float]] = []
        self._binary: set[int] = set()
        self._obj: dict[int, float] = {}
        self._sense = MINIMIZE
        self._rows: list[tuple[dict[int, float], str, float, str | None]] = []

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF,
                binary: bool = False) -> str:
        if name in self._index:
            raise ValidationError(f"duplicate variable name {name!r}")
        idx = len(self._names)
        self._index[name] = idx
        self._names.append(name)
        if binary:
            self._bounds.append((0.0, 1.0))
            self._binary.add(idx)
        else:
            self._bounds.append((float(lb), float(ub)))
        return name

    def add_vars(self, names, lb: float = 0.0, ub: float = INF):
        for name in names:
            self.add_var(name, lb, ub)

    def set_objective(self, sense: str, terms: dict[str, float]):
        self._sense = sense
        self._obj = {self._index[k]: float(v) for k, v in terms.items()}

    def add_constraint(self, terms: dict[str, float], relation: str, rhs: float,
                       name: str | None = None):
        if relation not in _RELATIONS:
            raise ValidationError(f"unknown relation {relation!r}")
        row = {self._index[k]: float(v) for k, v in terms.items()}
        self._rows.append((row, relation, float(rhs), name))

    def build(self):
        n = len(self._names)
        c = np.zeros(n)
        for j, v in self._obj.items():
            c[j] = v
        rows_i, cols, vals = [], [], []
        rels, rhs, row_names = [], [], []
        for r, (row, rel, b, name) in enumerate(self._rows):
            for j, v in row.items():
                rows_i.append(r)
                cols.append(j)
                vals.append(v)
            rels.append(rel)
            rhs.append(b)
            row_names.append(name if name is not None else f"r{r}")
        A = sparse.coo_matrix((vals, (rows_i, cols)),
                              shape=(len(self._rows), n)).tocsr()
        lp = LinearProgram(self._sense, c, A, rels, np.array(rhs),
                           list(self._bounds), var_names=list(self._names),
                           row_names=row_names)
        if self._binary:
            return MilpProgram(lp, frozenset(self._binary))
        return lp
