"""Dump/read problems in CPLEX LP text format for external cross-checks.

Coefficients are written with 17 significant digits so a round trip
through the text form reproduces them exactly.
"""

from __future__ import annotations

import re

import numpy as np

from ..errors import ParseError
from .model import (EQ, GE, INF, LE, MAXIMIZE, MINIMIZE, LinearProgram,
                    MilpProgram)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _terms(names, coeffs) -> str:
    parts = []
    for name, v in zip(names, coeffs):
        if v == 0.0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(v))} {name}")
    if not parts:
        return "0 " + names[0]
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else out


def write_lp(program, stream) -> None:
    mip = isinstance(program, MilpProgram)
    lp = program.base if mip else program
    names = lp.var_names or [f"x{j}" for j in range(lp.num_vars)]
    rownames = lp.row_names or [f"c{i}" for i in range(lp.num_rows)]
    stream.write("Maximize\n" if lp.sense == MAXIMIZE else "Minimize\n")
    stream.write(f" obj: {_terms(names, lp.c)}\n")
    stream.write("Subject To\n")
    dense = lp.A.toarray()
    for i in range(lp.num_rows):
        stream.write(f" {rownames[i]}: {_terms(names, dense[i])} "
                     f"{lp.relations[i]} {_fmt(lp.b[i])}\n")
    stream.write("Bounds\n")
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo == -INF and hi == INF:
            stream.write(f" {names[j]} free\n")
        else:
            lo_s = "-inf" if lo == -INF else _fmt(lo)
            hi_s = "+inf" if hi == INF else _fmt(hi)
            stream.write(f" {lo_s} <= {names[j]} <= {hi_s}\n")
    if mip and program.binary_vars:
        stream.write("Binaries\n")
        for j in sorted(program.binary_vars):
            stream.write(f" {names[j]}\n")
    stream.write("End\n")


_TOKEN = re.compile(
    r"(?P<num>[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?|\.[0-9]+(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.\[\],]*)"
    r"|(?P<sign>[+-])")


def _tokenize(text: str):
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        yield kind, m.group()


def _parse_terms(text: str, index: dict[str, int], n: int) -> np.ndarray:
    coeffs = np.zeros(n)
    sign = 1.0
    pending: float | None = None
    for kind, tok in _tokenize(text):
        if kind == "sign":
            sign = 1.0 if tok == "+" else -1.0
        elif kind == "num":
            pending = sign * float(tok)
        else:
            if tok not in index:
                raise ParseError(f"unknown variable {tok!r}")
            coeffs[index[tok]] += pending if pending is not None else sign
            pending = None
            sign = 1.0
    return coeffs


def read_lp(stream):
    """Parse the subset of LP format produced by write_lp."""
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.startswith("\\")]
    section = None
    sense = None
    obj_text = ""
    rows: list[tuple[str, str, str, float]] = []
    bound_lines: list[str] = []
    binaries: list[str] = []
    for ln in lines:
        low = ln.lower()
        if low in ("maximize", "minimize"):
            sense = MAXIMIZE if low == "maximize" else MINIMIZE
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            obj_text += " " + ln.split(":", 1)[-1]
        elif section == "rows":
            body = ln.split(":", 1)[-1]
            for rel in (LE, GE, EQ):
                if rel in body:
                    lhs, rhs = body.rsplit(rel, 1)
                    rows.append(("", lhs, rel, float(rhs)))
                    break
            else:
                raise ParseError(f"constraint without relation: {ln!r}")
        elif section == "bounds":
            bound_lines.append(ln)
        elif section == "bin":
            binaries.append(ln.strip())
    if sense is None:
        raise ParseError("missing objective sense")

    # collect variable names in first-seen order
    names: list[str] = []
    index: dict[str, int] = {}

    def scan(text: str):
        for kind, tok in _tokenize(text):
            if kind == "name" and tok not in index:
                index[tok] = len(names)
                names.append(tok)

    scan(obj_text)
    for _, lhs, _, _ in rows:
        scan(lhs)
    for ln in bound_lines:
        name = ln.replace("free", " ").split("<=")[-2].strip() if "<=" in ln \
            else ln.split()[0]
        if name not in index:
            index[name] = len(names)
            names.append(name)

    n = len(names)
    c = _parse_terms(obj_text, index, n)
    A = np.zeros((len(rows), n))
    rels, b = [], []
    for i, (_, lhs, rel, rhs) in enumerate(rows):
        A[i] = _parse_terms(lhs, index, n)
        rels.append(rel)
        b.append(rhs)

    bounds: list[tuple[float, float]] = [(0.0, INF)] * n
    for ln in bound_lines:
        if ln.endswith("free"):
            name = ln[: -len("free")].strip()
            bounds[index[name]] = (-INF, INF)
        else:
            lo_s, name, hi_s = [p.strip() for p in ln.split("<=")]
            lo = -INF if lo_s == "-inf" else float(lo_s)
            hi = INF if hi_s == "+inf" else float(hi_s)
            bounds[index[name]] = (lo, hi)

    lp = LinearProgram(sense, c, A, rels, np.array(b), bounds, var_names=names)
    if binaries:
        return MilpProgram(lp, frozenset(index[nm] for nm in binaries))
    return lp
