"""Minimal MPS reader/writer for LP data.

Supported sections: NAME, OBJSENSE, ROWS, COLUMNS (with integrality
markers, ignored with a warning), RHS, RANGES, BOUNDS, ENDATA. Fixed and
free format both parse, since fields never contain spaces. The parsed
form is (A, c, l, u, b_lo, b_hi) for  min c'x  s.t.  b_lo <= Ax <= b_hi,
l <= x <= u;  write_mps emits exactly that shape, and reading it back
reproduces the arrays.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

__all__ = ["read_mps", "write_mps", "MpsFormatError"]

INF = float("inf")


class MpsFormatError(ValueError):
    pass


def _num(tok: str, lineno: int) -> float:
    try:
        # Fortran-style exponents (1.5D+02) appear in old files
        return float(tok.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise MpsFormatError(f"line {lineno}: bad numeric field {tok!r}") from None


def read_mps(path):
    """Parse an MPS file into (A, c, l, u, b_lo, b_hi); A is CSR."""
    row_sense = {}            # name -> E|L|G
    row_order = []
    obj_row = None
    ignored_free = set()
    col_order = []
    col_index = {}
    c_entries = {}
    triplets = []
    rhs = {}
    ranges = {}
    bound_lines = []
    sense_max = False
    int_warned = False
    seen = set()
    section = None

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            if line[0] not in " \t":
                parts = line.split()
                section = parts[0].upper()
                seen.add(section)
                if section == "ENDATA":
                    break
                if section == "OBJSENSE" and len(parts) > 1:
                    sense_max = parts[1].upper().startswith("MAX")
                continue
            parts = line.split()
            if section == "OBJSENSE":
                sense_max = parts[0].upper().startswith("MAX")
            elif section == "ROWS":
                if len(parts) != 2:
                    raise MpsFormatError(f"line {lineno}: ROWS entry needs "
                                         "a type and a name")
                typ, name = parts[0].upper(), parts[1]
                if typ == "N":
                    if obj_row is None:
                        obj_row = name
                    else:
                        warnings.warn(f"extra free row {name!r} ignored")
                        ignored_free.add(name)
                elif typ in ("E", "L", "G"):
                    if name in row_sense:
                        raise MpsFormatError(f"line {lineno}: duplicate row "
                                             f"{name!r}")
                    row_sense[name] = typ
                    row_order.append(name)
                else:
                    raise MpsFormatError(f"line {lineno}: unknown row type "
                                         f"{typ!r}")
            elif section == "COLUMNS":
                if "'MARKER'" in parts:
                    if "'INTORG'" in parts and not int_warned:
                        warnings.warn("integrality markers ignored "
                                      "(continuous relaxation)")
                        int_warned = True
                    continue
                col, pairs = parts[0], parts[1:]
                if not pairs or len(pairs) % 2:
                    raise MpsFormatError(f"line {lineno}: COLUMNS entry needs "
                                         "row/value pairs")
                if col not in col_index:
                    col_index[col] = len(col_order)
                    col_order.append(col)
                j = col_index[col]
                for rname, val in zip(pairs[::2], pairs[1::2]):
                    v = _num(val, lineno)
                    if rname == obj_row:
                        c_entries[j] = c_entries.get(j, 0.0) + v
                    elif rname in row_sense:
                        triplets.append((rname, j, v))
                    elif rname in ignored_free:
                        pass
                    else:
                        raise MpsFormatError(f"line {lineno}: unknown row "
                                             f"{rname!r}")
            elif section in ("RHS", "RANGES"):
                pairs = parts[1:] if len(parts) % 2 else parts
                if not pairs or len(pairs) % 2:
                    raise MpsFormatError(f"line {lineno}: {section} entry "
                                         "needs row/value pairs")
                dest = rhs if section == "RHS" else ranges
                for rname, val in zip(pairs[::2], pairs[1::2]):
                    if rname == obj_row or rname in ignored_free:
                        warnings.warn(f"{section} on free row {rname!r} ignored")
                        continue
                    if rname not in row_sense:
                        raise MpsFormatError(f"line {lineno}: unknown row "
                                             f"{rname!r}")
                    dest[rname] = _num(val, lineno)
            elif section == "BOUNDS":
                bound_lines.append((lineno, parts))
            elif section == "NAME":
                pass
            else:
                raise MpsFormatError(f"line {lineno}: data before any known "
                                     "section")

    if "ROWS" not in seen:
        raise MpsFormatError("missing ROWS section")
    if obj_row is None:
        warnings.warn("no objective (N) row; zero objective assumed")

    m, n = len(row_order), len(col_order)
    row_pos = {name: i for i, name in enumerate(row_order)}
    a = sp.csr_matrix(
        ([v for _, _, v in triplets],
         ([row_pos[r] for r, _, _ in triplets],
          [j for _, j, _ in triplets])),
        shape=(m, n))
    c = np.zeros(n)
    for j, v in c_entries.items():
        c[j] = v
    if sense_max:
        warnings.warn("OBJSENSE MAX converted to minimization (negated costs)")
        c = -c

    b_lo, b_hi = np.empty(m), np.empty(m)
    for i, name in enumerate(row_order):
        v = rhs.get(name, 0.0)
        s = row_sense[name]
        if s == "E":
            b_lo[i], b_hi[i] = v, v
        elif s == "L":
            b_lo[i], b_hi[i] = -INF, v
        else:
            b_lo[i], b_hi[i] = v, INF
    for name, r in ranges.items():
        i = row_pos[name]
        s = row_sense[name]
        v = rhs.get(name, 0.0)
        if s == "L":
            b_lo[i], b_hi[i] = v - abs(r), v
        elif s == "G":
            b_lo[i], b_hi[i] = v, v + abs(r)
        elif r > 0:
            b_lo[i], b_hi[i] = v, v + r
        elif r < 0:
            b_lo[i], b_hi[i] = v + r, v

    l, u = np.zeros(n), np.full(n, INF)
    explicit_lo = set()
    for lineno, parts in bound_lines:
        typ = parts[0].upper()
        no_value = typ in ("FR", "MI", "PL", "BV")
        if no_value and len(parts) == 3:
            col = parts[2]
        elif not no_value and len(parts) == 4:
            col = parts[2]
        else:
            raise MpsFormatError(f"line {lineno}: malformed BOUNDS entry")
        if col not in col_index:
            raise MpsFormatError(f"line {lineno}: unknown column {col!r}")
        j = col_index[col]
        if typ == "UP":
            u[j] = _num(parts[3], lineno)
            if u[j] < 0 and j not in explicit_lo:
                warnings.warn(f"UP bound below zero on {col!r}: lower bound "
                              "set to -inf")
                l[j] = -INF
        elif typ == "LO":
            l[j] = _num(parts[3], lineno)
            explicit_lo.add(j)
        elif typ == "FX":
            l[j] = u[j] = _num(parts[3], lineno)
            explicit_lo.add(j)
        elif typ == "FR":
            l[j], u[j] = -INF, INF
            explicit_lo.add(j)
        elif typ == "MI":
            l[j] = -INF
            explicit_lo.add(j)
        elif typ == "PL":
            u[j] = INF
        elif typ in ("BV", "UI", "LI"):
            if not int_warned:
                warnings.warn("integrality markers ignored "
                              "(continuous relaxation)")
                int_warned = True
            if typ == "BV":
                l[j], u[j] = 0.0, 1.0
            elif typ == "UI":
                u[j] = _num(parts[3], lineno)
            else:
                l[j] = _num(parts[3], lineno)
                explicit_lo.add(j)
        else:
            raise MpsFormatError(f"line {lineno}: unknown bound type {typ!r}")
    return a, c, l, u, b_lo, b_hi


def write_mps(path, a, c, l, u, b_lo, b_hi, name: str = "ADMMFORGE") -> None:
    """Emit the LP data as free-format MPS. Doubly-infinite row bounds
    have no MPS row type and are rejected."""
    mat = sp.csc_matrix(a)
    m, n = mat.shape
    c = np.asarray(c, dtype=float)
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    b_lo = np.asarray(b_lo, dtype=float)
    b_hi = np.asarray(b_hi, dtype=float)
    if not (c.shape == (n,) and l.shape == (n,) and u.shape == (n,)
            and b_lo.shape == (m,) and b_hi.shape == (m,)):
        raise ValueError("inconsistent LP dimensions")

    lines = [f"NAME          {name}", "ROWS", " N  OBJ"]
    senses = []
    for i in range(m):
        lo, hi = b_lo[i], b_hi[i]
        if lo == -INF and hi == INF:
            raise ValueError(f"row {i}: free constraint rows are not "
                             "representable")
        if lo == hi:
            senses.append("E")
        elif hi == INF:
            senses.append("G")
        else:
            senses.append("L")  # finite upper; RANGES restores a finite lower
        lines.append(f" {senses[i]}  ROW{i}")

    lines.append("COLUMNS")
    for j in range(n):
        wrote = False
        if c[j] != 0.0:
            lines.append(f"    COL{j}  OBJ  {float(c[j])!r}")
            wrote = True
        for ptr in range(mat.indptr[j], mat.indptr[j + 1]):
            i, v = mat.indices[ptr], mat.data[ptr]
            lines.append(f"    COL{j}  ROW{i}  {float(v)!r}")
            wrote = True
        if not wrote:
            lines.append(f"    COL{j}  OBJ  0.0")

    lines.append("RHS")
    for i in range(m):
        rv = b_hi[i] if senses[i] == "L" else b_lo[i]
        if rv != 0.0:
            lines.append(f"    RHS  ROW{i}  {float(rv)!r}")
    lines.append("RANGES")
    for i in range(m):
        if senses[i] == "L" and b_lo[i] != -INF:
            lines.append(f"    RNG  ROW{i}  {float(b_hi[i] - b_lo[i])!r}")

    lines.append("BOUNDS")
    for j in range(n):
        lo, hi = l[j], u[j]
        if lo == 0.0 and hi == INF:
            continue
        if lo == hi:
            lines.append(f" FX BND  COL{j}  {float(lo)!r}")
            continue
        if lo == -INF and hi == INF:
            lines.append(f" FR BND  COL{j}")
            continue
        if lo == -INF:
            lines.append(f" MI BND  COL{j}")
        elif lo != 0.0 or hi < 0.0:
            # explicit LO also when UP < 0 would trigger the reader's
            # negative-upper convention
            lines.append(f" LO BND  COL{j}  {float(lo)!r}")
        if hi != INF:
            lines.append(f" UP BND  COL{j}  {float(hi)!r}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
