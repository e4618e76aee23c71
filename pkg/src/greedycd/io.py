"""Readers and writers for matrices, vectors, traces and audit tables.

Matrices use the MatrixMarket ``array real general`` layout (column-major,
one value per line); vectors are newline-separated decimals. Floats are
written with 17 significant digits so every round trip is bit-exact.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .dense import DenseMatrix
from .errors import ParseError

MM_HEADER = "%%MatrixMarket matrix array real general"
TRACE_HEADER = ["k", "j1", "j2", "mu_tilde", "rse", "energy_sq", "s_inf"]
AUDIT_HEADER = ["k", "mu_tilde", "observed_ratio", "bound", "decrement_gap", "violation_flag"]


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_matrix_market(A, path):
    data = A.data if isinstance(A, DenseMatrix) else np.asarray(A, dtype=np.float64)
    m, n = data.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(MM_HEADER + "\n")
        fh.write(f"{m} {n}\n")
        for v in data.ravel(order="F"):
            fh.write(f"{v:.17g}\n")


def _parse_float(tok, path, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", path, lineno) from None


def read_matrix_market(path, gram="auto"):
    """Read an ``array real general`` MatrixMarket file into a DenseMatrix."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise ParseError("missing %%MatrixMarket banner", path, 1)
    banner = lines[0].split()
    if len(banner) != 5:
        raise ParseError(f"malformed banner {lines[0]!r}", path, 1)
    obj, layout, field, symmetry = (t.lower() for t in banner[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", path, 1)
    if layout != "array":
        raise ParseError(f"only array format is supported, got {layout!r}", path, 1)
    if field != "real" or symmetry != "general":
        raise ParseError(f"only real general matrices are supported, got {field} {symmetry}",
                         path, 1)

    lineno = 1
    body = iter(enumerate(lines[1:], start=2))
    dims = None
    for lineno, line in body:
        if line.startswith("%") or not line.strip():
            continue
        toks = line.split()
        if len(toks) != 2:
            raise ParseError(f"expected 'rows cols', got {line!r}", path, lineno)
        try:
            dims = int(toks[0]), int(toks[1])
        except ValueError:
            raise ParseError(f"bad dimensions {line!r}", path, lineno) from None
        break
    if dims is None:
        raise ParseError("missing dimension line", path, lineno + 1)
    m, n = dims
    if m < 1 or n < 1:
        raise ParseError(f"dimensions must be positive, got {m}x{n}", path, lineno)

    total = m * n
    values = []
    for lineno, line in body:
        if line.startswith("%") or not line.strip():
            continue
        toks = line.split()
        if len(toks) != 1:
            raise ParseError(f"expected one value per line, got {len(toks)}", path, lineno)
        if len(values) == total:
            raise ParseError(f"more than {total} values for a {m}x{n} matrix", path, lineno)
        values.append(_parse_float(toks[0], path, lineno))
    if len(values) < total:
        raise ParseError(f"expected {total} values for a {m}x{n} matrix, found {len(values)}",
                         path, len(lines) + 1)
    arr = np.array(values, dtype=np.float64).reshape((m, n), order="F")
    return DenseMatrix(arr, gram=gram)


def write_vector(v, path):
    with open(path, "w", newline="\n") as fh:
        for x in np.asarray(v, dtype=np.float64):
            fh.write(f"{x:.17g}\n")


def read_vector(path):
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.strip()
            if not tok:
                continue
            if len(tok.split()) != 1:
                raise ParseError("expected one value per line", path, lineno)
            values.append(_parse_float(tok, path, lineno))
    if not values:
        raise ParseError("empty vector file", path)
    return np.array(values, dtype=np.float64)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_trace_csv(trace, path):
    write_csv(path, TRACE_HEADER,
              ([r.k, r.j1, r.j2, r.mu_tilde, r.rse, r.energy_sq, r.s_inf] for r in trace))


def write_audit_csv(records, path):
    write_csv(path, AUDIT_HEADER,
              ([r.k, r.mu_tilde, r.observed_ratio, r.bound, r.decrement_gap, r.violation]
               for r in records))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
