"""Numeric CSV ingestion and extraction of linearly independent feature columns."""

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NonNumeric, NotTall, ParseError, RaggedRows, RankZero
from .linalg import InstanceMatrix


@dataclass(frozen=True, eq=False)
class RawMatrix:
    values: np.ndarray
    source: str = ""
    header_skipped: bool = False

    @property
    def shape(self):
        return self.values.shape


def load_csv(path, delimiter=",", skip_header=False):
    """Read a rectangular matrix of finite decimals.

    Blank lines are ignored. Errors carry 1-based line and column numbers.

    Raises
    ------
    NonNumeric
        A field is not a finite decimal number.
    RaggedRows
        Rows have differing field counts.
    ParseError
        The file holds no data rows.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header_done = not skip_header
        for fields in reader:
            line = reader.line_num
            if not fields or all(not f.strip() for f in fields):
                continue
            if not header_done:
                header_done = True
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise RaggedRows(f"expected {width} fields, found {len(fields)}", line=line)
            row = []
            for col, text in enumerate(fields, start=1):
                try:
                    value = float(text.strip())
                except ValueError:
                    raise NonNumeric(f"cannot parse {text!r} as a number", line=line, field=f"column {col}") from None
                if not math.isfinite(value):
                    raise NonNumeric(f"non-finite value {text!r}", line=line, field=f"column {col}")
                row.append(value)
            rows.append(row)
    if not rows:
        raise ParseError(f"no numeric rows in {path}")
    return RawMatrix(np.array(rows, dtype=float), str(path), bool(skip_header))


def select_independent_columns(A, tol=1e-10):
    """Indices (ascending) of columns kept by a column-pivoted QR factorization.

    A column is kept when its pivot exceeds ``tol`` times the largest pivot.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0 or not np.any(A):
        raise RankZero("matrix has no nonzero column")
    R, piv = scipy.linalg.qr(A, mode="r", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.count_nonzero(d > tol * d[0]))
    return np.sort(piv[:rank])


def independent_columns(A, tol=1e-10):
    """Restrict ``A`` to a maximal independent set of its original columns.

    Returns
    -------
    InstanceMatrix
        The kept columns in their original order.

    Raises
    ------
    RankZero
        All columns are zero.
    NotTall
        At least as many columns are kept as there are rows.
    """
    values = A.values if isinstance(A, RawMatrix) else np.asarray(A, dtype=float)
    keep = select_independent_columns(values, tol)
    if keep.size >= values.shape[0]:
        raise NotTall(f"{keep.size} independent columns but only {values.shape[0]} rows")
    return InstanceMatrix(values[:, keep])


def load_instance(path, delimiter=",", skip_header=False, tol=1e-10):
    """``load_csv`` followed by ``independent_columns``."""
    return independent_columns(load_csv(path, delimiter, skip_header), tol)
