"""Headered-CSV dataset input/output.

One row per observation; feature columns first, then the target column
(``y`` for regression, ``t`` for classification).  Feature-view column
groups are declared in the run config, not in the data file.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = ["write_dataset", "read_dataset", "write_predictions", "format_float"]


def format_float(x: float) -> str:
    return repr(float(x))


def write_dataset(path: str | Path, X: np.ndarray, y: np.ndarray, target_name: str = "y") -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(X.shape[1])] + [target_name])
        for row, target in zip(X, y):
            w.writerow([format_float(v) for v in row] + [format_float(target)])


def read_dataset(path: str | Path, expect_target: bool = True) -> tuple[np.ndarray, np.ndarray | None, str | None]:
    """Returns (X, targets, target_name); targets is None for query-only files."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    target_name = header[-1] if header and header[-1] in ("y", "t") else None
    n_features = len(header) - (1 if target_name else 0)
    if n_features < 1:
        raise DataError(f"{path}: no feature columns in header {header}")
    if expect_target and target_name is None:
        raise DataError(f"{path}: expected a trailing 'y' or 't' target column, header is {header}")
    X = np.empty((len(rows) - 1, n_features))
    t = np.empty(len(rows) - 1) if target_name else None
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from exc
        X[i - 2] = vals[:n_features]
        if t is not None:
            t[i - 2] = vals[-1]
    if X.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    return X, t, target_name


def write_predictions(path: str | Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(len(arrays[0])):
            w.writerow([format_float(a[i]) for a in arrays])
