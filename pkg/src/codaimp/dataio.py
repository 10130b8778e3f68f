"""CSV input/output for data matrices, detection limits and masks.

Matrix files carry one header row of variable names and numeric cells;
a cell value of 0 encodes a rounded zero (a measurement censored below
the detection limit).  Negative values are rejected: genuinely missing
or structural zeros are not supported by this tool.  Detection-limit
files hold a single row under the same header.  Floats are written with
``repr``, so a written file re-reads to bit-identical values.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = [
    "read_matrix_csv",
    "write_matrix_csv",
    "read_limits_csv",
    "write_limits_csv",
    "read_mask_csv",
]


def _parse_cell(text: str, row: int, column: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(
            f"{name}: cell at data row {row}, column {column} is not numeric: {text!r}"
        ) from None
    if not np.isfinite(value):
        raise ValueError(f"{name}: cell at data row {row}, column {column} is not finite")
    return value


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric matrix with a header row; returns (names, values)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = []
        for r, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: data row {r} has {len(row)} cells, header has {len(header)}"
                )
            rows.append([_parse_cell(c, r, j, str(path)) for j, c in enumerate(row)])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64)
    if np.any(values < 0):
        i, j = np.argwhere(values < 0)[0]
        raise ValueError(
            f"{path}: negative value at data row {i}, column {j} "
            f"({header[j]}); only positive parts and 0 for rounded zeros are supported"
        )
    return header, values


def write_matrix_csv(path, header: list[str], values: np.ndarray) -> None:
    values = np.asarray(values)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def read_limits_csv(path, header: list[str]) -> np.ndarray:
    """Read a one-row detection-limit file matching ``header``.

    Empty cells and non-positive values mean "no limit" for that column.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        names = [h.strip() for h in next(reader)]
        if names != header:
            raise ValueError(
                f"{path}: detection-limit header {names} does not match data header {header}"
            )
        row = next(reader, None)
        if row is None:
            raise ValueError(f"{path}: missing the detection-limit row")
    d = np.full(len(header), np.nan)
    for j, cell in enumerate(row):
        text = cell.strip()
        if not text:
            continue
        value = _parse_cell(text, 0, j, str(path))
        if value > 0:
            d[j] = value
    return d


def write_limits_csv(path, header: list[str], d: np.ndarray) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerow(["" if not np.isfinite(v) else repr(float(v)) for v in d])


def read_mask_csv(path, shape: tuple[int, int]) -> np.ndarray:
    """Read a 0/1 mask file (no header) of the given shape."""
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle) if row and any(c.strip() for c in row)]
    mask = np.array(
        [[_parse_cell(c, r, j, str(path)) for j, c in enumerate(row)] for r, row in enumerate(rows)]
    )
    if mask.shape != shape:
        raise ValueError(f"{path}: mask shape {mask.shape} does not match data shape {shape}")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError(f"{path}: mask cells must be 0 or 1")
    return mask.astype(bool)
