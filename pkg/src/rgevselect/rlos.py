"""Container and file I/O for r-largest order statistics samples."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DataValidationError

__all__ = ["RLosSample", "as_rlos_sample", "load_rlos_csv"]


@dataclass(frozen=True)
class RLosSample:
    """n blocks of the top R order statistics, optionally time-indexed.

    Attributes
    ----------
    values : ndarray, shape (n, R)
        Order statistics; every row must be non-increasing left to right.
    time : ndarray of int or None
        Time index per block (t = 1..n convention); required by the
        nonstationary model.
    units : str
        Free-form unit label carried through for reporting.
    """

    values: np.ndarray
    time: np.ndarray | None = None
    units: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise DataValidationError(
                f"values must be a non-empty n x R matrix, got shape {values.shape}."
            )
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataValidationError(
                f"non-finite value at block {i + 1}, order {j + 1}."
            )
        drop = np.diff(values, axis=1)
        if np.any(drop > 0.0):
            i, j = np.argwhere(drop > 0.0)[0]
            raise DataValidationError(
                f"row {i + 1} increases from order {j + 1} to {j + 2} "
                f"({values[i, j]:g} < {values[i, j + 1]:g}); rows must be non-increasing."
            )
        object.__setattr__(self, "values", values)
        if self.time is not None:
            time = np.asarray(self.time, dtype=int)
            if time.shape != (values.shape[0],):
                raise DataValidationError(
                    f"time index length {time.shape} does not match {values.shape[0]} blocks."
                )
            object.__setattr__(self, "time", time)

    @property
    def n_blocks(self) -> int:
        return self.values.shape[0]

    @property
    def n_orders(self) -> int:
        return self.values.shape[1]

    def time_index(self) -> np.ndarray:
        """Per-block time index; raises when none was provided."""
        if self.time is None:
            raise DataValidationError(
                "sample has no time index; one is required for nonstationary models."
            )
        return self.time

    def top(self, r: int) -> "RLosSample":
        """Sub-sample keeping the first r order statistics."""
        if not 1 <= r <= self.n_orders:
            raise ValueError(f"r must be in [1, {self.n_orders}], got {r}.")
        return RLosSample(self.values[:, :r], time=self.time, units=self.units)


def as_rlos_sample(data, time=None, units: str = "") -> RLosSample:
    """Coerce an array-like or pass through an existing RLosSample."""
    if isinstance(data, RLosSample):
        return data
    return RLosSample(np.asarray(data, dtype=float), time=time, units=units)


def load_rlos_csv(path, units: str = "") -> tuple[RLosSample, np.ndarray]:
    """Read a delimited dataset of annual top-R order statistics.

    Expected layout: a header row, then one row per block with the year in
    column 1 and the order statistics r1..rR in columns 2..R+1.  Years must
    be strictly increasing and every row complete.

    Returns
    -------
    (sample, years); the sample's time index is year - year0 + 1.
    """
    years: list[int] = []
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        sniff = fh.read(4096)
        fh.seek(0)
        first_line = sniff.splitlines()[0] if sniff else ""
        delimiter = ","
        for cand in (",", "\t", ";"):
            if cand in first_line:
                delimiter = cand
                break
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataValidationError(f"{path}: line 1: missing or too-short header row.")
        width = None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise DataValidationError(
                        f"{path}: line {lineno}: need a year plus at least one order statistic."
                    )
            if len(row) != width:
                raise DataValidationError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}."
                )
            try:
                year = int(float(row[0]))
            except ValueError:
                raise DataValidationError(
                    f"{path}: line {lineno}: year {row[0]!r} is not an integer."
                ) from None
            vals = []
            for col, cell in enumerate(row[1:], start=2):
                cell = cell.strip()
                if not cell:
                    raise DataValidationError(
                        f"{path}: line {lineno}: missing value in column {col}."
                    )
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataValidationError(
                        f"{path}: line {lineno}: {cell!r} in column {col} is not numeric."
                    ) from None
            years.append(year)
            rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no data rows.")
    years_arr = np.asarray(years, dtype=int)
    if np.any(np.diff(years_arr) <= 0):
        i = int(np.argwhere(np.diff(years_arr) <= 0)[0, 0])
        raise DataValidationError(
            f"{path}: years must be strictly increasing "
            f"({years_arr[i]} then {years_arr[i + 1]} at data row {i + 2})."
        )
    time = years_arr - years_arr[0] + 1
    sample = RLosSample(np.asarray(rows, dtype=float), time=time, units=units)
    return sample, years_arr
