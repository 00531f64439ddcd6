"""CSV ingestion and the canonical in-memory series / weekly-matrix forms.

The input format is a UTF-8 CSV with a header ``date,<column>[,...]``,
ISO-8601 dates on strictly consecutive days and non-negative integer counts.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import (DateGap, EmptySeries, MissingColumn, NegativeCount,
                     NonIntegerCount, NotWholeWeeks, TooShort)

DAY = dt.timedelta(days=1)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Dated, gapless sequence of daily counts (one value per day).

    ``values`` are non-negative integers; ``start_date`` dates the first one.
    """

    start_date: dt.date
    values: np.ndarray
    label: str = "total"

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (self.start_date == other.start_date
                and self.label == other.label
                and np.array_equal(self.values, other.values))

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size == 0:
            raise EmptySeries()
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(values == np.floor(values)):
                raise NonIntegerCount(int(np.argmax(values != np.floor(values))) + 1)
            values = values.astype(np.int64)
        else:
            values = values.astype(np.int64)
        if np.any(values < 0):
            raise NegativeCount(int(np.argmax(values < 0)) + 1)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return int(self.values.size)

    @property
    def end_date(self) -> dt.date:
        return self.start_date + (len(self) - 1) * DAY

    def dates(self):
        return [self.start_date + i * DAY for i in range(len(self))]


@dataclass(frozen=True, eq=False)
class WeeklyMatrix:
    """Week-by-weekday restructuring of a daily series.

    ``cells[r, c]`` is the count of day ``7*r + c`` of the retained suffix
    (row-major flattening reproduces that suffix exactly).  ``weekday_of_col1``
    records which calendar weekday column 1 holds, using Monday=1..Sunday=7.
    """

    cells: np.ndarray
    weekday_of_col1: int
    start_date: dt.date = field(default=None, compare=False)

    def __eq__(self, other):
        if not isinstance(other, WeeklyMatrix):
            return NotImplemented
        return (self.weekday_of_col1 == other.weekday_of_col1
                and np.array_equal(self.cells, other.cells))

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] != 7:
            raise NotWholeWeeks(int(cells.size % 7))
        if cells.shape[0] < 2:
            raise TooShort("a weekly matrix needs at least two whole weeks")
        if np.any(cells < 0):
            raise NegativeCount(int(np.argmax(cells.ravel() < 0)) + 1)
        if not 1 <= self.weekday_of_col1 <= 7:
            raise NotWholeWeeks(0)
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def rows(self) -> int:
        return int(self.cells.shape[0])

    def flatten(self) -> np.ndarray:
        return self.cells.ravel().copy()

    def weekday_of_column(self, col: int) -> int:
        """Calendar weekday (Monday=1) of 0-based column ``col``."""
        return (self.weekday_of_col1 - 1 + col) % 7 + 1


def series_values(series_or_array) -> np.ndarray:
    """Float view of a TimeSeries, WeeklyMatrix flattening, or plain array.

    All analysis operations accept either form: measured series arrive as
    TimeSeries, simulated/oracle data as plain arrays.
    """
    if isinstance(series_or_array, TimeSeries):
        return series_or_array.values.astype(float)
    if isinstance(series_or_array, WeeklyMatrix):
        return series_or_array.cells.ravel().astype(float)
    return np.asarray(series_or_array, dtype=float)


def weekday_channel(series: TimeSeries) -> np.ndarray:
    """Weekday index (Monday=1..Sunday=7) for every sample of the series."""
    first = series.start_date.isoweekday()
    return (first - 1 + np.arange(len(series))) % 7 + 1


def _parse_count(text: str, row: int) -> int:
    try:
        value = int(text.strip())
    except (TypeError, ValueError):
        raise NonIntegerCount(row) from None
    if value < 0:
        raise NegativeCount(row)
    return value


def load_series(path, column: str = "total", interpolate: str | None = None) -> TimeSeries:
    """Read a daily-count series from CSV.

    The file must carry a ``date`` column plus the named count column; dates
    must be strictly consecutive ascending.  With ``interpolate="linear"``
    missing days are filled with the rounded linear interpolant instead of
    raising DateGap.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if "date" not in header:
            raise MissingColumn("date")
        if column not in header:
            raise MissingColumn(column)

        dates: list[dt.date] = []
        counts: list[int] = []
        for row_no, record in enumerate(reader, start=1):
            date = dt.date.fromisoformat(record["date"].strip())
            count = _parse_count(record[column], row_no)
            if dates:
                expected = dates[-1] + DAY
                if date != expected:
                    if interpolate == "linear" and date > expected:
                        left = counts[-1]
                        span = (date - dates[-1]).days
                        for step in range(1, span):
                            filled = round(left + (count - left) * step / span)
                            dates.append(dates[-1] + DAY)
                            counts.append(int(filled))
                    else:
                        raise DateGap(expected)
            dates.append(date)
            counts.append(count)

    if not counts:
        raise EmptySeries()
    return TimeSeries(start_date=dates[0], values=np.array(counts, dtype=np.int64),
                      label=column)


def save_series(series: TimeSeries, path, column: str | None = None) -> None:
    """Write a series back to CSV, bit-exact for integer counts."""
    name = column or series.label or "total"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", name])
        date = series.start_date
        for value in series.values:
            writer.writerow([date.isoformat(), int(value)])
            date += DAY


def to_weekly_matrix(series: TimeSeries, skip_head: int | None = None) -> WeeklyMatrix:
    """Drop ``skip_head`` leading days and reshape the rest into whole weeks.

    ``skip_head`` defaults to ``len(series) mod 7`` so the retained suffix
    always tiles into weeks.  The weekday of the first retained day is
    recorded so downstream weekday alignment (Monday=1) needs no guessing.
    """
    n = len(series)
    if skip_head is None:
        skip_head = n % 7
    if skip_head < 0 or skip_head >= n:
        raise TooShort(f"skip_head={skip_head} leaves no data")
    retained = n - skip_head
    remainder = retained % 7
    if remainder:
        raise NotWholeWeeks(remainder)
    if retained < 14:
        raise TooShort("fewer than two whole weeks after the head skip")
    first_day = series.start_date + skip_head * DAY
    cells = series.values[skip_head:].reshape(-1, 7)
    return WeeklyMatrix(cells=cells, weekday_of_col1=first_day.isoweekday(),
                        start_date=first_day)
