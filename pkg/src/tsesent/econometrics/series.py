"""Date-aligned numeric series."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from datetime import date

import numpy as np


class SeriesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Series:
    name: str
    dates: tuple[date, ...]
    values: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        if values.ndim != 1 or len(values) != len(dates):
            raise SeriesError(f"{self.name}: {len(dates)} dates but {values.size} values")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise SeriesError(f"{self.name}: dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return self.name == other.name and self.dates == other.dates and np.array_equal(self.values, other.values)

    def check_calendar(self, calendar: Sequence[date]) -> None:
        """Raise unless the dates form a contiguous run of ``calendar``."""
        if not self.dates:
            return
        try:
            start = list(calendar).index(self.dates[0])
        except ValueError:
            raise SeriesError(f"{self.name}: {self.dates[0]} is not a trading date") from None
        expected = tuple(calendar[start:start + len(self.dates)])
        if expected != self.dates:
            raise SeriesError(f"{self.name}: gap relative to the trading calendar")

    def head(self, n: int) -> "Series":
        return Series(self.name, self.dates[:n], self.values[:n])

    def slice_dates(self, keep: Sequence[date]) -> "Series":
        pos = {d: i for i, d in enumerate(self.dates)}
        try:
            idx = [pos[d] for d in keep]
        except KeyError as exc:
            raise SeriesError(f"{self.name}: no value on {exc.args[0]}") from None
        return Series(self.name, tuple(keep), self.values[idx])

    def renamed(self, name: str) -> "Series":
        return Series(name, self.dates, self.values)


def daily_return(close: Series, name: str = "return") -> Series:
    """Simple one-day relative change, dated by the later day."""
    if len(close) < 2:
        raise SeriesError("need at least two closes to form a return")
    v = close.values
    if np.any(v <= 0):
        raise SeriesError("closing prices must be positive")
    return Series(name, close.dates[1:], (v[1:] - v[:-1]) / v[:-1])


def align(*series: Series) -> list[Series]:
    """Restrict every series to the dates they all share."""
    if not series:
        return []
    common = set(series[0].dates)
    for s in series[1:]:
        common &= set(s.dates)
    keep = sorted(common)
    return [s.slice_dates(keep) for s in series]
