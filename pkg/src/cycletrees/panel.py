"""Monthly data panels: CSV ingestion, transforms, standardization, masks.

A panel is an n-series x T-period real matrix on a contiguous monthly index,
with explicit missing cells (NaN).  Vintage identity travels with the panel so
replay harnesses can audit what was observable when.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateScaleError,
    InputError,
    PanelIntegrityError,
    PanelParseError,
    TransformDomainError,
)

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

# Optional audit hook: when set (list), every data file opened through
# load_csv_panel is appended, letting replay tests verify no-lookahead.
ACCESS_LOG: Optional[list] = None


def month_from_str(text: str) -> int:
    """Parse 'YYYY-MM' into a month ordinal (year*12 + month-1)."""
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise PanelParseError(f"malformed date {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise PanelParseError(f"malformed date {text!r}")
    return year * 12 + month - 1


def month_to_str(ordinal: int) -> str:
    return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"


class Transform(Enum):
    LEVELS = "levels"
    YOY_RETURN = "yoy_return"
    MOM_SQUARED_RETURN = "mom_squared_return"


# Alias matching the domain vocabulary; a per-series spec is one Transform.
TransformSpec = Transform


@dataclass(frozen=True)
class Panel:
    """Immutable monthly panel with explicit missing cells.

    Attributes
    ----------
    dates : int ndarray, shape (T,)
        Month ordinals, strictly increasing and contiguous.
    values : float ndarray, shape (n, T)
        One row per series; NaN marks a missing cell.
    series_ids : tuple of str
    vintage_date : int
        Month ordinal identifying the vintage this snapshot represents.
    """

    dates: np.ndarray
    values: np.ndarray
    series_ids: tuple
    vintage_date: int

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "series_ids", tuple(self.series_ids))
        if values.ndim != 2 or values.shape != (len(self.series_ids), dates.size):
            raise PanelIntegrityError(
                f"values shape {values.shape} does not match "
                f"{len(self.series_ids)} series x {dates.size} dates"
            )
        if dates.size:
            steps = np.diff(dates)
            if np.any(steps <= 0):
                raise PanelIntegrityError("dates not strictly increasing")
            if np.any(steps != 1):
                raise PanelIntegrityError("non-contiguous monthly index")
            if np.any(np.all(np.isnan(values), axis=1)):
                empty = [self.series_ids[i] for i in
                         np.where(np.all(np.isnan(values), axis=1))[0]]
                raise PanelIntegrityError(f"series with no observed cell: {empty}")
        values.setflags(write=False)
        dates.setflags(write=False)

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]

    def truncate(self, last_date: int) -> "Panel":
        """Keep periods up to and including ``last_date``."""
        keep = self.dates <= last_date
        return Panel(self.dates[keep], self.values[:, keep],
                     self.series_ids, min(self.vintage_date, last_date))

    def series(self, series_id: str) -> np.ndarray:
        return self.values[self.series_ids.index(series_id)]

    def with_values(self, values: np.ndarray) -> "Panel":
        return Panel(self.dates, values, self.series_ids, self.vintage_date)


@dataclass(frozen=True)
class Standardizer:
    """Positive per-series scale factors; divide to standardize."""

    scale: np.ndarray

    def __post_init__(self):
        scale = np.asarray(self.scale, dtype=np.float64)
        if np.any(~(scale > 0)):
            raise DegenerateScaleError("all scale factors must be positive")
        object.__setattr__(self, "scale", scale)

    def standardize_values(self, values: np.ndarray) -> np.ndarray:
        return values / self.scale[:, None]

    def destandardize_values(self, values: np.ndarray) -> np.ndarray:
        return values * self.scale[:, None]

    def destandardize(self, panel: Panel) -> Panel:
        return panel.with_values(self.destandardize_values(panel.values))


@dataclass(frozen=True)
class ObservationMask:
    """Which series are observed at each period.

    ``observed[t, i]`` is True when series i has a value at period t; the
    selection matrix for period t consists of the identity rows of the
    observed series, in increasing series order.
    """

    observed: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=bool)
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)

    @property
    def n_periods(self) -> int:
        return self.observed.shape[0]

    @property
    def n_series(self) -> int:
        return self.observed.shape[1]

    def indices(self, t: int) -> np.ndarray:
        """Observed-series indices D_t (0-based, increasing)."""
        return np.where(self.observed[t])[0]

    def selection_matrix(self, t: int) -> np.ndarray:
        idx = self.indices(t)
        a = np.zeros((idx.size, self.n_series))
        a[np.arange(idx.size), idx] = 1.0
        return a

    @property
    def periods_with_obs(self) -> np.ndarray:
        """Sorted period indices with at least one observation."""
        return np.where(self.observed.any(axis=1))[0]

    def restrict(self, extra_missing: np.ndarray) -> "ObservationMask":
        """Drop additional cells (True in ``extra_missing`` means delete)."""
        extra = np.asarray(extra_missing, dtype=bool)
        if extra.shape != self.observed.shape:
            raise InputError("extra-missing mask shape mismatch")
        return ObservationMask(self.observed & ~extra)


@dataclass(frozen=True)
class ColumnSchema:
    """Optional remapping of CSV columns: date column name and series order."""

    date_column: str = "date"
    series_columns: Optional[Sequence[str]] = None


_MISSING_TOKENS = ("", "NA")


def load_csv_panel(path, schema: Optional[ColumnSchema] = None,
                   vintage_date: Optional[int] = None) -> Panel:
    """Load a monthly panel from CSV.

    Header row is ``date,<id>,...``; dates are ``YYYY-MM``; missing cells are
    empty fields or the literal ``NA``.  The vintage date defaults to the
    filename stem when it parses as ``YYYY-MM``, else to the last date.
    """
    schema = schema or ColumnSchema()
    if ACCESS_LOG is not None:
        ACCESS_LOG.append(str(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelParseError(f"{path}: empty file") from None
        if schema.date_column != header[0]:
            if schema.date_column in header:
                raise PanelIntegrityError(
                    f"{path}: date column {schema.date_column!r} must be first")
            raise PanelParseError(f"{path}: missing date column "
                                  f"{schema.date_column!r}")
        file_ids = header[1:]
        rows = list(reader)

    dates = []
    seen = set()
    cells = []
    for rownum, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise PanelIntegrityError(f"{path}: ragged row {rownum}")
        try:
            ordinal = month_from_str(row[0])
        except PanelParseError:
            raise PanelParseError(
                f"{path}: malformed date {row[0]!r} at row {rownum}") from None
        if ordinal in seen:
            raise PanelIntegrityError(
                f"{path}: duplicate date {row[0]} at row {rownum}")
        seen.add(ordinal)
        parsed = []
        for col, tok in zip(file_ids, row[1:]):
            tok = tok.strip()
            if tok in _MISSING_TOKENS:
                parsed.append(np.nan)
                continue
            try:
                parsed.append(float(tok))
            except ValueError:
                raise PanelParseError(
                    f"{path}: non-numeric value {tok!r} in column {col} "
                    f"at row {rownum}") from None
        dates.append(ordinal)
        cells.append(parsed)

    values = np.array(cells, dtype=np.float64).T if cells else \
        np.empty((len(file_ids), 0))
    ids = file_ids
    if schema.series_columns is not None:
        order = []
        for name in schema.series_columns:
            if name not in file_ids:
                raise PanelParseError(f"{path}: missing series column {name!r}")
            order.append(file_ids.index(name))
        values = values[order]
        ids = list(schema.series_columns)

    if vintage_date is None:
        stem = os.path.splitext(os.path.basename(str(path)))[0]
        try:
            vintage_date = month_from_str(stem)
        except PanelParseError:
            vintage_date = int(dates[-1]) if dates else 0
    return Panel(np.array(dates, dtype=np.int64), values, ids, vintage_date)


def write_csv_panel(panel: Panel, path) -> None:
    """Inverse of load_csv_panel; missing cells become empty fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.series_ids])
        for t in range(panel.n_periods):
            row = [month_to_str(int(panel.dates[t]))]
            for i in range(panel.n_series):
                v = panel.values[i, t]
                row.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(row)


def apply_transform(panel: Panel, spec: Sequence[Transform]) -> Panel:
    """Apply per-series transforms.

    YoY returns are 100*(x_t/x_{t-12} - 1); squared MoM returns are
    (100*(x_t/x_{t-1} - 1))^2; levels pass through.  Leading periods without
    enough history become missing.
    """
    if len(spec) != panel.n_series:
        raise InputError(f"need {panel.n_series} transforms, got {len(spec)}")
    out = np.full_like(panel.values, np.nan)
    for i, tr in enumerate(spec):
        x = panel.values[i]
        if tr is Transform.LEVELS:
            out[i] = x
            continue
        lag = 12 if tr is Transform.YOY_RETURN else 1
        for t in range(lag, x.size):
            if np.isnan(x[t]) or np.isnan(x[t - lag]):
                continue
            if x[t - lag] <= 0 or x[t] <= 0:
                bad_t = t - lag if x[t - lag] <= 0 else t
                raise TransformDomainError(
                    f"nonpositive level in series {panel.series_ids[i]} at "
                    f"{month_to_str(int(panel.dates[bad_t]))}")
            pct = 100.0 * (x[t] / x[t - lag] - 1.0)
            out[i, t] = pct if tr is Transform.YOY_RETURN else pct * pct
    return panel.with_values(out)


def standardize(panel: Panel) -> tuple:
    """Divide each series by its sample standard deviation over observed cells.

    Returns the scaled panel and the Standardizer holding the factors.
    """
    scale = np.empty(panel.n_series)
    for i in range(panel.n_series):
        obs = panel.values[i][~np.isnan(panel.values[i])]
        if obs.size < 2:
            raise InputError(
                f"series {panel.series_ids[i]} has fewer than 2 observed values")
        s = float(np.std(obs, ddof=1))
        if s == 0.0:
            raise DegenerateScaleError(
                f"series {panel.series_ids[i]} has zero variance")
        scale[i] = s
    std = Standardizer(scale)
    return panel.with_values(std.standardize_values(panel.values)), std


def observation_structure(panel: Panel) -> ObservationMask:
    return ObservationMask(~np.isnan(panel.values).T)
