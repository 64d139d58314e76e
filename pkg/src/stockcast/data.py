"""OHLCV ingestion, cleaning, chronological splits, min-max scaling and windowing.

The input format is the Yahoo Finance daily export::

    Date,Open,High,Low,Close,Adj Close,Volume
    2004-01-02,12.34,12.90,12.10,12.55,9.87,1234500

Fields that are empty or the literal token ``null`` are treated as missing.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptySeriesError,
    FitError,
    InputError,
    InsufficientDataError,
    OrderingError,
    ParseError,
    SchemaError,
    ShapeError,
    SplitError,
)

logger = logging.getLogger(__name__)

FIELDS = ("date", "open", "high", "low", "close", "adj_close", "volume")
HEADER = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")
PRICE_FIELDS = ("open", "high", "low", "close", "adj_close")
NULL_TOKENS = {"", "null"}


class OhlcOrderWarning(UserWarning):
    """A bar whose high/low do not bracket its open/close."""


@dataclass(frozen=True)
class RawBar:
    """One parsed CSV row; any field may be ``None`` (missing)."""

    line: int
    date: dt.date | None
    open: float | None
    high: float | None
    low: float | None
    close: float | None
    adj_close: float | None
    volume: float | None

    @property
    def has_null(self) -> bool:
        return any(getattr(self, f) is None for f in FIELDS)


@dataclass(frozen=True)
class OhlcvBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: float

    def __post_init__(self):
        for name in PRICE_FIELDS:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{self.date}: {name}={value!r} is not a positive finite price")
        if not (math.isfinite(self.volume) and self.volume >= 0):
            raise InputError(f"{self.date}: volume={self.volume!r} must be finite and >= 0")

    @property
    def ohlc_consistent(self) -> bool:
        return self.low <= min(self.open, self.close) and self.high >= max(self.open, self.close)


@dataclass(frozen=True)
class PriceSeries:
    """Cleaned, strictly date-ordered bars for one ticker."""

    ticker: str
    bars: tuple[OhlcvBar, ...]

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        if not self.bars:
            raise EmptySeriesError(f"series {self.ticker!r} is empty")
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise OrderingError(f"dates not strictly increasing: {prev.date} then {cur.date}")
        bad = [b.date for b in self.bars if not b.ohlc_consistent]
        if bad:
            warnings.warn(
                f"{len(bad)} bar(s) violate OHLC ordering (first: {bad[0]})",
                OhlcOrderWarning,
                stacklevel=3,
            )

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def column(self, name: str) -> np.ndarray:
        if name not in FIELDS[1:]:
            raise KeyError(name)
        return np.array([getattr(b, name) for b in self.bars], dtype=float)

    def features(self, names: Sequence[str]) -> np.ndarray:
        """Stack the named columns into an ``(n_bars, len(names))`` matrix."""
        return np.column_stack([self.column(n) for n in names])


@dataclass(frozen=True)
class DataSplit:
    train: PriceSeries
    test: PriceSeries
    boundary: dt.date


def _parse_date(token: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(token)
    except ValueError:
        raise ParseError(f"unparseable date {token!r}", line) from None


def _parse_number(token: str, field: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"unparseable {field} value {token!r}", line) from None
    return value


def parse_yahoo_csv(text: str) -> list[RawBar]:
    """Parse a Yahoo-format CSV document into raw bars, in file order.

    Column matching is case-insensitive and order-insensitive. Raises
    `SchemaError` when a required column is missing, `ParseError` (with the
    1-based line number) for a malformed non-null token and
    `EmptySeriesError` when there are no data rows.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptySeriesError("document has no header row") from None
    normalized = [h.strip().lower() for h in header]
    positions = {}
    for fieldname, label in zip(FIELDS, HEADER):
        try:
            positions[fieldname] = normalized.index(label.lower())
        except ValueError:
            raise SchemaError(f"missing required column {label!r}") from None

    bars = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
        values = {}
        for fieldname, pos in positions.items():
            token = row[pos].strip()
            if token.lower() in NULL_TOKENS:
                values[fieldname] = None
            elif fieldname == "date":
                values[fieldname] = _parse_date(token, line)
            else:
                values[fieldname] = _parse_number(token, fieldname, line)
        bars.append(RawBar(line=line, **values))
    if not bars:
        raise EmptySeriesError("document has a header but no data rows")
    return bars


def drop_nulls(bars: Iterable[RawBar | OhlcvBar] | PriceSeries, ticker: str = "") -> PriceSeries:
    """Remove every bar with a missing field and validate the remainder.

    Accepts raw bars or an already-clean series, so cleaning is idempotent.
    """
    if isinstance(bars, PriceSeries):
        ticker = ticker or bars.ticker
        bars = bars.bars
    kept, dropped = [], 0
    for bar in bars:
        if isinstance(bar, OhlcvBar):
            kept.append(bar)
        elif bar.has_null:
            dropped += 1
        else:
            kept.append(OhlcvBar(**{f: getattr(bar, f) for f in FIELDS}))
    logger.info("dropped %d null row(s), kept %d", dropped, len(kept))
    if not kept:
        raise EmptySeriesError("no rows left after removing nulls")
    return PriceSeries(ticker, tuple(kept))


def load_csv(path, ticker: str | None = None) -> PriceSeries:
    """Read, parse and clean a Yahoo CSV file."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return drop_nulls(parse_yahoo_csv(text), ticker or path.stem)


def format_yahoo_csv(bars: Iterable[RawBar | OhlcvBar] | PriceSeries) -> str:
    """Serialize bars in the canonical Yahoo schema; missing values become ``null``."""
    if isinstance(bars, PriceSeries):
        bars = bars.bars
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for bar in bars:
        row = []
        for f in FIELDS:
            value = getattr(bar, f)
            if value is None:
                row.append("null")
            elif f == "date":
                row.append(value.isoformat())
            elif f == "volume" and float(value).is_integer():
                row.append(str(int(value)))
            else:
                row.append(repr(float(value)))
        writer.writerow(row)
    return buf.getvalue()


def split_chronological(series: PriceSeries, boundary: dt.date | str) -> DataSplit:
    """Train gets every bar dated before ``boundary``; test gets the rest."""
    if isinstance(boundary, str):
        boundary = dt.date.fromisoformat(boundary)
    train = tuple(b for b in series.bars if b.date < boundary)
    test = tuple(b for b in series.bars if b.date >= boundary)
    if not train or not test:
        raise SplitError(
            f"boundary {boundary} leaves an empty segment "
            f"(series spans {series.bars[0].date}..{series.bars[-1].date})"
        )
    return DataSplit(PriceSeries(series.ticker, train), PriceSeries(series.ticker, test), boundary)


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature minima and maxima of the training rows."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.mins)

    @property
    def degenerate(self) -> np.ndarray:
        """True for constant features, which scale to 0.0."""
        return self.maxs == self.mins


def _as_matrix(matrix) -> tuple[np.ndarray, bool]:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim != 2:
        raise ShapeError(f"expected a 1-D or 2-D array, got shape {arr.shape}")
    return arr, False


def fit_minmax(matrix) -> ScalerParams:
    arr, _ = _as_matrix(matrix)
    if arr.shape[0] == 0:
        raise FitError("cannot fit a scaler on zero rows")
    return ScalerParams(arr.min(axis=0), arr.max(axis=0))


def _check_features(params: ScalerParams, arr: np.ndarray):
    if arr.shape[1] != params.n_features:
        raise ShapeError(f"scaler has {params.n_features} feature(s), input has {arr.shape[1]}")


def apply_minmax(params: ScalerParams, matrix) -> np.ndarray:
    arr, flat = _as_matrix(matrix)
    _check_features(params, arr)
    span = np.where(params.degenerate, 1.0, params.maxs - params.mins)
    scaled = np.where(params.degenerate, 0.0, (arr - params.mins) / span)
    return scaled[:, 0] if flat else scaled


def invert_minmax(params: ScalerParams, scaled) -> np.ndarray:
    """Map scaled values back to original units; degenerate features return their constant."""
    arr, flat = _as_matrix(scaled)
    _check_features(params, arr)
    out = arr * (params.maxs - params.mins) + params.mins
    return out[:, 0] if flat else out


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised pairs: ``inputs[i] = values[i:i+w]`` and ``targets[i] = values[i+w]``."""

    window_len: int
    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


def build_windows(values, window_len: int = 7) -> WindowedDataset:
    values = np.asarray(values, dtype=float)
    if window_len < 1:
        raise InputError("window_len must be positive")
    if values.ndim != 1:
        raise ShapeError("build_windows expects a 1-D sequence")
    n = len(values)
    if n <= window_len:
        raise InsufficientDataError(f"need more than {window_len} values, got {n}")
    idx = np.arange(n - window_len)[:, None] + np.arange(window_len)[None, :]
    return WindowedDataset(window_len, values[idx], values[window_len:].copy())


def business_days(end: dt.date, n: int) -> list[dt.date]:
    """The ``n`` weekdays ending at (or before) ``end``, in ascending order."""
    days = []
    day = end
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day -= dt.timedelta(days=1)
    return days[::-1]


def synthetic_ohlcv(
    n: int = 500,
    seed: int = 0,
    end: dt.date = dt.date(2019, 12, 31),
    ticker: str = "SYN",
    start_price: float = 100.0,
    null_rows: int = 0,
) -> list[RawBar]:
    """Generate a plausible daily OHLCV path (geometric random walk plus a weekly cycle).

    Adj Close applies a few seeded dividend adjustments, as Yahoo's column does.

    ``null_rows`` bars, at seeded positions, get a missing close and adj close,
    mimicking Yahoo's holiday rows.
    """
    rng = np.random.default_rng(seed)
    dates = business_days(end, n)
    weekly = 0.002 * np.sin(2 * np.pi * np.arange(n) / 5)
    log_ret = 0.0003 + weekly + 0.012 * rng.standard_normal(n)
    close = start_price * np.exp(np.cumsum(log_ret))
    open_ = close * np.exp(0.004 * rng.standard_normal(n))
    spread = np.abs(0.006 * rng.standard_normal((2, n)))
    high = np.maximum(open_, close) * (1 + spread[0])
    low = np.minimum(open_, close) * (1 - spread[1])
    # dividend adjustment: bars before each ex-date are scaled down by that dividend's yield
    ex_dates = np.sort(rng.choice(np.arange(1, n), size=min(4, n - 1), replace=False))
    factor = np.ones(n)
    for ex in ex_dates:
        factor[:ex] *= 1.0 - rng.uniform(0.005, 0.02)
    adj = close * factor
    volume = np.round(rng.lognormal(13.0, 0.3, n))
    null_at = set(rng.choice(np.arange(1, n - 1), size=null_rows, replace=False).tolist()) if null_rows else set()
    bars = []
    for i, day in enumerate(dates):
        values = [round(float(v), 6) for v in (open_[i], high[i], low[i], close[i], adj[i])]
        if i in null_at:
            values[3] = values[4] = None
        bars.append(RawBar(i + 2, day, *values, float(volume[i])))
    return bars
