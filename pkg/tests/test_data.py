import datetime as dt
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stockcast.data import (
    HEADER,
    DataSplit,
    OhlcOrderWarning,
    OhlcvBar,
    PriceSeries,
    apply_minmax,
    build_windows,
    drop_nulls,
    fit_minmax,
    format_yahoo_csv,
    invert_minmax,
    load_csv,
    parse_yahoo_csv,
    split_chronological,
    synthetic_ohlcv,
)
from stockcast.errors import (
    EmptySeriesError,
    InsufficientDataError,
    OrderingError,
    ParseError,
    SchemaError,
    ShapeError,
    SplitError,
)

CSV = """Date,Open,High,Low,Close,Adj Close,Volume
2019-01-02,10,11,9,10.5,10.0,1000
2019-01-03,null,null,null,null,null,null
2019-01-04,10.5,12,10,11.5,11.0,1500
2019-01-07,11.5,12,11,,11.2,900
"""


def test_parse_marks_null_and_empty_as_missing():
    bars = parse_yahoo_csv(CSV)
    assert len(bars) == 4
    assert bars[1].has_null and bars[3].has_null
    assert bars[3].close is None and bars[3].adj_close == 11.2
    assert not bars[0].has_null


def test_parse_header_case_and_order_insensitive():
    text = "volume,DATE,close,open,high,low,adj close\n100,2019-01-02,5,5,6,4,4.5\n"
    (bar,) = parse_yahoo_csv(text)
    assert bar.close == 5 and bar.volume == 100 and bar.date == dt.date(2019, 1, 2)


def test_parse_reports_line_numbers():
    with pytest.raises(ParseError, match="line 3"):
        parse_yahoo_csv("Date,Open,High,Low,Close,Adj Close,Volume\n2019-01-02,1,1,1,1,1,1\n2019-01-03,x,1,1,1,1,1\n")
    with pytest.raises(ParseError, match="line 2"):
        parse_yahoo_csv("Date,Open,High,Low,Close,Adj Close,Volume\n2019-13-02,1,1,1,1,1,1\n")


def test_parse_schema_and_empty_errors():
    with pytest.raises(SchemaError):
        parse_yahoo_csv("Date,Open,High,Low,Close,Volume\n")
    with pytest.raises(EmptySeriesError):
        parse_yahoo_csv(",".join(HEADER) + "\n")
    with pytest.raises(EmptySeriesError):
        parse_yahoo_csv("")


def test_drop_nulls_counts_and_idempotence():
    series = drop_nulls(parse_yahoo_csv(CSV), "T")
    assert len(series) == 2
    again = drop_nulls(series)
    assert again == series


def test_drop_nulls_on_all_null_raises():
    text = ",".join(HEADER) + "\n2019-01-02,null,null,null,null,null,null\n"
    with pytest.raises(EmptySeriesError):
        drop_nulls(parse_yahoo_csv(text))


def test_series_rejects_unordered_dates():
    bar = OhlcvBar(dt.date(2019, 1, 2), 1, 1, 1, 1, 1, 1)
    with pytest.raises(OrderingError):
        PriceSeries("T", (bar, bar))


def test_ohlc_violation_warns_not_fails():
    bad = OhlcvBar(dt.date(2019, 1, 2), 10, 9, 8, 10, 10, 1)
    with pytest.warns(OhlcOrderWarning):
        PriceSeries("T", (bad,))


def test_format_round_trip():
    raw = parse_yahoo_csv(CSV)
    assert parse_yahoo_csv(format_yahoo_csv(raw)) == raw
    series = drop_nulls(raw)
    assert drop_nulls(parse_yahoo_csv(format_yahoo_csv(series))) == series


def test_bundled_fixture_contract(sample_csv):
    raw = parse_yahoo_csv(sample_csv.read_text())
    assert len(raw) == 500
    assert sum(b.has_null for b in raw) == 3
    series = load_csv(sample_csv)
    assert len(series) == 497
    assert series.dates[-1] == dt.date(2019, 12, 31)


def _series(n=40, seed=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OhlcOrderWarning)
        return drop_nulls(synthetic_ohlcv(n=n, seed=seed), "SYN")


@given(st.integers(0, 39))
def test_split_partitions_series(k):
    series = _series()
    boundary = series.dates[k]
    if k == 0:
        with pytest.raises(SplitError):
            split_chronological(series, boundary)
        return
    split = split_chronological(series, boundary)
    assert isinstance(split, DataSplit)
    assert len(split.train) + len(split.test) == len(series)
    assert split.train.dates[-1] < boundary <= split.test.dates[0]


def test_split_accepts_iso_string():
    series = _series()
    split = split_chronological(series, series.dates[10].isoformat())
    assert len(split.train) == 10


def test_scaler_fits_train_only():
    series = _series(n=60)
    split = split_chronological(series, series.dates[40])
    names = ("open", "close", "volume")
    from_split = fit_minmax(split.train.features(names))
    alone = fit_minmax(series.features(names)[:40])
    np.testing.assert_array_equal(from_split.mins, alone.mins)
    np.testing.assert_array_equal(from_split.maxs, alone.maxs)


def test_scaler_degenerate_feature_maps_to_zero():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    params = fit_minmax(X)
    scaled = apply_minmax(params, X)
    np.testing.assert_array_equal(scaled[:, 1], 0.0)
    np.testing.assert_allclose(scaled[:, 0], [0, 0.5, 1])
    np.testing.assert_array_equal(invert_minmax(params, scaled)[:, 1], 5.0)


def test_scaler_shape_checks():
    params = fit_minmax(np.ones((3, 2)))
    with pytest.raises(ShapeError):
        apply_minmax(params, np.ones((3, 3)))


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50).filter(lambda v: max(v) > min(v)),
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
)
def test_scaling_round_trip_property(train, values):
    params = fit_minmax(np.array(train))
    back = invert_minmax(params, apply_minmax(params, np.array(values)))
    np.testing.assert_allclose(back, values, rtol=0, atol=1e-9)


def test_windows_small_case():
    ds = build_windows(np.arange(10.0), 7)
    assert len(ds) == 3
    assert ds.targets[0] == 7.0
    np.testing.assert_array_equal(ds.inputs[0], np.arange(7.0))


@given(st.integers(8, 300), st.integers(1, 7))
def test_window_count_and_target_index(n, w):
    values = np.arange(n, dtype=float)
    if n <= w:
        return
    ds = build_windows(values, w)
    assert len(ds) == n - w
    np.testing.assert_array_equal(ds.targets, values[w:])
    for i in (0, len(ds) - 1):
        np.testing.assert_array_equal(ds.inputs[i], values[i : i + w])


def test_windows_need_more_than_window():
    with pytest.raises(InsufficientDataError):
        build_windows(np.arange(7.0), 7)
