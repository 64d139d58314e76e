"""Backtest protocols: fit one model family on the train segment and score the test segment."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arima as arima_mod
from . import mars as mars_mod
from . import smoothing, trees
from .data import PriceSeries, apply_minmax, build_windows, fit_minmax, invert_minmax, split_chronological
from .errors import InputError
from .evaluation import MODEL_ORDER, MetricReport, evaluate_model
from .neural import network as nn

DEFAULT_BOUNDARY = dt.date(2019, 1, 1)
TABULAR_FEATURES = ("open", "high", "low", "adj_close", "volume")

BLOCK_DEFAULTS = {
    "hw": {"alpha": None, "beta": None, "gamma": None, "period": 5, "mode": "static"},
    "arima": {"p_max": 5, "d_max": 2, "q_max": 5, "mode": "rolling"},
    "trees": {"n_trees": 100, "max_depth": None, "min_samples_leaf": 1, "max_features": None, "include_close": False},
    "mars": {"max_terms": 21, "max_degree": 1, "penalty": 3.0},
    "nn": {"kind": None, "widths": [256, 128], "dropout": 0.2, "epochs": 100, "batch": 64, "lr": 0.001, "seed": None},
}
TOP_LEVEL = {"ticker", "csv", "boundary", "model", "seed", "out"}


@dataclass(frozen=True)
class RunConfig:
    model: str
    ticker: str | None = None
    csv: str | None = None
    boundary: dt.date = DEFAULT_BOUNDARY
    seed: int = 0
    out: str | None = None
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODEL_ORDER:
            raise InputError(f"model must be one of {', '.join(MODEL_ORDER)}; got {self.model!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def block(self, name: str) -> dict:
        merged = dict(BLOCK_DEFAULTS[name])
        merged.update(self.blocks.get(name, {}))
        return merged

    @classmethod
    def from_mapping(cls, payload: dict, **overrides) -> "RunConfig":
        """Build from a parsed config document; non-``None`` overrides win over file values."""
        payload = dict(payload)
        unknown = set(payload) - TOP_LEVEL - set(BLOCK_DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        blocks = {}
        for name, defaults in BLOCK_DEFAULTS.items():
            block = payload.pop(name, {}) or {}
            if not isinstance(block, dict):
                raise InputError(f"config block {name!r} must be an object")
            bad = set(block) - set(defaults)
            if bad:
                raise InputError(f"unknown keys in {name!r}: {', '.join(sorted(bad))}")
            blocks[name] = block
        payload.update({k: v for k, v in overrides.items() if v is not None})
        if "model" not in payload:
            raise InputError("no model selected (use --model or the config 'model' key)")
        boundary = payload.get("boundary", DEFAULT_BOUNDARY)
        if isinstance(boundary, str):
            try:
                boundary = dt.date.fromisoformat(boundary)
            except ValueError as exc:
                raise InputError(f"invalid boundary date {boundary!r}") from exc
        return cls(
            model=payload["model"],
            ticker=payload.get("ticker"),
            csv=payload.get("csv"),
            boundary=boundary,
            seed=int(payload.get("seed", 0)),
            out=payload.get("out"),
            blocks=blocks,
        )


@dataclass
class BacktestResult:
    model: str
    ticker: str
    test_dates: list
    test_actual: np.ndarray
    test_pred: np.ndarray
    train_dates: list
    train_actual: np.ndarray
    train_pred: np.ndarray
    report: MetricReport
    details: dict
    artifacts: dict = field(default_factory=dict)  # file name -> text or bytes


def _hw(split, cfg):
    b = cfg.block("hw")
    train, test = split.train.column("close"), split.test.column("close")
    m = int(b["period"])
    if all(b[k] is not None for k in ("alpha", "beta", "gamma")):
        params = smoothing.HwParams(float(b["alpha"]), float(b["beta"]), float(b["gamma"]), m)
    else:
        params = smoothing.hw_optimize(train, m)
    model = smoothing.hw_fit(train, params)
    if b["mode"] == "static":
        pred = smoothing.hw_forecast(model, len(test))
    elif b["mode"] == "rolling":
        pred = smoothing.hw_rolling(model, test)
    else:
        raise InputError(f"hw.mode must be 'static' or 'rolling', got {b['mode']!r}")
    details = {
        "params": {"alpha": params.alpha, "beta": params.beta, "gamma": params.gamma, "period": m},
        "mode": b["mode"],
        "sse": model.sse,
        "state": {"level": model.level, "trend": model.trend, "seasonal": model.seasonal.tolist()},
    }
    # the first season reproduces the data by construction, so it is left out
    return np.arange(m, len(train)), model.fitted[m:], pred, details, {}


def _arima(split, cfg):
    b = cfg.block("arima")
    train, test = split.train.column("close"), split.test.column("close")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", arima_mod.ArimaWarning)
        search = arima_mod.auto_arima(train, int(b["p_max"]), int(b["d_max"]), int(b["q_max"]))
    fit = search.fit
    if b["mode"] == "rolling":
        pred = arima_mod.arima_forecast(fit, train, len(test), "rolling", test)
    elif b["mode"] == "static":
        pred = arima_mod.arima_forecast(fit, train, len(test), "static")
    else:
        raise InputError(f"arima.mode must be 'static' or 'rolling', got {b['mode']!r}")
    idx, fitted = arima_mod.arima_in_sample(fit, train)
    details = dict(search.to_dict(), mode=b["mode"])
    return idx, fitted, pred, details, {}


def tabular_features(include_close: bool) -> tuple:
    return TABULAR_FEATURES + (("close",) if include_close else ())


def _tabular(split, cfg, which):
    include_close = bool(cfg.block("trees")["include_close"])
    names = tabular_features(include_close)
    scaler = fit_minmax(split.train.features(names))
    X_train = apply_minmax(scaler, split.train.features(names))
    X_test = apply_minmax(scaler, split.test.features(names))
    y_train = split.train.column("close")
    scaling = {"features": list(names), "mins": scaler.mins.tolist(), "maxs": scaler.maxs.tolist()}
    if which == "rf":
        b = cfg.block("trees")
        params = trees.ForestParams(
            n_trees=int(b["n_trees"]),
            max_depth=None if b["max_depth"] is None else int(b["max_depth"]),
            min_samples_leaf=int(b["min_samples_leaf"]),
            max_features=b["max_features"],
            seed=int(cfg.seed),
        )
        forest = trees.fit_forest(X_train, y_train, params)
        fitted, pred = trees.predict_forest(forest, X_train), trees.predict_forest(forest, X_test)
        details = {
            "scaling": scaling,
            "params": forest.to_dict()["params"],
            "tree_nodes": [t.n_nodes for t in forest.trees],
            "artifact": "forest.json",
        }
        artifacts = {"forest.json": json.dumps(forest.to_dict(), sort_keys=True) + "\n"}
    else:
        b = cfg.block("mars")
        model = mars_mod.fit_mars(X_train, y_train, int(b["max_terms"]), int(b["max_degree"]), float(b["penalty"]))
        fitted, pred = mars_mod.mars_predict(model, X_train), mars_mod.mars_predict(model, X_test)
        details = {"scaling": scaling, "model": model.to_dict()}
        artifacts = {}
    return np.arange(len(y_train)), fitted, pred, details, artifacts


def _neural(split, cfg, kind):
    b = cfg.block("nn")
    if b["kind"] is not None and b["kind"] != kind:
        raise InputError(f"nn.kind {b['kind']!r} conflicts with model {kind!r}")
    spec = nn.NetSpec(kind=kind, widths=tuple(b["widths"]), dropout=float(b["dropout"]))
    seed = int(cfg.seed if b["seed"] is None else b["seed"])
    tc = nn.TrainConfig(epochs=int(b["epochs"]), batch=int(b["batch"]), lr=float(b["lr"]), seed=seed)
    train, test = split.train.column("close"), split.test.column("close")
    scaler = fit_minmax(train)
    train_ds = build_windows(apply_minmax(scaler, train), spec.window)
    test_ds = build_windows(apply_minmax(scaler, test), spec.window)
    params, history = nn.train(spec, train_ds, tc)
    fitted = invert_minmax(scaler, nn.predict_series(spec, params, train_ds.inputs))
    pred = invert_minmax(scaler, nn.predict_series(spec, params, test_ds.inputs))
    details = {
        "spec": {"kind": kind, "widths": list(spec.widths), "dropout": spec.dropout, "window": spec.window},
        "train": {"epochs": tc.epochs, "batch": tc.batch, "lr": tc.lr, "seed": seed, "clip_norm": tc.clip_norm},
        "scaling": {"min": float(scaler.mins[0]), "max": float(scaler.maxs[0])},
        "windows": {
            "train": len(train_ds),
            "test": len(test_ds),
            "rule": "samples = segment length - window; each segment is windowed on its own",
        },
        "rmse_history_scaled": history,
        "artifact": "network.json",
    }
    payload, manifest = nn.encode_params(spec, params, "network.bin")
    artifacts = {"network.bin": payload, "network.json": manifest}
    return np.arange(spec.window, len(train)), fitted, pred, details, artifacts, spec.window


def run_backtest(series: PriceSeries, cfg: RunConfig) -> BacktestResult:
    """Split at ``cfg.boundary``, fit on train, predict test per the model's protocol, and score.

    Holt-Winters, ARIMA, forest and MARS predict every test day; the recurrent
    models predict the test days that have a full window inside the test segment.
    """
    split = split_chronological(series, cfg.boundary)
    offset = 0
    if cfg.model == "hw":
        idx, fitted, pred, details, artifacts = _hw(split, cfg)
    elif cfg.model == "arima":
        idx, fitted, pred, details, artifacts = _arima(split, cfg)
    elif cfg.model in ("rf", "mars"):
        idx, fitted, pred, details, artifacts = _tabular(split, cfg, cfg.model)
    else:
        idx, fitted, pred, details, artifacts, offset = _neural(split, cfg, cfg.model)
    train_close, test_close = split.train.column("close"), split.test.column("close")
    test_dates = split.test.dates[offset:]
    test_actual = test_close[offset:]
    train_actual = train_close[idx]
    pred = np.asarray(pred, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    ticker = cfg.ticker or series.ticker
    report = evaluate_model(train_actual, fitted, test_actual, pred, cfg.model, ticker)
    details = dict(details, boundary=cfg.boundary.isoformat(), seed=int(cfg.seed), model=cfg.model, ticker=ticker)
    train_dates = [split.train.dates[i] for i in idx]
    return BacktestResult(cfg.model, ticker, test_dates, test_actual, pred, train_dates, train_actual, fitted,
                          report, details, artifacts)


def predictions_csv(dates, actual, predicted) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "actual", "predicted"])
    for d, a, p in zip(dates, actual, predicted):
        w.writerow([d.isoformat(), repr(float(a)), repr(float(p))])
    return buf.getvalue()


def read_predictions(path) -> tuple[list, np.ndarray, np.ndarray]:
    """Parse a ``date,actual,predicted`` file."""
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip().lower() for c in rows[0]] != ["date", "actual", "predicted"]:
        raise InputError(f"{path}: expected header date,actual,predicted")
    dates, actual, predicted = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise InputError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
        try:
            dates.append(dt.date.fromisoformat(row[0]))
            actual.append(float(row[1]))
            predicted.append(float(row[2]))
        except ValueError as exc:
            raise InputError(f"{path}: line {lineno}: {exc}") from exc
    if not dates:
        raise InputError(f"{path}: no prediction rows")
    return dates, np.array(actual), np.array(predicted)


def write_outputs(result: BacktestResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "predictions.csv").write_text(predictions_csv(result.test_dates, result.test_actual, result.test_pred))
    (out / "train_predictions.csv").write_text(
        predictions_csv(result.train_dates, result.train_actual, result.train_pred)
    )
    (out / "metrics.json").write_text(result.report.to_json())
    (out / "model.json").write_text(json.dumps(_jsonable(result.details), indent=2, sort_keys=True) + "\n")
    for name, payload in result.artifacts.items():
        target = out / name
        if isinstance(payload, bytes):
            target.write_bytes(payload)
        else:
            target.write_text(payload)
    return out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value
