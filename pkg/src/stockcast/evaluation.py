"""RMSE, the RMSE-over-mean ratio, per-model reports and the cross-ticker comparison table."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConflictError, InputError, ShapeError

# canonical column order of the comparison table
MODEL_ORDER = ("hw", "arima", "rf", "mars", "rnn", "lstm")
MODEL_NAMES = {
    "hw": "Holt-Winters",
    "arima": "ARIMA",
    "rf": "Random Forest",
    "mars": "MARS",
    "rnn": "RNN",
    "lstm": "LSTM",
}


def rmse(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ShapeError(f"rmse needs equal-length 1-D inputs, got {y.shape} and {y_hat.shape}")
    if len(y) == 0:
        raise InputError("rmse of an empty sequence")
    diff = y - y_hat
    return math.sqrt(float(np.mean(diff * diff)))


def ratio_metric(rmse_value: float, segment_mean: float) -> float:
    if not segment_mean > 0:
        raise InputError(f"segment mean must be positive, got {segment_mean}")
    return rmse_value / segment_mean


@dataclass(frozen=True)
class MetricReport:
    """Train metrics are ``None`` for models evaluated on the test segment only."""

    model: str
    ticker: str
    rmse_test: float
    ratio_test: float
    n_test: int
    rmse_train: float | None = None
    ratio_train: float | None = None
    n_train: int | None = None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "ticker": self.ticker,
            "rmse_train": self.rmse_train,
            "rmse_test": self.rmse_test,
            "ratio_train": self.ratio_train,
            "ratio_test": self.ratio_test,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "MetricReport":
        try:
            return cls(
                model=str(payload["model"]),
                ticker=str(payload["ticker"]),
                rmse_test=float(payload["rmse_test"]),
                ratio_test=float(payload["ratio_test"]),
                n_test=int(payload["n_test"]),
                rmse_train=None if payload.get("rmse_train") is None else float(payload["rmse_train"]),
                ratio_train=None if payload.get("ratio_train") is None else float(payload["ratio_train"]),
                n_train=None if payload.get("n_train") is None else int(payload["n_train"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed metric report: {exc}") from exc


def _segment(y, y_hat):
    y = np.asarray(y, dtype=float)
    value = rmse(y, y_hat)
    return value, ratio_metric(value, float(np.mean(y))), len(y)


def evaluate_model(y_train, y_hat_train, y_test, y_hat_test, model: str = "", ticker: str = "") -> MetricReport:
    """Score both segments; each ratio divides by the mean of that segment's actual values.

    Pass ``None`` for the train pair when a model has no in-sample predictions.
    """
    r_test, q_test, n_test = _segment(y_test, y_hat_test)
    if y_train is None or y_hat_train is None:
        return MetricReport(model, ticker, r_test, q_test, n_test)
    r_train, q_train, n_train = _segment(y_train, y_hat_train)
    return MetricReport(model, ticker, r_test, q_test, n_test, r_train, q_train, n_train)


def _model_key(model: str):
    return (MODEL_ORDER.index(model), "") if model in MODEL_ORDER else (len(MODEL_ORDER), model)


@dataclass(frozen=True)
class ComparisonTable:
    """Rows ``(ticker, model, ratio_test)`` sorted by ticker then canonical model order."""

    rows: tuple
    best: dict

    @property
    def tickers(self) -> list[str]:
        return sorted({r[0] for r in self.rows})

    @property
    def models(self) -> list[str]:
        return sorted({r[1] for r in self.rows}, key=_model_key)

    def ratio(self, ticker: str, model: str) -> float | None:
        for t, m, q in self.rows:
            if t == ticker and m == model:
                return q
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ticker", "model", "ratio_test", "best"])
        for t, m, q in self.rows:
            w.writerow([t, m, repr(q), int(self.best[t] == m)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ComparisonTable":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["ticker", "model", "ratio_test", "best"]:
            raise InputError(f"unexpected comparison header {reader.fieldnames}")
        reports = []
        marked = {}
        for row in reader:
            reports.append(MetricReport(row["model"], row["ticker"], math.nan, float(row["ratio_test"]), 0))
            if row["best"] == "1":
                if row["ticker"] in marked:
                    raise InputError(f"ticker {row['ticker']!r} has more than one best marker")
                marked[row["ticker"]] = row["model"]
        table = comparison_table(reports)
        if marked != table.best:
            raise InputError("best markers in the file disagree with the ratios")
        return table

    def to_json(self) -> str:
        payload = {
            "rows": [{"ticker": t, "model": m, "ratio_test": q} for t, m, q in self.rows],
            "best": dict(sorted(self.best.items())),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        """Models down, tickers across, ratios to 4 decimals; ``*`` marks each ticker's best."""
        tickers, models = self.tickers, self.models
        header = ["model"] + tickers
        body = []
        for m in models:
            line = [MODEL_NAMES.get(m, m)]
            for t in tickers:
                q = self.ratio(t, m)
                line.append("-" if q is None else f"{q:.4f}" + ("*" if self.best[t] == m else " "))
            body.append(line)
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        fmt = lambda r: "  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(r))
        return "\n".join([fmt(header)] + [fmt(r) for r in body]) + "\n"


def comparison_table(reports) -> ComparisonTable:
    """Collect test ratios per (ticker, model) and mark the lowest per ticker.

    Equal ratios resolve to the earlier model in ``MODEL_ORDER``.
    """
    reports = list(reports)
    if not reports:
        raise InputError("comparison needs at least one report")
    seen = {}
    for r in reports:
        key = (r.ticker, r.model)
        if key in seen:
            raise ConflictError(f"duplicate report for ticker {r.ticker!r}, model {r.model!r}")
        seen[key] = r.ratio_test
    rows = sorted(((t, m, q) for (t, m), q in seen.items()), key=lambda r: (r[0], _model_key(r[1])))
    best = {}
    for t, m, q in rows:
        if t not in best or q < seen[(t, best[t])]:
            best[t] = m
    return ComparisonTable(tuple(rows), best)
