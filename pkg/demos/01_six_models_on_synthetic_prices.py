"""Backtest all six forecasters on one synthetic price history and compare them.

The series is a seeded geometric random walk with a weekly wobble. Everything
before 2019 trains the models; 2019 is the test year. The neural models run at
a reduced width so the demo finishes in well under a minute.

    python demos/01_six_models_on_synthetic_prices.py
"""

import warnings

from stockcast.data import drop_nulls, synthetic_ohlcv
from stockcast.evaluation import MODEL_ORDER, comparison_table
from stockcast.pipeline import RunConfig, run_backtest

warnings.simplefilter("ignore")

series = drop_nulls(synthetic_ohlcv(n=800, seed=11, ticker="DEMO", null_rows=4), "DEMO")
print(f"{len(series)} clean bars, {series.bars[0].date} to {series.bars[-1].date}\n")

reports = []
for model in MODEL_ORDER:
    cfg = RunConfig.from_mapping({"nn": {"widths": [24, 12], "epochs": 30}}, model=model, ticker="DEMO", seed=5)
    result = run_backtest(series, cfg)
    r = result.report
    train = "   n/a" if r.ratio_train is None else f"{r.ratio_train:.4f}"
    print(f"{model:>6}: train ratio {train}  test ratio {r.ratio_test:.4f}  ({r.n_test} test points)")
    reports.append(r)

# The ratio is RMSE divided by the mean actual close of the same segment,
# so it is comparable across tickers with very different price levels.
print()
print(comparison_table(reports).to_text())
