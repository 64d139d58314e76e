"""Acceptance criteria 1-11, one test each, printing a PASS/FAIL line per criterion.

Tolerances, counts and runtime budgets are pinned below and must not be loosened.
Criterion 11 needs real daily histories: point ``STOCKCAST_ACCEPTANCE_DATA`` at a
directory holding INFY, ICICI (or ICICIBANK) and SUNPHARMA Yahoo CSVs covering
2004-01 to 2019-12.
"""

import datetime as dt
import json
import math
import os
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from gradcheck import numeric_grad, rel_error
from scipy.signal import lfilter

from stockcast.arima import ArimaWarning, auto_arima, fit_arma_css
from stockcast.cli import main
from stockcast.data import apply_minmax, build_windows, fit_minmax, invert_minmax, load_csv
from stockcast.evaluation import MODEL_ORDER
from stockcast.mars import fit_mars, gcv, mars_predict
from stockcast.neural.cells import (
    LstmCellParams,
    RnnCellParams,
    dense_backward,
    dense_forward,
    lstm_backward,
    lstm_forward_train,
    rnn_backward,
    rnn_forward_train,
)
from stockcast.neural.network import NetSpec, TrainConfig, init_params, mse_loss, train
from stockcast.pipeline import RunConfig, run_backtest
from stockcast.smoothing import hw_fit, hw_forecast, hw_optimize, HwParams
from stockcast.stationarity import adf_test, kpss_test
from stockcast.trees import ForestParams, best_split, fit_forest, fit_tree, predict_forest, predict_tree

# 1
SCALE_TOL, SCALE_N, SCALE_BUDGET = 1e-9, 10_000, 1.0
# 2
WINDOW, TRAIN_LEN, TEST_LEN, TRAIN_WINDOWS, TEST_WINDOWS, REF_TRAIN, REF_TEST = 7, 3708, 241, 3701, 234, 3700, 233
WINDOW_BUDGET = 1.0
# 3
GRAD_TOL, GRAD_STEP, GRAD_SEEDS, GRAD_WIDTHS, GRAD_BUDGET = 1e-4, 1e-5, range(5), (8, 4), 60.0
# 4
AR_PHI, AR_TOL, MA_THETA, MA_TOL, ARMA_N = 0.7, 0.05, 0.5, 0.06, 4000
SEL_PHI, SEL_N, SEL_SEEDS, SEL_D_MIN, SEL_PQ_MIN, ARIMA_BUDGET = 0.6, 3000, range(20), 18, 12, 180.0
# 5
STAT_RUNS, STAT_N, ADF_WN_MIN, ADF_RW_MAX, KPSS_RW_MIN, KPSS_WN_MAX, STAT_BUDGET = 100, 500, 90, 10, 90, 10, 120.0
# 6
MARS_N, MARS_KNOT, MARS_RMSE_TOL, GCV_WORKED, GCV_TOL, MARS_BUDGET = 200, 0.4, 1e-9, 0.113173, 5e-7, 10.0
# 7
HW_PERIOD, HW_TRAIN, HW_H, HW_RATIO_MAX, HW_BUDGET = 5, 200, 50, 0.01, 10.0
# 8
FOREST_TREES, FOREST_SEEDS, EXHAUSTIVE_MAX_N, FOREST_BUDGET = 50, range(10), 12, 60.0
# 9
SINE_N, SINE_WIDTHS, SINE_EPOCHS, SINE_RMSE_MAX, SINE_BUDGET = 500, (32, 16), 100, 0.05, 300.0
# 10
E2E_CONFIG, E2E_SEED, E2E_TOL, E2E_BUDGET = {"nn": {"widths": [16, 8], "epochs": 20}}, 7, 1e-12, 300.0
# 11
REAL_TICKERS, REAL_MARS_MAX = ("INFY", "ICICI", "SUNPHARMA"), 0.05
DATA_ENV = "STOCKCAST_ACCEPTANCE_DATA"


def within(start, budget):
    elapsed = time.perf_counter() - start
    return elapsed < budget, f"{elapsed:.1f}s/<{budget:g}s"


def test_criterion_01_scaling_round_trip(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    x = np.column_stack([rng.lognormal(4, 1, SCALE_N), rng.uniform(-1e3, 1e3, SCALE_N)])
    params = fit_minmax(x)
    err = float(np.max(np.abs(invert_minmax(params, apply_minmax(params, x)) - x)))
    fast, clock = within(t0, SCALE_BUDGET)
    verdict(1, err <= SCALE_TOL and fast, f"scaling round trip max error {err:.2e} (<= {SCALE_TOL:g}), {clock}")


def test_criterion_02_window_arithmetic(verdict):
    t0 = time.perf_counter()
    n_train = len(build_windows(np.arange(TRAIN_LEN, dtype=float), WINDOW))
    n_test = len(build_windows(np.arange(TEST_LEN, dtype=float), WINDOW))
    fast, clock = within(t0, WINDOW_BUDGET)
    ok = (n_train, n_test) == (TRAIN_WINDOWS, TEST_WINDOWS) and fast
    verdict(2, ok, f"windows {n_train}/{n_test} from {TRAIN_LEN}/{TEST_LEN} at w={WINDOW}; the reference run "
                   f"reports {REF_TRAIN}/{REF_TEST} (N-8, one fewer than N-w), {clock}")


def _cell_errors(seed):
    rng = np.random.default_rng(seed)
    out = []
    X = rng.normal(size=(2, WINDOW, 2))
    for cls, fwd, bwd, gates in ((RnnCellParams, rnn_forward_train, rnn_backward, 1),
                                (LstmCellParams, lstm_forward_train, lstm_backward, 4)):
        h = 3
        p = cls(rng.normal(0, 0.5, (2, gates * h)), rng.normal(0, 0.5, (h, gates * h)), rng.normal(0, 0.5, gates * h))
        R = rng.normal(size=(2, WINDOW, h))
        loss = lambda: float(np.sum(fwd(p, X)[0] * R))
        g, dX = bwd(p, fwd(p, X)[1], R)
        out += [rel_error(numeric_grad(loss, getattr(p, k), GRAD_STEP), getattr(g, k)) for k in ("Wx", "Wh", "b")]
        out.append(rel_error(numeric_grad(loss, X, GRAD_STEP), dX))
    W, b, hid = rng.normal(size=(4, 1)), rng.normal(size=1), rng.normal(size=(3, 4))
    R = rng.normal(size=(3, 1))
    loss = lambda: float(np.sum(dense_forward(W, b, hid) * R))
    dW, db, dh = dense_backward(W, hid, R)
    out += [rel_error(numeric_grad(loss, a, GRAD_STEP), g) for a, g in ((W, dW), (b, db), (hid, dh))]
    for kind in ("rnn", "lstm"):
        spec = NetSpec(kind=kind, widths=GRAD_WIDTHS, dropout=0.2, window=WINDOW)
        params = init_params(spec, rng)
        Xn, yn = rng.normal(size=(3, WINDOW, 1)), rng.normal(size=3)
        loss = lambda: mse_loss(spec, params, Xn, yn, "train", np.random.default_rng(seed + 100))[0]
        _, grads = mse_loss(spec, params, Xn, yn, "train", np.random.default_rng(seed + 100))
        out += [rel_error(numeric_grad(loss, v, GRAD_STEP), grads[k]) for k, v in params.items()]
    return out


def test_criterion_03_gradient_checks(verdict):
    t0 = time.perf_counter()
    worst = max(max(_cell_errors(seed)) for seed in GRAD_SEEDS)
    fast, clock = within(t0, GRAD_BUDGET)
    verdict(3, worst < GRAD_TOL and fast,
            f"RNN/LSTM/dense/stacked{GRAD_WIDTHS} gradients, worst relative error {worst:.2e} "
            f"(< {GRAD_TOL:g}) over {len(GRAD_SEEDS)} seeds, {clock}")


def _arima110(seed):
    e = np.random.default_rng(seed).normal(size=SEL_N)
    return np.cumsum(lfilter([1.0], [1.0, -SEL_PHI], e))


def test_criterion_04_arma_recovery(verdict):
    t0 = time.perf_counter()
    e = np.random.default_rng(40).normal(size=ARMA_N + 1)
    phi = fit_arma_css(lfilter([1.0], [1.0, -AR_PHI], e[1:]), 1, 0).phi[0]
    theta = fit_arma_css(e[1:] + MA_THETA * e[:-1], 0, 1).theta[0]
    orders = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ArimaWarning)
        for seed in SEL_SEEDS:
            orders.append(auto_arima(_arima110(seed)).order.as_tuple())
    d_hits = sum(o[1] == 1 for o in orders)
    pq_hits = sum((o[0], o[2]) == (1, 0) for o in orders)
    fast, clock = within(t0, ARIMA_BUDGET)
    ok = (abs(phi - AR_PHI) <= AR_TOL and abs(theta - MA_THETA) <= MA_TOL
          and d_hits >= SEL_D_MIN and pq_hits >= SEL_PQ_MIN and fast)
    verdict(4, ok, f"phi {phi:.4f} (|err|<={AR_TOL}), theta {theta:.4f} (|err|<={MA_TOL}); auto_arima on "
                   f"ARIMA(1,1,0): d=1 in {d_hits}/20 (>= {SEL_D_MIN}), (p,q)=(1,0) in {pq_hits}/20 "
                   f"(>= {SEL_PQ_MIN}); {clock}")


def test_criterion_05_stationarity_power(verdict):
    t0 = time.perf_counter()
    adf_wn = adf_rw = kpss_wn = kpss_rw = 0
    for seed in range(STAT_RUNS):
        wn = np.random.default_rng(seed).normal(size=STAT_N)
        rw = np.cumsum(np.random.default_rng(10_000 + seed).normal(size=STAT_N))
        adf_wn += adf_test(wn).reject["5%"]
        adf_rw += adf_test(rw).reject["5%"]
        kpss_wn += kpss_test(wn).reject["5%"]
        kpss_rw += kpss_test(rw).reject["5%"]
    fast, clock = within(t0, STAT_BUDGET)
    ok = adf_wn >= ADF_WN_MIN and adf_rw <= ADF_RW_MAX and kpss_rw >= KPSS_RW_MIN and kpss_wn <= KPSS_WN_MAX and fast
    verdict(5, ok, f"ADF rejects WN {adf_wn}/100 (>= {ADF_WN_MIN}), RW {adf_rw}/100 (<= {ADF_RW_MAX}); "
                   f"KPSS rejects RW {kpss_rw}/100 (>= {KPSS_RW_MIN}), WN {kpss_wn}/100 (<= {KPSS_WN_MAX}); {clock}")


def test_criterion_06_mars_exactness(verdict):
    t0 = time.perf_counter()
    x = np.arange(MARS_N) / MARS_N
    y = 3 * np.maximum(0.0, x - MARS_KNOT) + 1
    model = fit_mars(x[:, None], y)
    err = float(np.sqrt(np.mean((mars_predict(model, x[:, None]) - y) ** 2)))
    knots = sorted({h.knot for t in model.terms for h in t.hinges})
    below, above = x[x < MARS_KNOT].max(), x[x > MARS_KNOT].min()
    knot_ok = bool(knots) and all(k in x and below <= k <= above for k in knots)
    score = gcv(10.0, 100, 3, 3.0)
    fast, clock = within(t0, MARS_BUDGET)
    ok = err < MARS_RMSE_TOL and knot_ok and abs(score - GCV_WORKED) <= GCV_TOL and fast
    verdict(6, ok, f"hinge fit RMSE {err:.1e} (< {MARS_RMSE_TOL:g}), knots {knots} observed and adjacent to "
                   f"{MARS_KNOT}; gcv(10,100,3,3) = {score:.6f} (worked {GCV_WORKED}); {clock}")


def test_criterion_07_holt_winters(verdict):
    t0 = time.perf_counter()
    t = np.arange(HW_TRAIN + HW_H)
    pattern = np.array([2.0, -1.0, 0.5, 1.5, -3.0])
    series = 50 + 0.3 * t + pattern[t % HW_PERIOD] + np.random.default_rng(7).normal(0, 0.2, len(t))
    train_part, test_part = series[:HW_TRAIN], series[HW_TRAIN:]
    model = hw_fit(train_part, hw_optimize(train_part, HW_PERIOD))
    fc = hw_forecast(model, HW_H)
    ratio = float(np.sqrt(np.mean((fc - test_part) ** 2)) / test_part.mean())
    const = hw_fit(np.full(HW_TRAIN, 42.0), HwParams(0.3, 0.1, 0.2, HW_PERIOD))
    constant_opt = hw_fit(np.full(HW_TRAIN, 42.0), hw_optimize(np.full(HW_TRAIN, 42.0), HW_PERIOD))
    fast, clock = within(t0, HW_BUDGET)
    ok = ratio < HW_RATIO_MAX and const.sse == 0.0 and constant_opt.sse == 0.0 and fast
    verdict(7, ok, f"seasonal+trend static {HW_H}-step ratio {ratio:.5f} (< {HW_RATIO_MAX}); constant series "
                   f"sse {const.sse} / {constant_opt.sse} (== 0); {clock}")


def _exhaustive(X, y):
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            left, right = y[X[:, f] <= thr], y[X[:, f] > thr]
            sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            if best is None or sse < best[2] - 1e-9:
                best = (f, thr, sse)
    return best


def test_criterion_08_forest_vs_tree(verdict):
    t0 = time.perf_counter()
    forest_rmse, tree_rmse = [], []
    for seed in FOREST_SEEDS:
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(400, 2))
        y = np.where(X[:, 0] > 0.5, 1.0, 0.0) + rng.normal(0, 0.3, 400)
        Xtr, ytr, Xte, yte = X[:200], y[:200], X[200:], np.where(X[200:, 0] > 0.5, 1.0, 0.0)
        forest = fit_forest(Xtr, ytr, ForestParams(n_trees=FOREST_TREES, seed=seed))
        forest_rmse.append(np.sqrt(np.mean((predict_forest(forest, Xte) - yte) ** 2)))
        tree_rmse.append(np.sqrt(np.mean((predict_tree(fit_tree(Xtr, ytr), Xte) - yte) ** 2)))
    mismatches = 0
    checked = 0
    for seed in range(300):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, EXHAUSTIVE_MAX_N + 1))
        X = rng.integers(0, 5, size=(n, 2)).astype(float) if seed % 2 else rng.normal(size=(n, 2))
        y = rng.normal(size=n)
        want, got = _exhaustive(X, y), best_split(X, y, range(2))
        checked += 1
        if want is None:
            mismatches += got is not None
        elif got is None or got[0] != want[0] or not math.isclose(got[1], want[1]) or abs(got[2] - want[2]) > 1e-9:
            mismatches += 1
    f_mean, t_mean = float(np.mean(forest_rmse)), float(np.mean(tree_rmse))
    fast, clock = within(t0, FOREST_BUDGET)
    ok = f_mean <= t_mean and mismatches == 0 and fast
    verdict(8, ok, f"mean test RMSE forest {f_mean:.4f} <= tree {t_mean:.4f} over {len(FOREST_SEEDS)} seeds; "
                   f"greedy vs exhaustive split mismatches {mismatches}/{checked} (n <= {EXHAUSTIVE_MAX_N}); {clock}")


def test_criterion_09_lstm_sine(verdict):
    t0 = time.perf_counter()
    wave = np.sin(2 * np.pi * np.arange(SINE_N) / 50)
    scaled = apply_minmax(fit_minmax(wave), wave)
    spec = NetSpec(kind="lstm", widths=SINE_WIDTHS, window=WINDOW)
    _, history = train(spec, build_windows(scaled, WINDOW), TrainConfig(epochs=SINE_EPOCHS, seed=0))
    fast, clock = within(t0, SINE_BUDGET)
    verdict(9, history[-1] < SINE_RMSE_MAX and fast,
            f"LSTM {SINE_WIDTHS} sine train RMSE (scaled) {history[-1]:.4f} after {SINE_EPOCHS} epochs "
            f"(< {SINE_RMSE_MAX}); {clock}")


def _recompute(path):
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    actual = [float(r[1]) for r in rows]
    pred = [float(r[2]) for r in rows]
    r = math.sqrt(math.fsum((a - p) ** 2 for a, p in zip(actual, pred)) / len(actual))
    return r, r / (math.fsum(actual) / len(actual))


def test_criterion_10_end_to_end(verdict, tmp_path, sample_csv):
    t0 = time.perf_counter()
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(E2E_CONFIG))
    codes, identical, worst = [], True, 0.0
    for m in MODEL_ORDER:
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / rep / m
            codes.append(main(["backtest", "--model", m, "--csv", str(sample_csv), "--ticker", "SAMPLE",
                               "--seed", str(E2E_SEED), "--config", str(cfg), "--out", str(out)]))
            outs.append(out)
        identical &= all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
                         for f in ("metrics.json", "predictions.csv"))
        metrics = json.loads((outs[0] / "metrics.json").read_text())
        r, q = _recompute(outs[0] / "predictions.csv")
        worst = max(worst, abs(metrics["ratio_test"] - q), abs(metrics["rmse_test"] - r) / max(1.0, r))
        if metrics["n_train"] is not None:
            r, q = _recompute(outs[0] / "train_predictions.csv")
            worst = max(worst, abs(metrics["ratio_train"] - q), abs(metrics["rmse_train"] - r) / max(1.0, r))
    fast, clock = within(t0, E2E_BUDGET)
    ok = set(codes) == {0} and identical and worst <= E2E_TOL and fast
    verdict(10, ok, f"six models x2 on the bundled fixture: byte-identical={identical}, exit codes {sorted(set(codes))}, "
                    f"max recompute gap {worst:.1e} (<= {E2E_TOL:g}); {clock}")


def _find(root: Path, ticker: str):
    names = {"ICICI": ("ICICI", "ICICIBANK")}.get(ticker, (ticker,))
    for path in sorted(root.glob("*.csv")):
        stem = path.stem.upper().split(".")[0]
        if stem in names:
            return path
    return None


def test_criterion_11_soft_reproduction(verdict):
    root = os.environ.get(DATA_ENV)
    paths = {t: _find(Path(root), t) for t in REAL_TICKERS} if root else {}
    if not root or not all(paths.values()):
        verdict.skip(11, f"set {DATA_ENV} to a directory with {', '.join(REAL_TICKERS)} CSVs to run")
    ratios = {}
    for t, path in paths.items():
        series = load_csv(path, t)
        for m in ("mars", "hw"):
            ratios[(t, m)] = run_backtest(series, RunConfig.from_mapping({}, model=m, ticker=t)).report.ratio_test
    ok = all(ratios[(t, "mars")] < REAL_MARS_MAX and ratios[(t, "mars")] < ratios[(t, "hw")] for t in REAL_TICKERS)
    detail = ", ".join(f"{t} mars {ratios[(t, 'mars')]:.4f} vs hw {ratios[(t, 'hw')]:.4f}" for t in REAL_TICKERS)
    verdict(11, ok, f"{detail} (mars < {REAL_MARS_MAX} and below hw; reference 0.0079/0.0072/0.017)")
