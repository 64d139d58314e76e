"""ARIMA(p, d, q) by conditional sum of squares, AIC order search and forecasting.

On the differenced series ``w`` the model is::

    w[t] = c + sum_i phi[i] * w[t-1-i] + sum_j theta[j] * e[t-1-j] + e[t]

with pre-sample innovations fixed at zero. Estimation minimizes the sum of
squared innovations over ``t = p .. n-1`` with Nelder-Mead, starting from a
Hannan-Rissanen two-stage regression.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import (
    ConvergenceError,
    InputError,
    InsufficientDataError,
    ModelError,
    NumericError,
    SearchError,
)
from .stationarity import StationarityReport, adf_test, kpss_test


class ArimaWarning(UserWarning):
    """Fitted AR part non-stationary or MA part non-invertible."""


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise InputError(f"negative order {self}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)


@dataclass(frozen=True)
class ArimaFit:
    order: ArimaOrder
    phi: np.ndarray
    theta: np.ndarray
    intercept: float
    sigma2: float
    sse: float
    n_obs: int
    aic: float
    degenerate: bool = False
    stationary: bool = True
    invertible: bool = True

    def to_dict(self) -> dict:
        return {
            "order": list(self.order.as_tuple()),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "intercept": self.intercept,
            "sigma2": self.sigma2,
            "sse": self.sse,
            "n_obs": self.n_obs,
            "aic": self.aic,
            "stationary": self.stationary,
            "invertible": self.invertible,
        }


def difference(x, d: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d < 0:
        raise InputError("d must be >= 0")
    if len(x) <= d:
        raise InsufficientDataError(f"cannot difference {len(x)} values {d} time(s)")
    return np.diff(x, n=d) if d else x.copy()


def integrate(head, diffs, d: int = 1) -> np.ndarray:
    """Undo ``d`` rounds of differencing.

    ``head`` holds (at least) the ``d`` original values immediately preceding
    the first difference; the continuation after them is returned, so
    ``concat(x[:d], integrate(x[:d], difference(x, d), d)) == x``.
    """
    diffs = np.asarray(diffs, dtype=float)
    if d == 0:
        return diffs.copy()
    head = np.asarray(head, dtype=float)
    if len(head) < d:
        raise InputError(f"need {d} seed value(s) to integrate, got {len(head)}")
    head = head[-d:]
    seeds = [np.diff(head, n=k)[-1] for k in range(d)]
    out = diffs
    for k in reversed(range(d)):
        out = seeds[k] + np.cumsum(out)
    return out


def css_residuals(w, intercept, phi, theta) -> np.ndarray:
    """Innovations for ``t = p .. n-1`` (length ``n - p``)."""
    w = np.asarray(w, dtype=float)
    p, n = len(phi), len(w)
    u = w[p:] - intercept
    for i in range(p):
        u = u - phi[i] * w[p - 1 - i : n - 1 - i]
    if len(theta):
        return lfilter([1.0], np.r_[1.0, theta], u)
    return u


def _css(w, params, p, q) -> float:
    # explosive MA trials overflow; they score as inf and the optimizer moves away
    with np.errstate(over="ignore", invalid="ignore"):
        e = css_residuals(w, params[0], params[1 : 1 + p], params[1 + p :])
        value = float(e @ e)
    return value if math.isfinite(value) else math.inf


def _ols(y, X):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def _lagmat(series, lags, start, stop):
    """Columns ``series[t-1], ..., series[t-lags]`` for ``t in [start, stop)``."""
    return [series[start - j : stop - j] for j in range(1, lags + 1)]


def hannan_rissanen(w, p: int, q: int) -> np.ndarray:
    """Two-stage OLS starting values ``[c, phi..., theta...]``."""
    w = np.asarray(w, dtype=float)
    n = len(w)
    if q == 0:
        X = np.column_stack([np.ones(n - p)] + _lagmat(w, p, p, n))
        return _ols(w[p:], X)
    long_ar = max(int(math.log(n) ** 2), 2 * max(p, q))
    long_ar = min(long_ar, max((n - 1) // 3, p + q))
    X = np.column_stack([np.ones(n - long_ar)] + _lagmat(w, long_ar, long_ar, n))
    coef = _ols(w[long_ar:], X)
    e_hat = np.zeros(n)
    e_hat[long_ar:] = w[long_ar:] - X @ coef
    start = long_ar + q
    if n - start <= 1 + p + q:
        start = max(p, q)
    X2 = np.column_stack([np.ones(n - start)] + _lagmat(w, p, start, n) + _lagmat(e_hat, q, start, n))
    return _ols(w[start:], X2)


def aic(fit: ArimaFit) -> float:
    return _aic(fit.sse, fit.n_obs, fit.order.p, fit.order.q)


def _aic(sse, n_obs, p, q) -> float:
    if sse <= 0.0:
        return -math.inf
    return n_obs * math.log(sse / n_obs) + 2 * (p + q + 1)


def _roots_inside(coeffs) -> bool:
    if not len(coeffs):
        return True
    return bool(np.all(np.abs(np.roots(np.r_[1.0, coeffs])) < 1.0))


def fit_arma_css(w, p: int, q: int, max_iter: int | None = None, d: int = 0) -> ArimaFit:
    """Fit ARMA(p, q) with intercept to an (already differenced) series.

    Pure AR models are solved exactly by least squares; models with MA terms are
    refined by Nelder-Mead from the Hannan-Rissanen estimate (one restart from
    the best vertex). Raises `ConvergenceError` carrying the best fit found if
    the iteration cap is hit.
    """
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise NumericError("series contains non-finite values")
    if len(w) <= p + q + 1:
        raise InsufficientDataError(f"{len(w)} points cannot support ARMA({p},{q})")
    order = ArimaOrder(p, d, q)
    start = hannan_rissanen(w, p, q)
    best = start
    converged = True
    if q > 0:
        dim = 1 + p + q
        cap = max_iter or 600 * dim
        f0 = _css(w, start, p, q)
        if not math.isfinite(f0):
            start = np.r_[start[: 1 + p], np.zeros(q)]
            f0 = _css(w, start, p, q)
        opts = {"maxiter": cap, "maxfev": 2 * cap, "xatol": 1e-7, "fatol": 1e-11 * max(f0, 1e-300), "adaptive": dim > 4}
        objective = lambda v: _css(w, v, p, q)  # noqa: E731
        result = minimize(objective, start, method="Nelder-Mead", options=opts)
        if not result.success:
            result = minimize(objective, result.x, method="Nelder-Mead", options=opts)
        best = result.x if result.fun <= f0 else start
        converged = bool(result.success)
    e = css_residuals(w, best[0], best[1 : 1 + p], best[1 + p :])
    sse = float(e @ e)
    n_obs = len(e)
    phi, theta = np.array(best[1 : 1 + p]), np.array(best[1 + p :])
    fit = ArimaFit(
        order=order,
        phi=phi,
        theta=theta,
        intercept=float(best[0]),
        sigma2=sse / n_obs,
        sse=sse,
        n_obs=n_obs,
        aic=_aic(sse, n_obs, p, q),
        degenerate=sse <= 0.0,
        stationary=_roots_inside(-phi),
        invertible=_roots_inside(theta),
    )
    if not converged:
        raise ConvergenceError(f"Nelder-Mead did not converge for ARMA({p},{q})", best=fit)
    if not fit.stationary:
        warnings.warn(f"ARMA({p},{q}) fit has a non-stationary AR polynomial", ArimaWarning, stacklevel=2)
    if not fit.invertible:
        warnings.warn(f"ARMA({p},{q}) fit has a non-invertible MA polynomial", ArimaWarning, stacklevel=2)
    return fit


@dataclass
class ArimaSearch:
    order: ArimaOrder
    fit: ArimaFit
    candidates: dict = field(default_factory=dict)  # (p, q) -> aic of every successful fit
    stationarity: list = field(default_factory=list)  # StationarityReport per tried d

    def to_dict(self) -> dict:
        return {
            "order": list(self.order.as_tuple()),
            "fit": self.fit.to_dict(),
            "candidates": [{"p": p, "q": q, "aic": a} for (p, q), a in sorted(self.candidates.items())],
            "stationarity": [r.to_dict() for r in self.stationarity],
        }


def select_d(x, d_max: int = 2, level: str = "5%") -> tuple[int, list]:
    """Smallest ``d`` whose differenced series KPSS does not reject; ADF is recorded alongside."""
    reports = []
    for d in range(d_max + 1):
        w = difference(x, d)
        notes = []
        try:
            kp = kpss_test(w)
        except NumericError as exc:
            # zero variance: trivially stationary
            return d, reports + [StationarityReport(d, None, None, [str(exc)])]
        try:
            adf = adf_test(w)
        except (NumericError, InsufficientDataError) as exc:
            adf = None
            notes.append(f"adf skipped: {exc}")
        reports.append(StationarityReport(d, kp, adf, notes))
        if not kp.reject[level]:
            return d, reports
    return d_max, reports


def auto_arima(x, p_max: int = 5, d_max: int = 2, q_max: int = 5, admissible_only: bool = True) -> ArimaSearch:
    """Choose ``d`` by KPSS, then the ``(p, q)`` with minimum AIC on the differenced series.

    Candidates that fail to fit are skipped. With ``admissible_only`` a fit whose
    AR polynomial is non-stationary or whose MA polynomial is non-invertible
    also counts as failed, since its innovation recursion diverges when used
    for forecasting. Ties keep the first candidate in ``(p, q)`` order.
    """
    x = np.asarray(x, dtype=float)
    d, reports = select_d(x, d_max)
    w = difference(x, d)
    best = None
    candidates = {}
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ArimaWarning)
                    fit = fit_arma_css(w, p, q, d=d)
            except (ModelError, InputError, np.linalg.LinAlgError):
                continue
            if admissible_only and not (fit.stationary and fit.invertible):
                continue
            candidates[(p, q)] = fit.aic
            if best is None or fit.aic < best.aic:
                best = fit
    if best is None:
        raise SearchError("every ARIMA candidate failed to fit")
    return ArimaSearch(best.order, best, candidates, reports)


def _state(fit: ArimaFit, history):
    x = np.asarray(history, dtype=float)
    w = difference(x, fit.order.d)
    e = np.zeros(len(w))
    e[fit.order.p :] = css_residuals(w, fit.intercept, fit.phi, fit.theta)
    return x, list(w), list(e)


def _one_step(fit, w, e) -> float:
    value = fit.intercept
    for i, phi in enumerate(fit.phi):
        value += phi * w[-1 - i]
    for j, theta in enumerate(fit.theta):
        value += theta * e[-1 - j]
    return value


def _undifference_step(w_hat, recent, d) -> float:
    """Level forecast from a differenced forecast and the ``d`` most recent levels."""
    return w_hat - sum((-1) ** k * comb(d, k) * recent[-k] for k in range(1, d + 1))


def arima_forecast(fit: ArimaFit, history, h: int, mode: str = "static", observed=None) -> np.ndarray:
    """Forecast ``h`` steps past ``history`` in the original scale.

    ``static`` iterates the recursion with future innovations set to zero.
    ``rolling`` makes one-step forecasts, feeding each ``observed`` value back
    into the lags and innovations (coefficients are not re-estimated).
    """
    if h < 1:
        raise InputError(f"horizon must be >= 1, got {h}")
    d = fit.order.d
    x, w, e = _state(fit, history)
    if len(w) < fit.order.p:
        raise InsufficientDataError("history shorter than the AR order")
    if mode == "static":
        w_hat = []
        for _ in range(h):
            value = _one_step(fit, w, e)
            w_hat.append(value)
            w.append(value)
            e.append(0.0)
        return integrate(x, w_hat, d)
    if mode != "rolling":
        raise InputError(f"unknown forecast mode {mode!r}")
    if observed is None or len(observed) < h:
        raise InputError("rolling mode needs h observed values")
    levels = list(x)
    out = np.empty(h)
    for i in range(h):
        w_hat = _one_step(fit, w, e)
        out[i] = _undifference_step(w_hat, levels, d)
        levels.append(float(observed[i]))
        w_t = float(np.diff(levels[-(d + 1) :], n=d)[-1]) if d else levels[-1]
        w.append(w_t)
        e.append(w_t - w_hat)
    return out


def arima_in_sample(fit: ArimaFit, history) -> tuple[np.ndarray, np.ndarray]:
    """One-step in-sample predictions ``x[t] - e[t]`` and the indices ``t`` they cover."""
    x = np.asarray(history, dtype=float)
    start = fit.order.d + fit.order.p
    w = difference(x, fit.order.d)
    e = css_residuals(w, fit.intercept, fit.phi, fit.theta)
    idx = np.arange(start, len(x))
    return idx, x[start:] - e
