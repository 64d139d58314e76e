"""Additive Holt-Winters (triple exponential) smoothing.

State convention: after processing observation ``t`` the model holds a level
``L``, a trend ``B`` and one seasonal offset per phase ``t mod m``. The one-step
prediction for ``t`` is ``L[t-1] + B[t-1] + S[t-m]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InputError, InsufficientDataError, NumericError

GRID = np.round(np.arange(11) * 0.1, 1)


@dataclass(frozen=True)
class HwParams:
    alpha: float
    beta: float
    gamma: float
    period: int = 5

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name}={value} outside [0, 1]")
        if self.period < 2:
            raise InputError(f"seasonal period must be >= 2, got {self.period}")


@dataclass(frozen=True)
class HwModel:
    params: HwParams
    level: float
    trend: float
    seasonal: np.ndarray  # indexed by phase t mod m
    fitted: np.ndarray
    sse: float
    n_obs: int


def _validate(train, m: int) -> np.ndarray:
    x = np.asarray(train, dtype=float)
    if x.ndim != 1:
        raise InputError("Holt-Winters expects a 1-D series")
    if len(x) < 2 * m:
        raise InsufficientDataError(f"need at least {2 * m} points for period {m}, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise NumericError("series contains non-finite values")
    return x


def hw_init(train, m: int = 5) -> tuple[float, float, np.ndarray]:
    """Initial level, trend and seasonal offsets from the first two seasons."""
    x = _validate(train, m)
    level = float(x[:m].mean())
    trend = float(np.mean((x[m : 2 * m] - x[:m]) / m))
    return level, trend, x[:m] - level


def _recurse(x, m, alpha, beta, gamma, keep_fitted):
    """Run the additive recursions for one or many parameter triples at once.

    ``alpha``, ``beta`` and ``gamma`` broadcast together; the returned state
    arrays carry that broadcast shape.
    """
    alpha, beta, gamma = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, float)) for v in (alpha, beta, gamma)))
    k = alpha.shape
    level0, trend0, season0 = hw_init(x, m)
    level = np.full(k, level0)
    trend = np.full(k, trend0)
    season = np.repeat(season0[:, None], alpha.size, axis=1).reshape((m,) + k)
    sse = np.zeros(k)
    fitted = np.empty((len(x),) + k) if keep_fitted else None
    if keep_fitted:
        fitted[:m] = (level0 + season0).reshape((m,) + (1,) * len(k))
    for t in range(m, len(x)):
        phase = t % m
        s = season[phase]
        pred = level + trend + s
        err = x[t] - pred
        sse += err * err
        if keep_fitted:
            fitted[t] = pred
        # error-correction form of the textbook updates; exact on constant input
        new_level = level + trend + alpha * err
        trend = trend + beta * (new_level - level - trend)
        season[phase] = s + gamma * (x[t] - new_level - s)
        level = new_level
    return level, trend, season, sse, fitted


def hw_fit(train, params: HwParams) -> HwModel:
    m = params.period
    x = _validate(train, m)
    level, trend, season, sse, fitted = _recurse(x, m, params.alpha, params.beta, params.gamma, True)
    if not np.isfinite(sse[0]):
        raise NumericError("Holt-Winters recursion overflowed")
    return HwModel(
        params=params,
        level=float(level[0]),
        trend=float(trend[0]),
        seasonal=season[:, 0].copy(),
        fitted=fitted[:, 0].copy(),
        sse=float(sse[0]),
        n_obs=len(x),
    )


def grid_sse(train, m: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """In-sample SSE at every point of the 0.1-step grid over [0, 1]^3.

    Returns ``(points, sse)`` with points in lexicographic (alpha, beta, gamma) order.
    """
    x = _validate(train, m)
    a, b, g = np.meshgrid(GRID, GRID, GRID, indexing="ij")
    points = np.column_stack([a.ravel(), b.ravel(), g.ravel()])
    *_, sse, _ = _recurse(x, m, points[:, 0], points[:, 1], points[:, 2], False)
    return points, sse


def hw_optimize(train, m: int = 5) -> HwParams:
    """Minimize in-sample SSE: coarse grid, then Nelder-Mead refinement inside [0, 1]^3.

    Ties on the grid resolve to the lexicographically smallest point, and the
    refinement is only kept when it strictly improves on the grid optimum.
    """
    x = _validate(train, m)
    points, sse = grid_sse(x, m)
    finite = np.where(np.isfinite(sse), sse, np.inf)
    best_idx = int(np.argmin(finite))
    best_point, best_sse = points[best_idx], float(finite[best_idx])

    def objective(p):
        p = np.clip(p, 0.0, 1.0)
        value = _recurse(x, m, p[0], p[1], p[2], False)[3][0]
        return value if np.isfinite(value) else np.inf

    result = minimize(
        objective,
        best_point,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * 3,
        options={"xatol": 1e-6, "fatol": 1e-12 * max(best_sse, 1e-300), "maxiter": 2000},
    )
    if np.isfinite(result.fun) and result.fun < best_sse:
        best_point = np.clip(result.x, 0.0, 1.0)
    a, b, g = (float(v) for v in best_point)
    return HwParams(a, b, g, m)


def hw_forecast(model: HwModel, h: int) -> np.ndarray:
    """Static forecasts ``L + k*B + S[(n + k - 1) mod m]`` for ``k = 1..h``."""
    if h < 1:
        raise InputError(f"horizon must be >= 1, got {h}")
    m = model.params.period
    k = np.arange(1, h + 1)
    return model.level + k * model.trend + model.seasonal[(model.n_obs + k - 1) % m]


def hw_rolling(model: HwModel, observed) -> np.ndarray:
    """One-step-ahead forecasts over ``observed``, updating the state after each value.

    Smoothing weights stay fixed at the fitted values; nothing is re-optimized.
    """
    observed = np.asarray(observed, dtype=float)
    if len(observed) < 1:
        raise InputError("need at least one observed value")
    p = model.params
    level, trend = model.level, model.trend
    season = model.seasonal.copy()
    preds = np.empty(len(observed))
    for i, value in enumerate(observed):
        phase = (model.n_obs + i) % p.period
        s = season[phase]
        preds[i] = level + trend + s
        new_level = level + trend + p.alpha * (value - preds[i])
        trend = trend + p.beta * (new_level - level - trend)
        season[phase] = s + p.gamma * (value - new_level - s)
        level = new_level
    return preds
