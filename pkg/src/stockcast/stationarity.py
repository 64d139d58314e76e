"""Augmented Dickey-Fuller and KPSS (level) stationarity tests with embedded critical values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, NumericError

LEVELS = ("1%", "5%", "10%")

# MacKinnon (2010) response surface, constant-only regression, one variable:
# cv(T) = b0 + b1/T + b2/T^2 + b3/T^3, T = effective observations.
ADF_SURFACE = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}

KPSS_CRITICAL = {"1%": 0.739, "5%": 0.463, "10%": 0.347}

MIN_LENGTH = 20


@dataclass(frozen=True)
class StationarityResult:
    """Outcome of one test. ``reject`` is keyed like ``critical`` ("1%", "5%", "10%").

    For ADF rejecting means "no unit root"; for KPSS it means "not stationary".
    """

    test: str
    statistic: float
    critical: dict
    reject: dict
    lags: int
    nobs: int

    def stationary(self, level: str = "5%") -> bool:
        return self.reject[level] if self.test == "adf" else not self.reject[level]

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "critical": dict(self.critical),
            "reject": dict(self.reject),
            "lags": self.lags,
            "nobs": self.nobs,
        }


@dataclass(frozen=True)
class StationarityReport:
    """ADF and KPSS results for one differencing order."""

    d: int
    kpss: StationarityResult | None
    adf: StationarityResult | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "kpss": self.kpss.to_dict() if self.kpss else None,
            "adf": self.adf.to_dict() if self.adf else None,
            "notes": list(self.notes),
        }


def _series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < MIN_LENGTH:
        raise InsufficientDataError(f"stationarity tests need at least {MIN_LENGTH} points")
    if not np.all(np.isfinite(x)):
        raise NumericError("series contains non-finite values")
    return x


def adf_critical_values(nobs: int) -> dict:
    return {lvl: b[0] + b[1] / nobs + b[2] / nobs**2 + b[3] / nobs**3 for lvl, b in ADF_SURFACE.items()}


def adf_test(x, max_lag: int | None = None) -> StationarityResult:
    """Regress the first difference on the lagged level, ``max_lag`` lagged differences
    and a constant; the statistic is the t-ratio on the lagged level.

    The default lag count follows Schwert: ``floor(12 * (n/100)**0.25)``.
    """
    x = _series(x)
    n = len(x)
    lags = int(math.floor(12 * (n / 100) ** 0.25)) if max_lag is None else int(max_lag)
    if lags < 0 or n - lags - 1 < lags + 3:
        raise InsufficientDataError(f"{n} points are too few for {lags} lags")
    dx = np.diff(x)
    y = dx[lags:]
    cols = [x[lags:-1]]
    cols += [dx[lags - j : len(dx) - j] for j in range(1, lags + 1)]
    cols.append(np.ones(len(y)))
    X = np.column_stack(cols)
    nobs, k = X.shape
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        raise NumericError("ADF regression is singular (constant or degenerate series)")
    resid = y - X @ coef
    sigma2 = resid @ resid / (nobs - k)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = math.sqrt(cov[0, 0])
    if se == 0.0:
        raise NumericError("ADF regression has zero residual variance")
    stat = float(coef[0] / se)
    crit = adf_critical_values(nobs)
    return StationarityResult("adf", stat, crit, {lvl: stat < c for lvl, c in crit.items()}, lags, nobs)


def kpss_test(x, bandwidth: int | None = None) -> StationarityResult:
    """Level-stationarity KPSS statistic with a Bartlett-kernel long-run variance.

    The default bandwidth is ``floor(4 * (n/100)**0.25)``.
    """
    x = _series(x)
    n = len(x)
    lags = int(math.floor(4 * (n / 100) ** 0.25)) if bandwidth is None else int(bandwidth)
    if not 0 <= lags < n:
        raise InsufficientDataError(f"bandwidth {lags} invalid for {n} points")
    resid = x - x.mean()
    lrv = resid @ resid
    for s in range(1, lags + 1):
        lrv += 2.0 * (1.0 - s / (lags + 1.0)) * (resid[s:] @ resid[:-s])
    lrv /= n
    if not lrv > 0.0:
        raise NumericError("KPSS long-run variance is zero")
    partial = np.cumsum(resid)
    stat = float((partial @ partial) / (n * n * lrv))
    return StationarityResult(
        "kpss",
        stat,
        dict(KPSS_CRITICAL),
        {lvl: stat > c for lvl, c in KPSS_CRITICAL.items()},
        lags,
        n,
    )
