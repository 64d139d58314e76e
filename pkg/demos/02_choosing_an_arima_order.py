"""How the automatic ARIMA search picks d, then (p, q).

d is the smallest differencing order whose KPSS test does not reject
stationarity; ADF is shown alongside as a cross-check. (p, q) then minimizes
AIC over a grid of CSS fits on the differenced series.

    python demos/02_choosing_an_arima_order.py
"""

import numpy as np
from scipy.signal import lfilter

from stockcast.arima import arima_forecast, auto_arima

rng = np.random.default_rng(3)
# an integrated AR(1): the differences follow w_t = 0.6 w_{t-1} + e_t
x = 100 + np.cumsum(lfilter([1.0], [1.0, -0.6], rng.normal(size=1500)))
train, test = x[:1400], x[1400:]

search = auto_arima(train, p_max=3, d_max=2, q_max=3)
for report in search.stationarity:
    kp, adf = report.kpss, report.adf
    print(f"d={report.d}: KPSS {kp.statistic:7.3f} (5% crit {kp.critical['5%']:.3f}, reject={kp.reject['5%']}), "
          f"ADF {adf.statistic:7.2f} (5% crit {adf.critical['5%']:.2f}, reject={adf.reject['5%']})")

print("\nAIC by (p, q), lowest first:")
for (p, q), a in sorted(search.candidates.items(), key=lambda kv: kv[1])[:6]:
    print(f"  ({p}, {q})  {a:10.2f}")

fit = search.fit
print(f"\nchosen order {search.order.as_tuple()}, phi={np.round(fit.phi, 3)}, theta={np.round(fit.theta, 3)}")

static = arima_forecast(fit, train, len(test), mode="static")
rolling = arima_forecast(fit, train, len(test), mode="rolling", observed=test)
for name, fc in (("static", static), ("rolling", rolling)):
    print(f"{name:>8} forecast RMSE over {len(test)} steps: {np.sqrt(np.mean((fc - test) ** 2)):.3f}")
