"""Univariate and same-day tabular stock price forecasting with six model families.

Modules: ``data`` (CSV ingest, splits, scaling, windows), ``smoothing``
(Holt-Winters), ``stationarity`` and ``arima``, ``trees`` (CART and forests),
``mars``, ``neural`` (RNN and LSTM), ``evaluation``, ``pipeline`` and ``cli``.
"""

__version__ = "0.1.0"
