"""Download raw daily history CSVs over HTTP. Nothing downloaded here is ingested automatically."""

from __future__ import annotations

import datetime as dt
import logging
import urllib.error
import urllib.request
from pathlib import Path

from .data import HEADER
from .errors import NetworkError

log = logging.getLogger(__name__)

DEFAULT_URL_TEMPLATE = (
    "https://query1.finance.yahoo.com/v7/finance/download/{ticker}"
    "?period1={period1}&period2={period2}&interval=1d&events=history"
)


def _epoch(day: dt.date) -> int:
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())


def build_url(template: str, ticker: str, start: dt.date, end: dt.date) -> str:
    """Fill ``{ticker}``, ``{start}``/``{end}`` (ISO dates) and ``{period1}``/``{period2}`` (epoch seconds)."""
    return template.format(
        ticker=ticker,
        start=start.isoformat(),
        end=end.isoformat(),
        period1=_epoch(start),
        period2=_epoch(end + dt.timedelta(days=1)),
    )


def header_matches(text: str) -> bool:
    first = text.lstrip("﻿").splitlines()[0] if text.strip() else ""
    return [c.strip().lower() for c in first.split(",")] == [h.lower() for h in HEADER]


def fetch_csv(url: str, dest, timeout: float = 30.0) -> tuple[Path, bool]:
    """Save the response body to ``dest``; returns ``(path, schema_ok)``.

    Transport failures and non-2xx statuses raise ``NetworkError``. A body with
    an unexpected header is still saved, and ``schema_ok`` is False.
    """
    request = urllib.request.Request(url, headers={"User-Agent": "stockcast/0.1"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            body = response.read()
    except urllib.error.HTTPError as exc:
        raise NetworkError(f"HTTP {exc.code} {exc.reason} for {url}") from exc
    except (urllib.error.URLError, OSError) as exc:
        reason = getattr(exc, "reason", exc)
        raise NetworkError(f"cannot reach {url}: {reason}") from exc
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_bytes(body)
    ok = header_matches(body.decode("utf-8", errors="replace"))
    if not ok:
        log.warning("%s does not have the expected Yahoo header", dest)
    return dest, ok
