"""``stockcast`` command line: ingest, backtest, compare, plot and fetch.

Exit codes: 0 success, 1 model or numeric failure, 2 input error, 3 network error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .data import drop_nulls, format_yahoo_csv, load_csv, parse_yahoo_csv
from .errors import InputError, ModelError, NetworkError, StockcastError
from .evaluation import MODEL_ORDER, MetricReport, comparison_table
from .fetch import DEFAULT_URL_TEMPLATE, build_url, fetch_csv
from .pipeline import RunConfig, read_predictions, run_backtest, write_outputs
from .plot import render_svg

log = logging.getLogger("stockcast")

EXIT_OK, EXIT_MODEL, EXIT_INPUT, EXIT_NETWORK = 0, 1, 2, 3
WORKSPACE_ENV = "STOCKCAST_WORKSPACE"


def workspace_root(explicit: str | None) -> Path:
    return Path(explicit or os.environ.get(WORKSPACE_ENV) or "stockcast-workspace")


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {path}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        payload = json.loads(_read_text(Path(path)))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return payload


def _dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_ingest(args) -> int:
    source = Path(args.csv)
    raw = parse_yahoo_csv(_read_text(source))
    ticker = args.ticker or source.stem.upper()
    series = drop_nulls(raw, ticker)
    out = Path(args.out) if args.out else workspace_root(args.workspace)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{ticker}.csv").write_text(format_yahoo_csv(series))
    summary = {
        "ticker": ticker,
        "source": str(source),
        "rows_in": len(raw),
        "rows_out": len(series),
        "rows_dropped": len(raw) - len(series),
        "start": series.bars[0].date.isoformat(),
        "end": series.bars[-1].date.isoformat(),
    }
    (out / f"{ticker}.summary.json").write_text(_dump(summary))
    sys.stdout.write(_dump(summary))
    return EXIT_OK


def cmd_backtest(args) -> int:
    cfg = RunConfig.from_mapping(
        _load_config(args.config),
        model=args.model,
        ticker=args.ticker,
        csv=args.csv,
        boundary=args.boundary,
        seed=args.seed,
        out=args.out,
    )
    ws = workspace_root(args.workspace)
    if cfg.csv:
        csv_path = Path(cfg.csv)
    elif cfg.ticker:
        csv_path = ws / f"{cfg.ticker}.csv"
    else:
        raise InputError("backtest needs --csv or --ticker (an ingested workspace series)")
    if not csv_path.exists():
        raise InputError(f"file not found: {csv_path}")
    series = load_csv(csv_path, cfg.ticker or csv_path.stem.upper())
    result = run_backtest(series, cfg)
    if cfg.out:
        out = Path(cfg.out)
    else:
        stamp = dt.datetime.now(dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        out = ws / result.ticker / cfg.model / stamp
    write_outputs(result, out)
    r = result.report
    sys.stdout.write(f"{r.ticker} {r.model}: ratio_test={r.ratio_test:.4f} rmse_test={r.rmse_test:.4f} -> {out}\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    root = Path(args.report_dir)
    if not root.is_dir():
        raise InputError(f"not a directory: {root}")
    files = sorted(root.rglob("metrics.json"))
    if not files:
        raise InputError(f"no metrics.json files under {root}")
    reports = []
    for f in files:
        try:
            reports.append(MetricReport.from_dict(json.loads(_read_text(f))))
        except json.JSONDecodeError as exc:
            raise InputError(f"{f}: invalid JSON: {exc.msg}") from exc
    table = comparison_table(reports)
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(table.to_csv())
    (out / "comparison.json").write_text(table.to_json())
    text = table.to_text()
    (out / "comparison.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    source = Path(args.predictions)
    text = _read_text(source)
    dates, actual, predicted = read_predictions(source)
    out = Path(args.out) if args.out else source.parent
    out.mkdir(parents=True, exist_ok=True)
    # the input already holds exactly the plotted columns, so it is passed through verbatim
    (out / "plot.csv").write_text(text)
    (out / "plot.svg").write_text(render_svg([d.isoformat() for d in dates], actual, predicted, args.title))
    sys.stdout.write(f"{len(dates)} points -> {out / 'plot.svg'}\n")
    return EXIT_OK


def cmd_fetch(args) -> int:
    try:
        start, end = dt.date.fromisoformat(args.start), dt.date.fromisoformat(args.end)
    except ValueError as exc:
        raise InputError(f"invalid date: {exc}") from exc
    if end < start:
        raise InputError("--end is before --start")
    url = build_url(args.url_template, args.ticker, start, end)
    dest = Path(args.out) if args.out else workspace_root(args.workspace) / "raw" / f"{args.ticker}.csv"
    path, ok = fetch_csv(url, dest, timeout=args.timeout)
    if not ok:
        sys.stderr.write(f"warning: {path} does not have the Yahoo header; saved anyway\n")
    sys.stdout.write(f"saved {path}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stockcast", description="Stock price forecasting backtests.")
    parser.add_argument("--version", action="version", version=f"stockcast {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workspace", help=f"workspace root (default ${WORKSPACE_ENV} or ./stockcast-workspace)")
        if seed:
            p.add_argument("--seed", type=int, help="unsigned 64-bit seed")

    p = sub.add_parser("ingest", help="clean a Yahoo CSV into the workspace")
    p.add_argument("csv")
    p.add_argument("--ticker")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("backtest", help="fit one model on train and score the test segment")
    p.add_argument("--model", choices=MODEL_ORDER)
    p.add_argument("--csv", help="Yahoo CSV (defaults to the workspace copy of --ticker)")
    p.add_argument("--ticker")
    p.add_argument("--boundary", help="first test date, ISO format (default 2019-01-01)")
    common(p, seed=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("compare", help="tabulate test ratios of every metrics.json under a directory")
    p.add_argument("report_dir")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="plot data and SVG chart from predictions.csv")
    p.add_argument("predictions")
    p.add_argument("--title", default="Actual and forecasted close")
    common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fetch", help="download a raw daily history CSV (not ingested)")
    p.add_argument("ticker")
    p.add_argument("--start", default="2004-01-01")
    p.add_argument("--end", default="2019-12-31")
    p.add_argument("--url-template", default=DEFAULT_URL_TEMPLATE)
    p.add_argument("--timeout", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except NetworkError as exc:
        sys.stderr.write(f"stockcast: network error: {exc}\n")
        return EXIT_NETWORK
    except ModelError as exc:
        sys.stderr.write(f"stockcast: model error: {exc}\n")
        return EXIT_MODEL
    except InputError as exc:
        sys.stderr.write(f"stockcast: input error: {exc}\n")
        return EXIT_INPUT
    except StockcastError as exc:
        sys.stderr.write(f"stockcast: {exc}\n")
        return EXIT_MODEL
    except OSError as exc:
        sys.stderr.write(f"stockcast: input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
