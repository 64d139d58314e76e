"""The command line end to end on the bundled fixture, inside a temporary workspace.

Equivalent shell session:

    stockcast ingest sample.csv --ticker SAMPLE
    stockcast backtest --model mars --ticker SAMPLE --seed 1 --out runs/mars
    stockcast backtest --model hw --ticker SAMPLE --seed 1 --out runs/hw
    stockcast compare runs
    stockcast plot runs/mars/predictions.csv --title "SAMPLE, MARS"

    python demos/05_cli_walkthrough.py
"""

import os
import tempfile
from importlib import resources
from pathlib import Path

from stockcast.cli import main

sample = str(resources.files("stockcast") / "fixtures" / "sample.csv")

with tempfile.TemporaryDirectory() as tmp:
    os.environ["STOCKCAST_WORKSPACE"] = tmp
    runs = Path(tmp) / "runs"
    steps = [
        ["ingest", sample, "--ticker", "SAMPLE"],
        ["backtest", "--model", "mars", "--ticker", "SAMPLE", "--seed", "1", "--out", str(runs / "mars")],
        ["backtest", "--model", "hw", "--ticker", "SAMPLE", "--seed", "1", "--out", str(runs / "hw")],
        ["compare", str(runs)],
        ["plot", str(runs / "mars" / "predictions.csv"), "--title", "SAMPLE, MARS"],
    ]
    for argv in steps:
        print(f"$ stockcast {' '.join(argv)}")
        code = main(argv)
        print(f"(exit {code})\n")
    print("files:", sorted(str(p.relative_to(tmp)) for p in Path(tmp).rglob("*") if p.is_file()))
