#!/usr/bin/env python3
"""Backtest all strategies on the bundled synthetic price file.

Usage: python scripts/run_backtest_demo.py [OUT_DIR] [JOBS]
Defaults: results/backtest_demo, 1 worker. Expect the prediction-based
strategies to lose here: the demo prices are an independent random walk.
"""

import sys
from pathlib import Path

from seqbet.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "results" / "backtest_demo")
    jobs = sys.argv[2] if len(sys.argv) > 2 else "1"
    sys.exit(
        main(
            [
                "backtest",
                "--config", str(ROOT / "configs" / "backtest_demo.ini"),
                "--out", out,
                "--jobs", jobs,
            ]
        )
    )
