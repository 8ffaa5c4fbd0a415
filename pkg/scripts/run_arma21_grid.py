#!/usr/bin/env python3
"""Run the bundled ARMA(2,1) comparison grid.

Usage: python scripts/run_arma21_grid.py [OUT_DIR] [JOBS]
Defaults: results/arma21, 2 workers.
"""

import sys
from pathlib import Path

from seqbet.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "results" / "arma21")
    jobs = sys.argv[2] if len(sys.argv) > 2 else "2"
    sys.exit(
        main(
            [
                "simulate",
                "--config", str(ROOT / "configs" / "arma21.ini"),
                "--out", out,
                "--jobs", jobs,
            ]
        )
    )
