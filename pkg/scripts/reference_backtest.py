"""Run the full moving-window protocol on a monthly returns file.

Thin wrapper over the ``kmprox backtest`` command that bundles the standard
evaluation defaults (18-month window, July 1971 - May 2023 selection) and
resolves the data file from KMPROX_FF25_FILE or KMPROX_DATA_DIR when no
--data flag is given.  Point it at a percent-formatted monthly returns
table, e.g. the 25-portfolio file from the Ken French data library.

Usage:
    python3 scripts/reference_backtest.py --data path/to/returns.csv
    KMPROX_FF25_FILE=path/to/returns.csv python3 scripts/reference_backtest.py
"""

import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kmprox.cli import main as cli_main

CANDIDATE_NAMES = (
    "ff25.csv",
    "FF25.csv",
    "25_Portfolios_5x5.csv",
    "25_Portfolios_5x5.CSV",
)


def locate_data(explicit):
    if explicit:
        return explicit
    env_file = os.environ.get("KMPROX_FF25_FILE")
    if env_file and os.path.exists(env_file):
        return env_file
    base = os.environ.get("KMPROX_DATA_DIR")
    if base:
        for name in CANDIDATE_NAMES:
            cand = os.path.join(base, name)
            if os.path.exists(cand):
                return cand
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=None, help="monthly returns file (percent units)")
    ap.add_argument("--from", dest="date_from", default="197107")
    ap.add_argument("--to", dest="date_to", default="202305")
    ap.add_argument("--window", default="18")
    ap.add_argument("--out", default="reference_run")
    args = ap.parse_args()

    data = locate_data(args.data)
    if data is None:
        print(
            "no data file: pass --data, or set KMPROX_FF25_FILE / KMPROX_DATA_DIR",
            file=sys.stderr,
        )
        return 3

    print(f"data file: {data}")
    code = cli_main([
        "backtest",
        "--data", data,
        "--from", args.date_from,
        "--to", args.date_to,
        "--window", args.window,
        "--out", args.out,
    ])
    if code == 0:
        print(f"outputs written under {args.out}/")
    return code


if __name__ == "__main__":
    sys.exit(main())
