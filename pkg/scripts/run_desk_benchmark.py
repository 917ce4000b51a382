#!/usr/bin/env python3
"""Run the default desk-scale benchmark and emit results.csv plus a
convergence plot.

Equivalent to:

    crtrack bench --out results.csv
    crtrack plot --in results.csv --out convergence.svg

but in one process, with the output directory as the only argument.
"""

import argparse
import sys

from crtrack.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=".", help="where to write results.csv and convergence.svg")
    parser.add_argument("--seed", type=int, default=0, help="master seed for the benchmark matrix")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--paper-scale", action="store_true",
                        help="full 800x640 / 300-frame / 30-run protocol instead of desk scale")
    args = parser.parse_args()

    from pathlib import Path

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = out_dir / "results.csv"
    plot = out_dir / "convergence.svg"

    bench = ["bench", "--out", str(results), "--seed", str(args.seed)]
    if args.workers is not None:
        bench += ["--workers", str(args.workers)]
    if args.paper_scale:
        bench.append("--paper-scale")
    rc = cli_main(bench)
    if rc != 0:
        return rc
    return cli_main(["plot", "--in", str(results), "--out", str(plot)])


if __name__ == "__main__":
    sys.exit(main())
