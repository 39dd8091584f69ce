#!/usr/bin/env python3
"""Run the circle eigenvalue/eigenvector convergence experiment.

Tracks the first nonzero eigenpair of the calibrated graph Laplacian across
a grid of sample sizes and fits log-log rates for both error curves.
"""

import argparse
import json
import sys
from pathlib import Path

from converge.cli import main as cli_main

HERE = Path(__file__).resolve().parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=HERE / "configs" / "circle_eigen.json")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    argv = ["eigen", "--config", str(args.config), "--out-dir", args.out_dir]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    code = cli_main(argv)
    if code != 0:
        return code

    summaries = sorted(Path(args.out_dir).glob("eigen_*.json"))
    summary = json.loads(summaries[-1].read_text())
    for key, fit in (summary.get("fit") or {}).items():
        if fit:
            print(f"{key}: slope {fit['slope']:.3f} (r2 {fit['r2']:.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
