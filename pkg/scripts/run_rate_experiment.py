#!/usr/bin/env python3
"""Run the sphere convergence-rate experiment and print the fitted slope.

Thin wrapper around `converge run` with the repository's pinned config.
Pass --full for the large grid (n up to 2^14, 100 trials); expect a long
runtime at that scale.
"""

import argparse
import json
import sys
from pathlib import Path

from converge.cli import main as cli_main

HERE = Path(__file__).resolve().parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=HERE / "configs" / "sphere_rate.json")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    argv = ["run", "--config", str(args.config), "--out-dir", args.out_dir]
    if args.full:
        argv.append("--full")
    if args.threads:
        argv += ["--threads", str(args.threads)]
    code = cli_main(argv)
    if code != 0:
        return code

    summaries = sorted(Path(args.out_dir).glob("run_*.json"))
    summary = json.loads(summaries[-1].read_text())
    fit = summary.get("fit")
    if fit:
        print(f"fitted slope {fit['slope']:.3f} (r2 {fit['r2']:.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
