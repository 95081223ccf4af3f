#!/usr/bin/env python3
"""End-to-end demo on the builtin synthetic dataset.

Ingests, trains two seeds with small dimensions, evaluates all four regimes,
runs the ablation stages, and emits the null-model analysis. Finishes in
about a minute on one CPU core.

Usage: python scripts/run_demo.py [--out runs-demo] [--epochs 300]
"""

import argparse
import sys

from dynlink.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs-demo")
    parser.add_argument("--epochs", type=int, default=200)
    args = parser.parse_args()

    fast = [
        "--out", args.out,
        "--epochs", str(args.epochs),
        "--d-enc", "64",
        "--d-state", "64",
    ]
    steps = [
        ["ingest", "--dataset", "synthetic", "--out", args.out],
        ["train", "--dataset", "synthetic", "--seeds", "0,1", *fast],
        ["analyze", "--dataset", "synthetic", "--out", args.out, "--samples", "100"],
        ["ablate", "--dataset", "synthetic", "--seeds", "0,1", *fast],
    ]
    for step in steps:
        print(f"\n$ dynlink {' '.join(step)}")
        code = cli(step)
        if code != 0:
            return code
        if step[0] == "train":
            import pathlib

            run_dir = sorted(pathlib.Path(args.out).glob("train-synthetic-*"))[-1]
            code = cli(
                ["evaluate", "--dataset", "synthetic", "--out", args.out,
                 "--checkpoints", str(run_dir)]
            )
            if code != 0:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
