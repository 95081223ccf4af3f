#!/usr/bin/env python3
"""Full benchmark reproduction driver.

For every benchmark dataset whose raw event file is present under the data
root (./data or $DYNLINK_DATA), this runs the complete protocol: ingestion,
five-seed training at the per-dataset loss weights, evaluation over all four
regimes, the four-stage loss ablation, and the null-model analysis.

Expect roughly (training epochs x five seeds) minutes per dataset on one CPU;
see README for dataset acquisition and expected tables.

Usage: python scripts/reproduce_benchmarks.py [--out runs] [--datasets enron colab facebook]
"""

import argparse
import pathlib
import sys

from dynlink.cli import main as cli
from dynlink.datasets import BUILTIN_MANIFESTS, data_root

SEEDS = "0,1,2,3,4"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs")
    parser.add_argument(
        "--datasets", nargs="+", default=["enron", "colab", "facebook"],
        choices=sorted(BUILTIN_MANIFESTS),
    )
    parser.add_argument("--seeds", default=SEEDS)
    args = parser.parse_args()

    available = []
    for name in args.datasets:
        raw = data_root() / BUILTIN_MANIFESTS[name].path
        if name == "synthetic" or raw.exists():
            available.append(name)
        else:
            print(f"skipping {name}: {raw} not found (see README for sources)")
    if not available:
        print("no datasets available; nothing to do", file=sys.stderr)
        return 2

    for name in available:
        base = ["--dataset", name, "--out", args.out]
        print(f"\n=== {name}: ingest ===")
        if (code := cli(["ingest", *base])) != 0:
            return code
        print(f"\n=== {name}: train {args.seeds} ===")
        if (code := cli(["train", *base, "--seeds", args.seeds])) != 0:
            return code
        run_dir = sorted(pathlib.Path(args.out).glob(f"train-{name}-*"))[-1]
        print(f"\n=== {name}: evaluate ===")
        if (code := cli(["evaluate", *base, "--checkpoints", str(run_dir)])) != 0:
            return code
        print(f"\n=== {name}: ablate ===")
        if (code := cli(["ablate", *base, "--seeds", args.seeds])) != 0:
            return code
        print(f"\n=== {name}: analyze ===")
        if (code := cli(["analyze", *base, "--samples", "100"])) != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
