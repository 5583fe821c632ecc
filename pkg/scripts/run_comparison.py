#!/usr/bin/env python3
"""Train and evaluate every feature family / window size combination on one
repository+corpus pair and print the Top-1 micro F1 table.

All twelve configurations share the same train/test mention partition, so
the numbers are directly comparable.
"""

import argparse
import csv
import sys
import time
from pathlib import Path

from weaklink.classifier import Hyperparams
from weaklink.corpus import load_corpus
from weaklink.evaluation import compare_features
from weaklink.features import FAMILIES, WINDOW_SIZES
from weaklink.repository import load_repository


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repo", type=Path, required=True)
    parser.add_argument("--corpus", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--ratio", type=float, default=0.8)
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--eta0", type=float, default=0.1)
    parser.add_argument("--max-epochs", type=int, default=30)
    parser.add_argument("--csv", type=Path, default=None,
                        help="also write the table to this CSV file")
    args = parser.parse_args()

    repo = load_repository(args.repo)
    corpus = load_corpus(args.corpus)
    hyper = Hyperparams(c=args.c, eta0=args.eta0, max_epochs=args.max_epochs,
                        tolerance=1e-5, seed=args.seed)

    start = time.perf_counter()
    rows = compare_features(repo, corpus, seed=args.seed, ratio=args.ratio,
                            hyper=hyper)
    elapsed = time.perf_counter() - start

    by_config = {(r.family, r.k): r.avg_f1 for r in rows}
    header = "family    " + "".join(f"K={k}     " for k in WINDOW_SIZES)
    print(header.rstrip())
    for family in FAMILIES:
        cells = "".join(f"{by_config[(family, k)]:<8.4f}" for k in WINDOW_SIZES)
        print(f"{family:<10}{cells}".rstrip())
    print(f"# {len(rows)} configurations in {elapsed:.1f} s", file=sys.stderr)

    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["feature", "k", "avg_f1"])
            for row in rows:
                writer.writerow([row.family, row.k, f"{row.avg_f1:.17g}"])
        print(f"wrote {args.csv}", file=sys.stderr)


if __name__ == "__main__":
    main()
