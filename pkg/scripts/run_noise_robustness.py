#!/usr/bin/env python3
"""Margin vs square surrogate on the noisy imbalanced toy (1% positives,
5% flipped labels). Both losses resume the same warm-started model per seed."""

import argparse

import numpy as np

from aucmax.experiments import noise_robustness_scenario, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10, help="number of seeds (0..n-1)")
    ap.add_argument("--out", default="out/noise", help="output directory for CSV/SVG")
    args = ap.parse_args()

    cfg = noise_robustness_scenario(seeds=range(args.seeds), outputs=args.out)
    summary = run_scenario(cfg)
    print(summary.as_text())

    by = summary.by_loss()
    square = {c.seed: c.final_test_auc for c in by["auc_square"]}
    margin = {c.seed: c.final_test_auc for c in by["auc_margin"]}
    print(f"\n{'seed':>4} {'auc_square':>11} {'auc_margin':>11} {'delta':>9}")
    deltas = []
    for seed in sorted(square):
        d = margin[seed] - square[seed]
        deltas.append(d)
        print(f"{seed:>4} {square[seed]:>11.4f} {margin[seed]:>11.4f} {d:>+9.4f}")
    print(f"\nmean delta {np.mean(deltas):+.4f}, "
          f"margin wins {sum(d > 0 for d in deltas)}/{len(deltas)} seeds")


if __name__ == "__main__":
    main()
