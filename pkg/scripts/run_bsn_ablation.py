#!/usr/bin/env python3
"""Batch score normalization on/off for both AUC losses, paired by seed on
the noisy imbalanced toy. Deltas are reported, not asserted: the benefit is
configuration-dependent."""

import argparse

from aucmax.experiments import (
    DataSetting,
    ScenarioConfig,
    ablate_bsn,
    auc_margin,
    auc_square,
)
from aucmax.optimizer import PesgConfig, SgdConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="out/bsn")
    args = ap.parse_args()

    pesg_kw = dict(eta0=0.5, weight_decay=1e-4, decay_epochs=(30, 45), decay_factor=3.0)
    cfg = ScenarioConfig(
        name="bsn",
        data=DataSetting(mean_pos=(1.0, 1.0), mean_neg=(-1.0, -1.0),
                         n_pos=500, n_neg=500, imratio=0.01, noise_rate=0.05),
        model_kind="mlp", d_hidden=8,
        losses=(auc_square(pesg=PesgConfig(project_alpha=False, **pesg_kw)),
                auc_margin(m=0.3, pesg=PesgConfig(**pesg_kw))),
        epochs=60, batch_size=32, seeds=tuple(range(args.seeds)), outputs=args.out,
        warm_start=SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4,
                             epochs=40, batch_size=32),
    )
    summary = ablate_bsn(cfg)
    stats = summary.stats()
    print("mean final test AUC over seeds:")
    for label, (mean, std) in sorted(stats.items()):
        print(f"  {label:<18} {mean:.4f} +/- {std:.4f}")
    for base in ("auc_square", "auc_margin"):
        delta = stats[f"{base}_bsn"][0] - stats[f"{base}_raw"][0]
        print(f"BSN delta for {base}: {delta:+.4f}")


if __name__ == "__main__":
    main()
