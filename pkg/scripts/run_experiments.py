#!/usr/bin/env python3
"""Run the comparison experiments and write CSV/SVG reports.

    python3 scripts/run_experiments.py --out results/
    python3 scripts/run_experiments.py --out results/ --only snr fraction
    python3 scripts/run_experiments.py --out results/ --only subsets --mode exhaustive

Median tables are printed to stdout.  A ``--config`` file (key = value, see
README) overrides the synthesis, training and sweep settings.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from bkjump import experiments as ex
from bkjump import io

ALL = ("roc", "snr", "fraction", "subsets", "rank")


def table(rep: ex.ExperimentReport, metric: str = "accuracy") -> str:
    head = f"{rep.sweep_name:>12} " + " ".join(f"{m:>17}" for m in rep.methods)
    rows = [head]
    med = rep.medians(metric)
    for i, v in enumerate(rep.sweep_values):
        rows.append(f"{v!s:>12} " + " ".join(f"{med[m][i]:>17.3f}" for m in rep.methods))
    return "\n".join(rows)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--config", help="key = value run configuration")
    p.add_argument("--only", nargs="+", choices=ALL, default=list(ALL))
    p.add_argument("--mode", choices=("prefix", "exhaustive"), help="feature-subset mode (default from config)")
    args = p.parse_args(argv)

    rc = io.load_config(args.config) if args.config else io.RunConfig()
    cfg, settings = rc.synthesis, rc.settings
    args.out.mkdir(parents=True, exist_ok=True)
    print(f"seeds {list(settings.seeds)}, snr {cfg.snr_db} dB, writing to {args.out}")

    for name in args.only:
        t0 = time.perf_counter()
        if name == "rank":
            order = ex.rank_features(cfg, settings=settings)
            lines = ["rank,feature,median_accuracy"] + [f"{i},f{j},{io.fmt(a)}" for i, (j, a) in enumerate(order, 1)]
            io.atomic_write_text(args.out / "rank.csv", "\n".join(lines) + "\n")
            print("\nfeature ranking (single-feature MLP, median accuracy)")
            print("  " + "  ".join(f"f{j}:{a:.2f}" for j, a in order))
        else:
            if name == "roc":
                rep, metric = ex.experiment_roc_comparison(cfg, settings=settings), "auc"
            elif name == "snr":
                rep, metric = ex.experiment_snr_sweep(cfg, settings=settings), "accuracy"
            elif name == "fraction":
                rep, metric = ex.experiment_fraction_sweep(cfg, settings=settings), "accuracy"
            else:
                rep, metric = ex.experiment_feature_subsets(cfg, args.mode, settings=settings), "accuracy"
            io.write_report(args.out / rep.experiment, rep, metric=metric)
            print(f"\n{rep.experiment} (median {metric})")
            print(table(rep, metric))
        print(f"  [{time.perf_counter() - t0:.0f}s]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
