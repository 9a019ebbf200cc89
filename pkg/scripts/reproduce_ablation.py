#!/usr/bin/env python3
"""Run the 24-cell ablation sweep and write runs.csv / frontier.csv /
radar.csv / summary.json.

Default factor levels: grid size {4, 8, 16} x width {1.0, 1.5} x
ReLU {on, off} x prune ratio {0, 0.25}.  Pass --config to override any
level from a key=value file, --subset to shorten training, and --workers
to fan cells out over processes.

Usage:
    python3 scripts/reproduce_ablation.py --data data/mnist --out results \
        [--subset 10000] [--workers 8] [--config sweep.cfg]
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ckanbench.data import load_mnist_dir, subset_dataset  # noqa: E402
from ckanbench.sweep import (  # noqa: E402
    default_sweep_config,
    parse_sweep_config,
    run_sweep,
    validate_sweep_config,
)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", required=True, help="directory with IDX files")
    parser.add_argument("--out", required=True, help="report directory")
    parser.add_argument("--config", default=None, help="key=value overrides file")
    parser.add_argument("--subset", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    cfg = parse_sweep_config(args.config) if args.config else default_sweep_config()
    if args.subset is not None:
        cfg.subset = args.subset
    if args.seed is not None:
        cfg.seed = args.seed
    validate_sweep_config(cfg)

    train = load_mnist_dir(args.data, "train")
    val = load_mnist_dir(args.data, "test")
    if cfg.subset is not None:
        train = subset_dataset(train, cfg.subset, seed=cfg.seed)

    results = run_sweep(cfg, train, val, args.out, workers=args.workers,
                        verbose=True)
    n_failed = sum(1 for r in results if r.status != "ok")
    print(f"cells {len(results)} failed {n_failed}; reports in {args.out}")
    return 3 if n_failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
