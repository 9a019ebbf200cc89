#!/usr/bin/env python3
"""Generate a procedural digit corpus in the MNIST IDX layout.

The glyphs are block digits with random placement, gain, and pixel noise;
they are not handwritten digits, but they exercise the full IDX pipeline
and let the training, pruning, and sweep code run end to end offline.

Usage:
    python3 scripts/make_synthetic_mnist.py --out data/synth --n-train 4000
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ckanbench.data import load_mnist_dir, write_synthetic_mnist  # noqa: E402


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data/synth")
    parser.add_argument("--n-train", type=int, default=4000)
    parser.add_argument("--n-test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    write_synthetic_mnist(args.out, n_train=args.n_train, n_test=args.n_test,
                          seed=args.seed)
    train = load_mnist_dir(args.out, "train")
    test = load_mnist_dir(args.out, "test")
    print(f"wrote {args.out}: train {train.inputs.shape}, test {test.inputs.shape}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
