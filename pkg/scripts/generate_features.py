#!/usr/bin/env python3
"""Synthesize a planted-component feature matrix for codec experiments.

Draws ``per-component`` samples around each of ``components`` orthogonal
unit means in ``dims`` dimensions, Gaussian noise at ``scale``.  The
planted count is what stage-1 training should rediscover.

    python scripts/generate_features.py --out features.csv
    python scripts/generate_features.py --out big.f32 --per-component 2000
"""

import argparse
import sys

import numpy as np

from sevq.feature_io import save_features


def make_features(
    components: int, per_component: int, dims: int, scale: float, seed: int
) -> np.ndarray:
    if components > dims:
        raise SystemExit(f"components ({components}) cannot exceed dims ({dims})")
    rng = np.random.default_rng(seed)
    means = np.eye(dims)[:components]
    blocks = [m + scale * rng.standard_normal((per_component, dims)) for m in means]
    return np.vstack(blocks)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="features.csv", help="output path (default: %(default)s)")
    p.add_argument("--components", type=int, default=5, help="planted clusters (default: %(default)s)")
    p.add_argument("--per-component", type=int, default=100, help="rows per cluster (default: %(default)s)")
    p.add_argument("--dims", type=int, default=16, help="feature dimension (default: %(default)s)")
    p.add_argument("--scale", type=float, default=0.05, help="noise scale (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default: %(default)s)")
    p.add_argument("--format", dest="fmt", default=None, choices=["csv", "f32", "raw-f32"], help="override format inferred from the extension")
    args = p.parse_args(argv)

    X = make_features(args.components, args.per_component, args.dims, args.scale, args.seed)
    save_features(X, args.out, args.fmt)
    print(f"wrote {X.shape[0]} x {X.shape[1]} features to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
