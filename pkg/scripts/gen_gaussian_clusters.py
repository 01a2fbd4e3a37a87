#!/usr/bin/env python3
"""Write a synthetic clustered point CSV for pipeline and embedding demos."""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from sketchsum import gaussian_clusters
from sketchsum.formats import write_points_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="clusters.csv")
    ap.add_argument("--points", type=int, default=30_000, help="points per cluster")
    ap.add_argument("--dims", type=int, default=4)
    ap.add_argument("--clusters", type=int, default=3)
    ap.add_argument("--spread", type=float, default=0.04)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    centers = rng.uniform(0.15, 0.85, size=(args.clusters, args.dims))
    pts = gaussian_clusters([args.points] * args.clusters, centers, args.spread, args.seed + 1)
    write_points_csv(pts, args.out, header=True)
    print(f"{pts.shape[0]} points, {args.clusters} clusters -> {Path(args.out).resolve()}")


if __name__ == "__main__":
    main()
