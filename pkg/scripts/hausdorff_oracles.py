"""Compare the three Hausdorff estimates on random polygon pairs.

Prints how often each ordering holds: exact vs direction grid, the grid
resolution bound, and the point lattice against both.
"""
import argparse

import numpy as np

from svset import oracles
from svset.geometry import DirectionGrid, grid_resolution_bound, hausdorff_direction_grid, hausdorff_distance
from svset.verify import random_polygon


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--grid-k", type=int, default=720)
    ap.add_argument("--lattice", type=int, default=41)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    grid = DirectionGrid.uniform(2, args.grid_k)
    stats = {"grid<=exact": 0, "gap<=bound": 0, "lattice<=exact": 0, "lattice<=grid": 0}
    excess = []
    for _ in range(args.pairs):
        P, Q = random_polygon(rng), random_polygon(rng)
        h = hausdorff_distance(P, Q)
        hg = hausdorff_direction_grid(P, Q, grid)
        hp = oracles.point_grid_hausdorff(P.vertices, Q.vertices, n=args.lattice)
        stats["grid<=exact"] += hg <= h + 1e-12
        stats["gap<=bound"] += h - hg <= grid_resolution_bound(P, Q, grid) + 1e-12
        stats["lattice<=exact"] += hp <= h + 1e-12
        stats["lattice<=grid"] += hp <= hg + 1e-12
        excess.append((hp - hg) / h)
    for k, v in stats.items():
        print(f"{k:<16} {v}/{args.pairs}")
    print(f"(lattice - grid)/exact: max {max(excess):.3e}, median {np.median(excess):.3e}")


if __name__ == "__main__":
    main()
