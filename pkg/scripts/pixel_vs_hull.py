"""Pixel versus lattice-hull approximations of the unit disk.

Prints the mean perimeter ratios per lattice scale and the strict
convergence probe of both sequences on a common fine frame.
"""
import argparse
import math

import numpy as np

from fpgeo.metrics import strict_convergence_probe
from fpgeo.models.lattice import approximation_grids, hull_approximation, pixel_approximation
from fpgeo.perimeter import tv_perimeter
from fpgeo.rng import derive_seed
from fpgeo.shapes import Ball, Box


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", default="8,16,32,64,128,256", help="inverse lattice scales")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--h", type=float, default=1 / 512, help="spacing of the probe frame")
    args = ap.parse_args()

    disk = Ball((0.0, 0.0), 1.0)
    per = 2 * math.pi
    ts = [1 / int(v) for v in args.t.split(",")]
    print(f"{'t':>10} {'pixel P/2pi':>12} {'hull P/2pi':>12}")
    for i, t in enumerate(ts):
        seeds = [derive_seed(args.seed, i, r) for r in range(args.reps)]
        pix = np.mean([tv_perimeter(pixel_approximation(disk, t, s)) for s in seeds]) / per
        hull = np.mean([hull_approximation(disk, t, s).perimeter for s in seeds]) / per
        print(f"{t:10.6f} {pix:12.5f} {hull:12.5f}")
    print(f"4/pi = {4 / math.pi:.5f}")

    window = Box((-1.1, -1.1), (1.1, 1.1))
    probe_ts = [t for t in ts if t >= 4 * args.h]
    for kind in ("hull", "pixel"):
        grids, frame = approximation_grids(disk, probe_ts, kind, args.seed, args.h, window)
        table = strict_convergence_probe(grids, frame, labels=probe_ts)
        print(f"\n{kind}: {table.verdict}")
        for rec in table.to_records():
            print(f"  t={rec['label']:.6f}  l1={rec['l1']:.4f}  gap={rec['variation_gap']:.4f}")


if __name__ == "__main__":
    main()
