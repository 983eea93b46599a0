"""Boolean model of Poisson disks: specific perimeter, area measure, stereology."""
import argparse
import time

from fpgeo.crofton import CroftonConvention
from fpgeo.models.process import FixedBall, FpProcessConfig, boolean_run, boolean_specific_perimeter
from fpgeo.shapes import Box


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--r", type=float, default=0.5)
    ap.add_argument("--side", type=float, default=20.0)
    ap.add_argument("--h", type=float, default=1 / 256)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--n-flats", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grain = FixedBall(args.r)
    cfg = FpProcessConfig(args.gamma, Box((0, 0), (args.side, args.side)), grain, args.seed)
    t0 = time.perf_counter()
    run = boolean_run(cfg, args.h, args.reps, n_bins=16, j=1, n_flats=args.n_flats)
    est, am = run.perimeter(), run.area_measure()
    exact = boolean_specific_perimeter(args.gamma, grain)
    print(f"specific perimeter  {est.value:.5f} +- {est.stderr:.5f}  closed form {exact:.5f}"
          f"  z = {(est.value - exact) / est.stderr:+.2f}")
    print(f"area measure mass   {am.total.value:.5f}")
    print("normal histogram   ", " ".join(f"{p:.4f}" for p in am.histogram.probabilities()))
    for conv in CroftonConvention:
        rep = run.stereology(conv)
        print(f"stereology {conv.value:>15}: ratio {rep.ratio:.4f} +- {rep.ratio_stderr:.4f}")
    print(f"{time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
