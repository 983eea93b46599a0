"""Swiss-cheese sets: perimeter bound and strict distance to the square."""
import argparse
import math

import numpy as np

from fpgeo.models.cheese import strict_distance_to_square, swiss_cheese


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="0.4,0.2,0.1,0.05")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--h", type=float, default=1 / 256)
    args = ap.parse_args()

    eps = [float(e) for e in args.eps.split(",")]
    print(f"{'eps':>6} {'max P/2pi eps':>14} {'d_s mean':>10} {'se':>8}")
    for e in eps:
        worst = max(swiss_cheese(e, seed=s, spacing=1 / 32).perimeter for s in range(100))
        m, se = strict_distance_to_square(e, range(args.reps), spacing=args.h)
        print(f"{e:6.3f} {worst / (2 * math.pi * e):14.4f} {m:10.4f} {se:8.4f}")
    print(f"volume bound pi eps^2 / 3 at eps={eps[-1]}: {np.pi * eps[-1] ** 2 / 3:.5f}")


if __name__ == "__main__":
    main()
