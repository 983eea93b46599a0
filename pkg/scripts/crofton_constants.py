"""Crofton constants under both conventions and Monte-Carlo projection averages."""
import argparse

from fpgeo.crofton import CroftonConvention, crofton_constant, mean_projection_length, \
    projection_average_mc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    self_c, paper_c = CroftonConvention
    print(f"{'(d,j)':>6} {'E|p u|':>10} {'MC':>10} {'self':>10} {'paper':>10} {'ratio':>10}")
    for d, j in ((2, 1), (3, 1), (3, 2)):
        mc = projection_average_mc(d, j, args.n, args.seed)
        cs, cp = crofton_constant(self_c, d, j), crofton_constant(paper_c, d, j)
        print(f"{str((d, j)):>6} {mean_projection_length(d, j):10.6f} {mc.value:10.6f} "
              f"{cs:10.6f} {cp:10.6f} {cs / cp:10.6f}")


if __name__ == "__main__":
    main()
