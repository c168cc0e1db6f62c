"""Partial sums of the frequency-gap series for power-law spectra w_n = n^p.

For p > 1 the sums level off; for p = 1 every increment stays near pi^2/3.
"""

import argparse
import csv
import sys

import numpy as np

from flexsteer import gap_series_checkpoints


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--powers", type=float, nargs="+", default=[1.0, 1.5, 2.0, 3.0])
    parser.add_argument("--checkpoints", type=int, nargs="+",
                        default=[10, 50, 100, 200, 400, 800])
    args = parser.parse_args()

    K = max(args.checkpoints)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["p", "K", "partial_sum", "increment"])
    for p in args.powers:
        omegas = np.arange(1, K + 1, dtype=float) ** p
        for k, gs in zip(args.checkpoints, gap_series_checkpoints(omegas, args.checkpoints)):
            writer.writerow([f"{p:g}", k, f"{gs.total:.12g}", f"{gs.increment:.6e}"])


if __name__ == "__main__":
    main()
