#!/usr/bin/env python3
"""Print the embedding-feasibility arithmetic tables.

Ball-complement certificates for k = 2..12, the covering-certificate verdict
grid over (m, d) at N = 1..2, and the plane-grid stage inequalities.
"""

import pathlib
import sys
from math import gcd

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from liouville_lab import divisor_arith as da


def main():
    print("=== ball complement -> cylinder Z4(2/k): minimal integer A ===")
    print(f"{'k':>3} {'A':>3} {'source (area,g,b)':>20} {'target (area,g)':>17}")
    for k in range(2, 13):
        rep = da.feasibility_baby(k)
        print(f"{k:>3} {rep.numbers['A']:>3} "
              f"{str(rep.numbers['source (area, genus, boundary)']):>20} "
              f"{str(rep.numbers['target (area, genus)']):>17}")

    print()
    print("=== covering certificate for E(1/d, d+1/N): verdicts ===")
    for N in (1, 2):
        print(f"N = {N}: rows m = 1..8, cols d = 1..8 "
              "(o feasible, x infeasible, - not coprime)")
        for m in range(1, 9):
            row = []
            for d in range(1, 9):
                if gcd(d, N) != 1:
                    row.append("-")
                else:
                    row.append("o" if da.feasibility_ellipsoid(m, d, N).feasible
                                else "x")
            print("   m=%d: %s" % (m, " ".join(row)))
    print("note: (m, m, 1) fails the genus inequality by exactly m-1; see the")
    print("ellipsoid report tables for the margins")

    print()
    print("=== plane-grid stage inequalities ===")
    for N in range(1, 11):
        rep = da.feasibility_Remb(N)
        print(f"N={N:>2}: margins {rep.numbers['margins']}"
              f" -> {'ok' if rep.feasible else 'FAIL'}")


if __name__ == "__main__":
    main()
