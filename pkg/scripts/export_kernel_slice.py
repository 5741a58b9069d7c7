"""Build one fundamental-solution slice and write it as a binary dump with a JSON header."""
from __future__ import annotations

import argparse

from pdolab.fieldio import write_array
from pdolab.grid import SpacetimeGrid
from pdolab.kernel import build_kernel_slice
from pdolab.symbols import Symbol


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out")
    parser.add_argument("--gamma", type=float, default=2.0)
    parser.add_argument("--d", type=int, default=1)
    parser.add_argument("--L", type=float, default=32.0)
    parser.add_argument("--N", type=int, default=1024)
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--s", type=float, default=0.0)
    parser.add_argument("--epsilon", type=float, default=0.0)
    parser.add_argument("--m", type=int, default=0)
    parser.add_argument("--alpha", type=int, nargs="*")
    args = parser.parse_args()
    grid = SpacetimeGrid(args.d, args.L, args.N, max(args.t, 1.0), 1024)
    slc = build_kernel_slice(Symbol.fractional_laplacian(args.gamma), grid, args.t, args.s,
                             args.epsilon, args.m, args.alpha)
    if slc.warning:
        print("warning:", slc.warning)
    write_array(args.out, slc.values, slc.header())
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
