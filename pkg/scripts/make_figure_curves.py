#!/usr/bin/env python3
"""Produce the band-comparison CSV (local vs worst-case-global) for the peak
density, the data behind a width-comparison figure.  Plotting is external;
this only writes CSV.
"""

import argparse

from locband.cli import main as cli_main


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2 ** 14)
    ap.add_argument("--density", default="peak")
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--out", default="curves.csv")
    args = ap.parse_args()
    rc = cli_main([
        "curves",
        "--n", str(args.n),
        "--density", args.density,
        "--seed", str(args.seed),
        "--alpha", str(args.alpha),
        "--out", args.out,
    ])
    raise SystemExit(rc)


if __name__ == "__main__":
    main()
