#!/usr/bin/env python3
"""Letter-detection table: mean error and cluster count over an (alpha, eps1) grid.

Prints the per-cell seed-averaged detection error and cluster count; the best
eps1 per noise level is starred.  Mirrors `bcclust shape` but keeps everything
in memory and formats a compact table.
"""

import argparse
import sys

import bcclust as b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--alphas", type=float, nargs="+",
                    default=[0.06, 0.08, 0.10])
    ap.add_argument("--eps1", type=float, nargs="+",
                    default=[0.06, 0.08, 0.10])
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--M", type=int, default=10)
    ap.add_argument("--t-final", type=float, default=50.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", choices=["uniform", "gaussian"],
                    default="uniform")
    args = ap.parse_args(argv)

    pat = b.generate_letter_A(args.n)
    res = b.sweep(pat, args.alphas, args.eps1, args.runs,
                  noise_dist=args.noise, master_seed=args.seed,
                  M=args.M, t_final=args.t_final)

    print(f"{'alpha':>7} {'eps1':>7} {'mean_E':>11} {'mean_n':>8}")
    for s in res.summary:
        star = " *" if s.best else ""
        print(f"{s.alpha:>7.3f} {s.eps1:>7.3f} {s.mean_error:>11.4e} "
              f"{s.mean_clusters:>8.1f}{star}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
