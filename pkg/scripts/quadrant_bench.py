#!/usr/bin/env python3
"""Quadrant segmentation benchmark.

Builds a four-quadrant grayscale test image (intensities 1, 0, 0.75, 0.25),
segments it, and reports cluster count, intensity means, output gray levels,
and wall time.  Optionally writes the image and its segmentation.
"""

import argparse
import sys
import time

import numpy as np

import bcclust as b
from bcclust.imageseg import GrayImage, segment, threshold, write_image


def quadrant_image(side):
    half = side // 2
    g = np.zeros((side, side))
    g[:half, :half] = 1.0
    g[:half, half:] = 0.0
    g[half:, :half] = 0.75
    g[half:, half:] = 0.25
    return GrayImage(side, side, g.ravel())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--side", type=int, default=64)
    ap.add_argument("--eps1", type=float, default=0.5)
    ap.add_argument("--eps2", type=float, default=0.3)
    ap.add_argument("--threshold", type=float, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default=None,
                    help="write input.pgm / segmented.pgm (/ binary.pgm) here")
    args = ap.parse_args(argv)

    img = quadrant_image(args.side)
    spec = b.InteractionSpec(eps1=args.eps1, eps2=args.eps2,
                             sigma_mode="stochastic")
    t0 = time.perf_counter()
    sr = segment(img, spec, seed=args.seed)
    wall = time.perf_counter() - t0

    levels = sorted(set(np.floor(sr.output.intensities * 255 + 0.5).astype(int)))
    print(f"side={args.side} clusters={len(sr.cluster_intensity)} "
          f"means={sorted(round(m, 6) for m in sr.cluster_intensity)} "
          f"levels={levels} wall={wall:.1f}s")

    if args.out_dir:
        import pathlib
        out = pathlib.Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_image(img, out / "input.pgm", "P5")
        write_image(sr.output, out / "segmented.pgm", "P5")
        if args.threshold is not None:
            write_image(threshold(sr, args.threshold), out / "binary.pgm", "P5")
    return 0


if __name__ == "__main__":
    sys.exit(main())
