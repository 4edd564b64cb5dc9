"""Curvature of the torus along a meridian, three ways, against the closed form.

    python scripts/torus_curvature.py --R 2 --r 1 --steps 13
"""

import argparse
import math

import numpy as np

from infogeom import surfaces


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--R", type=float, default=2.0)
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=13)
    ap.add_argument("--numeric", action="store_true", help="use finite-difference partials")
    args = ap.parse_args()

    s = surfaces.torus(args.R, args.r)
    if args.numeric:
        s = surfaces.numeric(s)
    print(f"{'theta':>8} {'K shape-op':>13} {'K sectional':>13} {'K intrinsic':>13} {'closed form':>13}  G^1_12       G^2_11")
    for v in np.linspace(-math.pi, math.pi, args.steps):
        g = surfaces.christoffel(s, 0.0, v).gamma
        print(
            f"{v:8.4f} {surfaces.gaussian_curvature(s, 0.0, v):13.9f} {surfaces.sectional_curvature(s, 0.0, v):13.9f} "
            f"{surfaces.intrinsic_curvature(s, 0.0, v):13.9f} {surfaces.torus_gaussian_curvature(args.R, args.r, v):13.9f}"
            f"  {g[0, 0, 1]:+.6f}  {g[1, 0, 0]:+.6f}"
        )


if __name__ == "__main__":
    main()
