"""Gaussian Fisher information by three estimators, plus the Poincare comparison.

    python scripts/fisher_report.py --n 100000 --seed 1
"""

import argparse

import numpy as np

from infogeom import infogeo


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    args = ap.parse_args()

    fam = infogeo.GaussianFamily()
    np.set_printoptions(precision=5, suppress=True)
    for i, s in enumerate(args.sigmas):
        theta = np.array([0.0, s])
        print(f"sigma = {s}")
        print("  analytic  ", infogeo.fim_analytic_gaussian(s).entries.ravel())
        samples = fam.sample(theta, args.n, args.seed + i)
        print("  empirical ", infogeo.fim_empirical(fam, theta, samples).entries.ravel())
        print("  KL-Hessian", infogeo.fim_from_kl_hessian(fam, theta).entries.ravel())
    print("\nPoincare comparison (u = mu / sqrt 2)")
    for e in infogeo.poincare_comparison(args.sigmas):
        print(f"  sigma {e.sigma:5.2f}: pulled-back diag {np.diag(e.pulled_back)}, Poincare diag {np.diag(e.poincare)}, ratio {e.ratio:.6f}")


if __name__ == "__main__":
    main()
