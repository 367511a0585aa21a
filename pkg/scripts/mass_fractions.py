"""Fraction of Gaussian mass inside the box [0.5, 2.5]^d, independent vs perfectly correlated."""

import argparse
import math

from genhull.synthetic import GaussianSpec, gaussian_cloud, interval_mass_fraction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10**5)
    ap.add_argument("--max-d", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    phi = lambda x: 0.5 * (1 + math.erf(x / math.sqrt(2)))  # noqa: E731
    marginal = phi(2.5) - phi(0.5)
    print(f"{'d':>3} {'rho=0':>9} {'analytic':>9} {'rho=1':>9} {'analytic':>9}")
    for d in range(1, args.max_d + 1):
        indep = interval_mass_fraction(gaussian_cloud(GaussianSpec(args.n, d, 0.0, seed=args.seed)), 1.5, 1.0)
        coll = interval_mass_fraction(gaussian_cloud(GaussianSpec(args.n, d, 1.0, seed=args.seed)), 1.5, 1.0)
        print(f"{d:>3} {indep:9.4f} {marginal ** d:9.4f} {coll:9.4f} {marginal:9.4f}")


if __name__ == "__main__":
    main()
