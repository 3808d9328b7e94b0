"""Single vs double selection in the one-control model over a range of beta_g.

    python scripts/p1_demo.py --n 100 --reps 2000
"""

import argparse

import numpy as np

from postdouble.montecarlo import p1_ttest_demo


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--beta-m", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    threshold = np.sqrt(np.log(args.n) / args.n)
    print(f"n {args.n}, beta_m {args.beta_m}, reps {args.reps}; sqrt(log n / n) = {threshold:.3f}")
    print(f"{'beta_g':>8}{'single cov':>12}{'double cov':>12}{'single bias':>13}{'double bias':>13}")
    for mult in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
        res = p1_ttest_demo(mult * threshold, args.beta_m, args.n, args.reps, args.seed)
        s, d = res["single"], res["double"]
        print(f"{mult * threshold:>8.3f}{s.coverage_95:>12.3f}{d.coverage_95:>12.3f}"
              f"{s.mean_bias:>13.4f}{d.mean_bias:>13.4f}")


if __name__ == "__main__":
    main()
