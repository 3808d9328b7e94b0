"""Coverage and bias of every estimator at one grid point, side by side.

    python scripts/coverage_table.py --design 1 --r2y 0.4 --r2d 0.4 --reps 1000
"""

import argparse
import os

from postdouble.dgp import DesignSpec
from postdouble.lasso import PenaltyConfig
from postdouble.montecarlo import ESTIMATORS, run_cell


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--design", default="1")
    ap.add_argument("--r2y", type=float, default=0.4)
    ap.add_argument("--r2d", type=float, default=0.4)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--c", type=float, default=1.1)
    ap.add_argument("--gamma", type=float, default=0.05)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    spec = DesignSpec(args.design, r2_y=args.r2y, r2_d=args.r2d)
    rows = run_cell(spec, ESTIMATORS, args.reps, args.seed, args.threads, PenaltyConfig(c=args.c, gamma=args.gamma))
    print(f"design {args.design}, R2_y {args.r2y}, R2_d {args.r2d}, {args.reps} reps, "
          f"c {args.c}, gamma {args.gamma}")
    print(f"{'estimator':<11}{'bias':>9}{'rmse':>8}{'cov95':>7}{'ci_len':>8}{'s_hat':>7}{'fail':>6}")
    for r in rows:
        print(f"{r.estimator:<11}{r.mean_bias:>9.4f}{r.rmse:>8.4f}{r.coverage_95:>7.3f}"
              f"{r.mean_ci_length:>8.4f}{r.mean_s_hat:>7.2f}{r.failures:>6d}")


if __name__ == "__main__":
    main()
