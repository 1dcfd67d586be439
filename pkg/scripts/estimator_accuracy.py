"""Mean Hurst estimates for synthetic fGn, per method, over seeds."""
import argparse

import numpy as np

from fracroute.fractal_estim import EstimatorConfig, estimate_hurst_aggvar, estimate_hurst_rs
from fracroute.traffic_gen import FgnParams, gen_fgn


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--log2n", type=int, default=14)
    args = ap.parse_args()
    plain = EstimatorConfig(aggvar_correction=False)
    print(f"{'H':>4} {'R/S':>8} {'aggvar':>8} {'aggvar (uncorrected)':>21}")
    for h in (0.5, 0.6, 0.7, 0.8, 0.9):
        traces = [gen_fgn(FgnParams(h, 100, 10, 2 ** args.log2n, s)) for s in range(args.seeds)]
        rs = np.mean([estimate_hurst_rs(t) for t in traces])
        av = np.mean([estimate_hurst_aggvar(t) for t in traces])
        av0 = np.mean([estimate_hurst_aggvar(t, plain) for t in traces])
        print(f"{h:4.1f} {rs:8.3f} {av:8.3f} {av0:21.3f}")


if __name__ == "__main__":
    main()
