"""Static vs fractal routing costs on the two-path congestion scenario, over seeds."""
import argparse
from pathlib import Path

import numpy as np

from fracroute.scenario import load_scenario
from fracroute.simulator import compare_modes

DEFAULT = Path(__file__).resolve().parent.parent / "scenarios" / "congestion.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default=str(DEFAULT))
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()
    rows = []
    print(f"{'seed':>4} {'static':>10} {'fractal':>10} {'delay s':>9} {'delay f':>9}")
    for seed in range(args.seeds):
        report = compare_modes(load_scenario(args.scenario, seed=seed))
        s, f = report["modes"]["static_costs"], report["modes"]["fractal_costs"]
        rows.append((s["loss_fraction"], f["loss_fraction"]))
        print(f"{seed:4d} {s['loss_fraction']:10.6f} {f['loss_fraction']:10.6f} "
              f"{s['mean_delay']:9.3f} {f['mean_delay']:9.3f}")
    static, fractal = np.array(rows).T
    print(f"fractal <= static in {(fractal <= static).sum()} of {len(rows)} seeds; "
          f"mean loss {static.mean():.6f} -> {fractal.mean():.6f}")


if __name__ == "__main__":
    main()
