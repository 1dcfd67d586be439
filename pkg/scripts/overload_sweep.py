"""Loss at a single bottleneck (utilisation 0.8, buffer 4 mu) as a function of H."""
import argparse

import numpy as np

from fracroute.network_model import LER, Link, Node, ServiceClass, Topology, TrafficChannel
from fracroute.simulator import Scenario, SimConfig, run
from fracroute.traffic_gen import FgnParams, gen_fgn


def bottleneck_loss(hurst, seed, utilisation=0.8, sv=0.3, buffer_factor=4.0, slots=2 ** 15):
    mu = 100.0
    mean = utilisation * mu
    topo = Topology([Node("A", LER, mu, buffer_factor * mu), Node("B", LER, mu)],
                    [Link(0, "A", "B", 1e6, 1.0)])
    trace = gen_fgn(FgnParams(hurst, mean, sv * mean, slots, seed))
    ch = TrafficChannel("c", "A", "B", 0, mean, 1, trace)
    metrics = run(Scenario(topo, {0: ServiceClass(0, 1e3, 0.05)}, [ch],
                           SimConfig(slots, 1024, slots)))
    return metrics.totals["loss_fraction"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--utilisation", type=float, default=0.8)
    ap.add_argument("--hurst", type=float, nargs="+", default=[0.5, 0.6, 0.7, 0.8, 0.9])
    args = ap.parse_args()
    print(f"{'H':>5} {'mean loss':>12} {'max loss':>12}")
    for h in args.hurst:
        losses = [bottleneck_loss(h, s, args.utilisation) for s in range(args.seeds)]
        print(f"{h:5.2f} {np.mean(losses):12.6f} {np.max(losses):12.6f}")


if __name__ == "__main__":
    main()
