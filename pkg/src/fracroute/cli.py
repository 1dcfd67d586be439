"""Command-line interface: generate, analyze, cost, run, compare."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import routing, simulator
from .fractal_estim import METHODS, EstimatorConfig, estimate
from .scenario import ScenarioError, load_scenario
from .traffic_gen import (CascadeParams, FgnParams, OnOffParams, TraceFormatError,
                          gen_cascade, gen_fgn, gen_onoff, read_trace, write_trace)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_QOS = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _f(x: float) -> str:
    return f"{x:.6f}"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_generate(args) -> int:
    try:
        if args.kind == "fgn":
            trace = gen_fgn(FgnParams(args.hurst, args.mean, args.std, args.n, args.seed))
        elif args.kind == "onoff":
            trace = gen_onoff(OnOffParams(args.sources, args.alpha, args.n, args.min_sojourn,
                                          args.peak, args.seed))
        else:
            trace = gen_cascade(CascadeParams(args.depth, args.p, args.mass, args.seed))
    except ValueError as exc:
        print(f"generate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_trace(trace, args.output)
    v = trace.values
    mean = float(v.mean())
    std = float(v.std())
    sv = std / mean if mean > 0 else 0.0
    print(f"n={v.size} mean={_f(mean)} std={_f(std)} S_v={_f(sv)}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        trace = read_trace(args.trace)
    except (TraceFormatError, OSError) as exc:
        print(f"analyze: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = EstimatorConfig(method=args.method)
    x = trace.values
    step = args.step or args.window
    if x.size < args.window:
        print(f"analyze: warning: trace has {x.size} slots, shorter than window {args.window}",
              file=sys.stderr)
        starts = [0]
    else:
        starts = range(0, x.size - args.window + 1, step)
    for start in starts:
        est = estimate(x[start:start + args.window], cfg)
        rec = {"window_start": start, "H": round(est.hurst, 6),
               "S_v": round(est.coeff_variation, 6), "S": round(est.std, 6),
               "mean": round(est.mean, 6), "degenerate": est.degenerate}
        print(json.dumps(rec))
    return EXIT_OK


def cmd_cost(args) -> int:
    try:
        new = routing.recalc_cost(args.cost, args.hurst, args.sv, args.c0)
    except ValueError as exc:
        print(f"cost: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"branch={routing.cost_branch(args.hurst, args.sv)} C_new={_f(new)}")
    return EXIT_OK


def _load(args, mode=None):
    try:
        return load_scenario(args.scenario, mode=mode, seed=args.seed)
    except ScenarioError as exc:
        for p in exc.problems:
            print(f"{args.scenario}: {p}", file=sys.stderr)
    except OSError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
    return None


def write_timeseries(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "node", "class", "backlog", "dropped", "served"])
        for t, node, q, backlog, dropped, served in rows:
            w.writerow([t, node, q, _f(backlog), _f(dropped), _f(served)])


def cmd_run(args) -> int:
    scenario = _load(args, args.mode)
    if scenario is None:
        return EXIT_INPUT
    metrics = simulator.run(scenario, record_timeseries=True)
    report = simulator.check_constraints(metrics, scenario.classes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = metrics.to_dict()
    summary["compliance"] = simulator._round(report.to_dict())
    (out / "summary.json").write_text(_dump(summary))
    write_timeseries(metrics.timeseries, out / "timeseries.csv")
    t = metrics.totals
    print(f"mode={metrics.mode} loss_fraction={_f(t['loss_fraction'])} "
          f"mean_delay={_f(t['mean_delay'])} loss_violations={report.loss_violations} "
          f"delay_violations={report.delay_violations}")
    return EXIT_OK if report.compliant else EXIT_QOS


def cmd_compare(args) -> int:
    scenario = _load(args)
    if scenario is None:
        return EXIT_INPUT
    report = simulator.compare_modes(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for mode, metrics in report.pop("metrics").items():
        (out / f"{mode}.json").write_text(_dump(metrics.to_dict()))
    (out / "comparison.json").write_text(_dump(simulator._round(report)))
    for mode, row in report["modes"].items():
        print(f"{mode}: loss_fraction={_f(row['loss_fraction'])} "
              f"mean_delay={_f(row['mean_delay'])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracroute", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic trace file")
    g.add_argument("kind", choices=["fgn", "onoff", "cascade"])
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=4096, help="length (fgn, onoff)")
    g.add_argument("--hurst", type=float, default=0.8)
    g.add_argument("--mean", type=float, default=100.0)
    g.add_argument("--std", type=float, default=10.0)
    g.add_argument("--sources", type=int, default=50)
    g.add_argument("--alpha", type=float, default=1.4)
    g.add_argument("--min-sojourn", type=float, default=1.0)
    g.add_argument("--peak", type=float, default=1.0)
    g.add_argument("--depth", type=int, default=12)
    g.add_argument("--p", type=float, default=0.3)
    g.add_argument("--mass", type=float, default=1.0)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="estimate H and S_v over trace windows")
    a.add_argument("trace")
    a.add_argument("--window", type=int, default=4096)
    a.add_argument("--step", type=int, default=None, help="window stride (default: window)")
    a.add_argument("--method", choices=METHODS, default="average_of_both")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("cost", help="evaluate the fractal path-cost formula")
    c.add_argument("--cost", type=float, required=True)
    c.add_argument("--hurst", type=float, required=True)
    c.add_argument("--sv", type=float, required=True)
    c.add_argument("--c0", type=float, required=True)
    c.set_defaults(func=cmd_cost)

    r = sub.add_parser("run", help="simulate a scenario")
    r.add_argument("scenario")
    r.add_argument("--mode", choices=simulator.MODES, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("-o", "--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("compare", help="run static and fractal cost modes side by side")
    m.add_argument("scenario")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("-o", "--out", required=True, help="output directory")
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
