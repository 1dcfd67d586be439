"""Path costs, fractal cost recalculation and greedy min-cost flow assignment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .fractal_estim import HURST_MAX, HURST_MIN, FractalEstimate
from .network_model import ChannelRecord, Topology, _seq_key

H_INDEPENDENT = 0.5
H_CRITICAL = 0.9
SV_LOW = 1.0
SV_HIGH = 3.0
FLOW_TOL = 1e-9


class UnknownLinkError(KeyError):
    pass


class MissingEstimateError(KeyError):
    pass


@dataclass(frozen=True)
class CostTable:
    """Link and path costs.

    ``path_costs`` hold the announced path costs; ``base_path_costs`` are the
    plain sums of base link costs that every recalculation starts from.
    """

    base_link_costs: Mapping
    link_costs: Mapping
    base_path_costs: Mapping
    path_costs: Mapping
    c0: float
    epoch: int = 0


@dataclass
class FlowAssignment:
    rates: dict = field(default_factory=dict)     # channel id -> {path index: rate}
    blocked: dict = field(default_factory=dict)   # channel id -> unassigned remainder
    link_loads: dict = field(default_factory=dict)

    def objective(self, costs: CostTable) -> float:
        return math.fsum(costs.path_costs[(cid, idx)] * x
                         for cid, per_path in self.rates.items()
                         for idx, x in per_path.items())

    def assigned(self, channel_id) -> float:
        return math.fsum(self.rates.get(channel_id, {}).values())


def path_cost(links: Sequence, link_costs: Mapping) -> float:
    """Sum of link costs along ``links`` (a Path or a sequence of link ids)."""
    links = getattr(links, "links", links)
    if not links:
        raise ValueError("a path has at least one link")
    try:
        return math.fsum(link_costs[m] for m in links)
    except KeyError as exc:
        raise UnknownLinkError(f"link {exc.args[0]!r} not in cost table") from None


def cost_branch(hurst: float, sv: float) -> str:
    """Which of the four recalculation cases applies: 'a', 'b', 'c' or 'd'."""
    if hurst <= H_INDEPENDENT:
        return "a"
    if hurst >= H_CRITICAL or sv >= SV_HIGH:
        return "d"
    if sv <= SV_LOW:
        return "b"
    return "c"


def recalc_cost(cost: float, hurst: float, sv: float, c0: float) -> float:
    if not cost > 0:
        raise ValueError("path cost must be positive")
    if not c0 > 0:
        raise ValueError("C_0 must be positive")
    if not HURST_MIN <= hurst <= HURST_MAX:
        raise ValueError(f"hurst must lie in [{HURST_MIN}, {HURST_MAX}]")
    if not sv >= 0:
        raise ValueError("S_v must be nonnegative")
    branch = cost_branch(hurst, sv)
    if branch == "a":
        return cost
    if branch == "b":
        return cost + (hurst - H_INDEPENDENT) * c0
    if branch == "c":
        return cost + (hurst - H_INDEPENDENT) * (sv - SV_LOW) * c0
    return cost + c0


def build_cost_table(topology: Topology, records: Sequence[ChannelRecord],
                     c0: float | None = None) -> CostTable:
    """Base cost table; ``c0`` defaults to the mean base path cost."""
    link_costs = {l.id: float(l.cost) for l in topology.links}
    base_paths = {p.key: path_cost(p.links, link_costs)
                  for rec in records for p in rec.paths}
    if c0 is None:
        c0 = math.fsum(base_paths.values()) / len(base_paths) if base_paths else 1.0
    return CostTable(link_costs, dict(link_costs), base_paths, dict(base_paths), float(c0))


def with_paths(costs: CostTable, records: Sequence[ChannelRecord]) -> CostTable:
    """Add base entries for paths not yet in the table (newly admitted channels)."""
    base = dict(costs.base_path_costs)
    announced = dict(costs.path_costs)
    for rec in records:
        for p in rec.paths:
            if p.key not in base:
                base[p.key] = announced[p.key] = path_cost(p.links, costs.base_link_costs)
    return replace(costs, base_path_costs=base, path_costs=announced)


def path_estimate(links: Sequence, link_estimates: Mapping) -> FractalEstimate:
    """The estimate of the path's most persistent link (largest H, then largest S_v)."""
    return max((link_estimates[m] for m in getattr(links, "links", links)),
               key=lambda e: (e.hurst, e.coeff_variation))


def recalc_all(costs: CostTable, estimates: Mapping) -> CostTable:
    """Recompute every path cost from its base cost; returns the announced table."""
    new = {}
    for key, base in costs.base_path_costs.items():
        if key not in estimates:
            raise MissingEstimateError(f"no estimate for path {key!r}")
        est = estimates[key]
        new[key] = recalc_cost(base, est.hurst, est.coeff_variation, costs.c0)
    return replace(costs, path_costs=new, epoch=costs.epoch + 1)


def assign_flows(records: Sequence[ChannelRecord], costs: CostTable,
                 topology: Topology) -> FlowAssignment:
    """Greedy cheapest-path-first assignment with splitting.

    Channels go in order of decreasing demand (then id); each fills its
    cheapest admissible path up to the residual link capacity and spills the
    rest onto the next cheapest.  Whatever does not fit is recorded as blocked.
    """
    residual = {l.id: float(l.capacity) for l in topology.links}
    out = FlowAssignment()
    order = sorted(records, key=lambda r: (-r.channel.demand, _seq_key([r.channel.id])))
    for rec in order:
        cid = rec.channel.id
        remaining = float(rec.channel.demand)
        per_path = {}
        paths = sorted(rec.paths, key=lambda p: (costs.path_costs[p.key], p.hops,
                                                 _seq_key(p.links)))
        for p in paths:
            if remaining <= FLOW_TOL * rec.channel.demand:
                break
            room = min(residual[m] for m in p.links)
            x = min(remaining, room)
            if x <= 0:
                continue
            per_path[p.index] = x
            for m in p.links:
                residual[m] -= x
            remaining -= x
        out.rates[cid] = per_path
        if remaining > FLOW_TOL * rec.channel.demand:
            out.blocked[cid] = remaining
    for l in topology.links:
        out.link_loads[l.id] = math.fsum(
            x for rec in records for idx, x in out.rates[rec.channel.id].items()
            if l.id in rec.paths[idx].links)
    return out
