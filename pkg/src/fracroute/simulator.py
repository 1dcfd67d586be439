"""Slotted fluid simulation of an MPLS network with fractal cost updates.

Each slot: fluid sent in the previous slot arrives at the next hop (or is
delivered at the egress LER), channels inject their current intensity split
over their assigned paths, every node accepts arrivals up to its per-class
buffer and drops the overflow, then serves up to ``service_rate`` units in
strict class priority (FIFO within a class).  Served fluid spends one slot on
the outgoing link.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import routing
from .fractal_estim import DEGENERATE, EstimatorConfig, estimate
from .network_model import (NetworkState, ServiceClass, Topology, TrafficChannel,
                            _id_key, admit_channel, default_buffer, release_channel,
                            release_event, InfeasibleChannelError)

SCHEMA_VERSION = 1
MODES = ("static_costs", "fractal_costs")
IDLE_POLICIES = ("fallback", "hold")


@dataclass(frozen=True)
class SimConfig:
    total_slots: int
    estimation_window: int = 1024
    update_interval: int = 1024
    seed: int = 0
    mode: str = "static_costs"
    max_paths: int = 8
    idle_link_policy: str = "fallback"
    estimator: EstimatorConfig = EstimatorConfig()

    def __post_init__(self):
        if self.total_slots < 1:
            raise ValueError("total_slots must be positive")
        if self.estimation_window < 64:
            raise ValueError("estimation_window must be >= 64")
        if self.update_interval < self.estimation_window:
            raise ValueError("update_interval must be >= estimation_window")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.idle_link_policy not in IDLE_POLICIES:
            raise ValueError(f"idle_link_policy must be one of {IDLE_POLICIES}")


@dataclass
class Scenario:
    topology: Topology
    classes: dict
    channels: list
    config: SimConfig
    c0: Optional[float] = None


@dataclass
class NodeQueueState:
    arrived: float = 0.0
    served: float = 0.0
    dropped: float = 0.0
    backlog: float = 0.0
    waited: float = 0.0  # backlog-slots

    def snapshot(self) -> tuple:
        return (self.arrived, self.served, self.dropped, self.waited)


@dataclass
class ChannelStats:
    injected: float = 0.0
    delivered: float = 0.0
    dropped: float = 0.0
    blocked: float = 0.0
    delay_volume: float = 0.0  # delivered units x slots in network


@dataclass
class SimMetrics:
    mode: str
    total_slots: int
    node_class: dict
    channels: dict
    epochs: list
    totals: dict
    rejected: dict = field(default_factory=dict)
    timeseries: Optional[list] = None
    max_conservation_error: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return _round({
            "schema_version": self.schema_version,
            "mode": self.mode,
            "total_slots": self.total_slots,
            "totals": self.totals,
            "node_class": self.node_class,
            "channels": self.channels,
            "epochs": self.epochs,
            "rejected": self.rejected,
            "max_conservation_error": self.max_conservation_error,
        })


def _round(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _key(*parts) -> str:
    return "/".join(str(p) for p in parts)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


class Simulation:
    """Single-run simulator; call :meth:`step` per slot or :meth:`run`."""

    def __init__(self, scenario: Scenario, record_timeseries: bool = False):
        self.scenario = scenario
        self.cfg = cfg = scenario.config
        self.topology = topo = scenario.topology
        self.classes = dict(scenario.classes)
        self.class_order = sorted(self.classes.values(), key=lambda c: (c.priority, c.id))
        self.state = NetworkState(topo, max_paths=cfg.max_paths)
        self.record_timeseries = record_timeseries
        self.timeseries = [] if record_timeseries else None

        self.rate = {n.id: float(n.service_rate) for n in topo.nodes}
        self.buffer = {
            n.id: float(n.buffer_size) if n.buffer_size is not None
            else default_buffer(n.service_rate, self.classes.values())
            for n in topo.nodes}
        self.queues = {(n.id, c.id): deque() for n in topo.nodes for c in self.class_order}
        self.qstate = {k: NodeQueueState() for k in self.queues}
        self.link_index = {l.id: i for i, l in enumerate(topo.links)}
        self.carried = np.zeros((len(topo.links), cfg.total_slots))

        self.pending = sorted(scenario.channels, key=lambda c: (c.start, _id_key(c.id)))
        self.channel_stats = {}
        self.rejected = {}
        self.costs = routing.build_cost_table(topo, [], scenario.c0)
        self.assignment = routing.FlowAssignment()
        self.inflight = []
        self.t = 0
        self.injected = self.delivered = self.dropped = 0.0
        self.max_conservation_error = 0.0

        self.epochs = []
        self.link_estimates = {l.id: DEGENERATE for l in topo.links}
        self._window_start = 0
        self._window_nodes = {k: q.snapshot() for k, q in self.qstate.items()}
        self._window_paths = defaultdict(float)
        self._path_volume = defaultdict(float)

    # -- control plane ---------------------------------------------------

    def _admit_and_release(self) -> bool:
        changed = False
        t = self.t
        for rec in self.state.active_records():
            rel = rec.channel.release
            if rel is not None and rel <= t:
                release_channel(self.state, release_event(self.state, rec.channel.id, t))
                changed = True
        while self.pending and self.pending[0].start <= t:
            ch = self.pending.pop(0)
            if ch.release is not None and ch.release <= ch.start:
                self.rejected[ch.id] = "release not after start"
                continue
            try:
                admit_channel(self.state, ch)
            except (InfeasibleChannelError, ValueError) as exc:
                self.rejected[ch.id] = str(exc)
                continue
            self.channel_stats[ch.id] = ChannelStats()
            changed = True
        return changed

    def _reassign(self) -> None:
        records = self.state.active_records()
        self.costs = routing.with_paths(self.costs, records)
        self.assignment = routing.assign_flows(records, self.costs, self.topology)
        self.state.set_rates(self.assignment.rates)

    def link_window_estimates(self) -> dict:
        """Fractal estimates of each link's carried traffic over the trailing window."""
        tau = self.cfg.estimation_window
        out = {}
        for link in self.topology.links:
            if self.t < tau:
                out[link.id] = DEGENERATE
                continue
            window = self.carried[self.link_index[link.id], self.t - tau:self.t]
            est = estimate(window, self.cfg.estimator)
            if est.degenerate and self.cfg.idle_link_policy == "hold" and not window.any():
                est = self.link_estimates[link.id]
            out[link.id] = est
        return out

    def _update_costs(self) -> None:
        self.link_estimates = self.link_window_estimates()
        records = self.state.active_records()
        self.costs = routing.with_paths(self.costs, records)
        estimates = {key: routing.path_estimate(self._path_links(key), self.link_estimates)
                     for key in self.costs.base_path_costs}
        self.costs = routing.recalc_all(self.costs, estimates)
        self.assignment = routing.assign_flows(records, self.costs, self.topology)
        self.state.set_rates(self.assignment.rates)

    def _path_links(self, key):
        cid, idx = key
        return self.state.records[cid].paths[idx].links

    # -- data plane ------------------------------------------------------

    def step(self) -> None:
        t = self.t
        if t >= self.cfg.total_slots:
            raise RuntimeError("simulation already finished")
        epoch = t > 0 and t % self.cfg.update_interval == 0
        if epoch:
            self._close_window()
        changed = self._admit_and_release()
        if epoch and self.cfg.mode == "fractal_costs":
            self._update_costs()
        elif changed:
            self._reassign()

        records = self.state.records
        arrivals = defaultdict(list)
        for chunk in self.inflight:
            amount, cid, idx, hop, t_in = chunk
            path = records[cid].paths[idx]
            hop += 1
            if hop == path.hops:
                self.delivered += amount
                st = self.channel_stats[cid]
                st.delivered += amount
                st.delay_volume += amount * (t - t_in)
            else:
                chunk[3] = hop
                arrivals[(path.nodes[hop], records[cid].channel.class_id)].append(chunk)
        self.inflight = []

        for rec in self.state.active_records():
            ch = rec.channel
            lam = ch.intensity(t)
            if lam <= 0:
                continue
            st = self.channel_stats[ch.id]
            self.injected += lam
            st.injected += lam
            for idx, x in rec.rates.items():
                amount = lam * x / ch.demand
                if amount > 0:
                    arrivals[(ch.src, ch.class_id)].append([amount, ch.id, idx, 0, t])
                    self._window_paths[(ch.id, idx)] += amount
                    self._path_volume[(ch.id, idx)] += amount
            blocked = lam * self.assignment.blocked.get(ch.id, 0.0) / ch.demand
            if blocked > 0:
                # unroutable share is lost at the ingress LER
                q = self.qstate[(ch.src, ch.class_id)]
                q.arrived += blocked
                q.dropped += blocked
                self.dropped += blocked
                st.dropped += blocked
                st.blocked += blocked

        for node in self.topology.nodes:
            self._serve_node(node.id, arrivals, t)

        self.t += 1
        if self.t == self.cfg.total_slots:
            self._close_window()

    def _serve_node(self, node, arrivals, t) -> None:
        buffer = self.buffer[node]
        served_now = {}
        dropped_now = {}
        for cls in self.class_order:
            key = (node, cls.id)
            incoming = arrivals.get(key)
            q = self.qstate[key]
            dropped_now[cls.id] = 0.0
            if not incoming:
                continue
            total = math.fsum(c[0] for c in incoming)
            q.arrived += total
            space = buffer - q.backlog
            queue = self.queues[key]
            if total <= space:
                queue.extend(incoming)
                q.backlog += total
                continue
            keep = max(space, 0.0) / total
            accepted = 0.0
            for chunk in incoming:
                lost = chunk[0] * (1.0 - keep)
                chunk[0] -= lost
                self.channel_stats[chunk[1]].dropped += lost
                if chunk[0] > 0:
                    queue.append(chunk)
                    accepted += chunk[0]
            q.dropped += total - accepted
            dropped_now[cls.id] = total - accepted
            self.dropped += total - accepted
            q.backlog += accepted

        capacity = self.rate[node]
        records = self.state.records
        for cls in self.class_order:
            key = (node, cls.id)
            q = self.qstate[key]
            queue = self.queues[key]
            served = 0.0
            while queue and capacity > 0:
                chunk = queue[0]
                if chunk[0] <= capacity:
                    queue.popleft()
                    out = chunk
                else:
                    out = [capacity, chunk[1], chunk[2], chunk[3], chunk[4]]
                    chunk[0] -= capacity
                capacity -= out[0]
                served += out[0]
                link = records[out[1]].paths[out[2]].links[out[3]]
                self.carried[self.link_index[link], t] += out[0]
                self.inflight.append(out)
            q.served += served
            q.backlog = q.backlog - served if queue else 0.0
            q.waited += q.backlog
            served_now[cls.id] = served
        if self.timeseries is not None:
            for cls in self.class_order:
                q = self.qstate[(node, cls.id)]
                self.timeseries.append(
                    (t, node, cls.id, q.backlog, dropped_now[cls.id], served_now[cls.id]))

    # -- accounting ------------------------------------------------------

    def in_flight(self) -> float:
        return math.fsum(c[0] for c in self.inflight)

    def backlog(self) -> float:
        return math.fsum(q.backlog for q in self.qstate.values())

    def conservation_error(self) -> float:
        """|injected - (delivered + dropped + in flight + backlog)|, relative to injected."""
        rhs = math.fsum([self.delivered, self.dropped, self.in_flight(), self.backlog()])
        err = abs(self.injected - rhs) / max(self.injected, 1.0)
        self.max_conservation_error = max(self.max_conservation_error, err)
        return err

    def _node_metrics(self, key, base=None) -> dict:
        q = self.qstate[key]
        arrived, served, dropped, waited = q.snapshot()
        if base is not None:
            arrived, served, dropped, waited = (a - b for a, b in zip(q.snapshot(), base))
        return {"arrived": arrived, "served": served, "dropped": dropped,
                "loss": _ratio(dropped, arrived), "wait": _ratio(waited, served)}

    def _channel_path_metrics(self, cid, node_metrics, used) -> tuple:
        """Worst path-summed (loss, delay) over the channel's paths that carried traffic."""
        rec = self.state.records[cid]
        q = rec.channel.class_id
        paths = [p for p in rec.paths if used.get((cid, p.index), 0.0) > 0] or rec.paths[:1]
        loss = delay = 0.0
        for p in paths:
            nodes = p.nodes[:-1]
            loss = max(loss, math.fsum(node_metrics[(v, q)]["loss"] for v in nodes))
            delay = max(delay, math.fsum(node_metrics[(v, q)]["wait"] for v in nodes) + p.hops)
        if not any(used.get((cid, p.index), 0.0) > 0 for p in rec.paths):
            # nothing routed: only the ingress blocking counts
            loss = node_metrics[(rec.channel.src, q)]["loss"]
        return loss, delay

    def _close_window(self) -> None:
        start, end = self._window_start, self.t
        if end <= start:
            return
        nm = {k: self._node_metrics(k, self._window_nodes[k]) for k in self.qstate}
        channels = {}
        for cid in self.channel_stats:
            rec = self.state.records[cid]
            if rec.admitted_at >= end:
                continue
            if rec.released_at is not None and rec.released_at <= start:
                continue
            loss, delay = self._channel_path_metrics(cid, nm, self._window_paths)
            cls = self.classes[rec.channel.class_id]
            channels[str(cid)] = {"loss": loss, "delay": delay,
                                  "loss_ok": loss <= cls.max_loss,
                                  "delay_ok": delay <= cls.max_delay}
        self.epochs.append({
            "start": start,
            "end": end,
            "path_costs": {_key(*k): v for k, v in sorted(
                self.costs.path_costs.items(), key=lambda kv: (_id_key(kv[0][0]), kv[0][1]))},
            "link_estimates": {str(m): e.as_dict() for m, e in self.link_estimates.items()},
            "rates": {str(cid): {str(i): x for i, x in per.items()}
                      for cid, per in self.assignment.rates.items()},
            "channels": channels,
        })
        self._window_start = end
        self._window_nodes = {k: q.snapshot() for k, q in self.qstate.items()}
        self._window_paths = defaultdict(float)

    def run(self, check_conservation: bool = False) -> SimMetrics:
        while self.t < self.cfg.total_slots:
            self.step()
            if check_conservation:
                self.conservation_error()
        return self.metrics()

    def metrics(self) -> SimMetrics:
        self.conservation_error()
        nm = {k: self._node_metrics(k) for k in self.qstate}
        node_class = {}
        for (v, q), m in nm.items():
            node_class[_key(v, q)] = dict(m, backlog=self.qstate[(v, q)].backlog)
        channels = {}
        for cid, st in self.channel_stats.items():
            rec = self.state.records[cid]
            cls = self.classes[rec.channel.class_id]
            loss, delay = self._channel_path_metrics(cid, nm, self._path_volume)
            channels[str(cid)] = {
                "class": cls.id,
                "src": str(rec.channel.src),
                "dst": str(rec.channel.dst),
                "injected": st.injected,
                "delivered": st.delivered,
                "dropped": st.dropped,
                "blocked": st.blocked,
                "loss_fraction": _ratio(st.dropped, st.injected),
                "measured_delay": _ratio(st.delay_volume, st.delivered),
                "path_loss": loss,
                "path_delay": delay,
                "loss_ok": loss <= cls.max_loss,
                "delay_ok": delay <= cls.max_delay,
                "released": rec.released_at is not None,
            }
        totals = {
            "injected": self.injected,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "in_flight": self.in_flight(),
            "backlog": self.backlog(),
            "loss_fraction": _ratio(self.dropped, self.injected),
            "mean_delay": _ratio(math.fsum(s.delay_volume for s in self.channel_stats.values()),
                                 self.delivered),
        }
        return SimMetrics(self.cfg.mode, self.cfg.total_slots, node_class, channels,
                          list(self.epochs), totals, dict(self.rejected),
                          self.timeseries, self.max_conservation_error)


def run(scenario: Scenario, record_timeseries: bool = False,
        check_conservation: bool = False) -> SimMetrics:
    return Simulation(scenario, record_timeseries).run(check_conservation)


@dataclass
class ComplianceReport:
    channels: dict       # channel id -> {"loss_ok", "delay_ok"} over the whole run
    epochs: list         # per window: channel id -> {"loss_ok", "delay_ok"}
    loss_violations: int
    delay_violations: int

    @property
    def compliant(self) -> bool:
        return self.loss_violations == 0 and self.delay_violations == 0

    def to_dict(self) -> dict:
        return {"compliant": self.compliant, "loss_violations": self.loss_violations,
                "delay_violations": self.delay_violations, "channels": self.channels,
                "epochs": self.epochs}


def check_constraints(metrics: SimMetrics, classes: dict) -> ComplianceReport:
    """Compare path-summed loss and delay with each class's bounds.

    Violations are counted per channel over the whole run and per window.
    """
    def verdict(loss, delay, cls):
        return {"loss_ok": loss <= cls.max_loss, "delay_ok": delay <= cls.max_delay}

    channels = {}
    loss_bad = delay_bad = 0
    for cid, ch in metrics.channels.items():
        v = verdict(ch["path_loss"], ch["path_delay"], classes[ch["class"]])
        channels[cid] = v
        loss_bad += not v["loss_ok"]
        delay_bad += not v["delay_ok"]
    epochs = []
    for ep in metrics.epochs:
        row = {}
        for cid, ch in ep["channels"].items():
            v = verdict(ch["loss"], ch["delay"], classes[metrics.channels[cid]["class"]])
            row[cid] = v
            loss_bad += not v["loss_ok"]
            delay_bad += not v["delay_ok"]
        epochs.append(row)
    return ComplianceReport(channels, epochs, loss_bad, delay_bad)


def compare_modes(scenario: Scenario) -> dict:
    """Run the same scenario with static and fractal costs and report the deltas."""
    from dataclasses import replace

    report = {"schema_version": SCHEMA_VERSION, "modes": {}}
    results = {}
    for mode in MODES:
        sc = replace(scenario, config=replace(scenario.config, mode=mode))
        metrics = run(sc)
        comp = check_constraints(metrics, scenario.classes)
        results[mode] = metrics
        report["modes"][mode] = {
            "loss_fraction": metrics.totals["loss_fraction"],
            "mean_delay": metrics.totals["mean_delay"],
            "loss_violations": comp.loss_violations,
            "delay_violations": comp.delay_violations,
        }
    s, f = report["modes"]["static_costs"], report["modes"]["fractal_costs"]
    report["delta"] = {k: f[k] - s[k] for k in s}
    report["assignment_changed"] = [
        ep_s["end"] for ep_s, ep_f in zip(results["static_costs"].epochs,
                                          results["fractal_costs"].epochs)
        if ep_s["rates"] != ep_f["rates"]]
    report["metrics"] = results
    return report
