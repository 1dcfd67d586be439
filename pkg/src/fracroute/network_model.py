"""MPLS network model: routers, links, service classes, channels and reservations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional

from .traffic_gen import TraceSeries

LER = "LER"
LSR = "LSR"
MAX_CLASSES = 8
DEFAULT_MAX_PATHS = 8

NodeId = Hashable
LinkId = Hashable


class InfeasibleChannelError(ValueError):
    """No admissible path exists within the hop limit."""


class ChannelStateError(RuntimeError):
    """Release of an unknown or already released channel, or duplicate admission."""


@dataclass(frozen=True)
class Node:
    id: NodeId
    role: str
    service_rate: float
    buffer_size: Optional[float] = None  # None: resolved from the service classes


@dataclass(frozen=True)
class Link:
    id: LinkId
    src: NodeId
    dst: NodeId
    capacity: float
    cost: float


@dataclass(frozen=True)
class ServiceClass:
    id: int
    max_delay: float
    max_loss: float
    priority: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.id < MAX_CLASSES:
            raise ValueError(f"class id must lie in 0..{MAX_CLASSES - 1}")
        if self.max_delay <= 0:
            raise ValueError("max_delay must be positive")
        if not 0 < self.max_loss < 1:
            raise ValueError("max_loss must lie in (0, 1)")
        if self.priority is None:
            object.__setattr__(self, "priority", self.id)


@dataclass(frozen=True)
class Path:
    channel: Hashable
    index: int
    links: tuple
    nodes: tuple
    cost: float

    @property
    def hops(self) -> int:
        return len(self.links)

    @property
    def key(self) -> tuple:
        return (self.channel, self.index)


@dataclass(frozen=True)
class TrafficChannel:
    id: Hashable
    src: NodeId
    dst: NodeId
    class_id: int
    demand: float
    hop_limit: int
    trace: TraceSeries
    start: int = 0
    release: Optional[int] = None

    def intensity(self, slot: int) -> float:
        """Offered intensity at ``slot``; the trace repeats cyclically from ``start``."""
        values = self.trace.values
        return float(values[(slot - self.start) % values.size])


@dataclass(frozen=True)
class ReleaseEvent:
    channel: Hashable
    admitted_at: int
    released_at: int
    paths: tuple = ()


@dataclass
class Topology:
    """Directed router graph.  Construction never raises; see ``validate_topology``."""

    nodes: list
    links: list

    def __post_init__(self):
        self.nodes = list(self.nodes)
        self.links = list(self.links)
        self.node_by_id = {n.id: n for n in self.nodes}
        self.link_by_id = {l.id: l for l in self.links}
        self.out_links = {n.id: [] for n in self.nodes}
        for link in self.links:
            self.out_links.setdefault(link.src, []).append(link)
        for links in self.out_links.values():
            links.sort(key=lambda l: _id_key(l.id))

    @property
    def n_nodes(self) -> int:
        return len(self.node_by_id)

    @property
    def n_links(self) -> int:
        return len(self.link_by_id)

    def role(self, node_id) -> Optional[str]:
        node = self.node_by_id.get(node_id)
        return node.role if node else None

    def edge_routers(self) -> list:
        return [n.id for n in self.nodes if n.role == LER]


def _id_key(i):
    # ints before strings, each compared natively
    return (isinstance(i, str), i)


def _seq_key(ids):
    return tuple(_id_key(i) for i in ids)


def validate_topology(topology: Topology) -> list[str]:
    """List every structural violation; an empty list means the topology is valid."""
    problems = []
    roles = {}
    for node in topology.nodes:
        roles.setdefault(node.id, set()).add(node.role)
    for nid, rs in roles.items():
        unknown = rs - {LER, LSR}
        if unknown:
            problems.append(f"partition: node {nid!r} has unknown role(s) {sorted(unknown)}")
        if {LER, LSR} <= rs:
            problems.append(f"partition: node {nid!r} is both LER and LSR")
    for node in topology.nodes:
        if not node.service_rate > 0:
            problems.append(f"node {node.id!r}: service_rate must be positive")
        if node.buffer_size is not None and not node.buffer_size > 0:
            problems.append(f"node {node.id!r}: buffer_size must be positive")
    seen_links = set()
    for link in topology.links:
        if link.id in seen_links:
            problems.append(f"link {link.id!r}: duplicate id")
        seen_links.add(link.id)
        for end in (link.src, link.dst):
            if end not in roles:
                problems.append(f"dangling link {link.id!r}: unknown node {end!r}")
        if link.src == link.dst:
            problems.append(f"link {link.id!r}: self-loop at {link.src!r}")
        if not link.capacity > 0:
            problems.append(f"link {link.id!r}: capacity must be positive")
        if not link.cost > 0:
            problems.append(f"link {link.id!r}: cost must be positive")
    n_ler = sum(1 for rs in roles.values() if rs == {LER})
    if n_ler < 2:
        problems.append(f"need at least 2 LER nodes, found {n_ler}")
    return problems


def enumerate_admissible_paths(topology: Topology, src, dst, hop_limit: int,
                               max_paths: int = DEFAULT_MAX_PATHS,
                               link_costs: Optional[dict] = None,
                               channel=None) -> list[Path]:
    """Simple directed paths src -> dst with at most ``hop_limit`` links.

    The ``max_paths`` cheapest are kept, ties broken by fewer hops and then by
    the link-id sequence.
    """
    if hop_limit < 1:
        raise ValueError("hop_limit must be >= 1")
    for end in (src, dst):
        if topology.role(end) != LER:
            raise ValueError(f"path endpoint {end!r} is not an LER")
    if link_costs is None:
        link_costs = {l.id: l.cost for l in topology.links}

    found = []
    stack = [(src, (), (src,))]
    while stack:
        node, links, nodes = stack.pop()
        if node == dst:
            found.append((links, nodes))
            continue
        if len(links) == hop_limit:
            continue
        for link in topology.out_links.get(node, ()):
            if link.dst in nodes:
                continue
            stack.append((link.dst, links + (link.id,), nodes + (link.dst,)))
    if not found:
        raise InfeasibleChannelError(
            f"no path {src!r} -> {dst!r} within {hop_limit} hop(s)")
    scored = [(math.fsum(link_costs[i] for i in links), len(links), _seq_key(links), links, nodes)
              for links, nodes in found]
    scored.sort(key=lambda s: s[:3])
    return [Path(channel, i, links, nodes, cost)
            for i, (cost, _, _, links, nodes) in enumerate(scored[:max_paths])]


def check_path(topology: Topology, path: Path, src, dst, hop_limit: int) -> list[str]:
    """Re-validate a stored path against its channel's constraints."""
    problems = []
    if not path.links:
        return ["empty path"]
    links = [topology.link_by_id.get(i) for i in path.links]
    if any(l is None for l in links):
        return ["unknown link id on path"]
    if links[0].src != src or links[-1].dst != dst:
        problems.append("path endpoints do not match channel")
    if any(a.dst != b.src for a, b in zip(links, links[1:])):
        problems.append("path is not contiguous")
    nodes = [links[0].src] + [l.dst for l in links]
    if len(set(nodes)) != len(nodes):
        problems.append("path repeats a node")
    if len(links) > hop_limit:
        problems.append("path exceeds hop limit")
    return problems


@dataclass
class ChannelRecord:
    channel: TrafficChannel
    paths: list
    admitted_at: int
    released_at: Optional[int] = None
    rates: dict = field(default_factory=dict)  # path index -> reserved rate

    @property
    def active(self) -> bool:
        return self.released_at is None


@dataclass
class NetworkState:
    """Admitted channels and per-link bandwidth reservations."""

    topology: Topology
    max_paths: int = DEFAULT_MAX_PATHS
    slot: int = 0
    records: dict = field(default_factory=dict)

    def active_records(self) -> list[ChannelRecord]:
        return [r for r in self.records.values() if r.active]

    def reserved(self, link_id) -> float:
        return math.fsum(rate for r in self.active_records()
                         for idx, rate in r.rates.items()
                         if link_id in r.paths[idx].links)

    def residual(self, link_id) -> float:
        return self.topology.link_by_id[link_id].capacity - self.reserved(link_id)

    def residuals(self) -> dict:
        return {l.id: self.residual(l.id) for l in self.topology.links}

    def set_rates(self, rates: dict) -> None:
        """Install reservations, ``rates[channel_id][path_index] = x``."""
        for cid, per_path in rates.items():
            rec = self.records[cid]
            if not rec.active:
                raise ChannelStateError(f"channel {cid!r} is released")
            rec.rates = dict(per_path)


def admit_channel(state: NetworkState, channel: TrafficChannel) -> NetworkState:
    topo = state.topology
    if channel.src == channel.dst:
        raise ValueError(f"channel {channel.id!r}: src equals dst")
    for end in (channel.src, channel.dst):
        if topo.role(end) != LER:
            raise ValueError(f"channel {channel.id!r}: endpoint {end!r} is not an LER")
    if not channel.demand > 0:
        raise ValueError(f"channel {channel.id!r}: demand must be positive")
    if channel.start < state.slot:
        raise ValueError(f"channel {channel.id!r}: start {channel.start} is in the past")
    if channel.id in state.records:
        raise ChannelStateError(f"channel {channel.id!r} already admitted")
    paths = enumerate_admissible_paths(topo, channel.src, channel.dst, channel.hop_limit,
                                       state.max_paths, channel=channel.id)
    state.records[channel.id] = ChannelRecord(channel, paths, channel.start)
    return state


def release_channel(state: NetworkState, event: ReleaseEvent) -> NetworkState:
    rec = state.records.get(event.channel)
    if rec is None:
        raise ChannelStateError(f"unknown channel {event.channel!r}")
    if not rec.active:
        raise ChannelStateError(f"channel {event.channel!r} already released")
    if event.released_at <= rec.admitted_at:
        raise ValueError("release must come after admission")
    rec.released_at = event.released_at
    rec.rates = {}
    return state


def release_event(state: NetworkState, channel_id, slot: int) -> ReleaseEvent:
    rec = state.records[channel_id]
    return ReleaseEvent(channel_id, rec.admitted_at, slot, tuple(rec.paths))


def default_buffer(service_rate: float, classes: Iterable[ServiceClass]) -> float:
    """Per-class buffer default: twice the volume served over the largest delay bound."""
    return 2.0 * service_rate * max(c.max_delay for c in classes)
