import numpy as np
import pytest

from fracroute.network_model import LER, LSR, Link, Node, ServiceClass, Topology, TrafficChannel
from fracroute.traffic_gen import TraceSeries

_acceptance = {}


def constant_trace(value, n=8):
    return TraceSeries(np.full(n, float(value)))


def line_topology(n_hops=1, rate=100.0, buffer=None, capacity=1000.0):
    """LER -> LSR ... -> LER chain with ``n_hops`` links."""
    names = ["A"] + [f"R{i}" for i in range(1, n_hops)] + ["B"]
    nodes = [Node(v, LER if v in ("A", "B") else LSR, rate, buffer) for v in names]
    links = [Link(i, a, b, capacity, 1.0) for i, (a, b) in enumerate(zip(names, names[1:]))]
    return Topology(nodes, links)


def triangle():
    nodes = [Node("A", LER, 10.0), Node("B", LER, 10.0), Node("C", LSR, 10.0)]
    links = [Link("ab", "A", "B", 10.0, 3.0), Link("ac", "A", "C", 10.0, 1.0),
             Link("cb", "C", "B", 10.0, 1.0)]
    return Topology(nodes, links)


def channel(cid="c", src="A", dst="B", demand=10.0, hop_limit=2, trace=None, q=0, **kw):
    return TrafficChannel(cid, src, dst, q, demand, hop_limit,
                          trace if trace is not None else constant_trace(demand), **kw)


@pytest.fixture
def classes():
    return {0: ServiceClass(0, 10.0, 0.05), 1: ServiceClass(1, 20.0, 0.1)}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _acceptance[value] = (report.outcome.upper(), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, (outcome, duration) in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{outcome:6s} {label}  ({duration:.2f}s)")
