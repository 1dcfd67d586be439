"""Scenario files: topology, service classes, channels and run settings in JSON."""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from .fractal_estim import EstimatorConfig
from .network_model import (LER, LSR, Link, Node, ServiceClass, Topology, TrafficChannel,
                            validate_topology)
from .simulator import MODES, Scenario, SimConfig
from .traffic_gen import (CascadeParams, FgnParams, OnOffParams, TraceSeries, gen_cascade,
                          gen_fgn, gen_onoff, read_trace)

_num = {"type": "number"}
_id = {"type": ["string", "integer"]}

SCHEMA = {
    "type": "object",
    "required": ["nodes", "links", "classes", "channels", "simulation"],
    "properties": {
        "nodes": {"type": "array", "minItems": 2, "items": {
            "type": "object",
            "required": ["id", "role", "service_rate"],
            "properties": {
                "id": _id,
                "role": {"enum": [LER, LSR]},
                "service_rate": {"type": "number", "exclusiveMinimum": 0},
                "buffer_size": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        }},
        "links": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "from", "to", "capacity", "cost"],
            "properties": {
                "id": _id, "from": _id, "to": _id,
                "capacity": {"type": "number", "exclusiveMinimum": 0},
                "cost": {"type": "number", "exclusiveMinimum": 0},
                "directed": {"type": "boolean"},
            },
            "additionalProperties": False,
        }},
        "classes": {"type": "array", "minItems": 1, "maxItems": 8, "items": {
            "type": "object",
            "required": ["id", "max_delay", "max_loss"],
            "properties": {
                "id": {"type": "integer", "minimum": 0, "maximum": 7},
                "max_delay": {"type": "number", "exclusiveMinimum": 0},
                "max_loss": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "priority": {"type": "integer"},
            },
            "additionalProperties": False,
        }},
        "channels": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "src", "dst", "class", "demand", "hop_limit", "traffic"],
            "properties": {
                "id": _id, "src": _id, "dst": _id,
                "class": {"type": "integer"},
                "demand": {"type": "number", "exclusiveMinimum": 0},
                "hop_limit": {"type": "integer", "minimum": 1},
                "start": {"type": "integer", "minimum": 0},
                "release": {"type": ["integer", "null"], "minimum": 1},
                "traffic": {"type": "object"},
            },
            "additionalProperties": False,
        }},
        "simulation": {
            "type": "object",
            "required": ["total_slots"],
            "properties": {
                "total_slots": {"type": "integer", "minimum": 1},
                "estimation_window": {"type": "integer", "minimum": 64},
                "update_interval": {"type": "integer", "minimum": 64},
                "seed": {"type": "integer", "minimum": 0},
                "mode": {"enum": list(MODES)},
                "max_paths": {"type": "integer", "minimum": 1},
                "c0": {"type": "number", "exclusiveMinimum": 0},
                "idle_link_policy": {"enum": ["fallback", "hold"]},
                "estimator": {"type": "object"},
            },
            "additionalProperties": False,
        },
    },
}


class ScenarioError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def channel_seed(sim_seed: int, index: int) -> int:
    """Per-channel generator seed derived from the run seed."""
    return int(np.random.SeedSequence([sim_seed, index]).generate_state(1)[0])


def build_trace(spec: dict, n_slots: int, seed: int, base_dir: Path, where: str) -> TraceSeries:
    spec = dict(spec)
    if "trace_file" in spec:
        return read_trace(base_dir / spec["trace_file"])
    kind = spec.pop("generator", None)
    spec.setdefault("seed", seed)
    slot_width = spec.pop("slot_width", 1.0)
    try:
        if kind == "constant":
            return TraceSeries(np.full(max(int(spec.get("n", 1)), 1), float(spec["rate"])),
                               slot_width)
        if kind == "fgn":
            spec.setdefault("n", _pow2_at_least(n_slots))
            return gen_fgn(FgnParams(**spec), slot_width)
        if kind == "onoff":
            spec.setdefault("n", n_slots)
            return gen_onoff(OnOffParams(**spec), slot_width)
        if kind == "cascade":
            mean = spec.pop("mean", None)
            if "depth" not in spec:
                spec["depth"] = max(int(np.ceil(np.log2(max(n_slots, 2)))), 1)
            if mean is not None:
                spec["total_mass"] = float(mean) * 2 ** spec["depth"]
            return gen_cascade(CascadeParams(**spec), slot_width)
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError([f"{where}: {exc}"]) from None
    raise ScenarioError([f"{where}.generator: expected one of constant, fgn, onoff, cascade "
                         f"or a trace_file, got {kind!r}"])


def _pow2_at_least(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


def parse_scenario(doc: dict, base_dir=".", mode: str | None = None,
                   seed: int | None = None) -> Scenario:
    base_dir = Path(base_dir)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioError([f"{e.json_path}: {e.message}" for e in errors])

    nodes = [Node(n["id"], n["role"], float(n["service_rate"]), n.get("buffer_size"))
             for n in doc["nodes"]]
    links = []
    for entry in doc["links"]:
        links.append(Link(entry["id"], entry["from"], entry["to"],
                          float(entry["capacity"]), float(entry["cost"])))
        if entry.get("directed", True) is False:
            links[-1] = replace(links[-1], id=f"{entry['id']}+")
            links.append(Link(f"{entry['id']}-", entry["to"], entry["from"],
                              float(entry["capacity"]), float(entry["cost"])))
    topology = Topology(nodes, links)
    problems = [f"$.topology: {p}" for p in validate_topology(topology)]

    classes = {}
    for i, c in enumerate(doc["classes"]):
        if c["id"] in classes:
            problems.append(f"$.classes[{i}].id: duplicate class {c['id']}")
        classes[c["id"]] = ServiceClass(c["id"], float(c["max_delay"]), float(c["max_loss"]),
                                        c.get("priority"))

    sim = dict(doc["simulation"])
    estimator = sim.pop("estimator", {})
    c0 = sim.pop("c0", None)
    if mode is not None:
        sim["mode"] = mode
    if seed is not None:
        sim["seed"] = seed
    try:
        config = SimConfig(estimator=EstimatorConfig(**estimator), **sim)
    except (TypeError, ValueError) as exc:
        problems.append(f"$.simulation: {exc}")
        config = None

    channels = []
    seen = set()
    for i, c in enumerate(doc["channels"]):
        where = f"$.channels[{i}]"
        if c["id"] in seen:
            problems.append(f"{where}.id: duplicate channel {c['id']!r}")
        seen.add(c["id"])
        if c["class"] not in classes:
            problems.append(f"{where}.class: unknown class {c['class']}")
        for end in ("src", "dst"):
            if topology.role(c[end]) != LER:
                problems.append(f"{where}.{end}: {c[end]!r} is not an LER node")
        if c["src"] == c["dst"]:
            problems.append(f"{where}: src and dst must differ")
        if config is None:
            continue
        try:
            trace = build_trace(c["traffic"], config.total_slots,
                                channel_seed(config.seed, i), base_dir, f"{where}.traffic")
        except ScenarioError as exc:
            problems.extend(exc.problems)
            continue
        except (OSError, ValueError) as exc:
            problems.append(f"{where}.traffic: {exc}")
            continue
        channels.append(TrafficChannel(c["id"], c["src"], c["dst"], c["class"],
                                       float(c["demand"]), int(c["hop_limit"]), trace,
                                       int(c.get("start", 0)), c.get("release")))
    if problems:
        raise ScenarioError(problems)
    return Scenario(topology, classes, channels, config, c0)


def load_scenario(path, mode: str | None = None, seed: int | None = None) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from None
    return parse_scenario(doc, path.parent, mode=mode, seed=seed)
