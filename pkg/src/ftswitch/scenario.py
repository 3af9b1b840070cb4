"""Scenario files: JSON parsing, validation and serialization."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from importlib import resources
from typing import Any

from .faults import FaultKind, FaultSpec, validate_fault
from .topology import NodeKind, Topology, TopologyError, build_topology, link_key
from .traffic import Flow


class ScenarioError(Exception):
    pass


class ScenarioSyntaxError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class Config:
    probe_interval_ms: int = 25
    probe_timeout_ms: int = 10
    miss_threshold: int = 2
    per_hop_latency_ms: int = 1
    controller_proc_delay_ms: int = 5
    per_flow_commit_delay_ms: int = 2
    duration_ms: int = 10_000
    seed: int = 0


# keys that may be zero; everything else must be strictly positive
_NON_NEGATIVE = {"controller_proc_delay_ms", "per_flow_commit_delay_ms", "seed"}


@dataclass(frozen=True)
class RandomFaults:
    rate_per_s: float
    kinds: tuple[str, ...] = ("link_down",)
    start: int = 0
    end: int | None = None
    restore_after: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    nodes: tuple[tuple[str, str], ...]
    links: tuple[tuple[str, str, float], ...]
    flows: tuple[Flow, ...] = ()
    faults: tuple[FaultSpec, ...] = ()
    config: Config = field(default_factory=Config)
    random_faults: RandomFaults | None = None

    def topology(self) -> Topology:
        return build_topology(self.nodes, self.links)

    def with_overrides(self, seed: int | None = None, duration_ms: int | None = None) -> "Scenario":
        config = self.config
        if seed is not None:
            config = replace(config, seed=seed)
        if duration_ms is not None:
            config = replace(config, duration_ms=duration_ms)
        return replace(self, config=config)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return (isinstance(v, (int, float))) and not isinstance(v, bool)


def _as_fraction(v: int | float) -> Fraction:
    return Fraction(v) if isinstance(v, int) else Fraction(str(v))


class _Validator:
    def __init__(self):
        self.errors: list[str] = []

    def err(self, where: str, msg: str) -> None:
        self.errors.append(f"{where}: {msg}")

    def list_of_objects(self, doc: dict, key: str, required: bool = True) -> list[dict]:
        if key not in doc:
            if required:
                self.err(key, "missing")
            return []
        value = doc[key]
        if not isinstance(value, list):
            self.err(key, "must be a list")
            return []
        out = []
        for i, item in enumerate(value):
            if isinstance(item, dict):
                out.append(item)
            else:
                self.err(f"{key}[{i}]", "must be an object")
                out.append({})
        return out


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioSyntaxError` for malformed JSON and
    :class:`ScenarioValidationError` carrying every problem found.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioValidationError(["(root): must be a JSON object"])

    v = _Validator()
    allowed = {"name", "nodes", "links", "flows", "faults", "config", "random_faults"}
    for key in sorted(set(doc) - allowed):
        v.err(key, "unknown top-level key")

    name = doc.get("name", "unnamed")
    if not isinstance(name, str) or not name:
        v.err("name", "must be a non-empty string")

    # config first: flow end times default to the run duration
    config = Config()
    raw_config = doc.get("config", {})
    if not isinstance(raw_config, dict):
        v.err("config", "must be an object")
        raw_config = {}
    known = {f.name for f in fields(Config)}
    overrides = {}
    for key, value in raw_config.items():
        where = f"config.{key}"
        if key not in known:
            v.err(where, "unknown config key")
        elif not _is_int(value):
            v.err(where, "must be an integer")
        elif value < 0 or (value == 0 and key not in _NON_NEGATIVE):
            v.err(where, f"must be {'non-negative' if key in _NON_NEGATIVE else 'positive'}")
        else:
            overrides[key] = value
    config = replace(config, **overrides)

    nodes: list[tuple[str, str]] = []
    node_ids: set[str] = set()
    kinds = {k.value for k in NodeKind}
    for i, item in enumerate(v.list_of_objects(doc, "nodes")):
        where = f"nodes[{i}]"
        node_id, kind = item.get("id"), item.get("kind")
        if not isinstance(node_id, str) or not node_id:
            v.err(f"{where}.id", "must be a non-empty string")
            continue
        if node_id in node_ids:
            v.err(f"{where}.id", f"duplicate node id {node_id!r}")
            continue
        if kind not in kinds:
            v.err(f"{where}.kind", f"must be one of {sorted(kinds)}, got {kind!r}")
            continue
        node_ids.add(node_id)
        nodes.append((node_id, kind))

    links: list[tuple[str, str, float]] = []
    seen_links: set[tuple[str, str]] = set()
    for i, item in enumerate(v.list_of_objects(doc, "links")):
        where = f"links[{i}]"
        a, b, weight = item.get("a"), item.get("b"), item.get("weight", 1)
        ok = True
        for end_key, end in (("a", a), ("b", b)):
            if end not in node_ids:
                v.err(f"{where}.{end_key}", f"unknown node {end!r}")
                ok = False
        if not _is_number(weight) or not weight > 0:
            v.err(f"{where}.weight", f"must be a positive number, got {weight!r}")
            ok = False
        if ok and a == b:
            v.err(where, f"self-loop on {a}")
            ok = False
        if ok and link_key(a, b) in seen_links:
            v.err(where, f"duplicate link {a}-{b}")
            ok = False
        if ok:
            seen_links.add(link_key(a, b))
            links.append((a, b, weight))

    flows: list[Flow] = []
    flow_ids: set[str] = set()
    for i, item in enumerate(v.list_of_objects(doc, "flows", required=False)):
        where = f"flows[{i}]"
        fid = item.get("id")
        src, dst = item.get("src"), item.get("dst")
        rate = item.get("rate", 1)
        start = item.get("start", 0)
        end = item.get("end", config.duration_ms)
        label = item.get("label", "udp")
        n_before = len(v.errors)
        if not isinstance(fid, str) or not fid:
            v.err(f"{where}.id", "must be a non-empty string")
        elif fid in flow_ids:
            v.err(f"{where}.id", f"duplicate flow id {fid!r}")
        for key, end_node in (("src", src), ("dst", dst)):
            if end_node not in node_ids:
                v.err(f"{where}.{key}", f"unknown node {end_node!r}")
        if src == dst and src is not None:
            v.err(where, f"src and dst are both {src!r}")
        if not _is_number(rate) or not rate > 0:
            v.err(f"{where}.rate", f"must be a positive number, got {rate!r}")
        if not _is_int(start) or start < 0:
            v.err(f"{where}.start", f"must be a non-negative integer, got {start!r}")
        if not _is_int(end):
            v.err(f"{where}.end", f"must be an integer, got {end!r}")
        elif _is_int(start) and end <= start:
            v.err(f"{where}.end", f"must be after start ({start}), got {end}")
        if not isinstance(label, str):
            v.err(f"{where}.label", "must be a string")
        if len(v.errors) == n_before:
            flow_ids.add(fid)
            flows.append(Flow(fid, src, dst, _as_fraction(rate), start, end, label))

    topo = None
    if not v.errors:
        try:
            topo = build_topology(nodes, links)
        except TopologyError as exc:
            v.err("links", str(exc))

    faults: list[FaultSpec] = []
    fault_kinds = {k.value for k in FaultKind}
    for i, item in enumerate(v.list_of_objects(doc, "faults", required=False)):
        where = f"faults[{i}]"
        kind, target, at = item.get("kind"), item.get("target"), item.get("at")
        if kind not in fault_kinds:
            v.err(f"{where}.kind", f"must be one of {sorted(fault_kinds)}, got {kind!r}")
            continue
        if isinstance(target, list) and len(target) == 2 and all(isinstance(t, str) for t in target):
            target = (target[0], target[1])
        elif not isinstance(target, str):
            v.err(f"{where}.target", "must be a node id or a [a, b] link pair")
            continue
        if not _is_int(at):
            v.err(f"{where}.at", f"must be an integer, got {at!r}")
            continue
        params = {}
        for key, check in (("p_drop", _is_number), ("extra_delay", _is_int), ("duration", _is_int)):
            if key in item:
                if not check(item[key]):
                    v.err(f"{where}.{key}", f"bad value {item[key]!r}")
                else:
                    params[key] = item[key]
        spec = FaultSpec(FaultKind(kind), target, at, **params)
        if topo is not None:
            for problem in validate_fault(spec, topo):
                v.err(where, problem)
        faults.append(spec)

    random_faults = None
    if "random_faults" in doc:
        raw = doc["random_faults"]
        try:
            random_faults = RandomFaults(**raw)
            if not random_faults.rate_per_s > 0:
                v.err("random_faults.rate_per_s", "must be positive")
            for kind in random_faults.kinds:
                if kind not in fault_kinds or kind == "restore":
                    v.err("random_faults.kinds", f"bad kind {kind!r}")
            random_faults = replace(random_faults, kinds=tuple(random_faults.kinds))
        except TypeError as exc:
            v.err("random_faults", str(exc))

    if v.errors:
        raise ScenarioValidationError(v.errors)
    return Scenario(name, tuple(nodes), tuple(links), tuple(flows), tuple(faults), config, random_faults)


def _num(x: Fraction | float) -> int | float:
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def scenario_to_dict(scenario: Scenario) -> dict:
    doc: dict[str, Any] = {
        "name": scenario.name,
        "nodes": [{"id": n, "kind": k} for n, k in scenario.nodes],
        "links": [{"a": a, "b": b, "weight": w} for a, b, w in scenario.links],
        "flows": [
            {
                "id": f.id, "src": f.src, "dst": f.dst, "rate": _num(f.rate),
                "start": f.start, "end": f.end, "label": f.label,
            }
            for f in scenario.flows
        ],
        "faults": [],
        "config": asdict(scenario.config),
    }
    for spec in scenario.faults:
        item: dict[str, Any] = {
            "kind": spec.kind.value,
            "target": spec.target if isinstance(spec.target, str) else list(spec.target),
            "at": spec.at,
        }
        if spec.kind is FaultKind.CONGESTION:
            item.update(p_drop=spec.p_drop, extra_delay=spec.extra_delay, duration=spec.duration)
        doc["faults"].append(item)
    if scenario.random_faults is not None:
        rf = asdict(scenario.random_faults)
        rf["kinds"] = list(rf["kinds"])
        doc["random_faults"] = rf
    return doc


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


BUNDLED = ("testcase1", "testcase2", "testcase3", "s2-failure")


def bundled_text(name: str) -> str:
    return resources.files("ftswitch").joinpath("scenarios").joinpath(f"{name}.json").read_text(encoding="utf-8")


def load_bundled(name: str) -> Scenario:
    return parse_scenario(bundled_text(name))
