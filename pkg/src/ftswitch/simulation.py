"""Wires engine, traffic, faults, controller and metrics into one deterministic run."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .engine import Engine, EventKind
from .failover import Controller, ControllerConfig, NodeStatus, classify_node_status
from .faults import (
    OUTAGE_KINDS,
    FaultInjector,
    FaultSpec,
    LiveNetwork,
    fault_links,
    random_faults,
)
from .metrics import MetricsCollector, MetricsReport
from .scenario import Scenario
from .topology import Path, Topology
from .traffic import Packet, TrafficConfig, TrafficManager


@dataclass
class RunResult:
    scenario: Scenario
    report: MetricsReport
    records: list[dict]
    routes_before: dict[str, Path | None]
    routes_after: dict[str, Path | None]
    topology: Topology
    faults: list[FaultSpec]

    @property
    def statuses(self) -> dict[str, NodeStatus]:
        return classify_node_status(self.topology, self.routes_before, self.routes_after)

    def event_log(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records)

    def controller_states(self) -> list[str]:
        return [r["to"] for r in self.records if r["type"] == "state"]


class Simulation:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        cfg = scenario.config
        self.config = cfg
        self.engine = Engine(trace=False)
        self.rng = random.Random(cfg.seed)
        self.records: list[dict] = []
        self.metrics = MetricsCollector(scenario.name, cfg.seed, cfg.duration_ms)

        topology = scenario.topology()
        self.network = LiveNetwork(topology)
        self.faults = list(scenario.faults)
        rf = scenario.random_faults
        if rf is not None:
            end = rf.end if rf.end is not None else cfg.duration_ms
            drawn = random_faults(topology, self.rng, rf.rate_per_s, rf.start, end, rf.kinds, rf.restore_after)
            self.faults = sorted(self.faults + drawn, key=lambda s: s.at)

        self.controller = Controller(
            self.engine,
            topology,
            ControllerConfig(
                miss_threshold=cfg.miss_threshold,
                controller_proc_delay=cfg.controller_proc_delay_ms,
                per_flow_commit_delay=cfg.per_flow_commit_delay_ms,
            ),
            log=self._log,
        )
        self.traffic = TrafficManager(
            self.engine,
            self.network,
            self.controller.route_of,
            self.rng,
            TrafficConfig(cfg.per_hop_latency_ms, cfg.probe_interval_ms, cfg.probe_timeout_ms),
            on_packet=self._on_packet,
            on_probe=self.controller.observe_probe,
        )
        self.injector = FaultInjector(self.engine, self.network, on_apply=self._on_fault)

    def _log(self, record: dict) -> None:
        self.records.append(record)
        self.metrics.record(record)

    def _on_packet(self, packet: Packet) -> None:
        t = packet.finished_at if packet.finished_at is not None else self.engine.now
        self._log({
            "t": t,
            "type": "packet",
            "flow": packet.flow,
            "seq": packet.seq,
            "created_at": packet.created_at,
            "outcome": packet.outcome.value,
            "reason": packet.reason.value if packet.reason is not None else None,
        })

    def _on_fault(self, fault_id: str, spec: FaultSpec, now: int) -> None:
        record = {
            "t": now,
            "type": "fault",
            "fault_id": fault_id,
            "kind": spec.kind.value,
            "target": spec.target if isinstance(spec.target, str) else list(spec.target),
        }
        if spec.kind in OUTAGE_KINDS:
            topo = self.network.topology
            record["links"] = [list(k) for k in fault_links(topo, spec)]
            record["affected"] = [
                fid
                for fid, path in self.controller.routes.snapshot().items()
                if path is not None and _uses(path, spec)
            ]
        self._log(record)

    def run(self) -> RunResult:
        # Faults go on the queue first so they precede same-instant probes and actions.
        self.injector.schedule_faults(self.faults)
        self.controller.install(sorted(self.scenario.flows, key=lambda f: f.id))
        routes_before = self.controller.routes.snapshot()
        self.traffic.start_probes(self.network.topology.links)
        for flow in self.scenario.flows:
            self.traffic.start_flow(flow)
        duration = self.config.duration_ms
        self.engine.schedule(EventKind.RUN_END, duration)
        self.engine.run_until(duration)
        self.traffic.flush()
        self._log({"t": duration, "type": "run_end"})
        return RunResult(
            self.scenario,
            self.metrics.report(),
            self.records,
            routes_before,
            self.controller.routes.snapshot(),
            self.network.topology,
            self.faults,
        )


def _uses(path: Path, spec: FaultSpec) -> bool:
    if spec.is_link:
        return spec.link in path.links()
    return spec.target in path.nodes


def run_scenario(scenario: Scenario) -> RunResult:
    return Simulation(scenario).run()
