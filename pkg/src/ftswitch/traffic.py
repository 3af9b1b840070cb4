"""Packet flows, hop-by-hop forwarding and per-link health probes."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .engine import Engine, EventKind
from .faults import LiveNetwork
from .topology import LinkKey, Path, State, UnknownEndpoint


class Outcome(str, Enum):
    IN_FLIGHT = "in-flight"
    DELIVERED = "delivered"
    LOST = "lost"


class LossReason(str, Enum):
    LINK_DOWN = "link-down"
    NODE_DOWN = "node-down"
    CONGESTION = "congestion"
    NO_ROUTE = "no-route"


@dataclass(frozen=True)
class Flow:
    id: str
    src: str
    dst: str
    rate: Fraction = Fraction(1)  # packets per ms
    start: int = 0
    end: int = 10_000
    label: str = "udp"

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"flow {self.id}: src and dst are both {self.src}")
        if not self.start < self.end:
            raise ValueError(f"flow {self.id}: start {self.start} must be before end {self.end}")
        if self.rate <= 0:
            raise ValueError(f"flow {self.id}: rate must be positive")

    def emission_time(self, k: int) -> int:
        return self.start + math.floor(Fraction(k) / Fraction(self.rate))

    def emission_times(self) -> Iterator[int]:
        k = 0
        while (t := self.emission_time(k)) < self.end:
            yield t
            k += 1


@dataclass
class Packet:
    flow: str
    seq: int
    created_at: int
    path: Path | None
    hop_index: int = 0
    outcome: Outcome = Outcome.IN_FLIGHT
    reason: LossReason | None = None
    finished_at: int | None = None


@dataclass(frozen=True)
class ProbeResult:
    link: LinkKey
    sent_at: int
    ok: bool
    delivered_at: int = field(default=0, compare=False)

    @property
    def outcome(self) -> str:
        return "ok" if self.ok else "missed"


@dataclass(frozen=True)
class TrafficConfig:
    per_hop_latency: int = 1
    probe_interval: int = 25
    probe_timeout: int = 10


class TrafficManager:
    """Drives packets and probes on the engine against the live network.

    ``route_of(flow_id)`` returns the path new packets should take (``None``
    when the flow is unrouted).  Finished packets go to ``on_packet``, probe
    results to ``on_probe``.
    """

    def __init__(
        self,
        engine: Engine,
        network: LiveNetwork,
        route_of: Callable[[str], Path | None],
        rng: random.Random,
        config: TrafficConfig = TrafficConfig(),
        on_packet: Callable[[Packet], None] | None = None,
        on_probe: Callable[[ProbeResult], None] | None = None,
    ):
        self.engine = engine
        self.network = network
        self.route_of = route_of
        self.rng = rng
        self.config = config
        self.on_packet = on_packet or (lambda p: None)
        self.on_probe = on_probe or (lambda r: None)
        self.flows: dict[str, Flow] = {}
        self.in_flight: dict[tuple[str, int], Packet] = {}
        self.sent = 0

    # -- flows ---------------------------------------------------------------

    def start_flow(self, flow: Flow) -> None:
        topo = self.network.topology
        for end in (flow.src, flow.dst):
            if end not in topo.nodes:
                raise UnknownEndpoint(f"flow {flow.id}: unknown endpoint {end!r}")
        self.flows[flow.id] = flow
        self._schedule_emit(flow, 0)

    def _schedule_emit(self, flow: Flow, k: int) -> None:
        t = flow.emission_time(k)
        if t < flow.end:
            self.engine.schedule(EventKind.PACKET_EMIT, t, lambda: self._emit(flow, k))

    def _emit(self, flow: Flow, k: int) -> None:
        self._schedule_emit(flow, k + 1)
        now = self.engine.now
        packet = Packet(flow.id, k, now, self.route_of(flow.id))
        self.sent += 1
        self.in_flight[(flow.id, k)] = packet
        if packet.path is None:
            self._finish(packet, Outcome.LOST, LossReason.NO_ROUTE)
            return
        self.forward(packet, packet.path.nodes[0])

    def forward(self, packet: Packet, at_node: str) -> None:
        """Advance ``packet`` from ``at_node`` one hop, or settle its outcome."""
        topo = self.network.topology
        nodes = packet.path.nodes
        if not topo.is_up(at_node):
            self._finish(packet, Outcome.LOST, LossReason.NODE_DOWN)
            return
        if packet.hop_index == len(nodes) - 1:
            self._finish(packet, Outcome.DELIVERED)
            return
        nxt = nodes[packet.hop_index + 1]
        link = topo.link(at_node, nxt)
        if link.state is State.DOWN:
            self._finish(packet, Outcome.LOST, LossReason.LINK_DOWN)
            return
        if not topo.is_up(nxt):
            self._finish(packet, Outcome.LOST, LossReason.NODE_DOWN)
            return
        delay = self.config.per_hop_latency
        now = self.engine.now
        if link.congestion is not None and link.congestion.active(now):
            if self.rng.random() < link.congestion.p_drop:
                self._finish(packet, Outcome.LOST, LossReason.CONGESTION)
                return
            delay += link.congestion.extra_delay
        self.engine.schedule(EventKind.PACKET_HOP, now + delay, lambda: self._arrive(packet, nxt))

    def _arrive(self, packet: Packet, node: str) -> None:
        packet.hop_index += 1
        self.forward(packet, node)

    def _finish(self, packet: Packet, outcome: Outcome, reason: LossReason | None = None) -> None:
        packet.outcome = outcome
        packet.reason = reason
        packet.finished_at = self.engine.now
        del self.in_flight[(packet.flow, packet.seq)]
        self.on_packet(packet)

    def flush(self) -> list[Packet]:
        """Report packets still travelling when the run stops."""
        remaining = list(self.in_flight.values())
        for packet in remaining:
            self.on_packet(packet)
        return remaining

    # -- probes --------------------------------------------------------------

    def start_probes(self, links: Iterable[LinkKey], first: int = 0) -> None:
        for key in sorted(links):
            self.probe_cycle(key, first)

    def probe_cycle(self, link: LinkKey, first: int = 0) -> None:
        """Send a probe over ``link`` every ``probe_interval`` ms starting at ``first``."""
        self.network.topology.link(*link)
        self.engine.schedule(EventKind.PROBE_SEND, first, lambda: self._probe_send(link))

    def _probe_send(self, key: LinkKey) -> None:
        cfg = self.config
        now = self.engine.now
        topo = self.network.topology
        usable = topo.link_usable(*key)
        rtt = 2 * cfg.per_hop_latency
        dropped = False
        congestion = topo.links[key].congestion
        if usable and congestion is not None and congestion.active(now):
            # one draw per direction, both taken so the draw count is fixed
            out_lost = self.rng.random() < congestion.p_drop
            back_lost = self.rng.random() < congestion.p_drop
            dropped = out_lost or back_lost
            rtt += 2 * congestion.extra_delay
        self.engine.schedule(
            EventKind.PROBE_DEADLINE,
            now + cfg.probe_timeout,
            lambda: self._probe_deadline(key, now, usable and not dropped, rtt),
        )
        self.engine.schedule(EventKind.PROBE_SEND, now + cfg.probe_interval, lambda: self._probe_send(key))

    def _probe_deadline(self, key: LinkKey, sent_at: int, sent_ok: bool, rtt: int) -> None:
        ok = (
            sent_ok
            and rtt <= self.config.probe_timeout
            and not self.network.broke_during(key, sent_at, sent_at + rtt)
        )
        self.on_probe(ProbeResult(key, sent_at, ok, self.engine.now))
