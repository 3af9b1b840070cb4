"""Scripted and randomly drawn faults, and the live network they act on."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .engine import Engine, EventKind
from .topology import (
    Congestion,
    LinkKey,
    State,
    Topology,
    link_key,
    set_congestion,
    set_element_state,
)


class FaultKind(str, Enum):
    LINK_DOWN = "link_down"
    NODE_DOWN = "node_down"
    CONGESTION = "congestion"
    RESTORE = "restore"


# Kinds that break connectivity and therefore get a recovery record.
OUTAGE_KINDS = (FaultKind.LINK_DOWN, FaultKind.NODE_DOWN)


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    target: str | tuple[str, str]
    at: int
    p_drop: float = 0.0
    extra_delay: int = 0
    duration: int = 0

    @property
    def is_link(self) -> bool:
        return not isinstance(self.target, str)

    @property
    def link(self) -> LinkKey:
        return link_key(*self.target)

    def describe(self) -> str:
        target = self.target if isinstance(self.target, str) else "-".join(self.target)
        return f"{self.kind.value}({target})@{self.at}"


def fault_links(topo: Topology, spec: FaultSpec) -> list[LinkKey]:
    """Links whose probes reveal ``spec``: the link itself, or every link at the node."""
    if spec.is_link:
        return [spec.link]
    return sorted(l.key for l in topo.incident(spec.target))


def validate_fault(spec: FaultSpec, topo: Topology) -> list[str]:
    errors = []
    if spec.at < 0:
        errors.append(f"fault time {spec.at} is negative")
    if spec.is_link:
        a, b = spec.target
        if link_key(a, b) not in topo.links:
            errors.append(f"unknown link {a}-{b}")
        if spec.kind is FaultKind.NODE_DOWN:
            errors.append("node_down needs a node target")
    else:
        if spec.target not in topo.nodes:
            errors.append(f"unknown node {spec.target!r}")
        if spec.kind in (FaultKind.LINK_DOWN, FaultKind.CONGESTION):
            errors.append(f"{spec.kind.value} needs a link target")
    if spec.kind is FaultKind.CONGESTION:
        if not 0.0 <= spec.p_drop <= 1.0:
            errors.append(f"p_drop {spec.p_drop} outside [0, 1]")
        if spec.extra_delay < 0:
            errors.append(f"extra_delay {spec.extra_delay} is negative")
        if spec.duration <= 0:
            errors.append(f"duration {spec.duration} must be positive")
    return errors


def random_faults(
    topo: Topology,
    rng: random.Random,
    rate_per_s: float,
    start: int,
    end: int,
    kinds: Sequence[FaultKind | str] = (FaultKind.LINK_DOWN,),
    restore_after: int | None = None,
) -> list[FaultSpec]:
    """Draw a Poisson fault schedule up front so the run itself stays scripted."""
    kinds = [FaultKind(k) for k in kinds]
    links = sorted(topo.links)
    nodes = sorted(topo.nodes)
    specs: list[FaultSpec] = []
    t = float(start)
    while True:
        t += rng.expovariate(rate_per_s / 1000.0)
        at = int(t)
        if at >= end:
            break
        kind = rng.choice(kinds)
        if kind is FaultKind.NODE_DOWN:
            target: str | tuple[str, str] = rng.choice(nodes)
        else:
            target = rng.choice(links)
        if kind is FaultKind.CONGESTION:
            spec = FaultSpec(kind, target, at, p_drop=round(rng.uniform(0.1, 0.5), 3),
                             extra_delay=rng.randint(1, 5), duration=rng.randint(100, 1000))
        else:
            spec = FaultSpec(kind, target, at)
        specs.append(spec)
        if restore_after is not None and kind in OUTAGE_KINDS:
            specs.append(FaultSpec(FaultKind.RESTORE, target, at + restore_after))
    return sorted(specs, key=lambda s: s.at)


class LiveNetwork:
    """The real network state during a run, plus when each link last broke."""

    def __init__(self, topology: Topology):
        self.topology = topology
        self._went_down: dict[LinkKey, list[int]] = {k: [] for k in topology.links}

    def update(self, new: Topology, at: int) -> None:
        old = self.topology
        for key in new.links:
            if old.link_usable(*key) and not new.link_usable(*key):
                self._went_down[key].append(at)
        self.topology = new

    def broke_during(self, key: LinkKey, t0: int, t1: int) -> bool:
        return any(t0 <= t <= t1 for t in self._went_down[key])


class FaultInjector:
    """Schedules fault specs on the engine and applies them to a :class:`LiveNetwork`.

    ``on_apply(fault_id, spec, now)`` is called after the network has changed.
    """

    def __init__(
        self,
        engine: Engine,
        network: LiveNetwork,
        on_apply: Callable[[str, FaultSpec, int], None] | None = None,
    ):
        self.engine = engine
        self.network = network
        self.on_apply = on_apply

    def schedule_faults(self, specs: Sequence[FaultSpec]) -> list[str]:
        ids = []
        for i, spec in enumerate(specs, start=1):
            fault_id = f"F{i}"
            kind = EventKind.RESTORE_APPLY if spec.kind is FaultKind.RESTORE else EventKind.FAULT_APPLY
            self.engine.schedule(kind, spec.at, lambda s=spec, f=fault_id: self.apply_fault(s, f))
            ids.append(fault_id)
        return ids

    def apply_fault(self, spec: FaultSpec, fault_id: str) -> None:
        topo = self.network.topology
        now = self.engine.now
        if spec.kind is FaultKind.CONGESTION:
            a, b = spec.target
            topo = set_congestion(topo, a, b, Congestion(spec.p_drop, spec.extra_delay, now + spec.duration))
        elif spec.kind is FaultKind.RESTORE:
            topo = set_element_state(topo, spec.target, State.UP)
            if spec.is_link:
                topo = set_congestion(topo, *spec.target, None)
        else:
            topo = set_element_state(topo, spec.target, State.DOWN)
        self.network.update(topo, now)
        if self.on_apply is not None:
            self.on_apply(fault_id, spec, now)
