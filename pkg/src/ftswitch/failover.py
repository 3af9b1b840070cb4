"""Failover controller: probe-driven detection, backup activation and rerouting.

The controller never looks at the live network.  Its routing view starts
fully healthy and only learns that a link is down after ``miss_threshold``
consecutive probe misses; that gap is the blackout window that costs
packets and shows up as recovery time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .engine import Engine, Event, EventKind
from .topology import (
    LinkKey,
    NoBackup,
    NoPath,
    Path,
    State,
    Topology,
    disjoint_backup,
    equal_cost_paths,
    set_element_state,
)
from .traffic import Flow, ProbeResult


class ControllerState(str, Enum):
    NORMAL = "Normal"
    FAULT_SUSPECTED = "FaultSuspected"
    FAULT_DETECTED = "FaultDetected"
    REROUTING = "Rerouting"
    RECOVERED = "Recovered"


_CYCLE = [
    ControllerState.NORMAL,
    ControllerState.FAULT_SUSPECTED,
    ControllerState.FAULT_DETECTED,
    ControllerState.REROUTING,
    ControllerState.RECOVERED,
]
ALLOWED_TRANSITIONS = frozenset(
    [(a, b) for a, b in zip(_CYCLE, _CYCLE[1:] + _CYCLE[:1])]
    + [(ControllerState.FAULT_SUSPECTED, ControllerState.NORMAL)]
)


class NodeStatus(str, Enum):
    ACTIVE = "Active"
    FAILED = "Failed"
    REROUTED = "Rerouted"


@dataclass(frozen=True)
class ControllerConfig:
    miss_threshold: int = 2
    controller_proc_delay: int = 5
    per_flow_commit_delay: int = 2
    beta: float = 0.1
    score_window: int = 10


class DetectionTracker:
    """Consecutive-miss counters and the believed state of every probed link."""

    def __init__(self, miss_threshold: int = 2):
        self.miss_threshold = miss_threshold
        self.misses: dict[LinkKey, int] = {}
        self.down: set[LinkKey] = set()

    def observe(self, result: ProbeResult) -> str:
        """Return one of ``ok``, ``restored``, ``suspect``, ``detected``, ``ignored``."""
        link = result.link
        if result.ok:
            self.misses[link] = 0
            if link in self.down:
                self.down.discard(link)
                return "restored"
            return "ok"
        if link in self.down:
            return "ignored"
        self.misses[link] = self.misses.get(link, 0) + 1
        if self.misses[link] >= self.miss_threshold:
            self.down.add(link)
            return "detected"
        return "suspect"

    def suspicious(self) -> bool:
        return any(n > 0 for link, n in self.misses.items() if link not in self.down)


@dataclass
class RouteEntry:
    flow: Flow
    primary: Path | None
    backup: Path | None
    active: Path | None
    last_commit: int = 0
    pending_path: Path | None = None
    pending_event: Event | None = field(default=None, repr=False)

    @property
    def target(self) -> Path | None:
        """The path this flow is on, or is about to be switched to."""
        return self.pending_path if self.pending_event is not None else self.active


class RouteTable(dict):
    """Flow id -> :class:`RouteEntry`."""

    def snapshot(self) -> dict[str, Path | None]:
        return {fid: entry.active for fid, entry in sorted(self.items())}


@dataclass(frozen=True)
class PathScore:
    score: float
    success_ratio: float
    cost: float


def score_path(
    path: Path,
    history: Mapping[LinkKey, Sequence[bool]],
    max_candidate_cost: float,
    beta: float = 0.1,
    window: int = 10,
) -> PathScore:
    """Probe success ratio of the weakest link, minus a cost penalty.

    Links without probe history count as fully healthy.
    """
    ratio = 1.0
    for key in path.links():
        recent = list(history.get(key, ()))[-window:]
        if recent:
            ratio = min(ratio, sum(recent) / len(recent))
    norm = path.cost / max_candidate_cost if max_candidate_cost else 0.0
    return PathScore(ratio - beta * norm, ratio, path.cost)


def flow_hash(flow_id: str) -> int:
    return sum(flow_id.encode("utf-8"))


def select_active_path(flow_id: str, candidates: Sequence[Path], scores: Sequence[float] | None = None) -> Path:
    """Pick a path for ``flow_id`` from canonically sorted ``candidates``.

    When every candidate scores the same the flow is spread by a hash of its
    id; otherwise the best score wins, earliest candidate on ties.
    """
    if not candidates:
        raise ValueError("no candidate paths")
    if scores is None or len(set(scores)) == 1:
        return candidates[flow_hash(flow_id) % len(candidates)]
    best = max(scores)
    return candidates[list(scores).index(best)]


def classify_node_status(
    topo: Topology,
    routes_before: Mapping[str, Path | None],
    routes_after: Mapping[str, Path | None],
) -> dict[str, NodeStatus]:
    statuses: dict[str, NodeStatus] = {}
    for node_id, node in sorted(topo.nodes.items()):
        incident = topo.incident(node_id)
        if node.state is State.DOWN or (incident and all(l.state is State.DOWN for l in incident)):
            statuses[node_id] = NodeStatus.FAILED
        else:
            statuses[node_id] = NodeStatus.ACTIVE
    for fid, after in routes_after.items():
        if after is None:
            continue
        before = routes_before.get(fid)
        old = set(before.nodes) if before is not None else set()
        for node_id in after.nodes:
            if node_id not in old and statuses[node_id] is NodeStatus.ACTIVE:
                statuses[node_id] = NodeStatus.REROUTED
    return statuses


def _path_record(path: Path | None) -> list[str] | None:
    return list(path.nodes) if path is not None else None


class Controller:
    """Runs the detect / mark / recompute / reroute loop on the engine.

    ``log`` receives one dict per controller record (route installs,
    detections, state transitions, commits).
    """

    def __init__(
        self,
        engine: Engine,
        topology: Topology,
        config: ControllerConfig = ControllerConfig(),
        log: Callable[[dict], None] | None = None,
    ):
        self.engine = engine
        self.config = config
        self.view = topology
        self.tracker = DetectionTracker(config.miss_threshold)
        self.state = ControllerState.NORMAL
        self.routes = RouteTable()
        self.history: dict[LinkKey, deque[bool]] = {
            key: deque(maxlen=config.score_window) for key in topology.links
        }
        self._log = log or (lambda rec: None)
        self._eval_event: Event | None = None
        self._pending: set[str] = set()
        self._actions = 0

    # -- route installation ---------------------------------------------------

    def install(self, flows: Iterable[Flow]) -> None:
        """Compute primary, backup and initial active path for each flow."""
        for flow in sorted(flows, key=lambda f: f.id):
            try:
                primary = self._pick(flow, equal_cost_paths(self.view, flow.src, flow.dst))
            except NoPath:
                primary = None
            backup = None
            if primary is not None:
                try:
                    backup = disjoint_backup(self.view, primary)
                except NoBackup:
                    pass
            self.routes[flow.id] = RouteEntry(flow, primary, backup, primary, self.engine.now)
            self._log({
                "t": self.engine.now,
                "type": "route_init",
                "flow": flow.id,
                "primary": _path_record(primary),
                "backup": _path_record(backup),
            })

    def route_of(self, flow_id: str) -> Path | None:
        return self.routes[flow_id].active

    def _scores(self, candidates: Sequence[Path]) -> list[float]:
        max_cost = max(p.cost for p in candidates)
        return [
            score_path(p, self.history, max_cost, self.config.beta, self.config.score_window).score
            for p in candidates
        ]

    def _pick(self, flow: Flow, candidates: Sequence[Path]) -> Path:
        return select_active_path(flow.id, candidates, self._scores(candidates))

    # -- state machine ----------------------------------------------------------

    def _set_state(self, new: ControllerState) -> None:
        old = self.state
        if (old, new) not in ALLOWED_TRANSITIONS:
            raise RuntimeError(f"illegal controller transition {old.value} -> {new.value}")
        self.state = new
        self._log({"t": self.engine.now, "type": "state", "from": old.value, "to": new.value})

    def _walk_to(self, target: ControllerState) -> None:
        while self.state is not target:
            i = _CYCLE.index(self.state)
            self._set_state(_CYCLE[(i + 1) % len(_CYCLE)])

    def _settle(self) -> None:
        if self.state is ControllerState.RECOVERED and not self.tracker.suspicious():
            self._set_state(ControllerState.NORMAL)
        elif self.state is ControllerState.FAULT_SUSPECTED and not self.tracker.suspicious():
            self._set_state(ControllerState.NORMAL)

    # -- probes and detection -----------------------------------------------------

    def observe_probe(self, result: ProbeResult) -> LinkKey | None:
        """Feed one probe result; returns the link if this result triggered a detection."""
        now = self.engine.now
        self.history[result.link].append(result.ok)
        self._log({
            "t": now,
            "type": "probe",
            "link": list(result.link),
            "sent_at": result.sent_at,
            "outcome": result.outcome,
        })
        verdict = self.tracker.observe(result)
        detected = None
        if verdict == "suspect":
            if self.state is ControllerState.RECOVERED:
                self._set_state(ControllerState.NORMAL)
            if self.state is ControllerState.NORMAL:
                self._set_state(ControllerState.FAULT_SUSPECTED)
        elif verdict == "detected":
            detected = result.link
            self.on_fault_detected(result.link, now)
        elif verdict == "restored":
            self.view = set_element_state(self.view, result.link, State.UP)
            self._log({"t": now, "type": "link_restored", "link": list(result.link)})
            if any(e.target is None for e in self.routes.values()):
                self._request_evaluation()
        self._settle()
        return detected

    def on_fault_detected(self, link: LinkKey, at: int) -> None:
        """Mark ``link`` failed in the routing view and queue a reroute pass."""
        self.tracker.down.add(link)
        self.view = set_element_state(self.view, link, State.DOWN)
        self._log({"t": at, "type": "detect", "link": list(link)})
        if self.state not in (ControllerState.FAULT_DETECTED, ControllerState.REROUTING):
            self._walk_to(ControllerState.FAULT_DETECTED)
        self._request_evaluation()

    def _request_evaluation(self) -> None:
        # Same-instant detections share one pass: it is queued behind them.
        if self._eval_event is None:
            self._eval_event = self.engine.schedule(
                EventKind.CONTROLLER_ACTION, self.engine.now, self._evaluate
            )

    # -- rerouting ----------------------------------------------------------------

    def _needs_action(self, entry: RouteEntry) -> bool:
        target = entry.target
        if target is None:
            try:
                equal_cost_paths(self.view, entry.flow.src, entry.flow.dst)
            except NoPath:
                return False
            return True
        return not self.view.path_valid(target)

    def _choose(self, entry: RouteEntry) -> tuple[Path | None, str]:
        backup = entry.backup
        if backup is not None and backup != entry.target and self.view.path_valid(backup):
            return backup, "backup"
        try:
            candidates = equal_cost_paths(self.view, entry.flow.src, entry.flow.dst)
        except NoPath:
            return None, "no-path"
        return self._pick(entry.flow, candidates), "recompute"

    def _evaluate(self) -> None:
        now = self.engine.now
        self._eval_event = None
        affected = [fid for fid, entry in sorted(self.routes.items()) if self._needs_action(entry)]
        if self.state is ControllerState.FAULT_DETECTED:
            self._set_state(ControllerState.REROUTING)
        cfg = self.config
        for i, fid in enumerate(affected):
            entry = self.routes[fid]
            if entry.pending_event is not None:
                self.engine.cancel(entry.pending_event)
            path, how = self._choose(entry)
            at = now + cfg.controller_proc_delay + i * cfg.per_flow_commit_delay
            entry.pending_path = path
            entry.pending_event = self.engine.schedule(
                EventKind.CONTROLLER_ACTION, at, lambda f=fid, p=path, h=how: self._commit(f, p, h)
            )
            self._pending.add(fid)
            self._log({
                "t": now,
                "type": "reroute_planned",
                "flow": fid,
                "path": _path_record(path),
                "via": how,
                "commit_at": at,
            })
        self._maybe_recovered()

    def _commit(self, fid: str, path: Path | None, how: str) -> None:
        now = self.engine.now
        entry = self.routes[fid]
        entry.active = path
        entry.pending_path = None
        entry.pending_event = None
        entry.last_commit = now
        self._pending.discard(fid)
        self._actions += 1
        record = {
            "t": now,
            "type": "commit" if path is not None else "unrouted",
            "action": self._actions,
            "flow": fid,
            "path": _path_record(path),
            "via": how,
        }
        if path is not None:
            record["cost"] = path.cost
        self._log(record)
        self._maybe_recovered()

    def _maybe_recovered(self) -> None:
        if self.state is ControllerState.REROUTING and not self._pending:
            self._set_state(ControllerState.RECOVERED)
