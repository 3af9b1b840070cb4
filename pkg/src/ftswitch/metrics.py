"""Loss, recovery-time and rerouting-success accounting over the run's records."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
import math


class MetricsError(Exception):
    pass


class UnknownFault(MetricsError, KeyError):
    pass


class FaultNotQuiesced(MetricsError):
    pass


class RunNotEnded(MetricsError):
    pass


OUTAGE_KINDS = ("link_down", "node_down")


def percent(num: int, den: int, empty: float = 0.0) -> float:
    """``100 * num / den`` to one decimal place, rounding halves up."""
    if den == 0:
        return empty
    tenths = math.floor(Fraction(1000 * num, den) + Fraction(1, 2))
    return tenths / 10


@dataclass
class FaultRecoveryRecord:
    fault_id: str
    kind: str
    target: str | tuple[str, str]
    fault_at: int
    links: tuple[tuple[str, str], ...]
    affected: tuple[str, ...]
    detected_at: int | None = None
    last_action_at: int | None = None
    rerouted: set[str] = field(default_factory=set)
    pending: set[str] = field(default_factory=set)

    @property
    def affected_flows(self) -> int:
        return len(self.affected)

    @property
    def rerouted_flows(self) -> int:
        return len(self.rerouted)

    @property
    def quiesced(self) -> bool:
        return self.detected_at is not None and not self.pending

    @property
    def last_commit_at(self) -> int | None:
        if self.detected_at is None:
            return None
        if self.last_action_at is None:
            return self.detected_at
        return max(self.detected_at, self.last_action_at)

    def avoids(self, path: list[str]) -> bool:
        if isinstance(self.target, str):
            return self.target not in path
        a, b = self.target
        hops = {frozenset(h) for h in zip(path, path[1:])}
        return frozenset((a, b)) not in hops


@dataclass(frozen=True)
class WindowLoss:
    percent: float
    sent: int
    lost: int

    @property
    def empty(self) -> bool:
        return self.sent == 0


@dataclass(frozen=True)
class FaultSummary:
    fault_id: str
    kind: str
    target: str | tuple[str, str]
    fault_at: int
    detected_at: int | None
    last_commit_at: int | None
    affected_flows: int
    rerouted_flows: int
    mttr_ms: int | None
    success_rate_percent: float | None
    quiesced: bool

    def to_dict(self) -> dict:
        target = self.target if isinstance(self.target, str) else list(self.target)
        return {
            "fault_id": self.fault_id,
            "kind": self.kind,
            "target": target,
            "fault_at": self.fault_at,
            "detected_at": self.detected_at,
            "last_commit_at": self.last_commit_at,
            "affected_flows": self.affected_flows,
            "rerouted_flows": self.rerouted_flows,
            "mttr_ms": self.mttr_ms,
            "success_rate_percent": self.success_rate_percent,
            "quiesced": self.quiesced,
        }


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    seed: int
    duration_ms: int
    packets_sent: int
    delivered: int
    lost: int
    in_flight: int
    lost_by_reason: dict[str, int]
    loss_rate_percent: float
    faults: tuple[FaultSummary, ...]
    mttr_ms: int | None
    success_rate_percent: float

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "packets": {
                "sent": self.packets_sent,
                "delivered": self.delivered,
                "lost": self.lost,
                "in_flight": self.in_flight,
                "lost_by_reason": dict(sorted(self.lost_by_reason.items())),
            },
            "loss_rate_percent": self.loss_rate_percent,
            "faults": [f.to_dict() for f in self.faults],
            "summary": {
                "loss_percent": self.loss_rate_percent,
                "mttr_ms": self.mttr_ms,
                "success_percent": self.success_rate_percent,
            },
        }


class MetricsCollector:
    """Folds simulation records into counters and per-fault recovery records.

    Packet records are counted once per ``(flow, seq)``; controller actions
    once per action number.  Duplicates are rejected.
    """

    def __init__(self, scenario: str = "", seed: int = 0, duration_ms: int = 0):
        self.scenario = scenario
        self.seed = seed
        self.duration_ms = duration_ms
        self.delivered = 0
        self.lost = 0
        self.in_flight = 0
        self.lost_by_reason: Counter[str] = Counter()
        self._packets: dict[tuple[str, int], tuple[int, bool]] = {}
        self._actions: set[int] = set()
        self._faults: dict[str, FaultRecoveryRecord] = {}
        self._known_down: set[tuple[str, str]] = set()
        self.ended = False

    @property
    def packets_sent(self) -> int:
        return len(self._packets)

    def record(self, rec: dict) -> bool:
        """Apply one record; False if it was a duplicate and ignored."""
        kind = rec["type"]
        handler = getattr(self, f"_on_{kind}", None)
        if handler is None:
            return True
        return handler(rec) is not False

    def _on_packet(self, rec: dict) -> bool:
        key = (rec["flow"], rec["seq"])
        if key in self._packets:
            return False
        outcome = rec["outcome"]
        self._packets[key] = (rec["created_at"], outcome == "lost")
        if outcome == "delivered":
            self.delivered += 1
        elif outcome == "lost":
            self.lost += 1
            self.lost_by_reason[rec["reason"]] += 1
        else:
            self.in_flight += 1
        return True

    def _on_fault(self, rec: dict) -> None:
        if rec["kind"] not in OUTAGE_KINDS:
            return
        target = rec["target"] if isinstance(rec["target"], str) else tuple(rec["target"])
        links = tuple(tuple(l) for l in rec["links"])
        record = FaultRecoveryRecord(
            rec["fault_id"], rec["kind"], target, rec["t"], links, tuple(rec["affected"]),
            pending=set(rec["affected"]),
        )
        if all(l in self._known_down for l in links):
            record.detected_at = rec["t"]
        self._faults[record.fault_id] = record

    def _on_detect(self, rec: dict) -> None:
        link = tuple(rec["link"])
        self._known_down.add(link)
        for record in self._faults.values():
            if record.detected_at is None and link in record.links and rec["t"] >= record.fault_at:
                record.detected_at = rec["t"]

    def _on_link_restored(self, rec: dict) -> None:
        self._known_down.discard(tuple(rec["link"]))

    def _on_action(self, rec: dict) -> bool:
        if rec["action"] in self._actions:
            return False
        self._actions.add(rec["action"])
        flow, t = rec["flow"], rec["t"]
        for record in self._faults.values():
            if flow not in record.pending or t < record.fault_at:
                continue
            if rec["type"] == "unrouted":
                record.pending.discard(flow)
            elif record.avoids(rec["path"]):
                record.pending.discard(flow)
                record.rerouted.add(flow)
            else:
                continue
            record.last_action_at = t if record.last_action_at is None else max(record.last_action_at, t)
        return True

    _on_commit = _on_action
    _on_unrouted = _on_action

    def _on_run_end(self, rec: dict) -> None:
        self.ended = True

    # -- queries ------------------------------------------------------------------

    def fault(self, fault_id: str) -> FaultRecoveryRecord:
        try:
            return self._faults[fault_id]
        except KeyError:
            raise UnknownFault(fault_id) from None

    def packet_loss_rate(self, t0: int = 0, t1: int | None = None) -> WindowLoss:
        """Loss over packets created in ``[t0, t1]``; ``empty`` flags a window with no packets."""
        if t1 is not None and t0 > t1:
            raise ValueError(f"empty window [{t0}, {t1}]")
        sent = lost = 0
        for created_at, was_lost in self._packets.values():
            if created_at >= t0 and (t1 is None or created_at <= t1):
                sent += 1
                lost += was_lost
        return WindowLoss(percent(lost, sent), sent, lost)

    def mttr(self, fault_id: str) -> int:
        record = self.fault(fault_id)
        if not record.quiesced:
            raise FaultNotQuiesced(fault_id)
        return record.last_commit_at - record.fault_at

    def success_rate(self, fault_id: str) -> float:
        record = self.fault(fault_id)
        if not record.quiesced:
            raise FaultNotQuiesced(fault_id)
        return percent(record.rerouted_flows, record.affected_flows, empty=100.0)

    def report(self) -> MetricsReport:
        if not self.ended:
            raise RunNotEnded("report() called before the run ended")
        summaries = []
        for record in self._faults.values():
            done = record.quiesced
            summaries.append(FaultSummary(
                record.fault_id,
                record.kind,
                record.target,
                record.fault_at,
                record.detected_at,
                record.last_commit_at if done else None,
                record.affected_flows,
                record.rerouted_flows,
                self.mttr(record.fault_id) if done else None,
                self.success_rate(record.fault_id) if done else None,
                done,
            ))
        # A flow counts once across simultaneous faults and is only a success
        # if every fault that hit it left it rerouted.
        hit: dict[str, bool] = {}
        for record in self._faults.values():
            if record.quiesced:
                for flow in record.affected:
                    hit[flow] = hit.get(flow, True) and flow in record.rerouted
        mttrs = [s.mttr_ms for s in summaries if s.mttr_ms is not None]
        return MetricsReport(
            scenario=self.scenario,
            seed=self.seed,
            duration_ms=self.duration_ms,
            packets_sent=self.packets_sent,
            delivered=self.delivered,
            lost=self.lost,
            in_flight=self.in_flight,
            lost_by_reason=dict(self.lost_by_reason),
            loss_rate_percent=percent(self.lost, self.packets_sent),
            faults=tuple(summaries),
            mttr_ms=max(mttrs) if mttrs else None,
            success_rate_percent=percent(sum(hit.values()), len(hit), empty=100.0),
        )
