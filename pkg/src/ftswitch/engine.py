"""Discrete-event scheduler on an integer-millisecond virtual clock."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, NamedTuple


class EventKind(str, Enum):
    PACKET_EMIT = "packet-emit"
    PACKET_HOP = "packet-hop"
    PROBE_SEND = "probe-send"
    PROBE_DEADLINE = "probe-deadline"
    FAULT_APPLY = "fault-apply"
    RESTORE_APPLY = "restore-apply"
    CONTROLLER_ACTION = "controller-action"
    RUN_END = "run-end"


class ScheduleInPast(ValueError):
    pass


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: EventKind = field(compare=False)
    action: Callable[[], Any] | None = field(default=None, compare=False, repr=False)
    cancelled: bool = field(default=False, compare=False)
    fired: bool = field(default=False, compare=False)


class FiredEvent(NamedTuple):
    time: int
    seq: int
    kind: str


class Engine:
    """Single-threaded event loop.

    Events fire in ``(time, seq)`` order; ``seq`` is assigned at scheduling
    time, so an event scheduled by a handler for the current instant runs
    after everything already queued for that instant.
    """

    def __init__(self, trace: bool = True):
        self.now = 0
        self._queue: list[Event] = []
        self._seq = 0
        self.trace = trace
        self.fired_count = 0

    def schedule(self, kind: EventKind | str, at: int, action: Callable[[], Any] | None = None) -> Event:
        if at < self.now:
            raise ScheduleInPast(f"cannot schedule {kind} at {at} (now={self.now})")
        event = Event(int(at), self._seq, EventKind(kind), action)
        self._seq += 1
        heapq.heappush(self._queue, event)
        return event

    def cancel(self, handle: Event) -> bool:
        """Suppress a pending event; False if it already fired or was cancelled."""
        if handle.fired or handle.cancelled:
            return False
        handle.cancelled = True
        return True

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def run_until(self, t_end: int) -> list[FiredEvent]:
        """Fire every event with ``time <= t_end``; leaves ``now == t_end``."""
        if t_end < self.now:
            raise ScheduleInPast(f"run_until({t_end}) is before now={self.now}")
        fired: list[FiredEvent] = []
        queue = self._queue
        while queue and queue[0].time <= t_end:
            event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self.now = event.time
            event.fired = True
            self.fired_count += 1
            if self.trace:
                fired.append(FiredEvent(event.time, event.seq, event.kind.value))
            if event.action is not None:
                event.action()
        self.now = t_end
        return fired
