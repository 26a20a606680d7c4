"""Typed simulation events and the priority structure that orders them."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import IntEnum


class EventKind(IntEnum):
    # Value is the processing rank among events sharing a timestamp.
    JOB_COMPLETION = 0
    MIGRATION_RESTART = 1
    POWER_ON_COMPLETE = 2
    JOB_ARRIVAL = 3
    MOVER_TICK = 4


@dataclass(order=True, slots=True)
class Event:
    time: int
    kind: EventKind
    seq: int
    job: int | None = field(default=None, compare=False)
    server: int | None = field(default=None, compare=False)
    cancelled: bool = field(default=False, compare=False)

    def __repr__(self) -> str:
        parts = [f"t={self.time}", self.kind.name, f"seq={self.seq}"]
        if self.job is not None:
            parts.append(f"job={self.job}")
        if self.server is not None:
            parts.append(f"server={self.server}")
        return "Event<" + " ".join(parts) + ">"


class EmptyEventQueue(LookupError):
    """Raised when stepping a simulation that has nothing left to process."""


class EventQueue:
    """Min-heap of events under (time, kind rank, insertion seq).

    Cancelled events stay in the heap and are dropped when they surface, so
    cancellation is O(1).
    """

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0
        self.scheduled = 0
        self.discarded = 0

    def push(self, time: int, kind: EventKind, job: int | None = None,
             server: int | None = None) -> Event:
        if time < 0:
            raise ValueError(f"event time must be non-negative, got {time}")
        ev = Event(time, kind, self._seq, job, server)
        self._seq += 1
        self.scheduled += 1
        heapq.heappush(self._heap, ev)
        return ev

    def _drop_cancelled(self) -> None:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
            self.discarded += 1

    def peek(self) -> Event | None:
        self._drop_cancelled()
        return self._heap[0] if self._heap else None

    def pop(self) -> Event:
        self._drop_cancelled()
        if not self._heap:
            raise EmptyEventQueue("no pending events")
        return heapq.heappop(self._heap)

    def pending(self) -> list[Event]:
        return sorted(ev for ev in self._heap if not ev.cancelled)

    def __len__(self) -> int:
        return sum(1 for ev in self._heap if not ev.cancelled)

    def __bool__(self) -> bool:
        return self.peek() is not None
