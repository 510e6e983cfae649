"""Deterministic discrete-event core: virtual clock, ordered queue, event log.

Time is an integer nanosecond count from simulation start.  Every other
module schedules against one Simulator instance; the event loop is
single-threaded and owns all mutable simulation state.
"""

from __future__ import annotations

import copy
import heapq
import json
import re
from dataclasses import dataclass, field

from .errors import PastTime

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000

SimTime = int

EVENT_KINDS = (
    "FrameArrival",
    "LinkStateChange",
    "TimerExpiry",
    "CommandApplied",
    "AlertRaised",
)

_DURATION_RE = re.compile(r"^(\d+(?:\.\d+)?)(ns|us|ms|s|m|h)?$")
_UNIT_NS = {
    "ns": 1,
    "us": NS_PER_US,
    "ms": NS_PER_MS,
    "s": NS_PER_SEC,
    "m": 60 * NS_PER_SEC,
    "h": 3600 * NS_PER_SEC,
}


def duration(text: str) -> SimTime:
    """Parse '10s', '250ms', '1us' ... into nanoseconds (bare number = ns)."""
    m = _DURATION_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad duration: {text!r}")
    value, unit = m.groups()
    return int(float(value) * _UNIT_NS[unit or "ns"])


def fmt_time(t: SimTime) -> str:
    if t % NS_PER_SEC == 0:
        return f"{t // NS_PER_SEC}s"
    if t % NS_PER_MS == 0:
        return f"{t // NS_PER_MS}ms"
    return f"{t}ns"


@dataclass(frozen=True)
class Event:
    at: SimTime
    seq: int
    kind: str
    payload: dict


class EventLog:
    """Append-only record of processed events, ordered by (at, seq)."""

    def __init__(self):
        self._entries: list[Event] = []

    def append(self, event: Event) -> None:
        self._entries.append(event)

    @property
    def entries(self) -> tuple[Event, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def since(self, seq: int) -> list[Event]:
        return [e for e in self._entries if e.seq > seq]

    @staticmethod
    def format_line(event: Event) -> str:
        pairs = " ".join(
            f"{k}={_scalar(v)}" for k, v in sorted(event.payload.items())
        )
        return f"{event.at} {event.seq} {event.kind} {pairs}".rstrip()

    def export(self) -> str:
        """Line-delimited export: `<ticks> <seq> <kind> <key=value ...>`."""
        return "\n".join(self.format_line(e) for e in self._entries) + (
            "\n" if self._entries else ""
        )


def _scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "-"
    text = str(value)
    return text.replace(" ", "_") if " " in text else text


class Simulator:
    """Virtual clock plus an ordered event queue with a stable tie-break.

    Simultaneous events are processed in insertion order (the monotone
    `seq` counter breaks ties), which makes replays byte-identical.
    """

    def __init__(self):
        self.clock: SimTime = 0
        self._seq = 0
        self._queue: list[tuple[SimTime, int, Event]] = []
        self._actions: dict[int, object] = {}
        self.log = EventLog()
        self._snapshot_provider = None
        self._running = False

    # -- scheduling --------------------------------------------------------

    def schedule(self, at: SimTime, kind: str, payload: dict | None = None,
                 action=None) -> int:
        """Enqueue an event; returns its id (the seq counter)."""
        if at < self.clock:
            raise PastTime(f"schedule at {at} < clock {self.clock}")
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        self._seq += 1
        event = Event(at=at, seq=self._seq, kind=kind, payload=payload or {})
        heapq.heappush(self._queue, (at, self._seq, event))
        if action is not None:
            self._actions[self._seq] = action
        return self._seq

    def after(self, delay: SimTime, kind: str, payload: dict | None = None,
              action=None) -> int:
        return self.schedule(self.clock + delay, kind, payload, action)

    # -- execution ---------------------------------------------------------

    def run_until(self, t: SimTime) -> int:
        """Process every event with at <= t in (at, seq) order; clock ends at t."""
        if t < self.clock:
            raise PastTime(f"run_until {t} < clock {self.clock}")
        processed = 0
        was_running, self._running = self._running, True
        try:
            while self._queue and self._queue[0][0] <= t:
                _, seq, event = heapq.heappop(self._queue)
                self.clock = event.at
                self.log.append(event)
                action = self._actions.pop(seq, None)
                if action is not None:
                    action(event)
                processed += 1
        finally:
            self._running = was_running
        self.clock = t
        return processed

    def run_all(self) -> int:
        processed = 0
        while self._queue:
            processed += self.run_until(self._queue[0][0])
        return processed

    def pending(self) -> int:
        return len(self._queue)

    def next_event_at(self) -> SimTime | None:
        return self._queue[0][0] if self._queue else None

    # -- snapshots ---------------------------------------------------------

    def set_snapshot_provider(self, provider) -> None:
        """Provider returns a JSON-serializable dict of full world state."""
        self._snapshot_provider = provider

    def snapshot(self) -> dict:
        """Immutable full-state value, decoupled from future mutations."""
        state = {"clock": self.clock, "log_len": len(self.log)}
        if self._snapshot_provider is not None:
            state.update(self._snapshot_provider())
        # round-trip through JSON guarantees decoupling and serializability
        return json.loads(json.dumps(state))

    def emit(self, kind: str, payload: dict | None = None, action=None) -> int:
        """Schedule an event at the current clock; processed in seq order.

        Outside the run loop the event is flushed immediately, so the log
        stays sorted by (at, seq) even when actions emit follow-up events.
        """
        seq = self.schedule(self.clock, kind, payload, action)
        if not self._running:
            self.run_until(self.clock)
        return seq
