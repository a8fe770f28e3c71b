"""Injectable time source with a deterministic event schedule.

Every component that needs time takes a Clock, so tests drive culling,
startup delays, and the shutdown-hook race with a VirtualClock instead of
sleeping. Scheduled callbacks model asynchronous effects (a desired-count
update landing after API latency, a task exiting after its grace period).
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from typing import Callable


class Clock:
    """Time source plus a one-shot callback schedule.

    Callbacks are fired by whoever pumps the clock: VirtualClock fires them
    while advancing, SystemClock relies on a caller invoking fire_due()
    periodically (the serve loop does).
    """

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, Callable[[], None]]] = []
        self._counter = itertools.count()
        self._lock = threading.Lock()

    def now(self) -> float:
        raise NotImplementedError

    def schedule(self, at: float, fn: Callable[[], None]) -> None:
        with self._lock:
            heapq.heappush(self._heap, (at, next(self._counter), fn))

    def fire_due(self) -> int:
        """Run every callback whose time has arrived; returns the count."""
        fired = 0
        while True:
            with self._lock:
                if not self._heap or self._heap[0][0] > self.now():
                    return fired
                _, _, fn = heapq.heappop(self._heap)
            fn()
            fired += 1

    def pending(self) -> int:
        with self._lock:
            return len(self._heap)


class SystemClock(Clock):
    def now(self) -> float:
        return time.time()


class VirtualClock(Clock):
    """Manually advanced clock; advancing fires callbacks in time order.

    Time jumps to each due callback's timestamp before it runs, so a
    callback scheduling follow-up work observes a consistent now().
    """

    def __init__(self, start: float = 1_700_000_000.0) -> None:
        super().__init__()
        self._now = start

    def now(self) -> float:
        return self._now

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValueError("cannot advance a clock backwards")
        target = self._now + dt
        while True:
            with self._lock:
                if not self._heap or self._heap[0][0] > target:
                    break
                at, _, fn = heapq.heappop(self._heap)
                self._now = max(self._now, at)
            fn()
        self._now = target
