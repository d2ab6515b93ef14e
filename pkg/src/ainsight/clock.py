"""Injectable clocks so ticks, latencies and replays are testable."""

from __future__ import annotations

import threading
import time


class WallClock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)


class SimulatedClock:
    """A clock that only moves when told to; replays drive it directly."""

    def __init__(self, start_ms: int = 0):
        self._now_ms = start_ms
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        with self._lock:
            return self._now_ms

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise ValueError(f"clock cannot move backwards: delta {delta_ms}")
        with self._lock:
            self._now_ms += delta_ms
            return self._now_ms

    def set(self, now_ms: int) -> None:
        with self._lock:
            if now_ms < self._now_ms:
                raise ValueError(f"clock cannot move backwards: {now_ms} < {self._now_ms}")
            self._now_ms = now_ms


Clock = WallClock | SimulatedClock
