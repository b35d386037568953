"""Deterministic discrete-event engine with an integer-microsecond clock."""
from __future__ import annotations

import heapq
import random
from typing import Callable

TICKS_PER_SECOND = 1_000_000


def to_ticks(seconds: float) -> int:
    """Convert wall seconds to integer clock ticks (1 tick = 1 microsecond)."""
    return round(seconds * TICKS_PER_SECOND)


def to_seconds(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


class SimulationError(RuntimeError):
    """Fatal logic error inside a run; the run must abort, never limp on."""


def draw_uniform(rng: random.Random, lo: float, hi: float) -> float:
    """Uniform draw on [lo, hi]; degenerate bounds return lo exactly."""
    if lo > hi:
        raise SimulationError(f"uniform bounds reversed: {lo} > {hi}")
    if lo == hi:
        return lo
    return rng.uniform(lo, hi)


class Simulator:
    """Virtual clock plus an ordered event queue and named RNG substreams.

    Events fire in (fire_at, insertion order), so simultaneous events run in
    the order they were scheduled and a run is a pure function of the
    configuration and seed.  Substreams are seeded from (seed, name) so one
    node's draws never perturb another's.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self.now = 0
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._counter = 0
        self._streams: dict[str, random.Random] = {}

    def stream(self, name: str) -> random.Random:
        """Named substream; the same (seed, name) always yields the same sequence."""
        rng = self._streams.get(name)
        if rng is None:
            # string seeding hashes with sha512, immune to PYTHONHASHSEED
            rng = random.Random(f"{self.seed}/{name}")
            self._streams[name] = rng
        return rng

    def node_stream(self, addr: int) -> random.Random:
        return self.stream(f"node/{addr}")

    def schedule_at(self, fire_at: int, fn: Callable[[], None]) -> None:
        if fire_at < self.now:
            raise SimulationError(
                f"event scheduled in the past: {fire_at} < now {self.now}")
        heapq.heappush(self._queue, (fire_at, self._counter, fn))
        self._counter += 1

    def schedule_in(self, delay: int, fn: Callable[[], None]) -> None:
        self.schedule_at(self.now + delay, fn)

    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, t_end: int) -> None:
        """Process every event with fire_at <= t_end, then advance the clock to t_end."""
        queue = self._queue
        pop = heapq.heappop
        while queue and queue[0][0] <= t_end:
            fire_at, _, fn = pop(queue)
            self.now = fire_at
            fn()
        if t_end > self.now:
            self.now = t_end
