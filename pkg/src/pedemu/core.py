"""Discrete-event engine with virtual and wall-clock-locked execution.

Simulation time is an integer count of microseconds. Events are totally
ordered by (due, insertion sequence), which makes virtual-mode runs
reproducible event by event. In real-time mode every event is delayed
until its wall-clock due point (base + due); lateness is unbounded by
design and is exactly what the lag sampler measures.

Between events in real-time mode the current simulation time is defined
as clamp(wall elapsed, last dispatched due, next pending due); while a
handler runs it is pinned at that event's due time. An idle run thus
shows ~0 offset and a stalled handler shows the stall.

Event dispatch is strictly single-threaded. Other threads feed work in
through :meth:`Simulator.inject`; the loop drains that inbox between
events and stamps each injected action with the current simulation time.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

log = logging.getLogger(__name__)

US_PER_S = 1_000_000

SimTime = int  # microseconds since simulation start


def us(seconds: float) -> SimTime:
    """Convert seconds to integer microseconds."""
    return int(round(seconds * US_PER_S))


def seconds(t: SimTime) -> float:
    return t / US_PER_S


class ClockMode(enum.Enum):
    VIRTUAL = "virtual"
    REAL_TIME = "realtime"


class CausalityError(ValueError):
    """An event was scheduled in the past."""


class HandlerError(RuntimeError):
    """An event handler raised; the offending event is identified."""

    def __init__(self, event: "Event", cause: BaseException):
        super().__init__(f"handler failed for event due={event.due} seq={event.seq} target={event.target!r}: {cause!r}")
        self.event = event
        self.cause = cause


@dataclass(order=True)
class Event:
    due: SimTime
    seq: int
    target: str = field(compare=False, default="")
    action: Callable[[], None] = field(compare=False, default=lambda: None)
    cancelled: bool = field(compare=False, default=False)


@dataclass(frozen=True)
class LagSample:
    """Wall clock vs simulation time, both in seconds since the run base."""

    t_real: float
    t_sim: float
    offset: float  # t_real - t_sim


@dataclass
class RunStats:
    events_executed: int = 0
    injected: int = 0
    t_end: SimTime = 0
    wall_seconds: float = 0.0
    trace_hash: str = ""
    lag: list[LagSample] = field(default_factory=list)

    def max_offset(self) -> float:
        return max((s.offset for s in self.lag), default=0.0)


class RngStreams:
    """Named deterministic substreams derived from one master seed.

    The derivation hashes (seed, name), so draws on one stream never
    perturb another and equal seeds replay identical sequences.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, "_Rng"] = {}

    def stream(self, name: str) -> "_Rng":
        if name not in self._streams:
            digest = hashlib.sha256(f"{self.seed}:{name}".encode()).digest()
            self._streams[name] = _Rng(int.from_bytes(digest[:8], "little"))
        return self._streams[name]


class _Rng:
    import random as _random_mod

    def __init__(self, seed: int):
        self._r = self._random_mod.Random(seed)

    def uniform(self, a: float, b: float) -> float:
        return self._r.uniform(a, b)

    def gauss(self, mu: float, sigma: float) -> float:
        return self._r.gauss(mu, sigma)

    def randrange(self, n: int) -> int:
        return self._r.randrange(n)


class Simulator:
    """Single-threaded event loop with virtual and real-time clock modes."""

    def __init__(self, lag_interval_s: float = 0.01):
        self._heap: list[Event] = []
        self._seq = 0
        self.now: SimTime = 0
        self._inbox: deque[tuple[str, Callable[[], None]]] = deque()
        self._inbox_signal = threading.Event()
        self._stop = threading.Event()
        self._trace = hashlib.sha256()
        self._events_executed = 0
        self._injected = 0
        self.lag_interval_s = lag_interval_s
        self.lag_samples: list[LagSample] = []
        # real-time state, guarded by _rt_lock (shared with the sampler thread)
        self._rt_lock = threading.Lock()
        self._mode = ClockMode.VIRTUAL
        self._base_wall: float = 0.0
        self._next_due: Optional[SimTime] = None
        self._executing = False
        self._t_end: SimTime = 0

    # -- scheduling ---------------------------------------------------------

    def schedule(self, due: SimTime, action: Callable[[], None], target: str = "") -> Event:
        """Enqueue an action at absolute simulation time ``due``."""
        if due < self.now:
            raise CausalityError(f"due {due} is before now {self.now}")
        ev = Event(due, self._seq, target, action)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        self._refresh_next_due()
        return ev

    def schedule_in(self, delay: SimTime, action: Callable[[], None], target: str = "") -> Event:
        return self.schedule(self.now + delay, action, target)

    def cancel(self, ev: Event) -> None:
        ev.cancelled = True

    def inject(self, action: Callable[[], None], target: str = "") -> None:
        """Thread-safe: hand an action to the loop. It is stamped with the
        current simulation time when the loop drains the inbox."""
        self._inbox.append((target, action))
        self._inbox_signal.set()

    def request_stop(self) -> None:
        """Thread-safe: make the run return after the current event."""
        self._stop.set()
        self._inbox_signal.set()

    # -- clock --------------------------------------------------------------

    @property
    def mode(self) -> ClockMode:
        return self._mode

    def wall_elapsed(self) -> float:
        """Seconds of wall clock since the real-time base."""
        return time.monotonic() - self._base_wall

    def effective_sim_time_us(self) -> SimTime:
        """Current simulation time; between events in real-time mode this
        tracks the wall clock, clamped to the next pending due."""
        with self._rt_lock:
            return self._effective_locked()

    def _effective_locked(self) -> SimTime:
        if self._mode is not ClockMode.REAL_TIME:
            return self.now
        if self._executing:
            return self.now
        wall_us = int((time.monotonic() - self._base_wall) * US_PER_S)
        ceiling = self._next_due if self._next_due is not None else self._t_end
        return max(self.now, min(wall_us, ceiling))

    def sync_to_wallclock(self) -> None:
        """Rebase the wall clock so the current lag offset becomes zero.

        Warns and leaves state unchanged in virtual mode. Invoked
        automatically once when a real-time run starts.
        """
        if self._mode is not ClockMode.REAL_TIME:
            log.warning("sync_to_wallclock called in virtual mode; ignored")
            return
        with self._rt_lock:
            t_sim = self._effective_locked()
            self._base_wall = time.monotonic() - seconds(t_sim)

    def _refresh_next_due(self) -> None:
        head = self._heap[0] if self._heap else None
        with self._rt_lock:
            self._next_due = head.due if head is not None else None

    # -- lag sampling ---------------------------------------------------------

    def _sample_lag(self) -> LagSample:
        with self._rt_lock:
            t_real = time.monotonic() - self._base_wall
            t_sim = seconds(self._effective_locked())
        sample = LagSample(t_real, t_sim, t_real - t_sim)
        self.lag_samples.append(sample)
        return sample

    def _lag_sampler(self, stop: threading.Event, on_sample) -> None:
        deadline = time.monotonic()
        while not stop.is_set():
            deadline += self.lag_interval_s
            delay = deadline - time.monotonic()
            if delay > 0 and stop.wait(delay):
                break
            sample = self._sample_lag()
            if on_sample is not None:
                on_sample(sample)

    # -- run loop -------------------------------------------------------------

    def run_until(
        self,
        t_end: SimTime,
        mode: ClockMode = ClockMode.VIRTUAL,
        on_lag_sample: Optional[Callable[[LagSample], None]] = None,
    ) -> RunStats:
        """Execute all events with due <= t_end.

        Virtual mode runs as fast as possible. Real-time mode delays each
        event until its wall-clock due point, keeps running until t_end of
        wall time even if the queue drains first, and records a LagSample
        every ``lag_interval_s`` of wall time.
        """
        if t_end < self.now:
            raise ValueError(f"t_end {t_end} is before now {self.now}")
        self._stop.clear()
        self._mode = mode
        with self._rt_lock:
            self._t_end = t_end
        start_wall = time.monotonic()
        sampler_stop = threading.Event()
        sampler = None
        if mode is ClockMode.REAL_TIME:
            with self._rt_lock:
                self._base_wall = time.monotonic() - seconds(self.now)
            self.sync_to_wallclock()
            sampler = threading.Thread(
                target=self._lag_sampler, args=(sampler_stop, on_lag_sample), daemon=True
            )
            sampler.start()
        try:
            if mode is ClockMode.VIRTUAL:
                self._run_virtual(t_end)
            else:
                self._run_realtime(t_end)
        finally:
            if sampler is not None:
                sampler_stop.set()
                sampler.join()
            self._mode = ClockMode.VIRTUAL if mode is ClockMode.VIRTUAL else self._mode
        return RunStats(
            events_executed=self._events_executed,
            injected=self._injected,
            t_end=self.now,
            wall_seconds=time.monotonic() - start_wall,
            trace_hash=self._trace.hexdigest(),
            lag=list(self.lag_samples),
        )

    def _drain_inbox(self) -> None:
        self._inbox_signal.clear()
        while self._inbox:
            target, action = self._inbox.popleft()
            stamp = self.effective_sim_time_us()
            self._injected += 1
            self.schedule(stamp, action, target)

    def _dispatch(self, ev: Event) -> None:
        self.now = ev.due
        with self._rt_lock:
            self._executing = True
        self._refresh_next_due()
        try:
            ev.action()
        except Exception as exc:
            raise HandlerError(ev, exc) from exc
        finally:
            with self._rt_lock:
                self._executing = False
        self._events_executed += 1
        self._trace.update(f"{ev.due}:{ev.seq}:{ev.target}\n".encode())

    def _pop_due(self, t_end: SimTime) -> Optional[Event]:
        while self._heap and self._heap[0].due <= t_end:
            ev = heapq.heappop(self._heap)
            self._refresh_next_due()
            if not ev.cancelled:
                return ev
        return None

    def _run_virtual(self, t_end: SimTime) -> None:
        while not self._stop.is_set():
            self._drain_inbox()
            ev = self._pop_due(t_end)
            if ev is None:
                break
            self._dispatch(ev)
        self.now = max(self.now, t_end)

    def _run_realtime(self, t_end: SimTime) -> None:
        while not self._stop.is_set():
            self._drain_inbox()
            head = self._heap[0] if self._heap else None
            next_due = head.due if head is not None and head.due <= t_end else None
            if next_due is None:
                # queue drained (or only future-beyond-end events): idle until
                # t_end of wall time, waking for injected work.
                wait = seconds(t_end) - self.wall_elapsed()
                if wait <= 0:
                    break
                self._inbox_signal.wait(min(wait, 0.05))
                continue
            wait = seconds(next_due) - self.wall_elapsed()
            if wait > 0:
                self._inbox_signal.wait(min(wait, 0.05))
                continue  # re-check: the inbox may have scheduled something earlier
            ev = self._pop_due(t_end)
            if ev is not None:
                self._dispatch(ev)
        self.now = max(self.now, min(t_end, self.effective_sim_time_us()))


def write_lag_csv(path: str, samples: Sequence[LagSample]) -> None:
    """Lag trace CSV: header t_real_s,t_sim_s,offset_s, 6 decimal places."""
    with open(path, "w") as f:
        f.write("t_real_s,t_sim_s,offset_s\n")
        for s in samples:
            f.write(f"{s.t_real:.6f},{s.t_sim:.6f},{s.offset:.6f}\n")
