"""Conservative discrete-event kernel with windowed parallel execution.

Entities are named, numbered state machines that own event handlers.  A
single virtual clock orders all events; the engine repeatedly takes the
smallest pending timestamp t_min and executes every event with timestamp
inside the half-open window [t_min, t_min + min_delay).  Events targeting
distinct entities may run concurrently inside a window; events for one
entity always run sequentially in the engine's total order

    (time, target.name, target.number, seq)

where seq identifies the scheduling entity and its per-scheduler counter.
Cross-entity scheduling must respect the min_delay lookahead, which is what
makes every window causally safe: nothing executed in a window can schedule
work for a different entity landing inside the same window.

For a fixed configuration and fixed entity behaviour the executed trace,
and therefore the trace digest, is identical for every worker_count.
"""

from __future__ import annotations

import heapq
import json
import logging
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Any, Callable, Sequence

log = logging.getLogger(__name__)

__all__ = [
    "CausalityError",
    "DispatchError",
    "Engine",
    "EngineConfig",
    "EngineError",
    "Entity",
    "EntityId",
    "EventRecord",
    "RegistrationError",
    "RunReport",
    "SchedulingError",
    "TraceEvent",
    "canonical_bytes",
    "payload_digest",
    "trace_digest",
]


class EngineError(Exception):
    """Base class for engine failures."""


class RegistrationError(EngineError):
    """Entity registration violated a precondition."""


class SchedulingError(EngineError):
    """An event could not be scheduled."""


class CausalityError(SchedulingError):
    """A cross-entity event was requested closer than the lookahead."""


class DispatchError(EngineError):
    """An event named a handler its target entity does not have."""


@dataclass(frozen=True, order=True)
class EntityId:
    name: str
    number: int

    def label(self) -> str:
        return f"{self.name}#{self.number}"


# seq namespace used for events scheduled before the run starts.
_ENGINE_SCHEDULER = ("", 0)


@dataclass(frozen=True)
class EngineConfig:
    start_time: float = 0.0
    end_time: float = 100_000.0
    min_delay: float = 1e-4
    worker_count: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.start_time < 0:
            raise ValueError("start_time must be non-negative")
        if not self.start_time < self.end_time:
            raise ValueError("start_time must be strictly before end_time")
        if not self.min_delay > 0:
            raise ValueError("min_delay must be positive")
        if self.worker_count < 1:
            raise ValueError("worker_count must be a positive integer")
        if self.seed < 0:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class EventRecord:
    """A timestamped service request targeting one entity.

    ``seq`` is ``(scheduler_name, scheduler_number, counter)``; the counter
    depends only on scheduling order within the scheduling entity, which is
    what keeps the total order independent of worker_count.
    """

    time: float
    target: EntityId
    handler: str
    payload: Any
    seq: tuple[str, int, int]

    @property
    def sort_key(self) -> tuple:
        return (self.time, self.target.name, self.target.number, *self.seq)


@dataclass(frozen=True)
class TraceEvent:
    t: float
    entity: str
    handler: str
    payload_digest: str


@dataclass
class RunReport:
    """Outcome of one engine run.

    ``trace`` is sorted by the engine total order; ``trace_digest`` is a
    pure function of ``trace``.  ``windows`` records ``(t_min, n_events)``
    per executed window.  ``token_counters`` and ``ask_stats`` are filled
    in by scenario drivers after the run.
    """

    events_executed: int
    trace: list[TraceEvent]
    trace_digest: int
    wall_time: float
    events_scheduled: int
    events_dropped: int
    windows: list[tuple[float, int]]
    token_counters: dict[str, int] = field(default_factory=dict)
    ask_stats: dict[str, int] = field(default_factory=dict)

    def write_trace(self, path: str | Path) -> None:
        """One JSON object per executed event, in trace order."""
        with open(path, "w", encoding="utf-8") as fh:
            for ev in self.trace:
                fh.write(json.dumps(
                    {"t": ev.t, "entity": ev.entity, "handler": ev.handler,
                     "payload_digest": ev.payload_digest},
                    sort_keys=True, separators=(",", ":")))
                fh.write("\n")

    def write_digest(self, path: str | Path) -> None:
        Path(path).write_text(f"{self.trace_digest:016x}\n", encoding="utf-8")


def canonical_bytes(value: Any) -> bytes:
    """Stable byte serialization of a payload.

    Payloads must be built from None, bool, int, float, str, list, tuple
    and dict-with-string-keys; anything else is rejected so scheduling
    mistakes surface early.
    """
    return json.dumps(_canon(value), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True, allow_nan=False).encode("utf-8")


def _canon(value: Any) -> Any:
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    if isinstance(value, dict):
        if not all(isinstance(k, str) for k in value):
            raise TypeError("payload dict keys must be strings")
        return {k: _canon(v) for k, v in value.items()}
    raise TypeError(f"unsupported payload type: {type(value).__name__}")


def payload_digest(value: Any) -> str:
    """64-bit BLAKE2b digest of the canonical payload bytes, as hex."""
    return blake2b(canonical_bytes(value), digest_size=8).hexdigest()


def trace_digest(trace: Sequence[TraceEvent]) -> int:
    """Order-sensitive 64-bit digest of a finalized trace.

    Construction: BLAKE2b-64 over the concatenation of one line per event,
    each line the compact JSON array [t, entity, handler, payload_digest]
    followed by a newline.  Equal traces hash equal on any platform.
    """
    h = blake2b(digest_size=8)
    for ev in trace:
        line = json.dumps([ev.t, ev.entity, ev.handler, ev.payload_digest],
                          separators=(",", ":"), ensure_ascii=True)
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class EntityContext:
    engine: "Engine"
    entity_id: EntityId


class Entity:
    """Base class for simulation entities.

    Public methods of subclasses (not starting with an underscore) are the
    entity's event handlers; keep helpers underscored.  Handlers receive the
    event payload as their single argument.  While a handler is executing,
    ``self.now`` is the event's virtual time and ``request_service`` may be
    used to schedule follow-up events.
    """

    def __init__(self, ctx: EntityContext):
        self._ctx = ctx
        self._emitted: list[EventRecord] = []
        self._seq_counter = 0
        self._now: float | None = None

    @property
    def entity_id(self) -> EntityId:
        return self._ctx.entity_id

    @property
    def name(self) -> str:
        return self._ctx.entity_id.name

    @property
    def number(self) -> int:
        return self._ctx.entity_id.number

    @property
    def label(self) -> str:
        return self._ctx.entity_id.label()

    @property
    def config(self) -> EngineConfig:
        return self._ctx.engine.config

    @property
    def now(self) -> float:
        if self._now is None:
            raise EngineError("virtual time is only defined while executing an event")
        return self._now

    def request_service(self, delay: float, handler: str, payload: Any = None,
                        target: EntityId | tuple[str, int] | None = None) -> None:
        """Schedule ``handler`` on ``target`` at ``now + delay``.

        Cross-entity requests must keep ``delay >= min_delay``; requests to
        ``self`` (``target`` omitted or equal to this entity) may use any
        non-negative delay.  Events landing past end_time are dropped.
        """
        engine = self._ctx.engine
        if self._now is None:
            raise EngineError("request_service may only be called from an executing event")
        target_id = self.entity_id if target is None else _coerce_entity_id(target)
        if delay < 0:
            raise SchedulingError(f"delay must be non-negative, got {delay!r}")
        if target_id != self.entity_id and delay < engine.config.min_delay:
            raise CausalityError(
                f"cross-entity delay {delay!r} from {self.label} to "
                f"{target_id.label()} is below the lookahead {engine.config.min_delay!r}")
        if target_id not in engine._entities:
            raise SchedulingError(f"unknown target entity {target_id.label()}")
        seq = (self.name, self.number, self._seq_counter)
        self._seq_counter += 1
        self._emitted.append(EventRecord(self._now + delay, target_id, handler, payload, seq))


def _coerce_entity_id(target: EntityId | tuple[str, int]) -> EntityId:
    if isinstance(target, EntityId):
        return target
    name, number = target
    return EntityId(name, number)


class Engine:
    """Entity registry, event queue and windowed run loop.

    Not reentrant: one run per engine instance.  All cross-entity effects
    travel through scheduled events; entities never share mutable state.
    """

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self._entities: dict[EntityId, Entity] = {}
        self._handlers: dict[EntityId, dict[str, Callable[[Any], None]]] = {}
        self._queue: list[tuple[tuple, EventRecord]] = []
        self._initial_counter = 0
        self._scheduled = 0
        self._running = False
        self._finished = False

    # -- setup ------------------------------------------------------------

    def add_entity(self, name: str, kind: type[Entity], number: int,
                   *args: Any, **kwargs: Any) -> EntityId:
        """Construct and register an entity; returns its id.

        The entity lands on worker partition ``number % worker_count``.
        """
        if self._running or self._finished:
            raise RegistrationError("cannot add entities once the engine is running")
        if not isinstance(number, int) or number < 0:
            raise RegistrationError("entity number must be a non-negative integer")
        eid = EntityId(name, number)
        if eid in self._entities:
            raise RegistrationError(f"entity {eid.label()} is already registered")
        entity = kind(EntityContext(engine=self, entity_id=eid), *args, **kwargs)
        self._entities[eid] = entity
        self._handlers[eid] = _collect_handlers(entity)
        return eid

    def entity(self, name: str, number: int) -> Entity:
        return self._entities[EntityId(name, number)]

    def schedule_initial(self, time: float, handler: str, payload: Any,
                         target: EntityId | tuple[str, int]) -> EventRecord:
        """Enqueue an event before the run starts."""
        if self._running or self._finished:
            raise SchedulingError("initial events must be scheduled before the run")
        if not (self.config.start_time <= time <= self.config.end_time):
            raise SchedulingError(
                f"initial event time {time!r} outside "
                f"[{self.config.start_time!r}, {self.config.end_time!r}]")
        target_id = _coerce_entity_id(target)
        if target_id not in self._entities:
            raise SchedulingError(f"unknown target entity {target_id.label()}")
        seq = (*_ENGINE_SCHEDULER, self._initial_counter)
        self._initial_counter += 1
        record = EventRecord(time, target_id, handler, payload, seq)
        heapq.heappush(self._queue, (record.sort_key, record))
        self._scheduled += 1
        return record

    # -- run loop ----------------------------------------------------------

    def run(self) -> RunReport:
        """Execute all pending work window by window.

        Terminates when the queue is empty or the next window would start
        at or past end_time; events left pending at that point never run
        and are counted as dropped.
        """
        if self._running:
            raise EngineError("engine is already running")
        if self._finished:
            raise EngineError("engine instances are single-run; build a new one")
        if not self._entities:
            raise EngineError("no entities registered")
        if not self._queue:
            raise EngineError("no initial events scheduled")

        self._running = True
        started = _time.perf_counter()
        trace: list[TraceEvent] = []
        windows: list[tuple[float, int]] = []
        dropped = 0
        end_time = self.config.end_time
        min_delay = self.config.min_delay
        pool: ThreadPoolExecutor | None = None
        if self.config.worker_count > 1:
            pool = ThreadPoolExecutor(max_workers=self.config.worker_count,
                                      thread_name_prefix="agentsim-worker")
        last_t_min = float("-inf")
        try:
            while self._queue:
                t_min = self._queue[0][1].time
                assert t_min > last_t_min, "window lower bounds must strictly increase"
                last_t_min = t_min
                if t_min >= end_time:
                    dropped += len(self._queue)
                    self._queue.clear()
                    break
                window_end = t_min + min_delay
                batch: list[EventRecord] = []
                while self._queue and self._queue[0][1].time < window_end:
                    batch.append(heapq.heappop(self._queue)[1])

                by_partition: dict[int, list[EventRecord]] = {}
                for record in batch:
                    part = record.target.number % self.config.worker_count
                    by_partition.setdefault(part, []).append(record)

                if pool is None or len(by_partition) == 1:
                    results = [self._run_partition(records, window_end)
                               for _, records in sorted(by_partition.items())]
                else:
                    futures = [pool.submit(self._run_partition, records, window_end)
                               for _, records in sorted(by_partition.items())]
                    results = [f.result() for f in futures]

                window_executed: list[EventRecord] = []
                for executed, emitted, part_dropped, part_scheduled in results:
                    window_executed.extend(executed)
                    dropped += part_dropped
                    self._scheduled += part_scheduled
                    for record in emitted:
                        heapq.heappush(self._queue, (record.sort_key, record))
                window_executed.sort(key=lambda r: r.sort_key)
                trace.extend(
                    TraceEvent(r.time, r.target.label(), r.handler, payload_digest(r.payload))
                    for r in window_executed)
                windows.append((t_min, len(window_executed)))
        finally:
            if pool is not None:
                pool.shutdown(wait=False, cancel_futures=True)
            self._running = False
            self._finished = True

        wall = _time.perf_counter() - started
        report = RunReport(
            events_executed=len(trace),
            trace=trace,
            trace_digest=trace_digest(trace),
            wall_time=wall,
            events_scheduled=self._scheduled,
            events_dropped=dropped,
            windows=windows,
        )
        log.debug("run finished: %d events in %d windows, %.3fs",
                  report.events_executed, len(windows), wall)
        return report

    def _run_partition(self, records: list[EventRecord], window_end: float,
                       ) -> tuple[list[EventRecord], list[EventRecord], int, int]:
        """Execute one partition's slice of the current window.

        Self-scheduled events landing inside the window are executed here;
        everything else is handed back for the inter-window merge.  Only
        this worker touches the partition's entities, so no locking.
        """
        local: list[tuple[tuple, EventRecord]] = [(r.sort_key, r) for r in records]
        heapq.heapify(local)
        executed: list[EventRecord] = []
        emitted: list[EventRecord] = []
        dropped = 0
        scheduled = 0
        end_time = self.config.end_time
        while local:
            _, record = heapq.heappop(local)
            entity = self._entities[record.target]
            handler = self._handlers[record.target].get(record.handler)
            if handler is None:
                raise DispatchError(
                    f"entity {record.target.label()} has no handler {record.handler!r}")
            entity._now = record.time
            try:
                handler(record.payload)
            finally:
                entity._now = None
            if entity._emitted:
                for new in entity._emitted:
                    scheduled += 1
                    if new.time > end_time:
                        dropped += 1
                    elif new.target == record.target and new.time < window_end:
                        heapq.heappush(local, (new.sort_key, new))
                    else:
                        # Lookahead guarantees the safe window; double-check it.
                        assert new.target == record.target or new.time >= window_end
                        emitted.append(new)
                entity._emitted.clear()
            executed.append(record)
        return executed, emitted, dropped, scheduled


def _collect_handlers(entity: Entity) -> dict[str, Callable[[Any], None]]:
    handlers: dict[str, Callable[[Any], None]] = {}
    for klass in type(entity).__mro__:
        if klass in (Entity, object):
            continue
        for attr, member in vars(klass).items():
            if attr.startswith("_") or attr in handlers:
                continue
            if callable(member):
                handlers[attr] = getattr(entity, attr)
    return handlers
