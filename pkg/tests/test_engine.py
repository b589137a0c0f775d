"""Engine kernel tests: registration, scheduling, windows, ordering,
determinism, drops and the trace digest."""

from __future__ import annotations

import json
import random

import pytest

from agentsim.engine import (
    CausalityError,
    DispatchError,
    Engine,
    EngineConfig,
    EngineError,
    Entity,
    EntityId,
    RegistrationError,
    SchedulingError,
    TraceEvent,
    payload_digest,
    trace_digest,
)
from helpers import TreeNodeEntity, build_tree_workload

EMPTY_TRACE_DIGEST = 0xE4A6A0577479B2B4


class Recorder(Entity):
    def __init__(self, ctx):
        super().__init__(ctx)
        self.seen = []

    def note(self, payload):
        self.seen.append((self.now, payload))

    def chain(self, payload):
        self.seen.append((self.now, payload))
        if payload > 0:
            self.request_service(0.0, "chain", payload - 1)

    def relay(self, payload):
        delay, target_number = payload
        self.request_service(delay, "note", None, ("rec", target_number))


def make_engine(**overrides) -> Engine:
    return Engine(EngineConfig(**overrides))


class TestRegistration:
    def test_add_entity_returns_id(self):
        engine = make_engine()
        assert engine.add_entity("rec", Recorder, 0) == EntityId("rec", 0)

    def test_five_distinct_numbers(self):
        engine = make_engine()
        ids = [engine.add_entity("SLM-Agent", Recorder, i) for i in range(5)]
        assert len(set(ids)) == 5

    def test_duplicate_pair_rejected(self):
        engine = make_engine()
        engine.add_entity("X", Recorder, 0)
        with pytest.raises(RegistrationError):
            engine.add_entity("X", Recorder, 0)

    def test_negative_number_rejected(self):
        engine = make_engine()
        with pytest.raises(RegistrationError):
            engine.add_entity("X", Recorder, -1)


class TestScheduleInitial:
    def test_seq_counter_increments(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        first = engine.schedule_initial(0.0, "note", None, ("rec", 0))
        second = engine.schedule_initial(0.0, "note", None, ("rec", 0))
        assert first.seq[2] == 0
        assert second.seq[2] == 1

    def test_out_of_bounds_times_rejected(self):
        engine = make_engine(end_time=100.0)
        engine.add_entity("rec", Recorder, 0)
        with pytest.raises(SchedulingError):
            engine.schedule_initial(101.0, "note", None, ("rec", 0))
        with pytest.raises(SchedulingError):
            engine.schedule_initial(-1.0, "note", None, ("rec", 0))

    def test_unknown_target_rejected(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        with pytest.raises(SchedulingError):
            engine.schedule_initial(0.0, "note", None, ("ghost", 0))


class TestRun:
    def test_single_event(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        engine.schedule_initial(0.0, "note", "hello", ("rec", 0))
        report = engine.run()
        assert report.events_executed == 1
        assert engine.entity("rec", 0).seen == [(0.0, "hello")]

    def test_window_batching(self):
        # times {5.0, 5.00005, 6.0} with min_delay 1e-4: first window takes
        # exactly the first two.
        engine = make_engine(min_delay=1e-4)
        engine.add_entity("rec", Recorder, 0)
        engine.add_entity("rec", Recorder, 1)
        engine.schedule_initial(5.0, "note", None, ("rec", 0))
        engine.schedule_initial(5.00005, "note", None, ("rec", 1))
        engine.schedule_initial(6.0, "note", None, ("rec", 0))
        report = engine.run()
        assert report.windows == [(5.0, 2), (6.0, 1)]

    def test_monotone_window_bounds(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        for k in range(10):
            engine.schedule_initial(k * 0.5, "note", k, ("rec", 0))
        report = engine.run()
        bounds = [t for t, _ in report.windows]
        assert bounds == sorted(bounds)
        assert len(set(bounds)) == len(bounds)

    def test_preconditions(self):
        engine = make_engine()
        with pytest.raises(EngineError):
            engine.run()
        engine.add_entity("rec", Recorder, 0)
        with pytest.raises(EngineError):
            engine.run()

    def test_single_run_per_engine(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        engine.schedule_initial(0.0, "note", None, ("rec", 0))
        engine.run()
        with pytest.raises(EngineError):
            engine.run()

    def test_unknown_handler_is_fatal_and_named(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 3)
        engine.schedule_initial(0.0, "missing_handler", None, ("rec", 3))
        with pytest.raises(DispatchError, match=r"rec#3.*missing_handler"):
            engine.run()

    def test_handler_exception_propagates(self):
        class Boom(Entity):
            def go(self, payload):
                raise RuntimeError("bang")

        engine = make_engine()
        engine.add_entity("boom", Boom, 0)
        engine.schedule_initial(0.0, "go", None, ("boom", 0))
        with pytest.raises(RuntimeError, match="bang"):
            engine.run()


class TestRequestService:
    def test_cross_entity_below_lookahead_rejected(self):
        engine = make_engine(min_delay=1e-4)
        engine.add_entity("rec", Recorder, 0)
        engine.add_entity("rec", Recorder, 1)
        engine.schedule_initial(0.0, "relay", (0.00005, 1), ("rec", 0))
        with pytest.raises(CausalityError):
            engine.run()

    def test_cross_entity_at_lookahead_allowed(self):
        engine = make_engine(min_delay=1e-4)
        engine.add_entity("rec", Recorder, 0)
        engine.add_entity("rec", Recorder, 1)
        engine.schedule_initial(5.0, "relay", (1e-4, 1), ("rec", 0))
        report = engine.run()
        assert report.events_executed == 2
        assert engine.entity("rec", 1).seen == [(5.0 + 1e-4, None)]

    def test_self_delay_zero_runs_in_same_window(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        engine.schedule_initial(0.0, "chain", 3, ("rec", 0))
        report = engine.run()
        assert report.events_executed == 4
        # one window, ordered after the current event by seq
        assert report.windows == [(0.0, 4)]
        assert [p for _, p in engine.entity("rec", 0).seen] == [3, 2, 1, 0]

    def test_outside_event_execution_rejected(self):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        with pytest.raises(EngineError):
            engine.entity("rec", 0).request_service(1.0, "note", None)


class TestDropsAndConservation:
    def test_past_end_time_silently_dropped(self):
        engine = make_engine(end_time=10.0)
        engine.add_entity("rec", Recorder, 0)
        engine.add_entity("rec", Recorder, 1)
        engine.schedule_initial(9.5, "relay", (5.0, 1), ("rec", 0))
        report = engine.run()
        assert report.events_executed == 1
        assert report.events_dropped == 1
        assert report.events_scheduled == 2

    def test_event_at_end_time_never_executes(self):
        # schedulable (inclusive bound) but the run stops at t >= end_time
        engine = make_engine(end_time=10.0)
        engine.add_entity("rec", Recorder, 0)
        engine.schedule_initial(0.0, "note", None, ("rec", 0))
        engine.schedule_initial(10.0, "note", None, ("rec", 0))
        report = engine.run()
        assert report.events_executed == 1
        assert report.events_dropped == 1

    def test_conservation(self):
        engine = make_engine(end_time=50.0)
        engine.add_entity("rec", Recorder, 0)
        engine.add_entity("rec", Recorder, 1)
        rng = random.Random(5)
        for _ in range(30):
            engine.schedule_initial(rng.uniform(0, 49), "relay",
                                    (rng.uniform(1, 60), rng.randrange(2)),
                                    ("rec", rng.randrange(2)))
        report = engine.run()
        assert report.events_executed == report.events_scheduled - report.events_dropped


class TestDeterminism:
    def test_trace_identical_across_worker_counts(self):
        digests = set()
        traces = []
        for worker_count in (1, 2, 6):
            nodes, plan, roots = build_tree_workload(800, 12, seed=99, min_delay=1e-4)
            engine = make_engine(worker_count=worker_count)
            for i in range(12):
                engine.add_entity("Node", TreeNodeEntity, i, plan)
            for uid in roots:
                entity, time, _ = nodes[uid]
                engine.schedule_initial(time, "fire", uid, ("Node", entity))
            report = engine.run()
            assert report.events_executed == 800
            digests.add(report.trace_digest)
            traces.append(report.trace)
        assert len(digests) == 1
        assert traces[0] == traces[1] == traces[2]

    def test_trace_sorted_by_total_order(self):
        nodes, plan, roots = build_tree_workload(400, 8, seed=3, min_delay=1e-4)
        engine = make_engine(worker_count=4)
        for i in range(8):
            engine.add_entity("Node", TreeNodeEntity, i, plan)
        for uid in roots:
            entity, time, _ = nodes[uid]
            engine.schedule_initial(time, "fire", uid, ("Node", entity))
        report = engine.run()
        keys = [(ev.t, ev.entity) for ev in report.trace]
        assert keys == sorted(keys)


class TestCausalityAudit:
    def test_children_never_execute_before_parents(self):
        n_events, n_entities = 1000, 10
        nodes, plan, roots = build_tree_workload(n_events, n_entities, seed=11,
                                                 min_delay=1e-4)
        engine = make_engine(worker_count=4, min_delay=1e-4)
        for i in range(n_entities):
            engine.add_entity("Node", TreeNodeEntity, i, plan)
        for uid in roots:
            entity, time, _ = nodes[uid]
            engine.schedule_initial(time, "fire", uid, ("Node", entity))
        report = engine.run()
        assert report.events_executed == n_events

        position = {}
        for idx, ev in enumerate(report.trace):
            position.setdefault(ev.payload_digest, idx)
        for uid, (entity, time, parent_uid) in enumerate(nodes):
            if parent_uid is None:
                continue
            p_entity, p_time, _ = nodes[parent_uid]
            assert position[payload_digest(uid)] > position[payload_digest(parent_uid)]
            assert time >= p_time
            if entity != p_entity:
                assert time >= p_time + 1e-4


class TestTraceDigest:
    def test_empty_trace_constant(self):
        assert trace_digest([]) == EMPTY_TRACE_DIGEST

    def test_equal_traces_equal_digests(self):
        trace = [TraceEvent(1.0, "a#0", "h", payload_digest((1, 2)))]
        assert trace_digest(trace) == trace_digest(list(trace))

    def test_payload_byte_flip_changes_digest(self):
        a = [TraceEvent(1.0, "a#0", "h", payload_digest("payload-a"))]
        b = [TraceEvent(1.0, "a#0", "h", payload_digest("payload-b"))]
        assert trace_digest(a) != trace_digest(b)

    def test_order_sensitive(self):
        e1 = TraceEvent(1.0, "a#0", "h", payload_digest(1))
        e2 = TraceEvent(2.0, "a#0", "h", payload_digest(2))
        assert trace_digest([e1, e2]) != trace_digest([e2, e1])

    def test_payload_digest_rejects_exotic_types(self):
        with pytest.raises(TypeError):
            payload_digest(object())


class TestExports:
    def test_trace_and_digest_files(self, tmp_path):
        engine = make_engine()
        engine.add_entity("rec", Recorder, 0)
        engine.schedule_initial(1.5, "note", [1, 2], ("rec", 0))
        report = engine.run()
        trace_path = tmp_path / "run.trace.jsonl"
        digest_path = tmp_path / "run.digest"
        report.write_trace(trace_path)
        report.write_digest(digest_path)
        lines = trace_path.read_text().splitlines()
        assert len(lines) == 1
        obj = json.loads(lines[0])
        assert obj == {"t": 1.5, "entity": "rec#0", "handler": "note",
                       "payload_digest": payload_digest([1, 2])}
        assert digest_path.read_text() == f"{report.trace_digest:016x}\n"


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"start_time": 5.0, "end_time": 5.0},
        {"min_delay": 0.0},
        {"worker_count": 0},
        {"start_time": -1.0},
    ])
    def test_bad_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            EngineConfig(**kwargs)
