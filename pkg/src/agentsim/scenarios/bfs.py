"""Breadth-first traversal where the AI entity answers only the visited-set
membership question; queue discipline stays with the verifier entity.

Each expansion pops the queue head, appends it to the visited order, and
fans out one membership question per neighbor (ascending).  A node that is
reported unvisited joins the queue unless it was ever enqueued before; that
guard keeps the protocol terminating even when answers are wrong.
"""

from __future__ import annotations

from collections import deque
from typing import Mapping, Sequence

from ..backends import Backend, BackendDescriptor, SamplingParams
from ..engine import Engine, EngineConfig, Entity, RunReport
from ..parsing import parse_anchored, parse_bool_answer
from ..prompts import ANSWER_ANCHOR, BfsMembershipTask, build_prompt
from ..retry import ParsedAnswer, ask_with_retry
from .common import AI_AGENT, COORDINATOR, attach_run_stats, resolve_backend

__all__ = ["bfs_protocol"]


class _Coordinator(Entity):
    def __init__(self, ctx, graph, start):
        super().__init__(ctx)
        self.graph = {node: tuple(neighbors) for node, neighbors in graph.items()}
        self.queue: deque[int] = deque([start])
        self.enqueued = {start}
        self.visited: list[int] = []
        self._pending = 0

    def expand_next(self, payload):
        if not self.queue:
            return
        node = self.queue.popleft()
        self.visited.append(node)
        neighbors = sorted(self.graph[node])
        if not neighbors:
            self.request_service(self.config.min_delay, "expand_next", None)
            return
        self._pending = len(neighbors)
        snapshot = tuple(self.visited)
        for neighbor in neighbors:
            self.request_service(self.config.min_delay, "membership_query",
                                 (neighbor, snapshot), (AI_AGENT, 0))

    def membership_reply(self, payload):
        node, in_visited = payload
        if not in_visited and node not in self.enqueued:
            self.enqueued.add(node)
            self.queue.append(node)
        self._pending -= 1
        if self._pending == 0:
            self.request_service(self.config.min_delay, "expand_next", None)


class _MembershipChecker(Entity):
    def __init__(self, ctx, backend, sampling, verify, max_attempts):
        super().__init__(ctx)
        self.answers: list[ParsedAnswer] = []
        self._backend = backend
        self._sampling = sampling
        self._verify = verify
        self._max_attempts = max_attempts

    def membership_query(self, payload):
        node, visited = payload
        visited = tuple(visited)
        task = BfsMembershipTask(node, visited)
        truth = node in visited
        validator = None
        if self._verify:
            def validator(value) -> str | None:
                if value != truth:
                    return (f"node {node} is {'already' if truth else 'not'} "
                            "in the Visited list")
                return None
        answer = ask_with_retry(
            self._backend, build_prompt(task),
            parser=lambda text: parse_bool_answer(parse_anchored(text, ANSWER_ANCHOR)),
            validator=validator,
            fallback=lambda: truth,
            max_attempts=self._max_attempts,
            sampling=self._sampling, task=task, scope=self.label)
        self.answers.append(answer)
        self.request_service(self.config.min_delay, "membership_reply",
                             (node, answer.value), (COORDINATOR, 0))


def bfs_protocol(graph: Mapping[int, Sequence[int]], start: int,
                 backend: Backend | BackendDescriptor,
                 sampling: SamplingParams | None = None,
                 *, verify: bool = True, max_attempts: int = 2,
                 engine_config: EngineConfig | None = None,
                 ) -> tuple[list[int], RunReport]:
    """Traverse ``graph`` from ``start``; returns the visited order."""
    if start not in graph:
        raise ValueError(f"start node {start!r} not in graph")
    backend = resolve_backend(backend)
    sampling = sampling or SamplingParams()
    engine = Engine(engine_config or EngineConfig())
    engine.add_entity(COORDINATOR, _Coordinator, 0, graph, start)
    engine.add_entity(AI_AGENT, _MembershipChecker, 0, backend, sampling, verify, max_attempts)
    engine.schedule_initial(engine.config.start_time, "expand_next", None, (COORDINATOR, 0))
    tokens_before = backend.token_total
    report = engine.run()

    coordinator = engine.entity(COORDINATOR, 0)
    checker = engine.entity(AI_AGENT, 0)
    attach_run_stats(report, backend, tokens_before, checker.answers)
    return list(coordinator.visited), report
