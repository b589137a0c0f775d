"""Selection-sort style sorting protocol.

The verifier entity holds the unsorted and sorted arrays; each round the AI
entity is asked for the smallest element of the current unsorted array, the
answer is checked against a linear-scan reference (with corrective retries
and a verifier fallback), and the element moves to the sorted array.
"""

from __future__ import annotations

from typing import Sequence

from ..backends import Backend, BackendDescriptor, SamplingParams
from ..engine import Engine, EngineConfig, Entity, RunReport
from ..parsing import parse_anchored, parse_integer_answer
from ..prompts import ANSWER_ANCHOR, MinSelectTask, build_prompt
from ..retry import ParsedAnswer, ask_with_retry
from ..verifiers import reference_min
from .common import AI_AGENT, COORDINATOR, attach_run_stats, resolve_backend

__all__ = ["sorting_protocol"]


class _Coordinator(Entity):
    def __init__(self, ctx, array):
        super().__init__(ctx)
        self.unsorted = list(array)
        self.sorted: list[int] = []

    def next_round(self, payload):
        if not self.unsorted:
            return
        self.request_service(self.config.min_delay, "select_min",
                             tuple(self.unsorted), (AI_AGENT, 0))

    def collect_min(self, payload):
        value = payload
        if value in self.unsorted:
            self.unsorted.remove(value)
        else:
            # Unverified runs may claim an absent value; drop the true min
            # so the round count stays bounded.
            self.unsorted.remove(reference_min(self.unsorted)[0])
        self.sorted.append(value)
        self.request_service(self.config.min_delay, "next_round", None)


class _MinSelector(Entity):
    def __init__(self, ctx, backend, sampling, verify, max_attempts):
        super().__init__(ctx)
        self.answers: list[ParsedAnswer] = []
        self._backend = backend
        self._sampling = sampling
        self._verify = verify
        self._max_attempts = max_attempts

    def select_min(self, payload):
        array = tuple(payload)
        task = MinSelectTask(array)
        truth = reference_min(array)[0]
        validator = None
        if self._verify:
            def validator(value) -> str | None:
                if value not in array:
                    return f"{value} is not an element of the array"
                if value != truth:
                    return f"{value} is not the smallest element of the array"
                return None
        answer = ask_with_retry(
            self._backend, build_prompt(task),
            parser=lambda text: parse_integer_answer(parse_anchored(text, ANSWER_ANCHOR)),
            validator=validator,
            fallback=lambda: truth,
            max_attempts=self._max_attempts,
            sampling=self._sampling, task=task, scope=self.label)
        self.answers.append(answer)
        self.request_service(self.config.min_delay, "collect_min",
                             answer.value, (COORDINATOR, 0))


def sorting_protocol(array: Sequence[int],
                     backend: Backend | BackendDescriptor,
                     sampling: SamplingParams | None = None,
                     *, verify: bool = True, max_attempts: int = 2,
                     engine_config: EngineConfig | None = None,
                     ) -> tuple[list[int], RunReport]:
    """Sort ``array`` through the coupled protocol; empty input is allowed."""
    backend = resolve_backend(backend)
    sampling = sampling or SamplingParams()
    engine = Engine(engine_config or EngineConfig())
    engine.add_entity(COORDINATOR, _Coordinator, 0, array)
    engine.add_entity(AI_AGENT, _MinSelector, 0, backend, sampling, verify, max_attempts)
    engine.schedule_initial(engine.config.start_time, "next_round", None, (COORDINATOR, 0))
    tokens_before = backend.token_total
    report = engine.run()

    coordinator = engine.entity(COORDINATOR, 0)
    selector = engine.entity(AI_AGENT, 0)
    attach_run_stats(report, backend, tokens_before, selector.answers)
    return list(coordinator.sorted), report
