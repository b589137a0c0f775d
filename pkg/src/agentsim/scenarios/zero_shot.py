"""Zero-shot baseline: one prompt, no decomposition, no verifier correction.

The model is asked to solve the whole task in one go; the answer is parsed
and scored against the corresponding reference oracle.  With second_chance
the model gets exactly one corrective retry when the first answer is wrong
or unparseable.  An unparseable final answer scores incorrect and is
flagged malformed.
"""

from __future__ import annotations

from typing import Any, Union

from ..backends import Backend, BackendDescriptor, SamplingParams
from ..engine import Engine, EngineConfig, Entity, RunReport
from ..parsing import ParseError, parse_anchored, parse_integer_answer, parse_integer_list
from ..prompts import (
    ANSWER_ANCHOR,
    Role,
    ChatMessage,
    ZeroShotBfsTask,
    ZeroShotMultiplyTask,
    ZeroShotSortTask,
    build_prompt,
)
from ..retry import corrective_message
from ..verifiers import check_sorted_permutation, reference_bfs
from .common import AI_AGENT, resolve_backend

__all__ = ["ZeroShotTask", "zero_shot_solve"]

ZeroShotTask = Union[ZeroShotSortTask, ZeroShotMultiplyTask, ZeroShotBfsTask]


def _parse(task: ZeroShotTask, text: str) -> Any:
    if isinstance(task, ZeroShotSortTask):
        return parse_integer_list(text)
    if isinstance(task, ZeroShotMultiplyTask):
        return parse_integer_answer(parse_anchored(text, ANSWER_ANCHOR))
    return parse_integer_list(text)


def _score(task: ZeroShotTask, answer: Any) -> bool:
    if isinstance(task, ZeroShotSortTask):
        return check_sorted_permutation(list(task.array), answer)
    if isinstance(task, ZeroShotMultiplyTask):
        return answer == task.multiplicand * task.multiplier
    return answer == reference_bfs(task.graph(), task.start)


class _Solver(Entity):
    def __init__(self, ctx, task, backend, sampling, second_chance):
        super().__init__(ctx)
        self.task = task
        self.answer: Any = None
        self.correct = False
        self.malformed = False
        self.attempts = 0
        self._backend = backend
        self._sampling = sampling
        self._second_chance = second_chance

    def solve(self, payload):
        messages = list(build_prompt(self.task))
        instruction = messages[-1].content
        budget = 2 if self._second_chance else 1
        for attempt in range(budget):
            text, _ = self._backend.chat(messages, self._sampling,
                                         scope=self.label, task=self.task)
            self.attempts += 1
            try:
                self.answer = _parse(self.task, text)
            except ParseError as exc:
                self.answer = None
                self.malformed = True
                reason = str(exc)
            else:
                self.malformed = False
                self.correct = _score(self.task, self.answer)
                if self.correct:
                    return
                reason = "the answer was checked and found incorrect"
            if attempt + 1 < budget:
                messages.append(ChatMessage(Role.ASSISTANT, text))
                messages.append(ChatMessage(Role.USER, corrective_message(reason, instruction)))


def zero_shot_solve(task: ZeroShotTask,
                    backend: Backend | BackendDescriptor,
                    sampling: SamplingParams | None = None,
                    second_chance: bool = True,
                    *, engine_config: EngineConfig | None = None,
                    ) -> tuple[Any, bool, RunReport]:
    """Solve one task zero-shot; returns (answer, correct, report)."""
    if not isinstance(task, (ZeroShotSortTask, ZeroShotMultiplyTask, ZeroShotBfsTask)):
        raise TypeError(f"unsupported zero-shot task: {type(task).__name__}")
    backend = resolve_backend(backend)
    sampling = sampling or SamplingParams()
    engine = Engine(engine_config or EngineConfig())
    engine.add_entity(AI_AGENT, _Solver, 0, task, backend, sampling, second_chance)
    engine.schedule_initial(engine.config.start_time, "solve", None, (AI_AGENT, 0))
    tokens_before = backend.token_total
    report = engine.run()

    solver = engine.entity(AI_AGENT, 0)
    report.token_counters[backend.label] = backend.token_total - tokens_before
    report.ask_stats["attempts"] = solver.attempts
    report.ask_stats["fell_back"] = 0
    report.ask_stats["malformed"] = int(solver.malformed)
    return solver.answer, solver.correct, report
