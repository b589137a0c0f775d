"""Long multiplication decomposed over one AI entity per multiplier digit.

The verifier entity emits one digit task per multiplier digit (rightmost is
position zero) at the same virtual timestamp, so the per-digit entities run
inside one window.  Each entity answers two chat sub-tasks, the single-digit
product and the power-of-ten shift, each checked against the exact partial
product; the verifier sums the collected partials.
"""

from __future__ import annotations

from ..backends import Backend, BackendDescriptor, SamplingParams
from ..engine import Engine, EngineConfig, Entity, RunReport
from ..parsing import parse_anchored, parse_integer_answer
from ..prompts import ANSWER_ANCHOR, DigitProductTask, PowerShiftTask, build_prompt
from ..retry import ParsedAnswer, ask_with_retry
from ..verifiers import big_sum, reference_partial
from .common import AI_AGENT, COORDINATOR, attach_run_stats, collect_answers, resolve_backend

__all__ = ["multiplication_protocol"]


def _digits_rightmost_first(value: int) -> list[int]:
    return [int(c) for c in str(value)][::-1]


class _Coordinator(Entity):
    def __init__(self, ctx, multiplicand, multiplier, verify):
        super().__init__(ctx)
        self.multiplicand = multiplicand
        self.multiplier = multiplier
        self.digit_tasks = [(digit, position) for position, digit
                            in enumerate(_digits_rightmost_first(multiplier))]
        self.partials: dict[int, int] = {}
        self.product: int | None = None
        self._verify = verify

    def start(self, payload):
        for digit, position in self.digit_tasks:
            self.request_service(self.config.min_delay, "compute_partial",
                                 (digit, position), (AI_AGENT, position))

    def collect_partial(self, payload):
        position, value = payload
        self.partials[position] = value
        if len(self.partials) == len(self.digit_tasks):
            self.product = big_sum([self.partials[p] for p in sorted(self.partials)])
            if self._verify:
                assert self.product == self.multiplicand * self.multiplier


class _DigitMultiplier(Entity):
    def __init__(self, ctx, multiplicand, backend, sampling, verify, max_attempts):
        super().__init__(ctx)
        self.answers: list[ParsedAnswer] = []
        self._multiplicand = multiplicand
        self._backend = backend
        self._sampling = sampling
        self._verify = verify
        self._max_attempts = max_attempts

    def compute_partial(self, payload):
        digit, position = payload
        base = self._ask(DigitProductTask(self._multiplicand, digit),
                         truth=reference_partial(self._multiplicand, digit, 0))
        shifted = self._ask(PowerShiftTask(base, position),
                            truth=reference_partial(self._multiplicand, digit, position))
        self.request_service(self.config.min_delay, "collect_partial",
                             (position, shifted), (COORDINATOR, 0))

    def _ask(self, task, truth: int) -> int:
        validator = None
        if self._verify:
            def validator(value) -> str | None:
                if value != truth:
                    return f"{value} is not the correct result"
                return None
        answer = ask_with_retry(
            self._backend, build_prompt(task),
            parser=lambda text: parse_integer_answer(parse_anchored(text, ANSWER_ANCHOR)),
            validator=validator,
            fallback=lambda: truth,
            max_attempts=self._max_attempts,
            sampling=self._sampling, task=task, scope=self.label)
        self.answers.append(answer)
        return answer.value


def multiplication_protocol(multiplicand: int, multiplier: int,
                            backend: Backend | BackendDescriptor,
                            sampling: SamplingParams | None = None,
                            *, verify: bool = True, max_attempts: int = 2,
                            engine_config: EngineConfig | None = None,
                            ) -> tuple[int, RunReport]:
    """Multiply two non-negative integers through the coupled protocol."""
    if multiplicand < 0 or multiplier < 0:
        raise ValueError("operands must be non-negative")
    backend = resolve_backend(backend)
    sampling = sampling or SamplingParams()
    engine = Engine(engine_config or EngineConfig())
    engine.add_entity(COORDINATOR, _Coordinator, 0, multiplicand, multiplier, verify)
    digit_count = len(_digits_rightmost_first(multiplier))
    for position in range(digit_count):
        engine.add_entity(AI_AGENT, _DigitMultiplier, position, multiplicand,
                          backend, sampling, verify, max_attempts)
    engine.schedule_initial(engine.config.start_time, "start", None, (COORDINATOR, 0))
    tokens_before = backend.token_total
    report = engine.run()

    coordinator = engine.entity(COORDINATOR, 0)
    multipliers = [engine.entity(AI_AGENT, i) for i in range(digit_count)]
    attach_run_stats(report, backend, tokens_before, collect_answers(multipliers))
    assert coordinator.product is not None
    return coordinator.product, report
