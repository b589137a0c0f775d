"""Gathering on the Euclidean plane.

A verifier entity recomputes the optimal gathering position (geometric
median of the accepted agent positions, rounded to integers) each cycle and
fans out one movement question per AI agent at the same virtual timestamp,
so the chat calls of one cycle run inside a single window.  Each agent's
proposal is speed-checked; with verification on a violating proposal earns
a corrective retry and finally a clamped step toward the median.  The run
ends when every agent is strictly within its own max speed of the optimum,
or after ``max_cycles`` when given.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..backends import Backend, BackendDescriptor, SamplingParams
from ..engine import Engine, EngineConfig, Entity, RunReport
from ..parsing import parse_anchored, parse_coordinate_pair
from ..prompts import POSITION_ANCHOR, GatheringStepTask, build_prompt
from ..retry import ParsedAnswer, ask_with_retry
from ..verifiers import Point2D, clamp_move, dist, geometric_median
from .common import AI_AGENT, COORDINATOR, attach_run_stats, collect_answers, resolve_backend

__all__ = ["GatheringState", "StepRecord", "gathering_protocol"]


@dataclass(frozen=True)
class StepRecord:
    """One accepted movement step; ``accepted`` is the possibly corrected point."""

    time: float
    agent: int
    old: Point2D
    proposed: Point2D
    accepted: Point2D

    @property
    def corrected(self) -> bool:
        return self.accepted != self.proposed


@dataclass
class GatheringState:
    positions: list[Point2D]
    max_speeds: list[int]
    optimal_position: Point2D | None
    reached_flags: list[bool]
    step_log: list[StepRecord]
    cycles: int
    answers: list[ParsedAnswer] = field(default_factory=list)

    @property
    def gathered(self) -> bool:
        return all(self.reached_flags)


class _Coordinator(Entity):
    def __init__(self, ctx, positions, speeds, step_interval, max_cycles):
        super().__init__(ctx)
        self.positions = [Point2D(*p) for p in positions]
        self.speeds = list(speeds)
        self.reached = [False] * len(self.positions)
        self.step_log: list[StepRecord] = []
        self.optimal: Point2D | None = None
        self.cycles = 0
        self._updates = 0
        self._step_interval = step_interval
        self._max_cycles = max_cycles

    def calculate_optimal_gathering_position(self, payload):
        out_of_cycles = self._max_cycles is not None and self.cycles >= self._max_cycles
        if all(self.reached) or out_of_cycles:
            for i in range(len(self.positions)):
                self.request_service(self._step_interval, "dump_stats", None, (AI_AGENT, i))
            return
        self.cycles += 1
        median = geometric_median(self.positions)
        self.optimal = Point2D(round(median.point[0]), round(median.point[1]))
        for i in range(len(self.positions)):
            self.request_service(self._step_interval, "choose_next_step",
                                 self.optimal.as_tuple(), (AI_AGENT, i))

    def update_non_slm_copy_of_agent_pos(self, payload):
        agent, old, proposed, accepted, reached = payload
        self.positions[agent] = Point2D(*accepted)
        self.reached[agent] = reached
        self.step_log.append(StepRecord(self.now, agent, Point2D(*old),
                                        Point2D(*proposed), Point2D(*accepted)))
        self._updates += 1
        if self._updates == len(self.positions):
            self._updates = 0
            self.request_service(self._step_interval,
                                 "calculate_optimal_gathering_position", None)


class _Mover(Entity):
    def __init__(self, ctx, position, max_speed, backend, sampling, verify,
                 max_attempts, step_interval):
        super().__init__(ctx)
        self.position = Point2D(*position)
        self.max_speed = max_speed
        self.answers: list[ParsedAnswer] = []
        self.final_position: tuple[int, int] | None = None
        self._backend = backend
        self._sampling = sampling
        self._verify = verify
        self._max_attempts = max_attempts
        self._step_interval = step_interval

    def choose_next_step(self, payload):
        goal = Point2D(*payload)
        old = self.position
        task = GatheringStepTask(old.as_tuple(), goal.as_tuple(), self.max_speed)
        validator = self._speed_validator(old) if self._verify else None
        answer = ask_with_retry(
            self._backend, build_prompt(task),
            parser=lambda text: parse_coordinate_pair(parse_anchored(text, POSITION_ANCHOR)),
            validator=validator,
            fallback=lambda: clamp_move(old, goal, self.max_speed).as_tuple(),
            max_attempts=self._max_attempts,
            sampling=self._sampling, task=task, scope=self.label)
        self.answers.append(answer)
        accepted = Point2D(*answer.value)
        if answer.fell_back and answer.rejected_values:
            proposed = Point2D(*answer.rejected_values[-1])
        else:
            proposed = accepted
        self.position = accepted
        reached = dist(accepted, goal) < self.max_speed
        self.request_service(
            self._step_interval, "update_non_slm_copy_of_agent_pos",
            (self.number, old.as_tuple(), proposed.as_tuple(), accepted.as_tuple(), reached),
            (COORDINATOR, 0))

    def dump_stats(self, payload):
        self.final_position = self.position.as_tuple()

    def _speed_validator(self, old: Point2D):
        def check(value) -> str | None:
            point = Point2D(*value)
            d = dist(old, point)
            if d <= self.max_speed:
                return None
            return (f"the move from ({old.x}, {old.y}) to ({point.x}, {point.y}) "
                    f"covers {d:.2f} units, more than the maximum {self.max_speed}")
        return check


def gathering_protocol(n_agents: int,
                       init_positions: Sequence[tuple[int, int]],
                       speeds: Sequence[int],
                       backend: Backend | BackendDescriptor,
                       sampling: SamplingParams | None = None,
                       *, verify: bool = True, max_attempts: int = 2,
                       max_cycles: int | None = None,
                       step_interval: float = 1.0,
                       engine_config: EngineConfig | None = None,
                       ) -> tuple[GatheringState, RunReport]:
    """Run the gathering protocol; returns final state and the run report."""
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    if len(init_positions) != n_agents or len(speeds) != n_agents:
        raise ValueError("init_positions and speeds must match n_agents")
    backend = resolve_backend(backend)
    sampling = sampling or SamplingParams()
    engine = Engine(engine_config or EngineConfig())
    engine.add_entity(COORDINATOR, _Coordinator, 0, init_positions, speeds,
                      step_interval, max_cycles)
    for i in range(n_agents):
        engine.add_entity(AI_AGENT, _Mover, i, init_positions[i], speeds[i],
                          backend, sampling, verify, max_attempts, step_interval)
    engine.schedule_initial(engine.config.start_time,
                            "calculate_optimal_gathering_position",
                            None, (COORDINATOR, 0))
    tokens_before = backend.token_total
    report = engine.run()

    coordinator = engine.entity(COORDINATOR, 0)
    movers = [engine.entity(AI_AGENT, i) for i in range(n_agents)]
    state = GatheringState(
        positions=list(coordinator.positions),
        max_speeds=list(coordinator.speeds),
        optimal_position=coordinator.optimal,
        reached_flags=list(coordinator.reached),
        step_log=list(coordinator.step_log),
        cycles=coordinator.cycles,
        answers=collect_answers(movers),
    )
    attach_run_stats(report, backend, tokens_before, state.answers)
    return state, report
