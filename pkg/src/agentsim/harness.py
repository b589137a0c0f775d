"""Experiment driver: instance generation, batch runs, result and trace
emission, temperature sweeps and worker-scaling benchmarks.

Everything is deterministic from the configured seeds: instances come from
``instance_seed``, and each (instance, repetition) run derives its own
backend seed so repetitions are independent but reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import random
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Sequence, Union

from .backends import BackendDescriptor, SamplingParams, make_backend
from .engine import EngineConfig, RunReport
from .graphs import Graph, encode_incident, gnp_random_graph, graph_from_edges
from .prompts import ZeroShotBfsTask, ZeroShotMultiplyTask, ZeroShotSortTask
from .scenarios import (
    GatheringState,
    bfs_protocol,
    gathering_protocol,
    multiplication_protocol,
    sorting_protocol,
    zero_shot_solve,
)
from .verifiers import check_sorted_permutation, reference_bfs

log = logging.getLogger(__name__)

__all__ = [
    "BfsInstance",
    "DEFAULT_GATHERING_POSITIONS",
    "DEFAULT_GATHERING_SPEEDS",
    "GatheringInstance",
    "MultiplyInstance",
    "ResultsRecord",
    "RunConfig",
    "ScaleRow",
    "SortInstance",
    "SweepResult",
    "encode_incident",
    "generate_instances",
    "load_run_config",
    "run_config_from_dict",
    "run_experiment",
    "scaling_benchmark",
    "temperature_sweep",
    "write_path_csv",
]

SCENARIOS = ("gathering", "sorting", "multiplication", "bfs")
MODES = ("coupled", "zero_shot")

# The fixed five-agent gathering instance used throughout: pentagon corners
# with one speed per agent.
DEFAULT_GATHERING_POSITIONS = ((0, 108), (0, 462), (335, 571), (543, 285), (335, 0))
DEFAULT_GATHERING_SPEEDS = (10, 15, 20, 25, 30)


@dataclass(frozen=True)
class SortInstance:
    array: tuple[int, ...]


@dataclass(frozen=True)
class MultiplyInstance:
    multiplicand: int
    multiplier: int


@dataclass(frozen=True)
class BfsInstance:
    node_count: int
    edges: tuple[tuple[int, int], ...]
    start: int = 0

    def graph(self) -> Graph:
        return graph_from_edges(self.node_count, self.edges)


@dataclass(frozen=True)
class GatheringInstance:
    positions: tuple[tuple[int, int], ...] = DEFAULT_GATHERING_POSITIONS
    speeds: tuple[int, ...] = DEFAULT_GATHERING_SPEEDS


Instance = Union[SortInstance, MultiplyInstance, BfsInstance, GatheringInstance]


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    mode: str = "coupled"
    backend: BackendDescriptor = field(default_factory=BackendDescriptor)
    sampling: SamplingParams = field(default_factory=SamplingParams)
    engine: EngineConfig = field(default_factory=EngineConfig)
    instance_seed: int = 0
    instance_count: int = 10
    repetitions: int = 1
    verification: bool = True
    output_dir: str = "out"
    max_cycles: int | None = None  # gathering only; None runs to end_time

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "zero_shot" and self.scenario == "gathering":
            raise ValueError("zero_shot mode is only valid for sorting, "
                             "multiplication and bfs")
        if self.instance_count < 1 or self.repetitions < 1:
            raise ValueError("instance_count and repetitions must be >= 1")


@dataclass
class ResultsRecord:
    scenario: str
    mode: str
    instance: str
    repetition: int
    correct: bool
    attempts: int
    fell_back_count: int
    events_executed: int
    wall_time: float
    tokens: int
    error: str = ""


def _derive_seed(base: int, *parts: object) -> int:
    text = "|".join([str(base), *[str(p) for p in parts]])
    return int.from_bytes(blake2b(text.encode(), digest_size=8).digest(), "big")


def generate_instances(scenario: str, count: int, seed: int,
                       *, gnp_p: float = 0.3, node_count: int = 10,
                       digit_range: tuple[int, int] = (4, 6),
                       ) -> list[Instance]:
    """Deterministic instance set for one scenario.

    Sorting: arrays of ten integers below one million.  Multiplication:
    pairs of 4-6 digit integers (configurable).  Bfs: G(node_count, gnp_p)
    samples.  Gathering: the fixed pentagon instance, repeated.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    instances: list[Instance] = []
    for _ in range(count):
        if scenario == "sorting":
            instances.append(SortInstance(
                tuple(rng.randrange(0, 10 ** 6) for _ in range(10))))
        elif scenario == "multiplication":
            lo, hi = digit_range
            def operand() -> int:
                digits = rng.randint(lo, hi)
                return rng.randint(10 ** (digits - 1), 10 ** digits - 1)
            instances.append(MultiplyInstance(operand(), operand()))
        elif scenario == "bfs":
            graph = gnp_random_graph(node_count, gnp_p, rng)
            edges = tuple((u, v) for u in graph for v in graph[u] if u < v)
            instances.append(BfsInstance(node_count, edges))
        elif scenario == "gathering":
            instances.append(GatheringInstance())
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
    return instances


def _run_coupled(config: RunConfig, instance: Instance, backend) -> tuple[bool, RunReport]:
    if isinstance(instance, SortInstance):
        result, report = sorting_protocol(
            list(instance.array), backend, config.sampling,
            verify=config.verification, engine_config=config.engine)
        return check_sorted_permutation(list(instance.array), result), report
    if isinstance(instance, MultiplyInstance):
        product, report = multiplication_protocol(
            instance.multiplicand, instance.multiplier, backend, config.sampling,
            verify=config.verification, engine_config=config.engine)
        return product == instance.multiplicand * instance.multiplier, report
    if isinstance(instance, BfsInstance):
        graph = instance.graph()
        order, report = bfs_protocol(
            graph, instance.start, backend, config.sampling,
            verify=config.verification, engine_config=config.engine)
        return order == reference_bfs(graph, instance.start), report
    state, report = gathering_protocol(
        len(instance.positions), instance.positions, instance.speeds,
        backend, config.sampling, verify=config.verification,
        max_cycles=config.max_cycles, engine_config=config.engine)
    return state.gathered, report


def _run_zero_shot(config: RunConfig, instance: Instance, backend) -> tuple[bool, RunReport]:
    if isinstance(instance, SortInstance):
        task = ZeroShotSortTask(instance.array)
    elif isinstance(instance, MultiplyInstance):
        task = ZeroShotMultiplyTask(instance.multiplicand, instance.multiplier)
    elif isinstance(instance, BfsInstance):
        task = ZeroShotBfsTask(instance.edges, instance.node_count, instance.start)
    else:
        raise ValueError("zero_shot mode does not support gathering")
    _, correct, report = zero_shot_solve(task, backend, config.sampling,
                                         second_chance=True,
                                         engine_config=config.engine)
    return correct, report


def run_experiment(config: RunConfig) -> list[ResultsRecord]:
    """Run every (instance, repetition) pair and persist results.

    Writes results.jsonl (one record per run), summary.csv (accuracy for
    this scenario and mode) and per-run trace and digest files under
    traces/ inside the configured output directory.
    """
    out_dir = Path(config.output_dir)
    traces_dir = out_dir / "traces"
    try:
        traces_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create output directory {out_dir}: {exc}") from exc

    instances = generate_instances(config.scenario, config.instance_count,
                                   config.instance_seed)
    records: list[ResultsRecord] = []
    for index, instance in enumerate(instances):
        instance_id = f"{config.scenario}-{config.instance_seed}-{index:03d}"
        for rep in range(config.repetitions):
            descriptor = dataclasses.replace(
                config.backend,
                seed=_derive_seed(config.backend.seed, instance_id, rep))
            backend = make_backend(descriptor)
            try:
                if config.mode == "coupled":
                    correct, report = _run_coupled(config, instance, backend)
                else:
                    correct, report = _run_zero_shot(config, instance, backend)
                error = ""
            except Exception as exc:  # backend failures score incorrect
                log.warning("run %s rep %d failed: %s", instance_id, rep, exc)
                records.append(ResultsRecord(
                    config.scenario, config.mode, instance_id, rep,
                    correct=False, attempts=0, fell_back_count=0,
                    events_executed=0, wall_time=0.0, tokens=0,
                    error=str(exc)))
                continue
            run_name = f"{instance_id}-r{rep:03d}"
            report.write_trace(traces_dir / f"{run_name}.trace.jsonl")
            report.write_digest(traces_dir / f"{run_name}.digest")
            records.append(ResultsRecord(
                config.scenario, config.mode, instance_id, rep,
                correct=correct,
                attempts=report.ask_stats.get("attempts", 0),
                fell_back_count=report.ask_stats.get("fell_back", 0),
                events_executed=report.events_executed,
                wall_time=report.wall_time,
                tokens=sum(report.token_counters.values()),
                error=error))

    with open(out_dir / "results.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(dataclasses.asdict(record), sort_keys=True))
            fh.write("\n")
    _write_summary(out_dir / "summary.csv", records)
    return records


def _write_summary(path: Path, records: Sequence[ResultsRecord]) -> None:
    groups: dict[tuple[str, str], list[ResultsRecord]] = {}
    for record in records:
        groups.setdefault((record.scenario, record.mode), []).append(record)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "mode", "instances", "correct", "accuracy"])
        for (scenario, mode), group in sorted(groups.items()):
            correct = sum(1 for r in group if r.correct)
            writer.writerow([scenario, mode, len(group), correct,
                             f"{correct / len(group):.4f}"])


@dataclass
class SweepResult:
    temperature: float
    verification: bool
    csv_path: Path
    state: GatheringState
    report: RunReport


def write_path_csv(path: Path, state: GatheringState,
                   initial_positions: Sequence[tuple[int, int]],
                   start_time: float = 0.0) -> None:
    """Per-agent path trace; one initial row per agent plus one row per step."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "agent", "x", "y", "proposed_x", "proposed_y", "corrected"])
        for agent, (x, y) in enumerate(initial_positions):
            writer.writerow([start_time, agent, x, y, x, y, "false"])
        for rec in state.step_log:
            writer.writerow([rec.time, rec.agent, rec.accepted.x, rec.accepted.y,
                             rec.proposed.x, rec.proposed.y,
                             "true" if rec.corrected else "false"])


def temperature_sweep(config: RunConfig,
                      temperatures: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5),
                      *, max_cycles: int = 60) -> list[SweepResult]:
    """Gathering runs across temperatures, verification on and off.

    Each run emits a path CSV for plotting; with a mock backend the paths
    do not depend on temperature (mock replies are seed-driven), but the
    file layout matches what an HTTP backend would produce.
    """
    if config.scenario != "gathering":
        raise ValueError("temperature_sweep requires the gathering scenario")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = generate_instances("gathering", 1, config.instance_seed)[0]
    results: list[SweepResult] = []
    for temperature in temperatures:
        sampling = dataclasses.replace(config.sampling, temperature=temperature)
        for verification in (True, False):
            backend = make_backend(config.backend)
            state, report = gathering_protocol(
                len(instance.positions), instance.positions, instance.speeds,
                backend, sampling, verify=verification,
                max_cycles=config.max_cycles or max_cycles,
                engine_config=config.engine)
            tag = "on" if verification else "off"
            csv_path = out_dir / f"paths_t{temperature:g}_verify_{tag}.csv"
            write_path_csv(csv_path, state, instance.positions,
                           config.engine.start_time)
            results.append(SweepResult(temperature, verification, csv_path,
                                       state, report))
    return results


@dataclass
class ScaleRow:
    workers: int
    wall_time: float
    tokens_per_min: float
    trace_digest: str


def scaling_benchmark(config: RunConfig, worker_counts: Sequence[int],
                      synthetic_latency: float,
                      *, speeds: Sequence[int] | None = None) -> list[ScaleRow]:
    """Gathering runs at several worker counts with simulated inference cost.

    The mock backend sleeps ``synthetic_latency`` seconds per chat call, so
    wall time reflects how many calls fit in one window per worker.  Traces
    must not depend on the worker count; the digest column lets callers
    check that.
    """
    if config.backend.kind != "mock_oracle":
        raise ValueError("scaling_benchmark requires the mock backend")
    if not synthetic_latency > 0:
        raise ValueError("synthetic_latency must be positive")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = generate_instances("gathering", 1, config.instance_seed)[0]
    if speeds is not None:
        instance = GatheringInstance(instance.positions, tuple(speeds))
    rows: list[ScaleRow] = []
    for workers in worker_counts:
        engine_config = dataclasses.replace(config.engine, worker_count=workers)
        backend = make_backend(config.backend, latency=synthetic_latency)
        state, report = gathering_protocol(
            len(instance.positions), instance.positions, instance.speeds,
            backend, config.sampling, verify=config.verification,
            max_cycles=config.max_cycles, engine_config=engine_config)
        tokens = sum(report.token_counters.values())
        rows.append(ScaleRow(
            workers=workers,
            wall_time=report.wall_time,
            tokens_per_min=tokens / (report.wall_time / 60.0),
            trace_digest=f"{report.trace_digest:016x}"))
    with open(out_dir / "scale.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["workers", "wall_time", "tokens_per_min", "trace_digest"])
        for row in rows:
            writer.writerow([row.workers, f"{row.wall_time:.6f}",
                             f"{row.tokens_per_min:.2f}", row.trace_digest])
    return rows


def run_config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a declarative mapping (the config file format).

    Keys mirror RunConfig field names; backend, sampling and engine are
    nested objects with their dataclass field names.
    """
    data = dict(data)
    backend = BackendDescriptor(**data.pop("backend", {}))
    sampling = SamplingParams(**data.pop("sampling", {}))
    engine = EngineConfig(**data.pop("engine", {}))
    return RunConfig(backend=backend, sampling=sampling, engine=engine, **data)


def load_run_config(path: str | Path) -> RunConfig:
    return run_config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
