"""Command-line entry points: run, sweep, scale, gen.

Flags mirror the RunConfig fields; --config loads the same fields from a
JSON file, with command-line flags taking precedence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .backends import BackendDescriptor, SamplingParams
from .engine import EngineConfig
from .harness import (
    BfsInstance,
    GatheringInstance,
    MultiplyInstance,
    RunConfig,
    SortInstance,
    encode_incident,
    generate_instances,
    load_run_config,
    run_experiment,
    scaling_benchmark,
    temperature_sweep,
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file (RunConfig fields)")
    parser.add_argument("--scenario", choices=("gathering", "sorting", "multiplication", "bfs"))
    parser.add_argument("--mode", choices=("coupled", "zero_shot"))
    parser.add_argument("--backend-kind", choices=("mock_oracle", "http_chat"))
    parser.add_argument("--endpoint", help="http_chat endpoint URL")
    parser.add_argument("--model-name")
    parser.add_argument("--error-rate-wrong", type=float)
    parser.add_argument("--error-rate-malformed", type=float)
    parser.add_argument("--backend-seed", type=int)
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--max-tokens", type=int)
    parser.add_argument("--instance-seed", type=int)
    parser.add_argument("--instance-count", type=int)
    parser.add_argument("--repetitions", type=int)
    parser.add_argument("--verification", dest="verification", action="store_true", default=None)
    parser.add_argument("--no-verification", dest="verification", action="store_false")
    parser.add_argument("--max-cycles", type=int)
    parser.add_argument("--workers", type=int, help="engine worker count")
    parser.add_argument("--output-dir")


def _build_config(args: argparse.Namespace, default_scenario: str = "sorting") -> RunConfig:
    if args.config:
        config = load_run_config(args.config)
    else:
        config = RunConfig(scenario=args.scenario or default_scenario)

    backend = config.backend
    for flag, name in (("backend_kind", "kind"), ("endpoint", "endpoint"),
                       ("model_name", "model_name"),
                       ("error_rate_wrong", "error_rate_wrong"),
                       ("error_rate_malformed", "error_rate_malformed"),
                       ("backend_seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            backend = dataclasses.replace(backend, **{name: value})
    sampling = config.sampling
    if args.temperature is not None:
        sampling = dataclasses.replace(sampling, temperature=args.temperature)
    if args.max_tokens is not None:
        sampling = dataclasses.replace(sampling, max_tokens=args.max_tokens)
    engine = config.engine
    if args.workers is not None:
        engine = dataclasses.replace(engine, worker_count=args.workers)

    overrides = {"backend": backend, "sampling": sampling, "engine": engine}
    for flag in ("scenario", "mode", "instance_seed", "instance_count",
                 "repetitions", "verification", "max_cycles", "output_dir"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    return dataclasses.replace(config, **overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    records = run_experiment(config)
    correct = sum(1 for r in records if r.correct)
    print(f"{config.scenario}/{config.mode}: {correct}/{len(records)} correct "
          f"(accuracy {correct / len(records):.3f})")
    print(f"results written to {config.output_dir}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args, default_scenario="gathering")
    results = temperature_sweep(config, tuple(args.temperatures))
    for result in results:
        tag = "on" if result.verification else "off"
        status = "gathered" if result.state.gathered else "not gathered"
        print(f"T={result.temperature:g} verify={tag}: {status} in "
              f"{result.state.cycles} cycles -> {result.csv_path}")
    return 0


def _cmd_scale(args: argparse.Namespace) -> int:
    config = _build_config(args, default_scenario="gathering")
    rows = scaling_benchmark(config, args.worker_counts, args.latency,
                             speeds=args.speeds)
    print(f"{'workers':>8} {'wall_time':>10} {'tokens/min':>12} trace_digest")
    for row in rows:
        print(f"{row.workers:>8} {row.wall_time:>10.3f} {row.tokens_per_min:>12.1f} "
              f"{row.trace_digest}")
    return 0


def _instance_payload(instance) -> dict:
    if isinstance(instance, SortInstance):
        return {"array": list(instance.array)}
    if isinstance(instance, MultiplyInstance):
        return {"multiplicand": instance.multiplicand, "multiplier": instance.multiplier}
    if isinstance(instance, BfsInstance):
        graph = instance.graph()
        return {"node_count": instance.node_count,
                "edges": [list(e) for e in instance.edges],
                "start": instance.start,
                "incident": encode_incident(graph)}
    assert isinstance(instance, GatheringInstance)
    return {"positions": [list(p) for p in instance.positions],
            "speeds": list(instance.speeds)}


def _cmd_gen(args: argparse.Namespace) -> int:
    instances = generate_instances(args.scenario, args.count, args.seed)
    payload = {
        "scenario": args.scenario,
        "seed": args.seed,
        "instances": [_instance_payload(i) for i in instances],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {len(instances)} instances to {args.out}")
    else:
        print(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="agentsim",
        description="Coupled AI / verifier agent simulations on a conservative "
                    "discrete-event engine")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment (coupled or zero-shot)")
    _add_common_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="gathering temperature sweep, verification on and off")
    _add_common_flags(sweep_p)
    sweep_p.add_argument("--temperatures", type=float, nargs="+",
                         default=[0.1, 0.2, 0.3, 0.4, 0.5])
    sweep_p.set_defaults(func=_cmd_sweep)

    scale_p = sub.add_parser("scale", help="worker-scaling benchmark with synthetic latency")
    _add_common_flags(scale_p)
    scale_p.add_argument("--worker-counts", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    scale_p.add_argument("--latency", type=float, default=0.2,
                         help="synthetic seconds per chat call")
    scale_p.add_argument("--speeds", type=int, nargs="+", default=None,
                         help="override per-agent max speeds")
    scale_p.set_defaults(func=_cmd_scale)

    gen_p = sub.add_parser("gen", help="generate and print problem instances")
    gen_p.add_argument("--scenario", required=True,
                       choices=("gathering", "sorting", "multiplication", "bfs"))
    gen_p.add_argument("--count", type=int, default=10)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", type=Path, default=None)
    gen_p.set_defaults(func=_cmd_gen)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
