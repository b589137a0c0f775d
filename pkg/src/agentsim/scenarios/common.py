"""Bits shared by the scenario protocols."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..backends import Backend, BackendDescriptor, make_backend
from ..engine import RunReport
from ..retry import ParsedAnswer

COORDINATOR = "Non-AI-Agent"
AI_AGENT = "SLM-Agent"


def resolve_backend(backend: Backend | BackendDescriptor) -> Backend:
    if isinstance(backend, BackendDescriptor):
        return make_backend(backend)
    return backend


def attach_run_stats(report: RunReport, backend: Backend, tokens_before: int,
                     answers: Iterable[ParsedAnswer]) -> None:
    """Fill token_counters and ask_stats from the run's backend activity."""
    answers = list(answers)
    report.token_counters[backend.label] = backend.token_total - tokens_before
    report.ask_stats["attempts"] = sum(a.attempts for a in answers)
    report.ask_stats["fell_back"] = sum(1 for a in answers if a.fell_back)


def collect_answers(entities: Sequence) -> list[ParsedAnswer]:
    out: list[ParsedAnswer] = []
    for entity in entities:
        out.extend(entity.answers)
    return out
