"""Chat backends: a deterministic mock oracle and an HTTP chat client.

The mock stands in for a real language model.  It solves the task exactly
(using the same deterministic computations the verifiers use) and can be
told to answer wrongly or unparseably at configured rates.  Every reply is
a pure function of (backend seed, caller scope, per-scope call index), so
concurrent execution cannot perturb a run and replays are byte-identical.

The HTTP backend speaks the common chat-completions wire format:

    POST {endpoint}/v1/chat/completions
    {"model": ..., "messages": [{"role": ..., "content": ...}, ...],
     "temperature": ..., "top_p": ..., "max_tokens": ...}

serialized compactly (no spaces) with the keys in exactly that order.  The
reply text is read from choices[0].message.content and the token count from
usage.completion_tokens, falling back to a whitespace-token estimate.  If
the AGENTSIM_API_TOKEN environment variable is set it is sent as a bearer
token.
"""

from __future__ import annotations

import json
import math
import os
import random
import threading
import time
from dataclasses import dataclass
from hashlib import blake2b
from typing import Sequence

import requests

from . import verifiers
from .prompts import (
    BfsMembershipTask,
    ChatMessage,
    DigitProductTask,
    GatheringStepTask,
    MinSelectTask,
    PowerShiftTask,
    Role,
    Task,
    ZeroShotBfsTask,
    ZeroShotMultiplyTask,
    ZeroShotSortTask,
)
from .verifiers import Point2D

TOKEN_ENV_VAR = "AGENTSIM_API_TOKEN"

__all__ = [
    "BackendDescriptor",
    "BackendError",
    "HttpChatBackend",
    "MockOracleBackend",
    "SamplingParams",
    "TOKEN_ENV_VAR",
    "chat",
    "make_backend",
]


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.1
    top_p: float = 0.95
    top_k: int = 40
    max_tokens: int = 512
    context_window: int = 8192

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.top_k < 1 or self.max_tokens < 1 or self.context_window < 1:
            raise ValueError("top_k, max_tokens and context_window must be positive")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str = "mock_oracle"  # mock_oracle | http_chat
    endpoint: str = ""
    model_name: str = "mock-oracle"
    error_rate_wrong: float = 0.0
    error_rate_malformed: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("mock_oracle", "http_chat"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if not 0 <= self.error_rate_wrong <= 1 or not 0 <= self.error_rate_malformed <= 1:
            raise ValueError("error rates must be probabilities in [0, 1]")
        if self.kind == "http_chat" and not self.endpoint:
            raise ValueError("http_chat backend requires an endpoint")


class BackendError(Exception):
    """Transport or protocol failure of a chat backend."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


def _call_key(seed: int, scope: str, index: int) -> int:
    h = blake2b(f"{seed}|{scope}|{index}".encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def _synthetic_tokens(text: str) -> int:
    return max(1, round(len(text) / 4))


class MockOracleBackend:
    """Exact task solver with seeded wrong/malformed error injection.

    Call indices are kept per scope (scenarios pass the calling entity's
    label), so replies do not depend on how calls from different entities
    interleave.  The mock never fails.
    """

    def __init__(self, descriptor: BackendDescriptor, latency: float = 0.0):
        if descriptor.kind != "mock_oracle":
            raise ValueError("descriptor is not a mock_oracle descriptor")
        self.descriptor = descriptor
        self.latency = latency
        self.label = descriptor.model_name
        self._lock = threading.Lock()
        self._indices: dict[str, int] = {}
        self._tokens = 0
        self._calls = 0

    @property
    def token_total(self) -> int:
        with self._lock:
            return self._tokens

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def chat(self, messages: Sequence[ChatMessage], sampling: SamplingParams,
             *, scope: str = "", task: Task | None = None) -> tuple[str, int]:
        if not messages or messages[-1].role is not Role.USER:
            raise ValueError("messages must end with a user message")
        with self._lock:
            index = self._indices.get(scope, 0)
            self._indices[scope] = index + 1
        if self.latency > 0:
            time.sleep(self.latency)
        rng = random.Random(_call_key(self.descriptor.seed, scope, index))
        malformed = rng.random() < self.descriptor.error_rate_malformed
        wrong = rng.random() < self.descriptor.error_rate_wrong
        if malformed:
            text = "I cannot work this out right now."
        elif task is None:
            text = "Acknowledged."
        else:
            text = _oracle_reply(task, wrong, rng)
        tokens = _synthetic_tokens(text)
        with self._lock:
            self._tokens += tokens
            self._calls += 1
        return text, tokens


def _oracle_reply(task: Task, wrong: bool, rng: random.Random) -> str:
    if isinstance(task, GatheringStepTask):
        pos = Point2D(*task.position)
        goal = Point2D(*task.goal)
        if wrong:
            step = _overshoot(pos, goal, task.max_speed)
            return ("Moving as far as possible.\n"
                    f"New_Position:({step[0]}, {step[1]})")
        move = verifiers.clamp_move(pos, goal, task.max_speed)
        return ("Stepping toward the goal within the speed limit.\n"
                f"New_Position:({move.x}, {move.y})")
    if isinstance(task, MinSelectTask):
        value, _ = verifiers.reference_min(list(task.array))
        if wrong:
            others = sorted(set(task.array) - {value})
            value = rng.choice(others) if others else value + 1
        return f"Scanning the array for the smallest value.\nAnswer:{value}"
    if isinstance(task, DigitProductTask):
        value = task.multiplicand * task.digit
        if wrong:
            value += rng.randint(1, 9)
        return f"Single digit product computed.\nAnswer:{value}"
    if isinstance(task, PowerShiftTask):
        value = task.value * 10 ** task.position
        if wrong:
            value = value * 10 + rng.randint(1, 9)
        return f"Shifting by the given power of ten.\nAnswer:{value}"
    if isinstance(task, BfsMembershipTask):
        member = task.node in task.visited
        if wrong:
            member = not member
        return f"Checking the Visited list.\nAnswer:{'YES' if member else 'NO'}"
    if isinstance(task, ZeroShotSortTask):
        result = sorted(task.array)
        if wrong and result:
            result[0] += 1
        listed = ", ".join(str(v) for v in result)
        return f"Sorted in ascending order.\nAnswer:[{listed}]"
    if isinstance(task, ZeroShotMultiplyTask):
        value = task.multiplicand * task.multiplier
        if wrong:
            value += rng.randint(1, 99)
        return f"Carried out the multiplication.\nAnswer:{value}"
    if isinstance(task, ZeroShotBfsTask):
        order = verifiers.reference_bfs(task.graph(), task.start)
        if wrong:
            if len(order) >= 2:
                order = [order[1], order[0]] + order[2:]
            else:
                order = order + order
        listed = ", ".join(str(v) for v in order)
        return f"Traversal computed level by level.\nAnswer:[{listed}]"
    raise TypeError(f"unknown task type: {type(task).__name__}")


def _overshoot(pos: Point2D, goal: Point2D, max_speed: int) -> tuple[int, int]:
    """A proposal guaranteed to violate the speed limit."""
    dx, dy = goal.x - pos.x, goal.y - pos.y
    length = math.hypot(dx, dy)
    jump = 2 * max_speed + 5
    if length > 0:
        cand = (pos.x + math.trunc(dx / length * jump),
                pos.y + math.trunc(dy / length * jump))
    else:
        cand = (pos.x + jump, pos.y)
    if verifiers.dist(pos, Point2D(*cand)) <= max_speed:
        cand = (pos.x + jump, pos.y)
    return cand


class HttpChatBackend:
    """Client for chat-completions HTTP endpoints (see module docstring)."""

    def __init__(self, descriptor: BackendDescriptor, timeout: float = 60.0):
        if descriptor.kind != "http_chat":
            raise ValueError("descriptor is not an http_chat descriptor")
        self.descriptor = descriptor
        self.timeout = timeout
        self.label = descriptor.model_name
        self._lock = threading.Lock()
        self._tokens = 0
        self._calls = 0

    @property
    def token_total(self) -> int:
        with self._lock:
            return self._tokens

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def request_bytes(self, messages: Sequence[ChatMessage],
                      sampling: SamplingParams) -> bytes:
        """Canonical request body; the documented field order, compact JSON."""
        body = {
            "model": self.descriptor.model_name,
            "messages": [{"role": m.role.value, "content": m.content} for m in messages],
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_tokens,
        }
        return json.dumps(body, separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    def chat(self, messages: Sequence[ChatMessage], sampling: SamplingParams,
             *, scope: str = "", task: Task | None = None) -> tuple[str, int]:
        if not messages or messages[-1].role is not Role.USER:
            raise ValueError("messages must end with a user message")
        url = self.descriptor.endpoint.rstrip("/") + "/v1/chat/completions"
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = requests.post(url, data=self.request_bytes(messages, sampling),
                                 headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"transport failure calling {url}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}",
                               status=resp.status_code, body=resp.text)
        try:
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed backend reply: {exc}",
                               status=resp.status_code, body=resp.text) from exc
        usage = payload.get("usage") or {}
        tokens = usage.get("completion_tokens")
        if not isinstance(tokens, int):
            tokens = len(text.split())
        with self._lock:
            self._tokens += tokens
            self._calls += 1
        return text, tokens


Backend = MockOracleBackend | HttpChatBackend


def make_backend(descriptor: BackendDescriptor, latency: float = 0.0) -> Backend:
    if descriptor.kind == "mock_oracle":
        return MockOracleBackend(descriptor, latency=latency)
    return HttpChatBackend(descriptor)


def chat(backend: Backend | BackendDescriptor, messages: Sequence[ChatMessage],
         sampling: SamplingParams, *, scope: str = "",
         task: Task | None = None) -> tuple[str, int]:
    """Send one chat exchange; returns (reply text, completion token count)."""
    if isinstance(backend, BackendDescriptor):
        backend = make_backend(backend)
    return backend.chat(messages, sampling, scope=scope, task=task)
