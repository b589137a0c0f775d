"""The ask-verify-retry-fallback loop around a chat backend.

An AI entity asks a question; the reply is parsed and validated.  On
failure the bad reply plus a corrective user message are appended and the
backend is asked again; once the attempt budget is exhausted the verifier's
fallback supplies the value.  Validators return None when satisfied or a
human-readable reason, which is quoted back to the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .backends import Backend, SamplingParams
from .parsing import ParseError
from .prompts import ChatMessage, Role, Task

__all__ = ["AskError", "ParsedAnswer", "ask_with_retry", "corrective_message"]

Validator = Callable[[Any], "str | None"]


class AskError(Exception):
    """ask_with_retry was configured inconsistently."""


@dataclass
class ParsedAnswer:
    """Outcome of one verified question.

    ``attempts`` counts backend calls; when ``fell_back`` is true the value
    came from the verifier fallback, never from the backend.  Rejected
    parseable values are kept for logging and audits.
    """

    value: Any
    attempts: int
    fell_back: bool
    raw_replies: list[str] = field(default_factory=list)
    token_counts: list[int] = field(default_factory=list)
    rejected_values: list[Any] = field(default_factory=list)


def corrective_message(reason: str, instruction: str) -> str:
    return f"Your previous answer was invalid: {reason}. {instruction}"


def ask_with_retry(backend: Backend, prompt: Sequence[ChatMessage],
                   parser: Callable[[str], Any],
                   validator: Validator | None,
                   fallback: Callable[[], Any],
                   max_attempts: int = 2,
                   *, sampling: SamplingParams | None = None,
                   task: Task | None = None, scope: str = "") -> ParsedAnswer:
    """Ask until the answer parses and validates, then fall back.

    The message list grows by exactly two entries (bad assistant reply,
    corrective user message) per failed attempt.  Backend transport errors
    propagate; they are not validation failures.
    """
    if max_attempts < 1:
        raise AskError("max_attempts must be >= 1")
    sampling = sampling or SamplingParams()
    messages = list(prompt)
    instruction = messages[-1].content
    answer = ParsedAnswer(value=None, attempts=0, fell_back=False)
    for _ in range(max_attempts):
        text, tokens = backend.chat(messages, sampling, scope=scope, task=task)
        answer.attempts += 1
        answer.raw_replies.append(text)
        answer.token_counts.append(tokens)
        try:
            value = parser(text)
        except ParseError as exc:
            reason = str(exc)
        else:
            reason = validator(value) if validator is not None else None
            if reason is None:
                answer.value = value
                return answer
            answer.rejected_values.append(value)
        messages.append(ChatMessage(Role.ASSISTANT, text))
        messages.append(ChatMessage(Role.USER, corrective_message(reason, instruction)))
    answer.value = fallback()
    answer.fell_back = True
    return answer
