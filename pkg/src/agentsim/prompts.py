"""Task descriptors and the chat prompts built from them.

Each sub-task an AI entity can be asked is a small dataclass; build_prompt
turns it into the system/user message pair.  Templates are byte-stable and
golden-tested, so edit with care.  Non-coordinate answers all use the
uniform "Answer:" anchor; the movement task uses "New_Position:".
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from .graphs import encode_incident, graph_from_edges

ANSWER_ANCHOR = "Answer:"
POSITION_ANCHOR = "New_Position:"

MOVER_SYSTEM = "You are an AI agent moving in a two-dimensional Euclidean space."
SORTER_SYSTEM = "You are an AI agent who can sort an array."
MULTIPLIER_SYSTEM = "You are an AI agent who can multiply numbers."
TRAVERSER_SYSTEM = "You are an AI agent who can traverse a graph."


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if self.role in (Role.SYSTEM, Role.USER) and not self.content:
            raise ValueError(f"{self.role.value} message content must be non-empty")


@dataclass(frozen=True)
class GatheringStepTask:
    position: tuple[int, int]
    goal: tuple[int, int]
    max_speed: int


@dataclass(frozen=True)
class MinSelectTask:
    array: tuple[int, ...]


@dataclass(frozen=True)
class DigitProductTask:
    multiplicand: int
    digit: int


@dataclass(frozen=True)
class PowerShiftTask:
    value: int
    position: int


@dataclass(frozen=True)
class BfsMembershipTask:
    node: int
    visited: tuple[int, ...]


@dataclass(frozen=True)
class ZeroShotSortTask:
    array: tuple[int, ...]


@dataclass(frozen=True)
class ZeroShotMultiplyTask:
    multiplicand: int
    multiplier: int


@dataclass(frozen=True)
class ZeroShotBfsTask:
    edges: tuple[tuple[int, int], ...]
    node_count: int
    start: int

    def graph(self) -> dict[int, tuple[int, ...]]:
        return graph_from_edges(self.node_count, self.edges)


Task = Union[
    GatheringStepTask,
    MinSelectTask,
    DigitProductTask,
    PowerShiftTask,
    BfsMembershipTask,
    ZeroShotSortTask,
    ZeroShotMultiplyTask,
    ZeroShotBfsTask,
]


def _int_list(values: Sequence[int]) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def build_prompt(task: Task) -> list[ChatMessage]:
    """System/user message pair for one sub-task."""
    if isinstance(task, GatheringStepTask):
        system = MOVER_SYSTEM
        user = (
            f"You are located at position ({task.position[0]}, {task.position[1]}). "
            f"Your goal is to go to position ({task.goal[0]}, {task.goal[1]}). "
            f"You can move maximum {task.max_speed} units in each step. "
            "What should be your position in the next step? "
            "Verify that the distance between your new position and old position "
            f"didn't exceed {task.max_speed} units. "
            "Strictly follow the following format to provide your answer in integer "
            "coordinates in the last line of your response. New_Position:(.., ..)."
        )
    elif isinstance(task, MinSelectTask):
        system = SORTER_SYSTEM
        user = (
            f"You are given the array {_int_list(task.array)}. "
            "Select the smallest element from the array. "
            "Strictly follow the following format to provide your answer in the "
            "last line of your response. Answer:<number>."
        )
    elif isinstance(task, DigitProductTask):
        system = MULTIPLIER_SYSTEM
        user = (
            f"Multiply {task.multiplicand} by the single digit {task.digit}. "
            "Strictly follow the following format to provide your answer in the "
            "last line of your response. Answer:<number>."
        )
    elif isinstance(task, PowerShiftTask):
        system = MULTIPLIER_SYSTEM
        user = (
            f"Multiply {task.value} by 10 raised to the power {task.position}. "
            "Strictly follow the following format to provide your answer in the "
            "last line of your response. Answer:<number>."
        )
    elif isinstance(task, BfsMembershipTask):
        system = TRAVERSER_SYSTEM
        user = (
            f"The Visited list contains the nodes {_int_list(task.visited)}. "
            f"Is node {task.node} in the Visited list? "
            "Strictly follow the following format to provide your answer in the "
            "last line of your response. Answer:YES or Answer:NO."
        )
    elif isinstance(task, ZeroShotSortTask):
        system = SORTER_SYSTEM
        user = f"Sort the array {_int_list(task.array)}."
    elif isinstance(task, ZeroShotMultiplyTask):
        system = MULTIPLIER_SYSTEM
        user = (
            f"Multiply {task.multiplicand} by {task.multiplier}. "
            "Strictly follow the following format to provide your answer in the "
            "last line of your response. Answer:<number>."
        )
    elif isinstance(task, ZeroShotBfsTask):
        system = TRAVERSER_SYSTEM
        incident = encode_incident(task.graph())
        user = (
            f"{incident}\n"
            f"Perform a breadth-first traversal of the graph starting from node "
            f"{task.start}, expanding neighbors in ascending order. "
            "Strictly follow the following format to provide the visited nodes in "
            "order in the last line of your response. Answer:[n0, n1, ...]."
        )
    else:
        raise TypeError(f"unknown task type: {type(task).__name__}")
    return [ChatMessage(Role.SYSTEM, system), ChatMessage(Role.USER, user)]
