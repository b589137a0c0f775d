"""Case-study protocols: entity/event programs on the engine in which AI
entities answer decomposed sub-tasks and a non-AI entity verifies, corrects
and advances the shared state."""

from .bfs import bfs_protocol
from .gathering import GatheringState, StepRecord, gathering_protocol
from .multiplication import multiplication_protocol
from .sorting import sorting_protocol
from .zero_shot import zero_shot_solve

__all__ = [
    "GatheringState",
    "StepRecord",
    "bfs_protocol",
    "gathering_protocol",
    "multiplication_protocol",
    "sorting_protocol",
    "zero_shot_solve",
]
