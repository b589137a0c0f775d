"""agentsim: coupled AI / verifier agent simulations on a conservative
discrete-event engine."""

from .backends import (
    BackendDescriptor,
    BackendError,
    HttpChatBackend,
    MockOracleBackend,
    SamplingParams,
    chat,
    make_backend,
)
from .engine import (
    CausalityError,
    Engine,
    EngineConfig,
    Entity,
    EntityId,
    EventRecord,
    RunReport,
    trace_digest,
)
from .prompts import ChatMessage, Role, build_prompt
from .retry import ParsedAnswer, ask_with_retry
from .scenarios import (
    GatheringState,
    bfs_protocol,
    gathering_protocol,
    multiplication_protocol,
    sorting_protocol,
    zero_shot_solve,
)

__version__ = "0.1.0"
