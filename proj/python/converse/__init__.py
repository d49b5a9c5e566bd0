"""Python access to the converse dialogue-manager library."""

from ._converse import (  # noqa: F401
    PROTOCOL_VERSION,
    REWARD_FEATURE_DIM,
    ChatService,
    ConverseError,
    FeatureExtractor,
    FeatureLayout,
    ScoringNet,
    SimulationReport,
    count_dialogues,
    simulate,
    tokenize,
)

__all__ = [
    "PROTOCOL_VERSION",
    "REWARD_FEATURE_DIM",
    "ChatService",
    "ConverseError",
    "FeatureExtractor",
    "FeatureLayout",
    "ScoringNet",
    "SimulationReport",
    "count_dialogues",
    "simulate",
    "tokenize",
]
