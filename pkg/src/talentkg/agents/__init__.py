from .llm import AgentParseError, HTTPLLMClient, LLMClient, LLMTransportError, MockLLMClient
from .pipeline import (
    AuthorContext,
    ChatSession,
    ChatTurn,
    GapQuery,
    JustificationCache,
    RankedCandidate,
    TeamingDeps,
    build_author_context,
    detect_expertise_gap,
    justify_recommendation,
    record_feedback,
    rerank,
    retrieve_candidates,
    run_teaming_chat,
    transcript_text,
)

__all__ = [
    "AgentParseError",
    "AuthorContext",
    "ChatSession",
    "ChatTurn",
    "GapQuery",
    "HTTPLLMClient",
    "JustificationCache",
    "LLMClient",
    "LLMTransportError",
    "MockLLMClient",
    "RankedCandidate",
    "TeamingDeps",
    "build_author_context",
    "detect_expertise_gap",
    "justify_recommendation",
    "record_feedback",
    "rerank",
    "retrieve_candidates",
    "run_teaming_chat",
    "transcript_text",
]
