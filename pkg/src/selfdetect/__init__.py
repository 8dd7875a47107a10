"""Black-box self-detection: score how far an LLM's own answer can be trusted."""

from .core import (
    CandidateAnswer,
    CounterfactualPair,
    DetectionResult,
    QuestionInstance,
    Task,
    TraceEntry,
    match_answer,
    normalize_answer,
)
from .metrics import MetricReport, ScoredItem, auroc, ece, evaluate, prauc, score_stats, selective_prediction
from .strategies import STRATEGIES, StrategyConfig

__all__ = [
    "CandidateAnswer",
    "CounterfactualPair",
    "DetectionResult",
    "MetricReport",
    "QuestionInstance",
    "STRATEGIES",
    "ScoredItem",
    "StrategyConfig",
    "Task",
    "TraceEntry",
    "auroc",
    "ece",
    "evaluate",
    "match_answer",
    "normalize_answer",
    "prauc",
    "score_stats",
    "selective_prediction",
]
