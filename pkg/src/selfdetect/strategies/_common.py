from __future__ import annotations

from collections import Counter
from decimal import Decimal
from typing import Iterable, Optional, Sequence

from ..backend import Backend, GenerationParams, LlmResponse
from ..core import CandidateAnswer, TraceEntry
from ..parsing import GuessList, candidate_probs, parse_top_k, target_prob
from ..errors import UnparsableResponse


def exact_mean(values: Iterable[float]) -> float:
    """Mean computed on the shortest decimal form of each value.

    Verbalized probabilities arrive as short decimals, so averaging in
    decimal makes (0.6 + 0.3) / 2 come out as 0.45 rather than
    0.44999999999999996.
    """
    vals = [Decimal(repr(float(v))) for v in values]
    if not vals:
        raise ValueError("mean of no values")
    return float(sum(vals, Decimal(0)) / len(vals))


def call(backend: Backend, prompt: str, params: GenerationParams) -> tuple[list[LlmResponse], list[TraceEntry]]:
    responses = backend.complete(prompt, params)
    return responses, [TraceEntry(prompt, r) for r in responses]


def majority(indices: Sequence[Optional[int]]) -> Optional[int]:
    """Most frequent matched answer; ties go to the lowest index."""
    counts = Counter(i for i in indices if i is not None)
    if not counts:
        return None
    return min(counts, key=lambda i: (-counts[i], i))


def argmax(probs: Sequence[float]) -> Optional[int]:
    if not probs or max(probs) <= 0.0:
        return None
    return max(range(len(probs)), key=lambda i: (probs[i], -i))


def verbalized(text: str, k: int, target: CandidateAnswer,
               space: Sequence[CandidateAnswer]) -> tuple[float, list[float], Optional[GuessList]]:
    """Score one Top-K style reply: (target prob, per-candidate probs, parsed guesses or None)."""
    try:
        guesses = parse_top_k(text, k)
    except UnparsableResponse:
        return 0.0, [0.0] * len(space), None
    return target_prob(guesses, target, space), candidate_probs(guesses, space), guesses
