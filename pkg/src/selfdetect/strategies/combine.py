"""Combinators over finished DetectionResults."""

from __future__ import annotations

from decimal import Decimal
from typing import Optional

from ..backend import Backend
from ..core import CounterfactualPair, DetectionResult, QuestionInstance, CandidateAnswer, make_result
from ..errors import AdjustUnavailable
from ._common import exact_mean
from .baselines import cot_consistency, self_consistency, top_k_verbalized
from .config import StrategyConfig

DISAGREEMENT_PENALTY = 0.5


def hybrid_combine(result_a: DetectionResult, result_b: DetectionResult, answers_agree: bool,
                   strategy: str = "hybrid") -> DetectionResult:
    """Average the two scores; halve the average when the strategies favour different answers.

    The penalty rule is a local choice and is kept here so it can be swapped.
    """
    if result_a.instance_id != result_b.instance_id:
        raise ValueError("cannot combine results for different instances")
    if result_a.target_answer.canonical != result_b.target_answer.canonical:
        raise ValueError("cannot combine results scoring different targets")
    score = exact_mean([result_a.score, result_b.score])
    if not answers_agree:
        score = float(Decimal(repr(score)) * Decimal(repr(DISAGREEMENT_PENALTY)))
    return make_result(
        result_a.instance_id, strategy, result_a.target_answer, score,
        result_a.trace + result_b.trace,
        top_answer=result_a.top_answer if answers_agree else None,
        flags=result_a.flags + result_b.flags,
        details={"parts": {result_a.strategy: result_a.score, result_b.strategy: result_b.score},
                 "agree": answers_agree},
    )


def hybrid(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
           backend: Backend) -> DetectionResult:
    """Top-K verbalized combined with self-consistency (or CoT-consistency)."""
    a = top_k_verbalized(instance, target, config, backend)
    base = cot_consistency if config.hybrid_base == "cot_cons" else self_consistency
    b = base(instance, target, config, backend)
    agree = a.top_answer is not None and a.top_answer == b.top_answer
    return hybrid_combine(a, b, agree)


def counterfactual_adjust(pair: CounterfactualPair, result: Optional[DetectionResult],
                          result_cf: Optional[DetectionResult]) -> DetectionResult:
    """Re-score an answer using the model's confidence on the counterfactual question.

    Differing answers average the two confidences. Identical answers replace
    the counterfactual confidence with its share of the remaining mass,
    (1 - c_cf) / (k - 1).
    """
    if result is None or result_cf is None:
        raise AdjustUnavailable("both the original and the counterfactual result are required")
    if result.instance_id != pair.original.id or result_cf.instance_id != pair.counterfactual.id:
        raise ValueError("results do not belong to this pair")
    c_a = Decimal(repr(result.score))
    c_cf = Decimal(repr(result_cf.score))
    same = result.target_answer.canonical == result_cf.target_answer.canonical
    if same:
        other = (1 - c_cf) / (pair.k - 1)
    else:
        other = c_cf
    score = float((c_a + other) / 2)
    return make_result(
        result.instance_id, f"{result.strategy}+cf", result.target_answer, score,
        result.trace + result_cf.trace,
        top_answer=result.top_answer,
        flags=result.flags + result_cf.flags,
        details={"c_a": result.score, "c_cf": result_cf.score, "same_answer": same,
                 "counterfactual_id": pair.counterfactual.id},
    )


def top_k_self_target(instance: QuestionInstance, config: StrategyConfig, backend: Backend) -> Optional[DetectionResult]:
    """Top-K verbalized result whose target is the response's own highest-probability guess.

    Returns None when no guess matches a candidate.
    """
    probe = top_k_verbalized(instance, instance.answer_space[0], config, backend)
    if probe.top_answer is None:
        return None
    target = instance.answer_space[probe.top_answer]
    score = probe.details["candidate_probs"][probe.top_answer]
    return make_result(instance.id, probe.strategy, target, score, probe.trace, top_answer=probe.top_answer,
                       flags=probe.flags, details=probe.details)
