from __future__ import annotations

from typing import Callable

from ..backend import Backend
from ..core import CandidateAnswer, DetectionResult, QuestionInstance
from ._common import exact_mean
from .baselines import (
    consistency_majority,
    cot_consistency,
    generate_target,
    induced_consistency,
    p_true,
    prompt_ensemble_cape,
    self_consistency,
    self_detect_entropy,
    self_probing,
    top_k_verbalized,
)
from .combine import counterfactual_adjust, hybrid, hybrid_combine, top_k_self_target
from .config import StrategyConfig
from .t3 import (
    ABLATIONS,
    Justification,
    ablation_variants,
    base_order,
    t3,
    t3_joint_score,
    t3_justify,
    t3_plus_pe,
    t3_plus_topk,
    t3_separate_explanations,
    t3_with_cot_explanations,
    t3_without_shuffle,
)

StrategyFn = Callable[[QuestionInstance, CandidateAnswer, StrategyConfig, Backend], DetectionResult]

STRATEGIES: dict[str, StrategyFn] = {
    "self_cons": self_consistency,
    "cot_cons": cot_consistency,
    "top_k_verb": top_k_verbalized,
    "p_true": p_true,
    "self_probe": self_probing,
    "induced_cons": induced_consistency,
    "self_detect": self_detect_entropy,
    "cape": prompt_ensemble_cape,
    "hybrid": hybrid,
    "t3": t3,
    "t3_top_k": t3_plus_topk,
    "t3_pe": t3_plus_pe,
    "t3_cot_expl": t3_with_cot_explanations,
    "t3_sep_expl": t3_separate_explanations,
    "t3_no_shuffle": t3_without_shuffle,
}

# Needs the counterfactual partner of each instance; handled by the runner.
COUNTERFACTUAL_STRATEGY = "top_k_verb_cf"


def get_strategy(name: str) -> StrategyFn:
    try:
        return STRATEGIES[name]
    except KeyError:
        known = ", ".join(sorted([*STRATEGIES, COUNTERFACTUAL_STRATEGY]))
        raise KeyError(f"unknown strategy {name!r}; known: {known}") from None


__all__ = [
    "ABLATIONS",
    "COUNTERFACTUAL_STRATEGY",
    "Justification",
    "STRATEGIES",
    "StrategyConfig",
    "ablation_variants",
    "base_order",
    "consistency_majority",
    "cot_consistency",
    "counterfactual_adjust",
    "exact_mean",
    "generate_target",
    "get_strategy",
    "hybrid",
    "hybrid_combine",
    "induced_consistency",
    "p_true",
    "prompt_ensemble_cape",
    "self_consistency",
    "self_detect_entropy",
    "self_probing",
    "t3",
    "t3_joint_score",
    "t3_justify",
    "t3_plus_pe",
    "t3_plus_topk",
    "t3_separate_explanations",
    "t3_with_cot_explanations",
    "t3_without_shuffle",
    "top_k_self_target",
    "top_k_verbalized",
]
