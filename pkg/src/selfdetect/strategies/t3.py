"""Multi-answer reflection: justify every candidate, then score them jointly."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from ..backend import Backend
from ..core import CandidateAnswer, DetectionResult, QuestionInstance, Task, TraceEntry, make_result
from ..errors import InvalidAnswerSpace
from ..prompts import ExplanationOrder, TemplateId, format_explanations, instance_bindings, render
from ._common import argmax, call, exact_mean, verbalized
from .baselines import display_variant, score_display, top_k_verbalized
from .combine import hybrid_combine
from .config import StrategyConfig

logger = logging.getLogger(__name__)

_NLI_ORDER = ("entailment", "neutral", "contradiction")


@dataclass(frozen=True)
class Justification:
    answer_index: int
    text: str
    trace: Optional[TraceEntry] = None


def base_order(instance: QuestionInstance) -> list[int]:
    """Answer indices in the order justifications are listed before shuffling.

    NLI spaces made of the three standard relations go entailment, neutral,
    contradiction; everything else keeps the given choice order.
    """
    if instance.task == Task.NLI:
        contents = [c.content for c in instance.answer_space]
        if sorted(contents) == sorted(_NLI_ORDER):
            return [contents.index(x) for x in _NLI_ORDER]
    return list(range(instance.n))


def t3_justify(instance: QuestionInstance, backend: Backend,
               config: Optional[StrategyConfig] = None) -> list[Justification]:
    """One deterministic justification per candidate, in answer-space order."""
    config = config or StrategyConfig()
    if instance.n < 2:
        raise InvalidAnswerSpace("justification needs at least two candidates")
    out = []
    for i, cand in enumerate(instance.answer_space):
        bindings = instance_bindings(instance)
        bindings["answer"] = cand.surface
        (resp,), (entry,) = call(backend, render(config.template(TemplateId.JUSTIFY), bindings),
                                 config.deterministic())
        if not resp.text.strip():
            logger.warning("empty justification for %s candidate %d", instance.id, i)
        out.append(Justification(i, resp.text, entry))
    return out


def _check(instance: QuestionInstance, justifications: Sequence[Justification]) -> None:
    if len(justifications) != instance.n:
        raise ValueError(f"{len(justifications)} justifications for N={instance.n}")
    for i, j in enumerate(justifications):
        if j.answer_index != i:
            raise ValueError("justifications must be in answer-space order")


def _joint_call(instance, target, texts, config, backend):
    """Render p^v with ``texts`` as the explanation block and score the target."""
    k = config.k_for(instance)
    bindings = instance_bindings(instance)
    bindings["K"] = str(k)
    bindings["explanations"] = format_explanations(texts)
    (resp,), trace = call(backend, render(config.template(TemplateId.JOINT_VERB), bindings),
                          config.deterministic())
    score, probs, guesses = verbalized(resp.text, k, target, instance.answer_space)
    return score, probs, guesses is None, trace


def _ordered_texts(instance: QuestionInstance, texts: Sequence[str], order: ExplanationOrder) -> list[str]:
    return [texts[i] for i in order.apply(base_order(instance))]


def _joint_over_orders(name, instance, target, texts, orders, config, backend, prefix=()):
    trace: list[TraceEntry] = list(prefix)
    scores, all_probs, flags = [], [], []
    for o, order in enumerate(orders):
        score, probs, failed, t = _joint_call(instance, target, _ordered_texts(instance, texts, order),
                                              config, backend)
        trace += t
        if failed:
            flags.append(f"unparsable_order_{o}")
        scores.append(score)
        all_probs.append(probs)
    mean_probs = [exact_mean(col) for col in zip(*all_probs)]
    return make_result(instance.id, name, target, exact_mean(scores), trace, top_answer=argmax(mean_probs),
                       flags=flags, details={"order_scores": scores,
                                             "orders": [list(o.permutation) for o in orders]})


def t3_joint_score(instance: QuestionInstance, target: CandidateAnswer,
                   justifications: Sequence[Justification], config: StrategyConfig,
                   backend: Backend) -> DetectionResult:
    """Mean target probability of p^v over the configured justification orders."""
    _check(instance, justifications)
    texts = [j.text for j in justifications]
    return _joint_over_orders("t3_joint", instance, target, texts, config.orders_for(instance), config, backend)


def _justify_trace(justifications: Sequence[Justification]) -> list[TraceEntry]:
    return [j.trace for j in justifications if j.trace is not None]


def t3(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
       backend: Backend) -> DetectionResult:
    justifications = t3_justify(instance, backend, config)
    texts = [j.text for j in justifications]
    return _joint_over_orders("t3", instance, target, texts, config.orders_for(instance), config, backend,
                              prefix=_justify_trace(justifications))


def t3_plus_topk(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                 backend: Backend) -> DetectionResult:
    a = t3(instance, target, config, backend)
    b = top_k_verbalized(instance, target, config, backend)
    agree = a.top_answer is not None and a.top_answer == b.top_answer
    return hybrid_combine(a, b, agree, strategy="t3_top_k")


def t3_plus_pe(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
               backend: Backend) -> DetectionResult:
    """Justifications inside the alphabetic multi-choice template, 2 label orders x 2 justification orders."""
    justifications = t3_justify(instance, backend, config)
    texts = [j.text for j in justifications]
    trace = _justify_trace(justifications)
    k = config.k_for(instance)
    scores, all_probs, flags = [], [], []
    for reverse in (False, True):
        display, order = display_variant(instance, "alpha", reverse)
        for o, jorder in enumerate(config.orders_for(instance)):
            bindings = instance_bindings(instance, space=display)
            bindings["K"] = str(k)
            bindings["explanations"] = format_explanations(_ordered_texts(instance, texts, jorder)) + "\n"
            (resp,), t = call(backend, render(config.template(TemplateId.CAPE_ALPHA), bindings),
                              config.deterministic())
            trace += t
            score, probs, failed = score_display(resp.text, k, instance, target, display, order)
            if failed:
                flags.append(f"unparsable_variant_{len(scores)}")
            scores.append(score)
            all_probs.append(probs)
    mean_probs = [exact_mean(col) for col in zip(*all_probs)]
    return make_result(instance.id, "t3_pe", target, exact_mean(scores), trace, top_answer=argmax(mean_probs),
                       flags=flags, details={"variant_scores": scores})


# ------------------------------------------------------------------ ablations

def t3_with_cot_explanations(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                             backend: Backend) -> DetectionResult:
    """p^v fed with N sampled chain-of-thought outputs instead of per-candidate justifications."""
    prompt = render(config.template(TemplateId.COT), instance_bindings(instance))
    responses, trace = call(backend, prompt, config.sampling(instance.n))
    texts = [r.text for r in responses]
    return _joint_over_orders("t3_cot_expl", instance, target, texts, config.orders_for(instance), config,
                              backend, prefix=trace)


def t3_separate_explanations(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                             backend: Backend) -> DetectionResult:
    """One p^v call per single justification; the score is their mean."""
    justifications = t3_justify(instance, backend, config)
    trace = _justify_trace(justifications)
    scores, flags = [], []
    for j in justifications:
        score, _, failed, t = _joint_call(instance, target, [j.text], config, backend)
        trace += t
        if failed:
            flags.append(f"unparsable_single_{j.answer_index}")
        scores.append(score)
    return make_result(instance.id, "t3_sep_expl", target, exact_mean(scores), trace, flags=flags,
                       details={"single_scores": scores})


def t3_without_shuffle(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                       backend: Backend) -> DetectionResult:
    justifications = t3_justify(instance, backend, config)
    texts = [j.text for j in justifications]
    identity = (ExplanationOrder(tuple(range(instance.n))),)
    return _joint_over_orders("t3_no_shuffle", instance, target, texts, identity, config, backend,
                              prefix=_justify_trace(justifications))


ABLATIONS = {
    "w/ CoT expl": t3_with_cot_explanations,
    "sep expl": t3_separate_explanations,
    "w/o shuffle": t3_without_shuffle,
}


def ablation_variants(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                      backend: Backend) -> dict[str, DetectionResult]:
    return {name: fn(instance, target, config, backend) for name, fn in ABLATIONS.items()}
