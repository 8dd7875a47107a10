"""Single-answer scoring strategies used as comparison points."""

from __future__ import annotations

import logging
import math
from collections import Counter
from typing import Optional

from ..backend import Backend
from ..core import CandidateAnswer, DetectionResult, QuestionInstance, TraceEntry, make_result
from ..errors import TargetUndetermined
from ..parsing import parse_answer, parse_confidence, parse_cot_answer, parse_true_false
from ..prompts import INDUCED_TEMPLATES, TemplateId, instance_bindings, relabel, render
from ._common import argmax, call, exact_mean, majority, verbalized
from .config import StrategyConfig

logger = logging.getLogger(__name__)

_DEFAULT = StrategyConfig()


def base_prompt(instance: QuestionInstance, config: StrategyConfig = _DEFAULT,
                question: Optional[str] = None) -> str:
    return render(config.template(TemplateId.BASE), instance_bindings(instance, question=question))


def generate_target(instance: QuestionInstance, backend: Backend,
                    config: StrategyConfig = _DEFAULT) -> CandidateAnswer:
    """Greedy answer to the base prompt, matched into the answer space."""
    (resp,) = backend.complete(base_prompt(instance, config), config.deterministic())
    idx = parse_answer(resp.text, instance.answer_space)
    if idx is None:
        raise TargetUndetermined(instance.id, resp.text)
    return instance.answer_space[idx]


def consistency_majority(instance: QuestionInstance, backend: Backend, config: StrategyConfig = _DEFAULT,
                         cot: bool = False) -> CandidateAnswer:
    """Majority answer over D sampled responses (alternate target selection)."""
    result = _consistency(instance, None, config, backend, cot)
    if result[1] is None:
        raise TargetUndetermined(instance.id, "no sampled answer matched the answer space")
    return instance.answer_space[result[1]]


def _consistency(instance, target, config, backend, cot):
    if cot:
        prompt = render(config.template(TemplateId.COT), instance_bindings(instance))
        parse = parse_cot_answer
    else:
        prompt = base_prompt(instance, config)
        parse = parse_answer
    responses, trace = call(backend, prompt, config.sampling(config.D))
    answers = [parse(r.text, instance.answer_space) for r in responses]
    return answers, majority(answers), trace


def _consistency_result(name, instance, target, config, backend, cot) -> DetectionResult:
    want = instance.index_of(target)
    answers, top, trace = _consistency(instance, target, config, backend, cot)
    hits = sum(1 for a in answers if a == want)
    unmatched = sum(1 for a in answers if a is None)
    return make_result(instance.id, name, target, hits / len(answers), trace, top_answer=top,
                       details={"matches": hits, "unmatched": unmatched, "samples": len(answers)})


def self_consistency(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                     backend: Backend) -> DetectionResult:
    return _consistency_result("self_cons", instance, target, config, backend, cot=False)


def cot_consistency(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                    backend: Backend) -> DetectionResult:
    return _consistency_result("cot_cons", instance, target, config, backend, cot=True)


def top_k_verbalized(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                     backend: Backend) -> DetectionResult:
    """One deterministic Top-K call; the score is the probability stated for the target."""
    bindings = instance_bindings(instance)
    bindings["K"] = str(config.k_for(instance))
    prompt = render(config.template(TemplateId.TOPK_VERB), bindings)
    (resp,), trace = call(backend, prompt, config.deterministic())
    score, probs, guesses = verbalized(resp.text, config.k_for(instance), target, instance.answer_space)
    flags = ["unparsable_topk"] if guesses is None else []
    details = {"candidate_probs": probs}
    if guesses is not None and guesses.warnings:
        details["parse_warnings"] = list(guesses.warnings)
    return make_result(instance.id, "top_k_verb", target, score, trace, top_answer=argmax(probs),
                       flags=flags, details=details)


def p_true(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
           backend: Backend) -> DetectionResult:
    bindings = instance_bindings(instance)
    bindings["label"] = target.surface
    prompt = render(config.template(TemplateId.PTRUE), bindings)
    responses, trace = call(backend, prompt, config.sampling(config.D))
    verdicts = [parse_true_false(r.text) for r in responses]
    n_true = sum(1 for v in verdicts if v is True)
    n_none = sum(1 for v in verdicts if v is None)
    return make_result(instance.id, "p_true", target, n_true / len(verdicts), trace,
                       details={"true": n_true, "undecided": n_none, "samples": len(verdicts)})


def self_probing(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                 backend: Backend) -> DetectionResult:
    bindings = instance_bindings(instance)
    bindings["answer"] = target.surface
    prompt = render(config.template(TemplateId.SELF_PROBE), bindings)
    (resp,), trace = call(backend, prompt, config.deterministic())
    conf = parse_confidence(resp.text)
    flags = [] if conf is not None else ["no_confidence"]
    return make_result(instance.id, "self_probe", target, conf if conf is not None else 0.0, trace,
                       flags=flags)


def induced_consistency(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                        backend: Backend) -> DetectionResult:
    """Re-ask with misleading contexts that push a wrong candidate; count answers that hold."""
    want = instance.index_of(target)
    wrong = [c for i, c in enumerate(instance.answer_space) if i != want]
    trace: list[TraceEntry] = []
    answers = []
    for j in range(config.induced_m):
        bindings = instance_bindings(instance)
        bindings["wrong_choice"] = wrong[j % len(wrong)].surface
        prompt = render(config.template(INDUCED_TEMPLATES[j % len(INDUCED_TEMPLATES)]), bindings)
        (resp,), t = call(backend, prompt, config.deterministic())
        trace += t
        answers.append(parse_answer(resp.text, instance.answer_space))
    hits = sum(1 for a in answers if a == want)
    return make_result(instance.id, "induced_cons", target, hits / len(answers), trace,
                       top_answer=majority(answers), details={"answers": answers})


def answer_entropy(counts) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log(p)
    return h


def self_detect_entropy(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                        backend: Backend) -> DetectionResult:
    """Answer entropy over rephrasings, mapped to 1 - H / log(N + 1)."""
    bindings = instance_bindings(instance)
    prompt = render(config.template(TemplateId.REPHRASE), bindings)
    rephrasings, trace = call(backend, prompt, config.sampling(config.rephrase_count))
    answers = []
    for r in rephrasings:
        (resp,), t = call(backend, base_prompt(instance, config, question=r.text.strip() or instance.question),
                          config.deterministic())
        trace += t
        answers.append(parse_answer(resp.text, instance.answer_space))
    n = instance.n
    counts = Counter(n if a is None else a for a in answers)
    buckets = [counts.get(i, 0) for i in range(n + 1)]
    h = answer_entropy(buckets)
    score = 1.0 - h / math.log(n + 1)
    return make_result(instance.id, "self_detect", target, score, trace, top_answer=majority(answers),
                       details={"entropy": h, "bucket_counts": buckets})


CAPE_VARIANTS = (
    (TemplateId.TOPK_VERB, None, False),
    (TemplateId.CAPE_ALPHA, "alpha", False),
    (TemplateId.CAPE_ALPHA, "alpha", True),
    (TemplateId.CAPE_ITEMIZED, "itemized", False),
    (TemplateId.CAPE_ITEMIZED, "itemized", True),
)


def display_variant(instance: QuestionInstance, style: Optional[str], reverse: bool):
    """(display space, order) where display position j shows candidate order[j]."""
    order = list(range(instance.n))
    if reverse:
        order.reverse()
    if style is None:
        return instance.answer_space, order
    return relabel(instance.answer_space, order, style), order


def score_display(text: str, k: int, instance: QuestionInstance, target: CandidateAnswer,
                  display, order) -> tuple[float, list[float], bool]:
    """Verbalized score on a relabelled display, with probabilities mapped back to original indices."""
    shown_target = display[order.index(instance.index_of(target))]
    score, shown_probs, guesses = verbalized(text, k, shown_target, display)
    probs = [0.0] * instance.n
    for j, i in enumerate(order):
        probs[i] = shown_probs[j]
    return score, probs, guesses is None


def prompt_ensemble_cape(instance: QuestionInstance, target: CandidateAnswer, config: StrategyConfig,
                         backend: Backend) -> DetectionResult:
    """Mean Top-K target probability over M template/label-order variants."""
    if config.M > len(CAPE_VARIANTS):
        raise ValueError(f"M={config.M} but only {len(CAPE_VARIANTS)} ensemble prompts exist")
    k = config.k_for(instance)
    trace: list[TraceEntry] = []
    scores, all_probs, flags = [], [], []
    for m, (tid, style, reverse) in enumerate(CAPE_VARIANTS[:config.M]):
        display, order = display_variant(instance, style, reverse)
        bindings = instance_bindings(instance, space=display)
        bindings["K"] = str(k)
        (resp,), t = call(backend, render(config.template(tid), bindings), config.deterministic())
        trace += t
        score, probs, failed = score_display(resp.text, k, instance, target, display, order)
        if failed:
            flags.append(f"unparsable_prompt_{m}")
        scores.append(score)
        all_probs.append(probs)
    mean_probs = [exact_mean(col) for col in zip(*all_probs)]
    return make_result(instance.id, "cape", target, exact_mean(scores), trace,
                       top_answer=argmax(mean_probs), flags=flags, details={"prompt_scores": scores})
