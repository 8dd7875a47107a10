from __future__ import annotations

import math

import pytest
from scipy.stats import entropy

from selfdetect.backend import LlmResponse, MockBackend, MockScript
from selfdetect.core import CounterfactualPair, TraceEntry, make_result
from selfdetect.errors import AdjustUnavailable, TargetUndetermined
from selfdetect.prompts import ExplanationOrder
from selfdetect.strategies import (
    STRATEGIES,
    StrategyConfig,
    ablation_variants,
    base_order,
    cot_consistency,
    counterfactual_adjust,
    exact_mean,
    generate_target,
    hybrid_combine,
    induced_consistency,
    p_true,
    prompt_ensemble_cape,
    self_consistency,
    self_detect_entropy,
    self_probing,
    t3,
    t3_joint_score,
    t3_justify,
    t3_plus_pe,
    t3_plus_topk,
    top_k_verbalized,
)

from case_studies import SHIRT, SHIRT_JUSTIFY, SHIRT_OUTPUTS, backend_for
from helpers import cqa, nli, sa, topk, universal_backend

POS = sa().answer_space[0]
NEG = sa().answer_space[1]


def seq_backend(pattern, texts, fallback=None):
    s = MockScript().add(pattern, list(texts))
    if fallback:
        s.add("", fallback)
    return MockBackend(s)


def test_generate_target():
    inst = sa()
    assert generate_target(inst, MockBackend(MockScript().add("", "positive"))) == POS
    with pytest.raises(TargetUndetermined):
        generate_target(inst, MockBackend(MockScript().add("", "I refuse")))


def test_self_consistency_counts():
    inst = sa()
    cfg = StrategyConfig(D=4)
    r = self_consistency(inst, POS, cfg, seq_backend("", ["Positive", "positive", "Positive.", "negative"]))
    assert r.score == 0.75 and r.api_calls == 4 and r.top_answer == 0
    assert self_consistency(inst, POS, cfg, seq_backend("", ["positive"] * 4)).score == 1.0
    assert self_consistency(inst, POS, cfg, seq_backend("", ["no idea"] * 4)).score == 0.0


def test_cot_consistency_counts():
    inst = sa()
    three = ["Explanation: x Answer: Positive", "Explanation: y Answer: Positive", "Explanation: z Answer: Negative"]
    r = cot_consistency(inst, POS, StrategyConfig(D=3), seq_backend("strictly", three))
    assert r.score == pytest.approx(2 / 3)
    four = ["Answer: Positive"] * 3 + ["gibberish"]
    assert cot_consistency(inst, POS, StrategyConfig(D=4), seq_backend("strictly", four)).score == 0.75
    assert cot_consistency(inst, POS, StrategyConfig(D=1), seq_backend("strictly", ["Answer: Positive"])).score == 1.0


def test_top_k_verbalized():
    inst = cqa(2)
    b = MockBackend(MockScript().add("best guesses", "G1: A  P1: 0.7  G2: B  P2: 0.3"))
    r = top_k_verbalized(inst, inst.answer_space[0], StrategyConfig(), b)
    assert r.score == 0.7 and r.api_calls == 1 and r.top_answer == 0
    assert top_k_verbalized(cqa(3), cqa(3).answer_space[2], StrategyConfig(), MockBackend(
        MockScript().add("best guesses", "G1: A P1: 0.7 G2: B P2: 0.3"))).score == 0.0
    bad = top_k_verbalized(inst, inst.answer_space[0], StrategyConfig(),
                           MockBackend(MockScript().add("", "no idea")))
    assert bad.score == 0.0 and bad.parse_failed


def test_p_true():
    inst = sa()
    verdicts = ["The label is correct."] * 21 + ["Incorrect."] * 9
    r = p_true(inst, POS, StrategyConfig(), seq_backend("correct or incorrect", verdicts))
    assert r.score == pytest.approx(0.7) and r.api_calls == 30
    none = p_true(inst, POS, StrategyConfig(D=5), seq_backend("correct or incorrect", ["hmm"] * 5))
    assert none.score == 0.0


@pytest.mark.parametrize("text, score, failed", [
    ("The answer fits. Confidence: 0.8", 0.8, False),
    ("Confidence: 85%", 0.85, False),
    ("I think so.", 0.0, True),
])
def test_self_probing(text, score, failed):
    r = self_probing(sa(), POS, StrategyConfig(), MockBackend(MockScript().add("", text)))
    assert r.score == pytest.approx(score) and r.parse_failed is failed and r.api_calls == 1


@pytest.mark.parametrize("answers, score", [
    (["Positive"] * 3, 1.0),
    (["Positive", "Negative", "Positive"], 2 / 3),
    (["Negative"] * 3, 0.0),
])
def test_induced_consistency(answers, score):
    s = MockScript()
    for i, a in enumerate(answers):
        s.add(("I think the answer is", "Are you sure?", "A domain expert says")[i], a)
    r = induced_consistency(sa(), POS, StrategyConfig(), MockBackend(s))
    assert r.score == pytest.approx(score) and r.api_calls == 3


def test_induced_prompts_push_a_wrong_candidate():
    inst = cqa(3)
    b = universal_backend(inst)
    r = induced_consistency(inst, inst.answer_space[0], StrategyConfig(induced_m=4), b)
    assert r.api_calls == 4
    pushed = [t.prompt for t in r.trace]
    assert "(b) oven" in pushed[0] and "(c) mailbox" in pushed[1] and "(b) oven" in pushed[2]
    assert all("(a) closet." not in p.split("Answer choices")[-1][-20:] for p in pushed)


def _entropy_backend(inst, answers):
    s = MockScript()
    s.add("Paraphrase the given sentence", [f"<rephrasing {i}>" for i in range(len(answers))])
    for i, a in enumerate(answers):
        s.add(f"<rephrasing {i}>", a)
    return MockBackend(s)


def test_self_detect_boundaries_and_oracle():
    inst = sa()
    cfg = StrategyConfig(rephrase_count=15)
    r = self_detect_entropy(inst, POS, cfg, _entropy_backend(inst, ["Positive"] * 15))
    assert r.score == 1.0 and r.api_calls == 30
    uniform = (["Positive", "Negative", "??"] * 5)
    r = self_detect_entropy(inst, POS, cfg, _entropy_backend(inst, uniform))
    assert r.score == pytest.approx(0.0, abs=1e-12)
    mixed = ["Positive"] * 9 + ["Negative"] * 4 + ["??"] * 2
    r = self_detect_entropy(inst, POS, cfg, _entropy_backend(inst, mixed))
    h = entropy([9, 4, 2])
    assert abs(r.details["entropy"] - h) <= 1e-9
    assert abs(r.score - (1 - h / math.log(3))) <= 1e-9


def test_cape_score_is_mean_of_prompt_scores():
    inst = cqa(2)
    s = MockScript()
    s.add(r"- oven\n- closet", topk([("closet", 0.7)]), kind="regex")
    s.add(r"- closet\n- oven", topk([("closet", 0.4)]), kind="regex")
    s.add(r"A\. oven", topk([("B", 1.0)]), kind="regex")
    s.add(r"A\. closet", topk([("A", 0.6)]), kind="regex")
    s.add("best guesses", topk([("(a) closet", 0.8)]))
    r = prompt_ensemble_cape(inst, inst.answer_space[0], StrategyConfig(), MockBackend(s))
    assert r.details["prompt_scores"] == [0.8, 0.6, 1.0, 0.4, 0.7]
    assert r.score == 0.7
    assert r.api_calls == 5


def test_t3_justify_and_joint():
    inst = SHIRT
    b = backend_for(SHIRT, SHIRT_JUSTIFY, SHIRT_OUTPUTS)
    just = t3_justify(inst, b)
    assert [j.answer_index for j in just] == [0, 1]
    assert just[1].text == SHIRT_JUSTIFY["b"]
    assert b.calls == 2
    target = inst.answer_space[0]
    r = t3_joint_score(inst, target, just, StrategyConfig(), b)
    assert r.score == 0.45 and r.api_calls == 2
    swapped = StrategyConfig(shuffle_orders=(ExplanationOrder((1, 0)), ExplanationOrder((0, 1))))
    assert t3_joint_score(inst, target, just, swapped, b).score == r.score
    same = StrategyConfig(shuffle_orders=(ExplanationOrder((0, 1)), ExplanationOrder((0, 1))))
    assert t3_joint_score(inst, target, just, same, b).score == 0.6


def test_empty_justification_still_scored(caplog):
    inst = sa()
    s = MockScript().add("Please generate an explanation", "   ").add("best guesses", topk([("Positive", 0.9)]))
    b = MockBackend(s)
    r = t3(inst, POS, StrategyConfig(), b)
    assert r.score == 0.9 and r.api_calls == 4
    assert "empty justification" in caplog.text


def test_t3_unparsable_order_contributes_zero():
    inst = sa()
    s = MockScript()
    s.add("Possible explanation 1: why Positive", "nothing useful")
    s.add("Possible explanation 1: why Negative", topk([("Positive", 0.8)]))
    s.add("The answer is Positive", "why Positive")
    s.add("The answer is Negative", "why Negative")
    r = t3(inst, POS, StrategyConfig(), MockBackend(s))
    assert r.score == 0.4 and r.flags == ("unparsable_order_0",)


def test_nli_base_order():
    inst = nli()  # contradiction, entailment, neutral
    assert base_order(inst) == [1, 2, 0]
    assert base_order(cqa(3)) == [0, 1, 2]


def test_hybrid_combine_rule():
    t = POS
    a = make_result("x", "a", t, 0.8, [])
    b = make_result("x", "b", t, 0.6, [])
    assert hybrid_combine(a, b, True).score == 0.7
    assert hybrid_combine(a, b, False).score == 0.35
    c = make_result("x", "c", t, 0.3, [])
    assert hybrid_combine(c, c, True).score == 0.3
    with pytest.raises(ValueError):
        hybrid_combine(a, make_result("y", "b", t, 0.6, []), True)


def test_t3_plus_topk_arithmetic():
    t = POS
    assert hybrid_combine(make_result("x", "t3", t, 0.45, []), make_result("x", "k", t, 0.7, []), True).score == 0.575
    b = backend_for(SHIRT, SHIRT_JUSTIFY, SHIRT_OUTPUTS)
    r = t3_plus_topk(SHIRT, SHIRT.answer_space[0], StrategyConfig(), b)
    # T3 prefers (b) while Top-K prefers (a): the disagreement halves the mean
    assert r.score == 0.2875 and r.api_calls == 5


def test_t3_plus_pe_mean_of_variants():
    inst = sa()
    s = MockScript()
    s.add(r"(?s)A\. Positive.*Possible explanation 1: why Positive", topk([("A", 0.4)]), kind="regex")
    s.add(r"(?s)A\. Positive.*Possible explanation 1: why Negative", topk([("A", 0.5)]), kind="regex")
    s.add(r"(?s)A\. Negative.*Possible explanation 1: why Positive", topk([("B", 0.6)]), kind="regex")
    s.add(r"(?s)A\. Negative.*Possible explanation 1: why Negative", topk([("B", 0.5)]), kind="regex")
    s.add("The answer is Positive", "why Positive")
    s.add("The answer is Negative", "why Negative")
    r = t3_plus_pe(inst, POS, StrategyConfig(), MockBackend(s))
    assert r.details["variant_scores"] == [0.4, 0.5, 0.6, 0.5]
    assert r.score == 0.5 and r.api_calls == 6


def _cf_result(inst, answer, score):
    return make_result(inst.id, "top_k_verb", inst.answer_space[answer], score,
                       [TraceEntry("p", LlmResponse("r", "f"))])


def test_counterfactual_examples():
    q, qb = sa("q", gold=0), sa("qb", gold=1)
    pair = CounterfactualPair(q, qb, 2)
    assert counterfactual_adjust(pair, _cf_result(q, 0, 0.8), _cf_result(qb, 1, 0.6)).score == 0.7
    same = counterfactual_adjust(pair, _cf_result(q, 0, 0.9), _cf_result(qb, 0, 0.9))
    assert same.score == 0.5 and same.api_calls == 2
    n3, n3b = nli("n", gold=0), nli("nb", gold=1)
    pair3 = CounterfactualPair(n3, n3b, 3)
    assert counterfactual_adjust(pair3, _cf_result(n3, 0, 0.6), _cf_result(n3b, 0, 0.8)).score == 0.35
    with pytest.raises(AdjustUnavailable):
        counterfactual_adjust(pair, _cf_result(q, 0, 0.8), None)


def test_counterfactual_branch_continuity():
    q, qb = sa("q", gold=0), sa("qb", gold=1)
    pair = CounterfactualPair(q, qb, 2)
    agree = counterfactual_adjust(pair, _cf_result(q, 0, 0.7), _cf_result(qb, 0, 0.5))
    differ = counterfactual_adjust(pair, _cf_result(q, 0, 0.7), _cf_result(qb, 1, 0.5))
    assert agree.score == differ.score


def test_ablations_on_case_study():
    b = backend_for(SHIRT, SHIRT_JUSTIFY, SHIRT_OUTPUTS)
    out = ablation_variants(SHIRT, SHIRT.answer_space[0], StrategyConfig(), b)
    assert set(out) == {"w/ CoT expl", "sep expl", "w/o shuffle"}
    assert out["w/o shuffle"].score == 0.6 and out["w/o shuffle"].api_calls == 3
    assert out["sep expl"].score == 0.45 and out["sep expl"].api_calls == 4


def test_exact_mean():
    assert exact_mean([0.6, 0.3]) == 0.45
    assert exact_mean([0.8, 0.6, 1.0, 0.4, 0.7]) == 0.7
    with pytest.raises(ValueError):
        exact_mean([])


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_every_strategy_is_deterministic_and_bounded(name):
    inst = cqa(3)
    target = inst.answer_space[0]
    r1 = STRATEGIES[name](inst, target, StrategyConfig(D=5, rephrase_count=4), universal_backend(inst))
    r2 = STRATEGIES[name](inst, target, StrategyConfig(D=5, rephrase_count=4), universal_backend(inst))
    assert r1 == r2
    assert 0.0 <= r1.score <= 1.0
    assert r1.api_calls == len(r1.trace)


def test_config_validation():
    for bad in (dict(D=0), dict(K=0), dict(M=0), dict(rephrase_count=1), dict(hybrid_base="x"), dict(shuffle_orders=())):
        with pytest.raises(ValueError):
            StrategyConfig(**bad)
    with pytest.raises(ValueError):
        StrategyConfig(shuffle_orders=((0, 1),)).orders_for(cqa(3))
    with pytest.raises(ValueError):
        prompt_ensemble_cape(sa(), POS, StrategyConfig(M=6), universal_backend(sa()))
    cfg = StrategyConfig.from_mapping({"D": 10, "shuffle_orders": [[1, 0]]})
    assert cfg.to_json()["shuffle_orders"] == [[1, 0]]
    with pytest.raises(ValueError):
        StrategyConfig.from_mapping({"bogus": 1})


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_reported_calls_equal_backend_delta(name):
    inst = cqa(4)
    backend = universal_backend(inst)
    backend.complete("warm-up", StrategyConfig().deterministic())
    before = backend.calls
    r = STRATEGIES[name](inst, inst.answer_space[1], StrategyConfig(D=6, rephrase_count=3), backend)
    assert r.api_calls == backend.calls - before
