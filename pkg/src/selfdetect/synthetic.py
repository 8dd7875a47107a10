"""Synthetic sentiment corpus with a scripted mock model that over-trusts some wrong answers.

Each instance gets a scripted greedy answer, Top-K output, per-candidate
justifications and joint (justification-aware) Top-K outputs. On the
"over-trust" instances the greedy answer is wrong and the plain Top-K
output is confident in it, while the joint outputs move probability to
the gold candidate once its justification is in view.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .backend import MockScript

INSTRUCTION = "Given a piece of movie review, classify the attitude to the movie as Positive or Negative."
LABELS = ("Positive", "Negative")

_OPENERS = ("The plot", "The soundtrack", "The lead performance", "The camera work", "The script", "The ending")
_POS = ("carried real warmth", "surprised me in the best way", "kept me hooked", "felt fresh and sharp")
_NEG = ("fell completely flat", "dragged on forever", "made no sense at all", "felt lazy and cheap")


@dataclass(frozen=True)
class SyntheticCase:
    id: str
    review: str
    gold: int
    target: int
    topk_target_prob: float
    joint_target_probs: tuple[float, float]
    overtrust: bool


def _fmt(p: float) -> str:
    return repr(round(p, 2))


def _topk_text(target: str, other: str, p: float) -> str:
    first, second, p1 = (target, other, p) if p >= 0.5 else (other, target, 1 - p)
    return f"G1: {first} P1: {_fmt(p1)} G2: {second} P2: {_fmt(1 - p1)}"


def make_cases(n: int = 120, n_overtrust: int = 40, seed: int = 0) -> list[SyntheticCase]:
    if not 0 <= n_overtrust <= n:
        raise ValueError("n_overtrust must lie in [0, n]")
    rng = random.Random(seed)
    flagged = set(rng.sample(range(n), n_overtrust))
    cases = []
    for i in range(n):
        gold = rng.randrange(2)
        phrase = rng.choice(_POS if gold == 0 else _NEG)
        review = f"Review {i}: {rng.choice(_OPENERS)} {phrase}."
        if i in flagged:
            target = 1 - gold
            topk = rng.choice((0.85, 0.9, 0.95))
            joint = (rng.choice((0.3, 0.4, 0.5)), rng.choice((0.2, 0.3, 0.4)))
        else:
            target = gold
            topk = rng.choice((0.7, 0.75, 0.8, 0.85, 0.9, 0.95))
            joint = (rng.choice((0.6, 0.7, 0.8, 0.9)), rng.choice((0.5, 0.6, 0.7, 0.8)))
        cases.append(SyntheticCase(f"syn-{i}", review, gold, target, topk, joint, i in flagged))
    return cases


def records(cases: list[SyntheticCase]) -> list[dict]:
    return [{"id": c.id, "task": "SA", "instruction": INSTRUCTION, "question": c.review,
             "choices": list(LABELS), "label": c.gold} for c in cases]


def mock_script(cases: list[SyntheticCase], rng_seed: int = 0, extras: bool = True) -> MockScript:
    """Script covering greedy answers, Top-K, T3 and (with ``extras``) sampling-based baselines."""
    script = MockScript(rng_seed=rng_seed)
    for c in cases:
        target, other = LABELS[c.target], LABELS[1 - c.target]
        review = re.escape(c.review)
        just = {lab: f"Justification {c.id}/{lab}: the review supports {lab}." for lab in LABELS}
        # joint prompts, keyed by which justification is listed first
        script.add(f"Possible explanation 1: {just[LABELS[0]]}", _topk_text(target, other, c.joint_target_probs[0]))
        script.add(f"Possible explanation 1: {just[LABELS[1]]}", _topk_text(target, other, c.joint_target_probs[1]))
        for lab in LABELS:
            script.add(rf"(?s){review}.*The answer is {lab}\.", just[lab], kind="regex")
        script.add(rf"(?s)Provide your \d+ best.*{review}", _topk_text(target, other, c.topk_target_prob), kind="regex")
        if extras:
            p = c.topk_target_prob
            script.add(rf"(?s){review}.*Is the label correct or incorrect", {"Correct": p, "Incorrect": round(1 - p, 2)},
                       kind="regex")
            script.add(rf"(?s){review}.*Answer: \[", {f"Explanation: scripted. Answer: {target}": p,
                                                       f"Explanation: scripted. Answer: {other}": round(1 - p, 2)},
                       kind="regex")
        # base prompt: greedy decoding picks the target
        weight = 0.7 if c.overtrust else max(c.topk_target_prob, 0.55)
        script.add(c.review, {target: weight, other: round(1 - weight, 2)})
    return script
