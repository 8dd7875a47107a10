"""Shared builders for tests."""

from __future__ import annotations

from selfdetect.backend import MockBackend, MockScript
from selfdetect.core import QuestionInstance

SA_INSTR = "Given a piece of text, classify the sentiment as Positive or Negative."
CQA_INSTR = "Read the given question and select the most appropriate answer by indicating the associated letter."
NLI_INSTR = ("Determine whether the hypothesis is an entailment, a contradiction, or neutral.")


def sa(id="sa-1", text="Great battery and a sharp screen.", gold=0):
    return QuestionInstance.build(id, "SA", SA_INSTR, text, ["Positive", "Negative"], gold)


def nli(id="nli-1", gold=0):
    return QuestionInstance.build(id, "NLI", NLI_INSTR, "Premise: A dog runs. Hypothesis: An animal moves.",
                                  ["contradiction", "entailment", "neutral"], gold)


def cqa(n=5, id="cqa-1", gold=0):
    words = ["closet", "oven", "mailbox", "river", "engine"][:n]
    choices = [f"({chr(97 + i)}) {w}" for i, w in enumerate(words)]
    return QuestionInstance.build(id, "CQA", CQA_INSTR, "Where would you keep a spare blanket?", choices, gold)


def instance_with_n(n: int, id: str | None = None):
    if n == 2:
        return sa(id or "sa-n2")
    if n == 3:
        return nli(id or "nli-n3")
    return cqa(n, id or f"cqa-n{n}")


def topk(pairs) -> str:
    return " ".join(f"G{i}: {g} P{i}: {p}" for i, (g, p) in enumerate(pairs, 1))


def universal_script(instance, target_text=None) -> MockScript:
    """Answers every prompt shape for ``instance`` with well-formed text."""
    first = instance.answer_space[0].surface
    second = instance.answer_space[1].surface
    s = MockScript()
    s.add("Possible explanation", topk([(first, 0.6), (second, 0.4)]))
    s.add("Please generate an explanation", "Because the text says so.")
    s.add("Is the label correct or incorrect", "The label is correct.")
    s.add("Paraphrase the given sentence", instance.question)
    s.add("Confidence: <probability>", "It fits. Confidence: 0.8")
    s.add("best guesses", topk([(first, 0.7), (second, 0.3)]))
    s.add("Please output strictly", f"Explanation: fine. Answer: {first}")
    s.add("", target_text or first)
    return s


def universal_backend(instance) -> MockBackend:
    return MockBackend(universal_script(instance))
