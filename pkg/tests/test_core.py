from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from selfdetect.backend import LlmResponse
from selfdetect.core import (
    CandidateAnswer,
    CounterfactualPair,
    DetectionResult,
    QuestionInstance,
    Task,
    TraceEntry,
    make_result,
    match_answer,
    normalize_answer,
    try_match,
)
from selfdetect.errors import AmbiguousAnswer, InvalidAnswer, InvalidAnswerSpace

from helpers import cqa, sa


def space(*surfaces):
    return tuple(CandidateAnswer.from_surface(s) for s in surfaces)


@pytest.mark.parametrize("raw, expected", [
    ("  Positive.", "positive"),
    ("positive", "positive"),
    ("(a) Yard", "(a) yard"),
    ("NEGATIVE!!", "negative"),
    ("  not   entailment ", "not entailment"),
    ("\"Positive\"", "positive"),
    ("(Positive)", "positive"),
    ("jar)", "jar"),
])
def test_normalize_examples(raw, expected):
    assert normalize_answer(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "...", "?!"])
def test_normalize_rejects_empty(raw):
    with pytest.raises(InvalidAnswer):
        normalize_answer(raw)


@given(st.text(min_size=1, max_size=40))
def test_normalize_idempotent(text):
    try:
        once = normalize_answer(text)
    except InvalidAnswer:
        return
    assert normalize_answer(once) == once
    assert once == once.lower()
    assert "  " not in once


def test_match_examples():
    pn = space("Positive", "Negative")
    assert match_answer("Negative", pn) == 1
    assert match_answer("B", space("(a) plate", "(b) jar")) == 1
    assert match_answer("maybe", pn) is None


def test_match_letter_forms_and_content():
    s = space("(a) pour it onto a plate", "(b) pour it into a jar")
    assert match_answer("(b)", s) == 1
    assert match_answer("a.", s) == 0
    assert match_answer("pour it into a jar", s) == 1
    assert match_answer("b. pour it into a jar", s) == 1
    assert match_answer("a) pour it into a jar", s) is None  # letter and content disagree


def test_positional_letters_for_unlabelled_space():
    assert match_answer("B", space("Positive", "Negative")) == 1
    assert match_answer("A", space("Positive", "Negative")) == 0


def test_ambiguous_match_raises():
    s = (CandidateAnswer("(a) jar", "(a) jar"), CandidateAnswer("(b) jar", "(b) jar"))
    with pytest.raises(AmbiguousAnswer):
        match_answer("jar", s)
    assert try_match("jar", s) is None


_words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz ", min_size=1, max_size=12).filter(lambda w: w.strip())


@given(st.lists(_words, min_size=2, max_size=6, unique_by=lambda w: " ".join(w.split())), st.booleans())
def test_every_candidate_matches_itself(words, labelled):
    surfaces = [f"({chr(97 + i)}) {w}" if labelled else w for i, w in enumerate(words)]
    cands = [CandidateAnswer.from_surface(s) for s in surfaces]
    for i, c in enumerate(cands):
        assert match_answer(c.surface, cands) == i


def test_candidate_label_and_text():
    c = CandidateAnswer.from_surface("(b) Pour it into a jar")
    assert c.label == "b"
    assert c.content == "pour it into a jar"
    assert c.text == "Pour it into a jar"
    plain = CandidateAnswer.from_surface("Positive")
    assert plain.label is None and plain.text == "Positive"
    assert CandidateAnswer.from_surface("e.g. nothing").label is None


def test_question_instance_invariants():
    inst = sa()
    assert inst.n == 2 and inst.task is Task.SA
    assert inst.is_correct(inst.answer_space[0]) is True
    with pytest.raises(InvalidAnswerSpace):
        QuestionInstance.build("x", "SA", "i", "q", ["Positive"], None)
    with pytest.raises(InvalidAnswerSpace):
        QuestionInstance.build("x", "SA", "i", "q", ["Positive", "positive."], None)
    with pytest.raises(InvalidAnswerSpace):
        QuestionInstance.build("x", "SA", "i", "q", ["Positive", "Negative"], 2)
    unlabelled = QuestionInstance.build("x", "sa", "i", "q", ["Positive", "Negative"])
    assert unlabelled.is_correct(unlabelled.answer_space[0]) is None


def test_counterfactual_pair_invariants():
    a, b = sa("o", gold=0), sa("c", gold=1)
    assert CounterfactualPair(a, b, 2).k == 2
    with pytest.raises(InvalidAnswerSpace):
        CounterfactualPair(a, sa("c2", gold=0), 2)
    with pytest.raises(InvalidAnswerSpace):
        CounterfactualPair(a, cqa(), 2)
    with pytest.raises(InvalidAnswerSpace):
        CounterfactualPair(a, b, 1)


def _trace(n):
    return [TraceEntry("p", LlmResponse("r", "f")) for _ in range(n)]


def test_make_result_clamps_and_records():
    t = sa().answer_space[0]
    r = make_result("i", "s", t, 1.2, _trace(2))
    assert r.score == 1.0 and r.api_calls == 2
    assert r.details["pre_clamp_score"] == 1.2 and "clamped" in r.flags
    assert make_result("i", "s", t, -0.1, []).score == 0.0
    with pytest.raises(ValueError):
        make_result("i", "s", t, float("nan"), [])


def test_detection_result_invariants():
    t = sa().answer_space[0]
    with pytest.raises(ValueError):
        DetectionResult("i", "s", t, 1.5)
    with pytest.raises(ValueError):
        DetectionResult("i", "s", t, 0.5, tuple(_trace(2)), api_calls=1)
    r = DetectionResult("i", "s", t, 0.5, tuple(_trace(1)), api_calls=1, flags=("unparsable_topk",))
    assert r.parse_failed
