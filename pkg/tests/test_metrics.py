from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from selfdetect.errors import DegenerateLabels
from selfdetect.metrics import (
    ScoredItem,
    auroc,
    ece,
    evaluate,
    prauc,
    score_stats,
    selective_prediction,
)


def items(scores, labels):
    return [ScoredItem(s, c) for s, c in zip(scores, labels)]


def test_auroc_examples():
    assert auroc(items([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 0])) == 1.0
    assert auroc(items([0.5, 0.5], [1, 0])) == 0.5
    assert auroc(items([0.1, 0.9], [1, 0])) == 0.0
    with pytest.raises(DegenerateLabels):
        auroc(items([0.1, 0.2], [1, 1]))


def test_prauc_examples():
    assert prauc(items([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])) == 1.0
    assert prauc(items([0.3, 0.2, 0.1], [1, 1, 1])) == 1.0
    # one tied block: precision at its only threshold is the base rate
    assert prauc(items([0.5] * 4, [1, 0, 0, 0])) == 0.25
    with pytest.raises(DegenerateLabels):
        prauc(items([0.3, 0.2], [0, 0]))


def test_ece_examples():
    assert ece(items([0.25, 0.25, 0.25, 0.25], [1, 0, 0, 0])) == 0.0
    assert ece(items([1.0], [0])) == 1.0
    assert ece(items([1.0] * 5, [1] * 5)) == 0.0
    # 0.1 opens the second bin, 1.0 falls in the last bin
    assert ece(items([0.1, 1.0], [0, 1])) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        ece([])


def test_selective_prediction_examples():
    data = items([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    curve = selective_prediction(data, [0.0, 0.25, 0.5])
    assert curve == [(0.0, 0.5), (0.25, 2 / 3), (0.5, 1.0)]
    with pytest.raises(ValueError):
        selective_prediction(data, [1.0])


def test_selective_prediction_stable_ties():
    data = items([0.5, 0.5, 0.5, 0.5], [0, 1, 1, 1])
    assert selective_prediction(data, [0.25]) == [(0.25, 1.0)]
    data = items([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 1])
    assert selective_prediction(data, [0.25]) == [(0.25, 2 / 3)]


def test_selective_fraction_floor_is_exact():
    # 0.3 * 10 is 3.0000000000000004 in binary floating point
    data = items([i / 10 for i in range(10)], [0, 0, 0, 1, 1, 1, 1, 1, 1, 1])
    assert selective_prediction(data, [0.3]) == [(0.3, 1.0)]


def test_score_stats_examples():
    s = score_stats(items([0.4], [1]))
    assert s["correct"].as_row() == [0.4] * 5 and s["incorrect"] is None
    s = score_stats(items([0.0, 0.5, 1.0], [0, 0, 0]))
    assert s["incorrect"].median == 0.5


def test_evaluate_marks_undefined():
    r = evaluate("s", items([0.2, 0.9], [1, 1]), parse_failures=1)
    assert r.auroc is None and r.prauc == 1.0 and r.parse_failure_rate == 0.5
    empty = evaluate("s", [])
    assert empty.n == 0 and empty.ece is None


_scores = st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=40)


@given(_scores, st.data())
def test_auroc_monotone_invariance_and_flip(scores, data):
    labels = data.draw(st.lists(st.booleans(), min_size=len(scores), max_size=len(scores)))
    assume(any(labels) and not all(labels))
    base = auroc(items(scores, labels))
    levels = sorted(set(scores))
    remap = {v: (k + 1) ** 2 / (len(levels) + 1) ** 2 for k, v in enumerate(levels)}
    squashed = [remap[s] for s in scores]  # strictly increasing, no float collisions
    assert math.isclose(auroc(items(squashed, labels)), base, abs_tol=1e-12)
    flipped = auroc(items(scores, [not c for c in labels]))
    assert math.isclose(flipped, 1 - base, abs_tol=1e-12)


@given(_scores, st.data())
def test_metrics_are_order_independent(scores, data):
    labels = data.draw(st.lists(st.booleans(), min_size=len(scores), max_size=len(scores)))
    assume(any(labels) and not all(labels))
    perm = data.draw(st.permutations(range(len(scores))))
    a = items(scores, labels)
    b = [a[i] for i in perm]
    assert math.isclose(auroc(a), auroc(b), abs_tol=1e-12)
    assert math.isclose(prauc(a), prauc(b), abs_tol=1e-12)
    assert math.isclose(ece(a), ece(b), abs_tol=1e-12)


@given(_scores, st.data())
def test_selective_at_zero_is_accuracy(scores, data):
    labels = data.draw(st.lists(st.booleans(), min_size=len(scores), max_size=len(scores)))
    assert selective_prediction(items(scores, labels), [0.0])[0][1] == pytest.approx(np.mean(labels))


def test_scored_item_validation():
    with pytest.raises(ValueError):
        ScoredItem(1.01, True)
