"""Discrimination and calibration metrics for detection scores."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabels

DEFAULT_BINS = 10
SELECTIVE_GRID = tuple(k / 20 for k in range(11))  # 0, 0.05, ..., 0.5


@dataclass(frozen=True)
class ScoredItem:
    score: float
    correct: bool

    def __post_init__(self):
        object.__setattr__(self, "score", float(self.score))
        object.__setattr__(self, "correct", bool(self.correct))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


def _arrays(items: Sequence[ScoredItem]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.fromiter((it.score for it in items), dtype=float, count=len(items))
    labels = np.fromiter((it.correct for it in items), dtype=bool, count=len(items))
    return scores, labels


def auroc(items: Sequence[ScoredItem]) -> float:
    """Mann-Whitney statistic: P(correct outscores incorrect) with ties counted half."""
    scores, labels = _arrays(items)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUROC needs both correct and incorrect items")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def prauc(items: Sequence[ScoredItem]) -> float:
    """Average precision: step-wise area under precision-recall, one step per distinct score."""
    scores, labels = _arrays(items)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DegenerateLabels("PRAUC needs at least one correct item")
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    # last index of each run of equal scores = one threshold
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp_t = tp[last]
    precision = tp_t / (last + 1)
    recall_gain = np.diff(np.r_[0, tp_t]) / n_pos
    return float(np.sum(precision * recall_gain))


def ece(items: Sequence[ScoredItem], bins: int = DEFAULT_BINS) -> float:
    """Expected calibration error over ``bins`` equal-width bins; the last bin includes 1.0."""
    if not items:
        raise ValueError("ECE of no items")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    scores, labels = _arrays(items)
    edges = np.arange(bins + 1) / bins
    idx = np.clip(np.searchsorted(edges, scores, side="right") - 1, 0, bins - 1)
    total = 0.0
    for b in range(bins):
        mask = idx == b
        nb = int(mask.sum())
        if nb:
            total += nb / len(items) * abs(labels[mask].mean() - scores[mask].mean())
    return float(total)


def selective_prediction(items: Sequence[ScoredItem],
                         fractions: Sequence[float] = SELECTIVE_GRID) -> list[tuple[float, float]]:
    """(f, accuracy after abstaining on the floor(f*n) lowest-scored items) for each f.

    Equal scores keep their input order, so the earlier item is dropped first.
    """
    if not items:
        raise ValueError("selective prediction needs items")
    n = len(items)
    order = sorted(range(n), key=lambda i: items[i].score)  # sorted() is stable
    curve = []
    for f in fractions:
        if not 0.0 <= f < 1.0:
            raise ValueError(f"abstain fraction {f} outside [0, 1)")
        drop = int(Fraction(str(f)) * n)
        kept = order[drop:]
        curve.append((float(f), sum(items[i].correct for i in kept) / len(kept)))
    return curve


@dataclass(frozen=True)
class GroupStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def as_row(self) -> list[float]:
        return [self.min, self.q1, self.median, self.q3, self.max]


def _group(scores: np.ndarray) -> Optional[GroupStats]:
    if len(scores) == 0:
        return None
    q = np.percentile(scores, [0, 25, 50, 75, 100])  # linear interpolation
    return GroupStats(len(scores), *(float(v) for v in q))


def score_stats(items: Sequence[ScoredItem]) -> dict[str, Optional[GroupStats]]:
    """Five-number summaries for the correct and incorrect groups (None for an empty group)."""
    scores, labels = _arrays(items)
    return {"correct": _group(scores[labels]), "incorrect": _group(scores[~labels])}


@dataclass
class MetricReport:
    strategy: str
    n: int
    auroc: Optional[float]
    prauc: Optional[float]
    ece: Optional[float]
    selective_curve: list[tuple[float, float]] = field(default_factory=list)
    score_stats: dict[str, Optional[GroupStats]] = field(default_factory=dict)
    parse_failure_rate: float = 0.0
    api_calls: int = 0
    bins: int = DEFAULT_BINS


def _or_none(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except DegenerateLabels:
        return None


def evaluate(strategy: str, items: Sequence[ScoredItem], *, parse_failures: int = 0, api_calls: int = 0,
             bins: int = DEFAULT_BINS, fractions: Sequence[float] = SELECTIVE_GRID) -> MetricReport:
    """All metrics for one strategy; undefined values (single-class data, no items) are None."""
    items = list(items)
    if not items:
        return MetricReport(strategy, 0, None, None, None, api_calls=api_calls, bins=bins)
    return MetricReport(
        strategy=strategy,
        n=len(items),
        auroc=_or_none(auroc, items),
        prauc=_or_none(prauc, items),
        ece=ece(items, bins),
        selective_curve=selective_prediction(items, fractions),
        score_stats=score_stats(items),
        parse_failure_rate=parse_failures / len(items),
        api_calls=api_calls,
        bins=bins,
    )
