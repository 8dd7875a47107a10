"""Parsers for the plain-text answer formats the prompts ask for."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import CandidateAnswer, try_match
from .errors import UnparsableResponse

logger = logging.getLogger(__name__)

_MARKER = re.compile(r"(?<![A-Za-z0-9])([GP])(\d+)\s*[:：]", re.IGNORECASE)
_NUMBER = re.compile(r"^\s*[\[(<\"']?\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*(%?)")
_ANSWER_MARKER = re.compile(r"answer\s*[:：]", re.IGNORECASE)
_FALSE = re.compile(r"\b(incorrect|false)\b", re.IGNORECASE)
_TRUE = re.compile(r"\b(correct|true)\b", re.IGNORECASE)
_CONFIDENCE = re.compile(r"confidence", re.IGNORECASE)


@dataclass(frozen=True)
class GuessList:
    entries: tuple[tuple[str, float], ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((str(g), float(p)) for g, p in self.entries))
        for g, p in self.entries:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} for {g!r} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def parse_probability(raw: str) -> Optional[float]:
    """``"0.7"`` -> 0.7, ``"70%"`` -> 0.7; None when no number leads the text."""
    m = _NUMBER.match(raw)
    if not m:
        return None
    value = float(m.group(1))
    return value / 100.0 if m.group(2) else value


def parse_top_k(text: str, k: int) -> GuessList:
    """Extract ``G<i>: guess`` / ``P<i>: prob`` pairs in index order.

    A guess without a parsable probability is dropped, probabilities are
    clamped into [0, 1], and anything past ``k`` pairs is truncated. All
    three are recorded in ``warnings``. Raises UnparsableResponse when no
    pair survives.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    marks = list(_MARKER.finditer(text or ""))
    guesses: dict[int, str] = {}
    probs: dict[int, str] = {}
    for j, m in enumerate(marks):
        end = marks[j + 1].start() if j + 1 < len(marks) else len(text)
        value = text[m.end():end].strip()
        idx = int(m.group(2))
        slot = guesses if m.group(1).upper() == "G" else probs
        slot.setdefault(idx, value)

    warnings: list[str] = []
    entries: list[tuple[str, float]] = []
    for idx in sorted(guesses):
        guess = guesses[idx]
        if idx not in probs:
            warnings.append(f"G{idx} has no P{idx}; dropped")
            continue
        p = parse_probability(probs[idx])
        if p is None:
            warnings.append(f"P{idx}={probs[idx][:20]!r} is not a number; dropped")
            continue
        if not 0.0 <= p <= 1.0:
            warnings.append(f"P{idx}={p} clamped into [0, 1]")
            p = min(1.0, max(0.0, p))
        if not guess:
            warnings.append(f"G{idx} is empty; dropped")
            continue
        entries.append((guess, p))
    if not entries:
        raise UnparsableResponse(f"no guess/probability pairs in {text[:120]!r}")
    if len(entries) > k:
        warnings.append(f"{len(entries)} guesses for K={k}; truncated")
        entries = entries[:k]
    for w in warnings:
        logger.warning("top-k parse: %s", w)
    return GuessList(tuple(entries), tuple(warnings))


def render_top_k(guesses: GuessList | Sequence[tuple[str, float]]) -> str:
    """Inverse of parse_top_k for well-formed lists."""
    return "\n".join(f"G{i}: {g}\nP{i}: {p!r}" for i, (g, p) in enumerate(guesses, 1))


def target_prob(guesses: GuessList, target: CandidateAnswer, answer_space: Sequence[CandidateAnswer]) -> float:
    """Probability attached to the first guess naming ``target``; 0 when none does."""
    want = _index_of(target, answer_space)
    for guess, p in guesses.entries:
        if try_match(guess, answer_space) == want:
            return p
    return 0.0


def candidate_probs(guesses: GuessList, answer_space: Sequence[CandidateAnswer]) -> list[float]:
    """Per-candidate probability (first mention wins, unmentioned candidates get 0)."""
    out = [0.0] * len(answer_space)
    seen = set()
    for guess, p in guesses.entries:
        i = try_match(guess, answer_space)
        if i is not None and i not in seen:
            out[i] = p
            seen.add(i)
    return out


def _index_of(target: CandidateAnswer, answer_space: Sequence[CandidateAnswer]) -> int:
    for i, c in enumerate(answer_space):
        if c.canonical == target.canonical:
            return i
    raise ValueError(f"target {target.surface!r} is not in the answer space")


def parse_cot_answer(text: str, answer_space: Sequence[CandidateAnswer]) -> Optional[int]:
    """Answer index from the last ``Answer:`` field, else from the last line."""
    text = text or ""
    marks = list(_ANSWER_MARKER.finditer(text))
    if marks:
        value = text[marks[-1].end():].strip().splitlines()
        if value:
            found = try_match(value[0], answer_space)
            if found is not None:
                return found
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if lines:
        return try_match(lines[-1], answer_space)
    return None


def parse_answer(text: str, answer_space: Sequence[CandidateAnswer]) -> Optional[int]:
    """Answer index for a free-form reply: the whole text first, then as CoT output."""
    found = try_match(text or "", answer_space)
    if found is not None:
        return found
    return parse_cot_answer(text, answer_space)


def parse_true_false(text: str) -> Optional[bool]:
    """Verdict of a correct/incorrect judgement.

    Any standalone "incorrect"/"false" wins over "correct"/"true", so a
    reply mentioning "incorrect" is never read as True.
    """
    text = text or ""
    if _FALSE.search(text):
        return False
    if _TRUE.search(text):
        return True
    return None


def parse_confidence(text: str) -> Optional[float]:
    """First number in [0, 1] (or percentage) after a "confidence" marker."""
    text = text or ""
    for m in _CONFIDENCE.finditer(text):
        rest = text[m.end():]
        for num in re.finditer(r"([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*(%?)", rest):
            value = float(num.group(1))
            if num.group(2):
                value /= 100.0
            if 0.0 <= value <= 1.0:
                return value
    return None
