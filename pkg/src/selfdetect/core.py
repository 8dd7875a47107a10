"""Domain types and answer matching shared by every strategy."""

from __future__ import annotations

import enum
import logging
import math
import re
import string
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional, Sequence

from .errors import AmbiguousAnswer, InvalidAnswer, InvalidAnswerSpace

if TYPE_CHECKING:
    from .backend import LlmResponse

logger = logging.getLogger(__name__)

_OPEN = "([{<"
_CLOSE = ")]}>"
_PAIR = dict(zip(_OPEN, _CLOSE))
_EDGE_PUNCT = "".join(c for c in string.punctuation if c not in _OPEN + _CLOSE) + "“”‘’–—…«»"

# "(b) jar", "b) jar", "b. jar", "b: jar"
_LABELLED = re.compile(r"^(?:\(([a-z])\)\s*|([a-z])[.):]\s+)(.*)$")


class Task(str, enum.Enum):
    SA = "SA"
    NLI = "NLI"
    CQA = "CQA"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "Task":
        for member in cls:
            if member.value.lower() == str(value).strip().lower():
                return member
        raise ValueError(f"unknown task {value!r}; expected one of SA, NLI, CQA, other")


def _wraps_whole(s: str) -> bool:
    """True when s[0] is an opening bracket whose partner is the final char."""
    close = _PAIR[s[0]]
    if s[-1] != close:
        return False
    depth = 0
    for i, ch in enumerate(s):
        if ch == s[0]:
            depth += 1
        elif ch == close:
            depth -= 1
            if depth == 0:
                return i == len(s) - 1
    return False


def _trim_edges(s: str) -> str:
    while True:
        before = s
        s = s.strip(_EDGE_PUNCT + string.whitespace).strip()
        if not s:
            return s
        if s[0] in _OPEN and _wraps_whole(s):
            s = s[1:-1]
        elif s[-1] in _CLOSE and s.count(s[-1]) > s.count(_OPEN[_CLOSE.index(s[-1])]):
            s = s[:-1]
        elif s[0] in _OPEN and s.count(s[0]) > s.count(_PAIR[s[0]]):
            s = s[1:]
        if s == before:
            return s


def normalize_answer(text: str) -> str:
    """Canonical form used for answer equality.

    Lowercases, collapses internal whitespace and strips punctuation from
    the edges. Brackets are only stripped when unbalanced or when they wrap
    the whole string, so ``"(a) Yard"`` keeps its choice label.
    """
    if text is None or not str(text).strip():
        raise InvalidAnswer("empty answer text")
    s = " ".join(str(text).lower().split())
    s = _trim_edges(s)
    s = " ".join(s.split())
    if not s:
        raise InvalidAnswer(f"{text!r} has no answer content")
    return s


@dataclass(frozen=True)
class CandidateAnswer:
    surface: str
    canonical: str

    @classmethod
    def from_surface(cls, surface: str) -> "CandidateAnswer":
        return cls(surface=surface.strip(), canonical=normalize_answer(surface))

    @property
    def label(self) -> Optional[str]:
        """Explicit choice letter carried in the surface, e.g. ``"b"`` for ``"(b) jar"``."""
        m = _LABELLED.match(self.canonical)
        return (m.group(1) or m.group(2)) if m and m.group(3) else None

    @property
    def content(self) -> str:
        """Canonical form without the choice label."""
        m = _LABELLED.match(self.canonical)
        if m and m.group(3):
            return m.group(3)
        return self.canonical

    @property
    def text(self) -> str:
        """Surface form without the choice label."""
        m = re.match(r"^\s*(?:\([A-Za-z]\)|[A-Za-z][.):])\s+(.+)$", self.surface)
        return m.group(1).strip() if m and self.label else self.surface


def choice_letter(answer_space: Sequence[CandidateAnswer], index: int) -> Optional[str]:
    cand = answer_space[index]
    if cand.label:
        return cand.label
    return chr(ord("a") + index) if index < 26 else None


def _unique(text: str, hits: list[int]) -> Optional[int]:
    hits = sorted(set(hits))
    if len(hits) > 1:
        raise AmbiguousAnswer(text, hits)
    return hits[0] if hits else None


def match_answer(text: str, answer_space: Sequence[CandidateAnswer]) -> Optional[int]:
    """Index of the candidate ``text`` refers to, or None.

    Matching is staged: canonical equality, then label-stripped content,
    then a bare choice letter (``"B"``, ``"(b)"``), then a labelled reply
    such as ``"b. jar"`` whose letter and content both agree. The first
    stage with a hit decides; two hits in one stage is ambiguous.
    """
    if not answer_space:
        raise InvalidAnswerSpace("answer space is empty")
    t = normalize_answer(text)
    stages = (
        [i for i, c in enumerate(answer_space) if c.canonical == t],
        [i for i, c in enumerate(answer_space) if c.content == t],
    )
    for hits in stages:
        found = _unique(t, hits)
        if found is not None:
            return found
    if len(t) == 1 and "a" <= t <= "z":
        return _unique(t, [i for i in range(len(answer_space)) if choice_letter(answer_space, i) == t])
    m = _LABELLED.match(t)
    if m and m.group(3):
        letter, rest = m.group(1) or m.group(2), m.group(3)
        return _unique(t, [
            i for i, c in enumerate(answer_space)
            if choice_letter(answer_space, i) == letter and c.content == rest
        ])
    return None


def try_match(text: str, answer_space: Sequence[CandidateAnswer]) -> Optional[int]:
    """match_answer, but empty or ambiguous text counts as no match."""
    try:
        return match_answer(text, answer_space)
    except (InvalidAnswer, AmbiguousAnswer) as exc:
        logger.debug("treating %r as unmatched: %s", text, exc)
        return None


@dataclass(frozen=True)
class QuestionInstance:
    id: str
    task: Task
    instruction: str
    question: str
    answer_space: tuple[CandidateAnswer, ...]
    gold_label: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "answer_space", tuple(self.answer_space))
        if len(self.answer_space) < 2:
            raise InvalidAnswerSpace(f"{self.id}: answer space needs at least 2 candidates")
        canon = [c.canonical for c in self.answer_space]
        if len(set(canon)) != len(canon):
            raise InvalidAnswerSpace(f"{self.id}: candidates are not distinct after normalization: {canon}")
        if self.gold_label is not None and not 0 <= self.gold_label < len(self.answer_space):
            raise InvalidAnswerSpace(f"{self.id}: gold_label {self.gold_label} out of range")

    @classmethod
    def build(cls, id: str, task, instruction: str, question: str,
              choices: Sequence[str], gold_label: Optional[int] = None) -> "QuestionInstance":
        task = task if isinstance(task, Task) else Task.parse(task)
        return cls(
            id=str(id),
            task=task,
            instruction=instruction,
            question=question,
            answer_space=tuple(CandidateAnswer.from_surface(c) for c in choices),
            gold_label=gold_label,
        )

    @property
    def n(self) -> int:
        return len(self.answer_space)

    def index_of(self, candidate: CandidateAnswer) -> int:
        for i, c in enumerate(self.answer_space):
            if c.canonical == candidate.canonical:
                return i
        raise InvalidAnswer(f"{candidate.surface!r} is not in the answer space of {self.id}")

    def is_correct(self, candidate: CandidateAnswer) -> Optional[bool]:
        if self.gold_label is None:
            return None
        return self.index_of(candidate) == self.gold_label


@dataclass(frozen=True)
class CounterfactualPair:
    original: QuestionInstance
    counterfactual: QuestionInstance
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise InvalidAnswerSpace("counterfactual pairs need k >= 2")
        if self.original.n != self.k or self.counterfactual.n != self.k:
            raise InvalidAnswerSpace(
                f"{self.original.id}/{self.counterfactual.id}: both answer spaces must have size k={self.k}")
        g, gc = self.original.gold_label, self.counterfactual.gold_label
        if g is not None and gc is not None and g == gc:
            raise InvalidAnswerSpace(
                f"{self.original.id}/{self.counterfactual.id}: counterfactual must change the label")


@dataclass(frozen=True)
class TraceEntry:
    prompt: str
    response: "LlmResponse"


@dataclass(frozen=True)
class DetectionResult:
    """Detection score ``score`` for ``target_answer`` plus the calls that produced it.

    ``top_answer`` is the answer index the strategy itself favours (majority
    sample, highest verbalized guess); combinators compare it across
    strategies. ``flags`` carries parse failures and fallbacks.
    """

    instance_id: str
    strategy: str
    target_answer: CandidateAnswer
    score: float
    trace: tuple[TraceEntry, ...] = ()
    api_calls: int = 0
    top_answer: Optional[int] = None
    flags: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "trace", tuple(self.trace))
        object.__setattr__(self, "flags", tuple(self.flags))
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]; build results with make_result()")
        if self.api_calls != len(self.trace):
            raise ValueError(f"api_calls={self.api_calls} but trace has {len(self.trace)} entries")

    @property
    def parse_failed(self) -> bool:
        return any(f.startswith("unparsable") or f.startswith("no_confidence") for f in self.flags)


def make_result(instance_id: str, strategy: str, target: CandidateAnswer, score: float,
                trace: Sequence[TraceEntry], *, top_answer: Optional[int] = None,
                flags: Sequence[str] = (), details: Optional[dict] = None) -> DetectionResult:
    """Build a DetectionResult, clamping the score into [0, 1]."""
    details = dict(details or {})
    flags = list(flags)
    if math.isnan(score):
        raise ValueError(f"{strategy} produced NaN for {instance_id}")
    if not 0.0 <= score <= 1.0:
        details["pre_clamp_score"] = score
        flags.append("clamped")
        logger.warning("%s on %s: clamping score %r into [0, 1]", strategy, instance_id, score)
        score = min(1.0, max(0.0, score))
    return DetectionResult(
        instance_id=instance_id,
        strategy=strategy,
        target_answer=target,
        score=float(score),
        trace=tuple(trace),
        api_calls=len(trace),
        top_answer=top_answer,
        flags=tuple(flags),
        details=details,
    )
