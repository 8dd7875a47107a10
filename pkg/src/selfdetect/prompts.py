"""Prompt templates, rendering, and justification ordering.

Template bodies live as UTF-8 text files (one per template id) so prompt
variants can be swapped by pointing at another directory. Leading lines
starting with ``#`` are comments and are dropped on load.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .core import CandidateAnswer, QuestionInstance, Task
from .errors import InvalidAnswerSpace, TemplateIncomplete

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class TemplateId(str, enum.Enum):
    BASE = "base"
    COT = "cot"
    TOPK_VERB = "topk_verb"  # p^b
    PTRUE = "ptrue"  # p^r
    JUSTIFY = "justify"  # p^e
    JOINT_VERB = "joint_verb"  # p^v
    SELF_PROBE = "self_probe"
    REPHRASE = "rephrase"
    INDUCED_1 = "induced_context_1"
    INDUCED_2 = "induced_context_2"
    INDUCED_3 = "induced_context_3"
    CAPE_ALPHA = "cape_alpha"
    CAPE_ITEMIZED = "cape_itemized"


INDUCED_TEMPLATES = (TemplateId.INDUCED_1, TemplateId.INDUCED_2, TemplateId.INDUCED_3)


@dataclass(frozen=True)
class PromptTemplate:
    id: TemplateId
    body: str

    @property
    def placeholders(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for m in _PLACEHOLDER.finditer(self.body):
            seen.setdefault(m.group(1))
        return tuple(seen)


@dataclass(frozen=True)
class ExplanationOrder:
    permutation: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(i) for i in self.permutation)
        object.__setattr__(self, "permutation", perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{list(perm)} is not a permutation of 0..{len(perm) - 1}")

    def apply(self, items: Sequence) -> list:
        if len(items) != len(self.permutation):
            raise ValueError(f"order of length {len(self.permutation)} applied to {len(items)} items")
        return [items[i] for i in self.permutation]


def orders_for_t3(n: int) -> list[ExplanationOrder]:
    """The original and the reversed justification order."""
    if n < 2:
        raise InvalidAnswerSpace(f"justification ordering needs N >= 2, got {n}")
    return [ExplanationOrder(tuple(range(n))), ExplanationOrder(tuple(reversed(range(n))))]


def _strip_comments(text: str) -> str:
    lines = text.splitlines()
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    return "\n".join(lines).rstrip("\n")


def load_templates(directory: Optional[str | Path] = None) -> dict[TemplateId, PromptTemplate]:
    """Read every template; files missing from ``directory`` fall back to the bundled ones."""
    return dict(_load(str(directory) if directory is not None else None))


@lru_cache(maxsize=8)
def _load(directory: Optional[str]) -> tuple[tuple[TemplateId, PromptTemplate], ...]:
    bundled = resources.files("selfdetect") / "templates"
    out = []
    for tid in TemplateId:
        name = f"{tid.value}.txt"
        path = Path(directory) / name if directory else None
        if path is not None and path.exists():
            raw = path.read_text(encoding="utf-8")
        else:
            raw = (bundled / name).read_text(encoding="utf-8")
        out.append((tid, PromptTemplate(tid, _strip_comments(raw))))
    return tuple(out)


def get_template(tid: TemplateId, directory: Optional[str | Path] = None) -> PromptTemplate:
    return load_templates(directory)[TemplateId(tid)]


def render(template: PromptTemplate, bindings: Mapping[str, object]) -> str:
    """Substitute ``{name}`` placeholders in one pass; bound values are never re-scanned."""
    for name in template.placeholders:
        if name not in bindings:
            raise TemplateIncomplete(template.id.value, name)
    return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template.body)


# ---------------------------------------------------------------- bindings

_REASON_KIND = {Task.SA: "sentiment label", Task.NLI: "relation label"}


def _lcfirst(s: str) -> str:
    return s[:1].lower() + s[1:] if s[:1].isupper() and s[1:2].islower() else s


def _drop_period(s: str) -> str:
    s = s.strip()
    return s[:-1].rstrip() if s.endswith(".") else s


def choices_block(space: Sequence[CandidateAnswer]) -> str:
    return "\n".join(c.surface for c in space)


def choices_inline(space: Sequence[CandidateAnswer]) -> str:
    return " ".join(c.surface for c in space)


def full_instruction(instance: QuestionInstance, question: Optional[str] = None) -> str:
    """Task instruction followed by the task input."""
    q = (question if question is not None else instance.question).strip()
    instr = instance.instruction.strip()
    if instance.task == Task.CQA:
        if q[-1:] not in ".?!":
            q += "."
        return f"{instr} Question: {q} Answer choices: {choices_inline(instance.answer_space)}."
    return f"{instr} {q}"


def format_explanations(texts: Sequence[str]) -> str:
    return "\n".join(f"Possible explanation {i}: {t.strip()}" for i, t in enumerate(texts, 1))


def instance_bindings(instance: QuestionInstance, *, question: Optional[str] = None,
                      space: Optional[Sequence[CandidateAnswer]] = None) -> dict[str, str]:
    """Placeholder values derived from one instance.

    ``question`` substitutes a rephrased question; ``space`` substitutes a
    relabelled/reordered choice list (prompt-ensemble templates).
    """
    space = tuple(space if space is not None else instance.answer_space)
    q = question if question is not None else instance.question
    full = full_instruction(instance, q)
    return {
        "instruction": _drop_period(full),
        "instruction_only": instance.instruction.strip(),
        "task": _lcfirst(_drop_period(instance.instruction)),
        "task_input": _lcfirst(_drop_period(full)),
        "question": q.strip(),
        "choices": choices_block(space),
        "choices_inline": choices_inline(space),
        "options": " or ".join(c.text for c in instance.answer_space),
        "reason_kind": _REASON_KIND.get(instance.task, "answer"),
        "K": str(instance.n),
        "explanations": "",
    }


def relabel(space: Sequence[CandidateAnswer], order: Sequence[int], style: str) -> tuple[CandidateAnswer, ...]:
    """Display copy of ``space`` in ``order`` with fresh labels.

    ``style`` is ``"alpha"`` (``A. yard``) or ``"itemized"`` (``- yard``).
    Position ``j`` of the result shows candidate ``order[j]``.
    """
    out = []
    for j, i in enumerate(order):
        text = space[i].text
        if style == "alpha":
            surface = f"{chr(ord('A') + j)}. {text}"
        elif style == "itemized":
            surface = f"- {text}"
        else:
            raise ValueError(f"unknown label style {style!r}")
        out.append(CandidateAnswer.from_surface(surface))
    return tuple(out)
