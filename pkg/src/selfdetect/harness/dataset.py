"""JSONL dataset ingestion."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from ..core import CounterfactualPair, QuestionInstance, Task, normalize_answer
from ..errors import SchemaError, SelfDetectError

logger = logging.getLogger(__name__)

REQUIRED = ("id", "task", "instruction", "question", "choices")
OPTIONAL = ("label", "counterfactual_of")


@dataclass
class Dataset:
    instances: list[QuestionInstance]
    pairs: list[CounterfactualPair] = field(default_factory=list)
    errors: list[SchemaError] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    def partner(self, instance_id: str) -> Optional[CounterfactualPair]:
        """Pair oriented so that ``original`` is ``instance_id``."""
        for p in self.pairs:
            if p.original.id == instance_id:
                return p
            if p.counterfactual.id == instance_id:
                return CounterfactualPair(p.counterfactual, p.original, p.k)
        return None


def _label_choices(task: Task, choices: list[str]) -> list[str]:
    # multiple-choice options are shown as "(a) ...", "(b) ..." unless already labelled
    if task != Task.CQA:
        return choices
    if all(normalize_answer(c)[:1] == "(" for c in choices):
        return choices
    return [f"({chr(ord('a') + i)}) {c.strip()}" for i, c in enumerate(choices)]


def parse_record(raw: dict, line: int) -> tuple[QuestionInstance, Optional[str]]:
    if not isinstance(raw, dict):
        raise SchemaError(line, "record must be a JSON object")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise SchemaError(line, f"missing required field(s): {', '.join(missing)}")
    unknown = set(raw) - set(REQUIRED) - set(OPTIONAL)
    if unknown:
        raise SchemaError(line, f"unknown field(s): {', '.join(sorted(unknown))}")
    choices = raw["choices"]
    if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
        raise SchemaError(line, "choices must be an array of strings")
    if len(choices) < 2:
        raise SchemaError(line, f"choices needs at least 2 entries, got {len(choices)}")
    label = raw.get("label")
    if label is not None and (not isinstance(label, int) or isinstance(label, bool)):
        raise SchemaError(line, "label must be an integer index")
    for key in ("instruction", "question"):
        if not isinstance(raw[key], str) or not raw[key].strip():
            raise SchemaError(line, f"{key} must be a non-empty string")
    try:
        task = Task.parse(str(raw["task"]))
        inst = QuestionInstance.build(str(raw["id"]), task, raw["instruction"], raw["question"],
                                      _label_choices(task, choices), label)
    except (SelfDetectError, ValueError) as exc:
        raise SchemaError(line, str(exc)) from None
    cf = raw.get("counterfactual_of")
    return inst, (str(cf) if cf is not None else None)


def load_dataset(path, lenient: bool = False) -> Dataset:
    """Read one record per line. Strict mode raises on the first bad line; lenient mode skips and logs."""
    instances: list[QuestionInstance] = []
    links: list[tuple[str, str, int]] = []
    errors: list[SchemaError] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, 1):
            if not text.strip():
                continue
            try:
                try:
                    raw = json.loads(text)
                except json.JSONDecodeError as exc:
                    raise SchemaError(lineno, f"invalid JSON: {exc.msg}") from None
                inst, cf = parse_record(raw, lineno)
                if inst.id in seen:
                    raise SchemaError(lineno, f"duplicate id {inst.id!r}")
            except SchemaError as exc:
                if not lenient:
                    raise
                logger.warning("skipping %s", exc)
                errors.append(exc)
                continue
            seen.add(inst.id)
            instances.append(inst)
            if cf is not None:
                links.append((inst.id, cf, lineno))

    by_id = {i.id: i for i in instances}
    pairs = []
    for cf_id, orig_id, lineno in links:
        if orig_id not in by_id:
            exc = SchemaError(lineno, f"counterfactual_of refers to unknown id {orig_id!r}")
            if not lenient:
                raise exc
            errors.append(exc)
            continue
        orig, cf = by_id[orig_id], by_id[cf_id]
        try:
            pairs.append(CounterfactualPair(orig, cf, orig.n))
        except SelfDetectError as exc:
            err = SchemaError(lineno, str(exc))
            if not lenient:
                raise err from None
            errors.append(err)
    return Dataset(instances, pairs, errors)
