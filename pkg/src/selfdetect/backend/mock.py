"""Scripted, deterministic stand-in for a chat-completion model."""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..errors import ScriptError, UnscriptedPrompt
from .base import Backend, GenerationParams, LlmResponse

Response = Union[str, dict, list]


@dataclass(frozen=True)
class PromptMatcher:
    kind: str  # "exact" | "contains" | "regex"
    pattern: str

    def __post_init__(self):
        if self.kind not in ("exact", "contains", "regex"):
            raise ScriptError(f"unknown matcher kind {self.kind!r}")
        compiled = None
        if self.kind == "regex":
            try:
                compiled = re.compile(self.pattern, flags=re.DOTALL)
            except re.error as exc:
                raise ScriptError(f"bad regex {self.pattern!r}: {exc}") from exc
        object.__setattr__(self, "_regex", compiled)

    def matches(self, prompt: str) -> bool:
        if self.kind == "exact":
            return prompt == self.pattern
        if self.kind == "contains":
            return self.pattern in prompt
        return self._regex.search(prompt) is not None

    def to_json(self) -> dict:
        return {self.kind: self.pattern}


@dataclass(frozen=True)
class MockEntry:
    """One scripted reply.

    ``response`` is a fixed text, a categorical distribution
    ``{text: probability}``, or a sequence indexed by sample number.
    ``sample_index`` restricts the entry to one sample position.
    """

    matcher: PromptMatcher
    response: Response
    sample_index: Optional[int] = None

    def __post_init__(self):
        r = self.response
        if isinstance(r, dict):
            if not r:
                raise ScriptError("empty distribution")
            if any(p < 0 for p in r.values()):
                raise ScriptError(f"negative probability in {r}")
            total = math.fsum(r.values())
            if abs(total - 1.0) > 1e-9:
                raise ScriptError(f"distribution sums to {total!r}, not 1: {r}")
        elif isinstance(r, (list, tuple)):
            if not r or not all(isinstance(x, str) for x in r):
                raise ScriptError("a response sequence must be a non-empty list of strings")
            object.__setattr__(self, "response", tuple(r))
        elif not isinstance(r, str):
            raise ScriptError(f"unsupported response type {type(r).__name__}")

    def to_json(self) -> dict:
        out: dict = {"match": self.matcher.to_json()}
        if self.sample_index is not None:
            out["sample_index"] = self.sample_index
        if isinstance(self.response, dict):
            out["distribution"] = dict(self.response)
        elif isinstance(self.response, tuple):
            out["sequence"] = list(self.response)
        else:
            out["response"] = self.response
        return out


@dataclass
class MockScript:
    entries: list[MockEntry] = field(default_factory=list)
    rng_seed: int = 0

    def add(self, pattern: str, response: Response, *, kind: str = "contains",
            sample_index: Optional[int] = None) -> "MockScript":
        self.entries.append(MockEntry(PromptMatcher(kind, pattern), response, sample_index))
        return self

    def lookup(self, prompt: str, sample_index: int) -> Optional[MockEntry]:
        for entry in self.entries:
            if entry.sample_index is not None and entry.sample_index != sample_index:
                continue
            if entry.matcher.matches(prompt):
                return entry
        return None

    @classmethod
    def from_json(cls, data: dict) -> "MockScript":
        entries = []
        for i, raw in enumerate(data.get("entries", [])):
            match = raw.get("match")
            if not isinstance(match, dict) or len(match) != 1:
                raise ScriptError(f"entry {i}: 'match' must be an object with one of exact/contains/regex")
            (kind, pattern), = match.items()
            keys = [k for k in ("response", "distribution", "sequence") if k in raw]
            if len(keys) != 1:
                raise ScriptError(f"entry {i}: give exactly one of response/distribution/sequence")
            entries.append(MockEntry(PromptMatcher(kind, pattern), raw[keys[0]], raw.get("sample_index")))
        return cls(entries=entries, rng_seed=int(data.get("rng_seed", 0)))

    @classmethod
    def load(cls, path) -> "MockScript":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> dict:
        return {"rng_seed": self.rng_seed, "entries": [e.to_json() for e in self.entries]}


def _draw(distribution: dict, seed: int, prompt: str, sample_index: int) -> str:
    # the generator is derived from (seed, prompt, sample) alone, so concurrent
    # callers and call order cannot change what a given sample draws
    key = hashlib.sha256(f"{seed}\x00{sample_index}\x00{prompt}".encode("utf-8")).digest()
    u = random.Random(int.from_bytes(key[:16], "big")).random()
    acc = 0.0
    items = list(distribution.items())
    for text, p in items:
        acc += p
        if u < acc:
            return text
    return items[-1][0]


class MockBackend(Backend):
    """Backend answering from a MockScript.

    At temperature 0 a distribution entry yields its most probable text
    (first listed on ties), mirroring greedy decoding; otherwise samples
    are drawn with a generator seeded per (seed, prompt, sample index).
    """

    backend_id = "mock"

    def __init__(self, script: MockScript, model: str = "mock"):
        super().__init__(model)
        self.script = script

    def _respond(self, prompt: str, params: GenerationParams, i: int) -> str:
        entry = self.script.lookup(prompt, i)
        if entry is None:
            raise UnscriptedPrompt(f"no script entry for sample {i} of prompt: {prompt[:200]!r}")
        r = entry.response
        if isinstance(r, str):
            return r
        if isinstance(r, tuple):
            if i >= len(r):
                raise UnscriptedPrompt(f"sequence of length {len(r)} has no sample {i} for prompt: {prompt[:200]!r}")
            return r[i]
        if params.temperature == 0:
            return max(r.items(), key=lambda kv: kv[1])[0]
        seed = params.seed if params.seed is not None else self.script.rng_seed
        return _draw(r, seed, prompt, i)

    def complete(self, prompt: str, params: GenerationParams) -> list[LlmResponse]:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        texts = [self._respond(prompt, params, i) for i in range(params.num_samples)]
        self._count(params.num_samples)
        return [
            LlmResponse(text=t, request_fingerprint=self.fingerprint(prompt, params, i), cached=False, latency_ms=0)
            for i, t in enumerate(texts)
        ]
