from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_tokens: int = 200
    num_samples: int = 1
    top_p: Optional[float] = None
    seed: Optional[int] = None  # honoured by the mock only

    def __post_init__(self):
        object.__setattr__(self, "temperature", float(self.temperature))
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.top_p is not None:
            object.__setattr__(self, "top_p", float(self.top_p))
            if not 0.0 < self.top_p <= 1.0:
                raise ValueError("top_p must lie in (0, 1]")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LlmResponse:
    text: str
    request_fingerprint: str
    cached: bool = False
    latency_ms: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "LlmResponse":
        return cls(
            text=str(data["text"]),
            request_fingerprint=str(data["request_fingerprint"]),
            cached=bool(data.get("cached", False)),
            latency_ms=int(data.get("latency_ms", 0)),
        )


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def request_key(backend_id: str, model: str, prompt: str, params: GenerationParams) -> str:
    """Key of a whole request; the cache stores one record per key."""
    return _digest({"backend": backend_id, "model": model, "prompt": prompt, "params": params.as_dict()})


def fingerprint(backend_id: str, model: str, prompt: str, params: GenerationParams, sample_index: int) -> str:
    return _digest({
        "backend": backend_id,
        "model": model,
        "prompt": prompt,
        "params": params.as_dict(),
        "sample": sample_index,
    })


class Backend:
    """Common surface of every completion backend.

    ``calls`` counts logical LLM invocations that actually reached the
    model (one per returned sample); cache hits never increment it.
    """

    backend_id = "abstract"

    def __init__(self, model: str):
        self.model = model
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def _count(self, n: int) -> None:
        with self._lock:
            self._calls += n

    def complete(self, prompt: str, params: GenerationParams) -> list[LlmResponse]:
        raise NotImplementedError

    def fingerprint(self, prompt: str, params: GenerationParams, sample_index: int) -> str:
        return fingerprint(self.backend_id, self.model, prompt, params, sample_index)


class RateLimiter:
    """Token bucket refilled at ``requests_per_minute``; bursts up to ``burst``."""

    def __init__(self, requests_per_minute: float = 60.0, burst: Optional[int] = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        self.rate = requests_per_minute / 60.0
        self.capacity = float(burst if burst is not None else max(1, int(requests_per_minute // 60) or 1))
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Take one token, sleeping until one is available. Returns seconds waited."""
        with self._lock:
            now = self._clock()
            self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
            self._last = now
            wait = 0.0
            if self._tokens < 1.0:
                wait = (1.0 - self._tokens) / self.rate
                self._sleep(wait)
                self._last = self._clock()
                self._tokens = 1.0
            self._tokens -= 1.0
            return wait
