"""Persistent JSONL response cache."""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..errors import CacheCorrupt
from .base import Backend, GenerationParams, LlmResponse, request_key

logger = logging.getLogger(__name__)


class ResponseCache:
    """Append-only JSONL store, one record per request key.

    Records look like ``{fingerprint, prompt, params, responses, created_at}``.
    Lines that fail to decode or validate are moved to ``<path>.quarantine``
    and treated as misses. The file is re-checked before each lookup, so a
    deleted or externally rewritten file is picked up.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.corrupt_records = 0
        self._index: dict[str, list[LlmResponse]] = {}
        self._signature: Optional[tuple] = None
        self._lock = threading.RLock()
        self._reload()

    def _stat(self) -> Optional[tuple]:
        try:
            st = self.path.stat()
        except FileNotFoundError:
            return None
        return (st.st_ino, st.st_size, st.st_mtime_ns)

    def _reload(self) -> None:
        self._index = {}
        self._signature = self._stat()
        if self._signature is None:
            return
        good, bad = [], []
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    key, responses = _decode(line, lineno)
                except CacheCorrupt as exc:
                    logger.warning("quarantining cache record: %s", exc)
                    bad.append(line if line.endswith("\n") else line + "\n")
                    continue
                self._index[key] = responses
                good.append(line if line.endswith("\n") else line + "\n")
        if bad:
            self.corrupt_records += len(bad)
            with open(str(self.path) + ".quarantine", "a", encoding="utf-8") as q:
                q.writelines(bad)
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            tmp.write_text("".join(good), encoding="utf-8")
            os.replace(tmp, self.path)
            self._signature = self._stat()

    def _refresh(self) -> None:
        if self._stat() != self._signature:
            self._reload()

    def get(self, key: str) -> Optional[list[LlmResponse]]:
        with self._lock:
            self._refresh()
            return self._index.get(key)

    def put(self, key: str, prompt: str, params: GenerationParams, responses: list[LlmResponse]) -> None:
        record = {
            "fingerprint": key,
            "prompt": prompt,
            "params": params.as_dict(),
            "responses": [r.to_json() for r in responses],
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        line = json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock:
            self._refresh()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
            self._index[key] = list(responses)
            self._signature = self._stat()

    def __len__(self) -> int:
        with self._lock:
            self._refresh()
            return len(self._index)


def _decode(line: str, lineno: int) -> tuple[str, list[LlmResponse]]:
    try:
        rec = json.loads(line)
        key = rec["fingerprint"]
        params = GenerationParams(**rec["params"])
        responses = [LlmResponse.from_json(r) for r in rec["responses"]]
        prompt = rec["prompt"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CacheCorrupt(f"line {lineno}: {exc}") from exc
    if not isinstance(key, str) or not isinstance(prompt, str) or len(responses) != params.num_samples:
        raise CacheCorrupt(f"line {lineno}: record does not match its params")
    return key, responses


class CachedBackend(Backend):
    """Wraps a backend so repeated requests are served from a ResponseCache.

    ``calls`` reports the wrapped backend's live counter; ``cache_hits``
    counts requests answered from disk.
    """

    def __init__(self, inner: Backend, cache: ResponseCache):
        super().__init__(inner.model)
        self.inner = inner
        self.cache = cache
        self.backend_id = inner.backend_id
        self.cache_hits = 0
        self._key_locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()

    @property
    def calls(self) -> int:
        return self.inner.calls

    def _key_lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._key_locks[key]

    def cached_complete(self, prompt: str, params: GenerationParams) -> list[LlmResponse]:
        key = request_key(self.backend_id, self.model, prompt, params)
        with self._key_lock(key):
            hit = self.cache.get(key)
            if hit is not None:
                with self._guard:
                    self.cache_hits += 1
                return [LlmResponse(r.text, r.request_fingerprint, True, r.latency_ms) for r in hit]
            responses = self.inner.complete(prompt, params)
            self.cache.put(key, prompt, params, responses)
            return responses

    complete = cached_complete
