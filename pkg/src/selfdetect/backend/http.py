"""Client for OpenAI-compatible ``/chat/completions`` endpoints."""

from __future__ import annotations

import logging
import os
import time
from typing import Callable, Optional

import httpx

from ..errors import BackendUnavailable, RequestRejected
from .base import Backend, GenerationParams, LlmResponse, RateLimiter

logger = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}


class HttpBackend(Backend):
    """Chat-completions over HTTP with retries and client-side rate limiting.

    Transport errors, 429 and 5xx are retried with exponential backoff
    (``backoff_base * backoff_factor**attempt`` seconds) up to
    ``max_attempts``. Other 4xx responses fail immediately.

    When ``use_n`` is set the provider's ``n`` parameter fetches all
    samples in as few requests as possible; otherwise one request is sent
    per sample. Either way ``calls`` grows by ``num_samples``.
    """

    backend_id = "openai-chat"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "OPENAI_API_KEY",
        *,
        timeout: float = 60.0,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        backoff_factor: float = 2.0,
        requests_per_minute: float = 60.0,
        use_n: bool = True,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
        rate_limiter: Optional[RateLimiter] = None,
    ):
        super().__init__(model)
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.use_n = use_n
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep
        self._limiter = rate_limiter or RateLimiter(requests_per_minute, sleep=sleep)
        self.attempt_log: list[dict] = []

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, prompt: str, params: GenerationParams, n: int) -> dict:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if n > 1:
            body["n"] = n
        if params.top_p is not None:
            body["top_p"] = params.top_p
        return body

    def _post(self, payload: dict) -> tuple[list[str], int]:
        last_error = "no attempt made"
        for attempt in range(self.max_attempts):
            self._limiter.acquire()
            start = time.monotonic()
            try:
                resp = self._client.post(self.url, json=payload, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                status = None
            else:
                status = resp.status_code
                if status == 200:
                    latency = int(round((time.monotonic() - start) * 1000))
                    self.attempt_log.append({"attempt": attempt + 1, "status": 200})
                    return _choices(resp.json()), latency
                if status not in RETRY_STATUS:
                    self.attempt_log.append({"attempt": attempt + 1, "status": status})
                    raise RequestRejected(status, resp.text)
                last_error = f"HTTP {status}"
            self.attempt_log.append({"attempt": attempt + 1, "status": status, "error": last_error})
            if attempt + 1 < self.max_attempts:
                delay = self.backoff_base * self.backoff_factor ** attempt
                logger.warning("attempt %d/%d failed (%s); retrying in %.1fs",
                               attempt + 1, self.max_attempts, last_error, delay)
                self._sleep(delay)
        raise BackendUnavailable(f"{self.url}: giving up after {self.max_attempts} attempts ({last_error})")

    def complete(self, prompt: str, params: GenerationParams) -> list[LlmResponse]:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        texts: list[str] = []
        latencies: list[int] = []
        while len(texts) < params.num_samples:
            want = params.num_samples - len(texts) if self.use_n else 1
            got, latency = self._post(self._payload(prompt, params, want))
            if not got:
                raise BackendUnavailable(f"{self.url}: response carried no choices")
            got = got[:want]
            texts.extend(got)
            latencies.extend([latency] * len(got))
        self._count(params.num_samples)
        return [
            LlmResponse(text=t, request_fingerprint=self.fingerprint(prompt, params, i),
                        cached=False, latency_ms=latencies[i])
            for i, t in enumerate(texts)
        ]

    def close(self) -> None:
        self._client.close()


def _choices(body: dict) -> list[str]:
    out = []
    for choice in body.get("choices", []):
        message = choice.get("message") or {}
        content = message.get("content")
        if content is None:
            content = choice.get("text", "")
        out.append(content if isinstance(content, str) else str(content))
    return out
