from .base import Backend, GenerationParams, LlmResponse, RateLimiter, fingerprint, request_key
from .cache import CachedBackend, ResponseCache
from .http import HttpBackend
from .mock import MockBackend, MockEntry, MockScript, PromptMatcher

__all__ = [
    "Backend",
    "CachedBackend",
    "GenerationParams",
    "HttpBackend",
    "LlmResponse",
    "MockBackend",
    "MockEntry",
    "MockScript",
    "PromptMatcher",
    "RateLimiter",
    "ResponseCache",
    "fingerprint",
    "request_key",
]
