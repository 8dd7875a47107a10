"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SelfDetectError(Exception):
    """Base class for every error raised by selfdetect."""


# core
class InvalidAnswer(SelfDetectError, ValueError):
    pass


class AmbiguousAnswer(SelfDetectError):
    def __init__(self, text: str, indices):
        self.text = text
        self.indices = tuple(indices)
        super().__init__(f"{text!r} matches several candidates: {list(self.indices)}")


class InvalidAnswerSpace(SelfDetectError, ValueError):
    pass


# backend
class BackendUnavailable(SelfDetectError):
    pass


class RequestRejected(SelfDetectError):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"request rejected with HTTP {status}: {body[:500]}")


class UnscriptedPrompt(SelfDetectError):
    pass


class ScriptError(SelfDetectError, ValueError):
    pass


class CacheCorrupt(SelfDetectError):
    pass


# prompts
class TemplateIncomplete(SelfDetectError, KeyError):
    def __init__(self, template: str, placeholder: str):
        self.template = template
        self.placeholder = placeholder
        super().__init__(f"template {template!r} needs a value for {{{placeholder}}}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


# parsing
class UnparsableResponse(SelfDetectError, ValueError):
    pass


# strategies
class TargetUndetermined(SelfDetectError):
    def __init__(self, instance_id: str, response: str):
        self.instance_id = instance_id
        self.response = response
        super().__init__(f"{instance_id}: response {response[:80]!r} matches no candidate")


class AdjustUnavailable(SelfDetectError):
    pass


# metrics
class DegenerateLabels(SelfDetectError, ValueError):
    pass


# harness
class SchemaError(SelfDetectError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ConfigError(SelfDetectError, ValueError):
    pass
