"""Error taxonomy shared by every layer.

Each exception carries a stable machine-readable ``code`` so the HTTP
service and the CLI can surface the same identifiers that library callers
catch. Codes are part of the wire contract; do not rename them.
"""

from __future__ import annotations


class OTraceError(Exception):
    """Base error. ``code`` is a stable identifier, ``detail`` is free text."""

    code = "OTRACE_ERROR"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


class RoleMismatch(OTraceError):
    code = "ROLE_MISMATCH"


class DuplicateIntroduction(OTraceError):
    code = "DUPLICATE_INTRODUCTION"


class EmptyTerms(OTraceError):
    code = "EMPTY_TERMS"


class EmptyData(OTraceError):
    code = "EMPTY_DATA"


class IllegalTransition(OTraceError):
    code = "ILLEGAL_TRANSITION"


class NotSubject(OTraceError):
    code = "NOT_SUBJECT"


class NotController(OTraceError):
    code = "NOT_CONTROLLER"


class DanglingBasis(OTraceError):
    code = "DANGLING_BASIS"


class UnknownEvent(OTraceError):
    code = "UNKNOWN_EVENT"


class BadRange(OTraceError):
    code = "BAD_RANGE"


class DigestMismatch(OTraceError):
    code = "DIGEST_MISMATCH"


class NotIntroduced(OTraceError):
    code = "NOT_INTRODUCED"


class Impersonation(OTraceError):
    code = "IMPERSONATION"


class Unauthorized(OTraceError):
    code = "UNAUTHORIZED"


class UnknownRecord(OTraceError):
    code = "UNKNOWN_RECORD"


class InvalidConfig(OTraceError):
    """Scenario config rejected; ``problems`` lists (field path, message)."""

    code = "INVALID_CONFIG"

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        detail = "; ".join(f"{path}: {msg}" for path, msg in problems)
        super().__init__(detail)
