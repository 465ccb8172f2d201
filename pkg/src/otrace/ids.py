"""Reproducible identifier allocation.

Identifiers are opaque strings, but for replayability they are generated
as scoped counters: ``<prefix>-<n>``. A scenario (or a running agent)
owns one allocator, so the same schedule always yields the same ids.
"""

from __future__ import annotations


class IdAllocator:
    """Per-prefix counters; ``next("alice.consent")`` -> ``alice.consent-1``."""

    def __init__(self) -> None:
        self._counts: dict[str, int] = {}

    def next(self, prefix: str) -> str:
        n = self._counts.get(prefix, 0) + 1
        self._counts[prefix] = n
        return f"{prefix}-{n}"
