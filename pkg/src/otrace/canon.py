"""Canonical serialization and content digests.

Every record that crosses a trust boundary (attestation payloads, log
lines, reports) is serialized the same way so that two parties attesting
the same action produce bit-identical bytes:

  - JSON with keys sorted lexicographically at every nesting level
  - compact separators ("," and ":"), no whitespace
  - integers in base 10; no floats inside payloads (time is an int tick)
  - set-valued fields are emitted as sorted lists by their builders
  - UTF-8 bytes, non-ASCII escaped

The content digest is the SHA-256 hex digest of those canonical bytes.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

DIGEST_PREFIX = "sha256:"


def canonical_bytes(value: Any) -> bytes:
    """Serialize ``value`` to canonical JSON bytes."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=True
    ).encode("utf-8")


def canonical_text(value: Any) -> str:
    return canonical_bytes(value).decode("utf-8")


def content_digest(value: Any) -> str:
    """SHA-256 digest of the canonical serialization, prefixed with the scheme."""
    return DIGEST_PREFIX + hashlib.sha256(canonical_bytes(value)).hexdigest()


def parse_canonical(line: str | bytes) -> Any:
    """Inverse of canonical_bytes; plain json.loads, named for symmetry."""
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    return json.loads(line)
