"""Append-only attestation log with optional file backing.

The on-disk format is one canonical JSON record per line (see canon.py);
the in-memory index is rebuilt by replaying the file on startup. Entries
are never updated or deleted, and every entry's digest is verified both
on append and on load, so a tampered line fails fast instead of
poisoning reconciliation.

Appends are serialized under a lock; queries snapshot the entry list and
therefore see a consistent prefix even while appends continue.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Iterator

from .canon import canonical_text, parse_canonical
from .errors import DigestMismatch
from .sync import Attestation, AttestationKind


def attestation_to_record(att: Attestation) -> dict[str, Any]:
    return {
        "id": att.id,
        "party": att.party,
        "kind": att.kind.value,
        "payload": att.payload,
        "content_digest": att.content_digest,
        "timestamp": att.timestamp,
    }


def attestation_from_record(record: dict[str, Any]) -> Attestation:
    return Attestation(
        id=record["id"],
        party=record["party"],
        kind=AttestationKind(record["kind"]),
        payload=record["payload"],
        content_digest=record["content_digest"],
        timestamp=record["timestamp"],
    )


class AttestationLog:
    """Ordered, append-only collection of attestations.

    With a ``path`` the log is durable: each append writes one line and
    flushes. Without one it is purely in-memory (the simulator's default).
    """

    def __init__(self, path: Path | str | None = None):
        self._entries: list[Attestation] = []
        self._by_id: dict[str, Attestation] = {}
        self._last_tick: dict[str, int] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._fh = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            if self._path.exists():
                self._replay()
            self._fh = self._path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        assert self._path is not None
        with self._path.open("r", encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                att = attestation_from_record(parse_canonical(line))
                if not att.verify_digest():
                    raise DigestMismatch(f"{self._path}:{n} fails digest verification")
                self._check_monotone(att)
                self._entries.append(att)
                self._by_id[att.id] = att
                self._last_tick[att.party] = att.timestamp

    def _check_monotone(self, att: Attestation) -> None:
        # entry order must preserve per-party tick monotonicity
        last = self._last_tick.get(att.party)
        if last is not None and att.timestamp < last:
            raise ValueError(
                f"append order violates tick monotonicity for {att.party}: "
                f"{att.timestamp} after {last}"
            )

    def append(self, att: Attestation) -> str:
        """Durably append; returns the entry id as the receipt."""
        if not att.verify_digest():
            raise DigestMismatch(f"attestation {att.id} payload does not match digest")
        with self._lock:
            self._check_monotone(att)
            self._entries.append(att)
            self._by_id[att.id] = att
            self._last_tick[att.party] = att.timestamp
            if self._fh is not None:
                self._fh.write(canonical_text(attestation_to_record(att)) + "\n")
                self._fh.flush()
        return att.id

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Attestation]:
        return iter(self.entries())

    def entries(self) -> list[Attestation]:
        """Snapshot of the log in append order."""
        with self._lock:
            return list(self._entries)

    def get(self, att_id: str) -> Attestation | None:
        return self._by_id.get(att_id)

    def query(
        self,
        subject: str | None = None,
        party: str | None = None,
        kind: AttestationKind | None = None,
        tick_from: int | None = None,
        tick_to: int | None = None,
    ) -> list[Attestation]:
        """All and only the matching entries, in append order."""
        out = []
        for a in self.entries():
            if subject is not None and a.subject != subject:
                continue
            if party is not None and a.party != party:
                continue
            if kind is not None and a.kind is not kind:
                continue
            if tick_from is not None and a.timestamp < tick_from:
                continue
            if tick_to is not None and a.timestamp > tick_to:
                continue
            out.append(a)
        return out


def write_log(path: Path | str, entries: list[Attestation]) -> None:
    """Write a whole log file in one pass (canonical line per entry)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for att in entries:
            fh.write(canonical_text(attestation_to_record(att)) + "\n")


def read_log(path: Path | str) -> AttestationLog:
    """Load a log file into an in-memory log (digests verified)."""
    log = AttestationLog()
    with Path(path).open("r", encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            att = attestation_from_record(parse_canonical(line))
            if not att.verify_digest():
                raise DigestMismatch(f"{path}:{n} fails digest verification")
            log.append(att)
    return log


def read_log_lenient(path: Path | str) -> tuple[list[Attestation], list[Attestation]]:
    """Load a possibly-tampered log file for offline audit.

    Returns (entries, tampered). Tampered entries (stored digest does not
    match the payload) are also included in ``entries`` with their digest
    recomputed, so pairing compares true contents rather than stale hashes.
    """
    from .sync import make_attestation

    entries: list[Attestation] = []
    tampered: list[Attestation] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            att = attestation_from_record(parse_canonical(line))
            if not att.verify_digest():
                tampered.append(att)
                att = make_attestation(att.party, att.kind, att.payload, att.timestamp)
            entries.append(att)
    return entries, tampered
