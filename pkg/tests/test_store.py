"""Attestation log: durability, integrity, queries, round trips."""

from __future__ import annotations

import random
import threading

import pytest

from otrace.canon import parse_canonical
from otrace.errors import DigestMismatch
from otrace.store import (
    AttestationLog,
    attestation_from_record,
    attestation_to_record,
    read_log,
    read_log_lenient,
    write_log,
)
from otrace.sync import AttestationKind, make_attestation

PARTIES = ["alice", "firstbank", "moneyapp", "agent1"]
SUBJECTS = ["alice", "bob"]
KINDS = list(AttestationKind)


def _random_entries(n: int, seed: int = 11):
    rng = random.Random(seed)
    ticks = {p: 0 for p in PARTIES}
    out = []
    for i in range(n):
        party = rng.choice(PARTIES)
        ticks[party] += rng.randrange(0, 3)
        payload = {
            "action": "data_use",
            "action_id": f"evt-{i}",
            "tick": ticks[party],
            "subject": rng.choice(SUBJECTS),
            "data": f"d{rng.randrange(5)}",
        }
        out.append(make_attestation(party, rng.choice(KINDS), payload, ticks[party]))
    return out


def test_append_then_query_returns_entry():
    log = AttestationLog()
    att = _random_entries(1)[0]
    receipt = log.append(att)
    assert receipt == att.id
    assert log.query() == [att]
    assert log.get(att.id) == att


def test_append_rejects_bad_digest():
    att = _random_entries(1)[0]
    tampered = att.__class__(
        id=att.id,
        party=att.party,
        kind=att.kind,
        payload={**att.payload, "data": "changed"},
        content_digest=att.content_digest,  # stale
        timestamp=att.timestamp,
    )
    with pytest.raises(DigestMismatch):
        AttestationLog().append(tampered)


def test_append_only_order_preserved():
    log = AttestationLog()
    entries = _random_entries(50)
    for a in entries:
        log.append(a)
    assert log.entries() == entries  # nothing disappears or mutates


def test_per_party_tick_monotonicity_enforced():
    log = AttestationLog()
    first = make_attestation(
        "moneyapp", AttestationKind.PROCESS,
        {"action": "data_use", "action_id": "e1", "tick": 5, "subject": "alice"}, 5,
    )
    log.append(first)
    backwards = make_attestation(
        "moneyapp", AttestationKind.PROCESS,
        {"action": "data_use", "action_id": "e2", "tick": 3, "subject": "alice"}, 3,
    )
    with pytest.raises(ValueError):
        log.append(backwards)


def test_filter_composition_matches_naive_oracle():
    entries = _random_entries(1000)
    log = AttestationLog()
    for a in entries:
        log.append(a)
    rng = random.Random(5)
    for _ in range(50):
        subject = rng.choice(SUBJECTS + [None])
        party = rng.choice(PARTIES + [None])
        kind = rng.choice(KINDS + [None])
        lo = rng.choice([None, rng.randrange(0, 30)])
        hi = rng.choice([None, rng.randrange(0, 60)])
        got = log.query(subject=subject, party=party, kind=kind, tick_from=lo, tick_to=hi)
        oracle = [
            a
            for a in entries
            if (subject is None or a.subject == subject)
            and (party is None or a.party == party)
            and (kind is None or a.kind is kind)
            and (lo is None or a.timestamp >= lo)
            and (hi is None or a.timestamp <= hi)
        ]
        assert got == oracle


def test_record_round_trip_lossless():
    for att in _random_entries(100):
        assert attestation_from_record(attestation_to_record(att)) == att


def test_file_round_trip_and_replay(tmp_path):
    entries = _random_entries(30)
    path = tmp_path / "log.jsonl"
    log = AttestationLog(path)
    for a in entries:
        log.append(a)
    log.close()

    reloaded = AttestationLog(path)  # rebuild index on startup
    assert reloaded.entries() == entries
    reloaded.close()

    assert read_log(path).entries() == entries


def test_write_log_then_read_log(tmp_path):
    entries = _random_entries(20)
    path = tmp_path / "out.jsonl"
    write_log(path, entries)
    assert read_log(path).entries() == entries


def test_replay_detects_tampered_line(tmp_path):
    entries = _random_entries(5)
    path = tmp_path / "log.jsonl"
    write_log(path, entries)
    lines = path.read_text().splitlines()
    rec = parse_canonical(lines[2])
    rec["payload"]["data"] = "tampered"
    from otrace.canon import canonical_text

    lines[2] = canonical_text(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DigestMismatch):
        read_log(path)
    loaded, tampered = read_log_lenient(path)
    assert len(loaded) == 5
    assert len(tampered) == 1
    assert tampered[0].id == entries[2].id


def test_concurrent_appends_consistent_prefix():
    log = AttestationLog()
    entries = _random_entries(200)
    per_party = {p: [a for a in entries if a.party == p] for p in PARTIES}
    errors = []

    def feed(party):
        try:
            for a in per_party[party]:
                log.append(a)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=feed, args=(p,)) for p in PARTIES]
    snapshots = []
    for t in threads:
        t.start()
    snapshots.append(log.entries())
    for t in threads:
        t.join()
    assert not errors
    final = log.entries()
    assert len(final) == len(entries)
    for snap in snapshots:
        assert final[: len(snap)] == snap  # earlier view is a prefix of the final log
