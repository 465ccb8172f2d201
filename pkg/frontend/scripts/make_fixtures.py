#!/usr/bin/env python3
"""Generate dashboard test fixtures from a real simulator run.

Three fixture subjects: alice (her recipient hides some access
attestations, so her trail carries violation badges), bob (clean, full
trail), carol (registered but empty trail). Output: one JSON file per
subject shaped exactly like GET /attestations, plus the reconciliation
report as served by GET /reports/reconciliation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from otrace.sim import ScenarioConfig, run_scenario
from otrace.store import attestation_to_record

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def build_config(seed: int) -> ScenarioConfig:
    return ScenarioConfig.model_validate(
        {
            "name": "dashboard-fixtures",
            "seed": seed,
            "parties": [
                {"id": "alice", "role": "CONSUMER"},
                {"id": "bob", "role": "CONSUMER"},
                {"id": "carol", "role": "CONSUMER"},
                {"id": "firstbank", "role": "PROVIDER"},
                {
                    "id": "moneyapp",
                    "role": "RECIPIENT",
                    "strategy": "OMIT_ATTESTATION",
                    "deviation_rate": 0.5,
                    "target_kinds": ["ACCESS"],
                },
                {"id": "agent1", "role": "AGENT"},
            ],
            "consents": [
                {
                    "controller": "moneyapp",
                    "subject": "alice",
                    "terms": [["financial.txn", "insights"]],
                    "expiry": 100000,
                },
                {
                    "controller": "moneyapp",
                    "subject": "bob",
                    "terms": [["financial.txn", "insights"]],
                    "expiry": 100000,
                    "request_tick": 4,
                },
            ],
            "authorizations": [
                {
                    "subject": "alice",
                    "provider": "firstbank",
                    "recipient": "moneyapp",
                    "data": ["financial.txn"],
                    "expiration": 100000,
                    "grant_tick": 6,
                },
                {
                    "subject": "bob",
                    "provider": "firstbank",
                    "recipient": "moneyapp",
                    "data": ["financial.txn"],
                    "expiration": 100000,
                    "grant_tick": 7,
                },
            ],
            "schedule": [
                {"tick": 10, "action": "access", "params": {"authorization": 0}},
                {"tick": 11, "action": "access", "params": {"authorization": 1}},
                {"tick": 12, "action": "access", "params": {"authorization": 0}},
                {"tick": 13, "action": "access", "params": {"authorization": 1}},
                {"tick": 14, "action": "access", "params": {"authorization": 0}},
                {"tick": 15, "action": "process", "params": {"consent": 0}},
                {"tick": 16, "action": "process", "params": {"consent": 1}},
                {"tick": 20, "action": "request",
                 "params": {"subject": "alice", "controller": "moneyapp", "type": "DELETE"}},
            ],
        }
    )


def main() -> None:
    # find the first seed where alice has violations and bob stays clean
    for seed in range(100):
        res = run_scenario(build_config(seed))
        subjects = {v.subject for v in res.report.violations}
        if "alice" in subjects and "bob" not in subjects:
            break
    else:  # pragma: no cover
        sys.exit("no suitable seed found")

    OUT.mkdir(parents=True, exist_ok=True)
    report = res.report.to_dict()
    for subject in ("alice", "bob", "carol"):
        attestations = [
            attestation_to_record(a) for a in res.log.entries() if a.subject == subject
        ]
        (OUT / f"{subject}.json").write_text(
            json.dumps({"subject": subject, "attestations": attestations}, indent=1),
            encoding="utf-8",
        )
    (OUT / "report.json").write_text(json.dumps(report, indent=1), encoding="utf-8")
    print(f"seed {seed}: alice={len(res.report.violations)} violations, wrote {OUT}")


if __name__ == "__main__":
    main()
