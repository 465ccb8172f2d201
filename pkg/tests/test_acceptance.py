"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
Tolerances are exact (these are discrete properties, not estimates); the
two timed criteria assert their stated wall-clock budgets.
"""

from __future__ import annotations

import random
import time
from typing import Callable

from click.testing import CliRunner

from conftest import scenario
from test_concepts import replay_permit_window
from otrace.canon import canonical_text
from otrace.cli import main as cli_main
from otrace.concepts import (
    Consent,
    ConsentAction,
    ConsentStatus,
    Party,
    Role,
    Term,
    transition_consent,
)
from otrace.errors import IllegalTransition, NotSubject
from otrace.records import event_to_record
from otrace.sim import detection_metrics, run_scenario
from otrace.store import attestation_to_record, read_log
from otrace.sync import AttestationKind, EventKind
from otrace.reconcile import ViolationKind

SEEDS = range(100)


def _report(name: str, fn: Callable[[], None]) -> None:
    try:
        fn()
    except BaseException:
        print(f"FAIL [{name}]")
        raise
    print(f"PASS [{name}]")


# ---------------------------------------------------------------------------
# 1. Guarantee matrix reproduction (20 cells, exact, < 1 s)
# ---------------------------------------------------------------------------

EXPECTED_MATRIX = {
    "blue": {
        "CONSENT": ("assumed", "consumer-dependent"),
        "SHARING": ("assumed", "covert-secure"),
        "ACCESS": ("assumed", "covert-secure"),
        "PROCESS": ("assumed", "covert-accountable"),
        "REQUEST": ("assumed", "covert-secure"),
    },
    "red": {
        "CONSENT": ("consumer-dependent", "consumer-dependent"),
        "SHARING": ("covert-accountable", "covert-accountable"),
        "ACCESS": ("covert-accountable", "covert-accountable"),
        "PROCESS": ("covert-accountable", "covert-accountable"),
        "REQUEST": ("covert-accountable", "covert-accountable"),
    },
}


def test_matrix_reproduction():
    def body():
        import json

        start = time.perf_counter()
        runner = CliRunner()
        cells_checked = 0
        for model in ("blue", "red"):
            result = runner.invoke(cli_main, ["matrix", model, "--format", "structured"])
            assert result.exit_code == 0
            cells = json.loads(result.output)["cells"]
            for kind, (prov, recv) in EXPECTED_MATRIX[model].items():
                assert cells[f"{kind}/PROVIDER"] == prov, (model, kind)
                assert cells[f"{kind}/RECIPIENT"] == recv, (model, kind)
                cells_checked += 2
        assert cells_checked == 20
        assert time.perf_counter() - start < 1.0

    _report("matrix blue/red reproduces all 20 guarantee cells in < 1 s", body)


# ---------------------------------------------------------------------------
# 2. Covert-secure cells behave covert-secure (exact, < 30 s total)
# ---------------------------------------------------------------------------


def _covert_secure_config(kind: str, seed: int):
    strategy = "OMIT_ATTESTATION" if seed % 2 == 0 else "FALSIFY_CONTENT"
    recipient = {
        "strategy": strategy,
        "deviation_rate": 0.3,
        "target_kinds": [kind],
    }
    if kind == "SHARING":
        return scenario(
            {"moneyapp": recipient},
            consents=[],
            authorizations=[],
            workload={"sharings": 100},
            seed=seed,
        )
    if kind == "ACCESS":
        return scenario({"moneyapp": recipient}, workload={"accesses": 100}, seed=seed)
    return scenario(
        {"moneyapp": recipient},
        authorizations=[],
        workload={"requests": 100},
        seed=seed,
    )


def test_covert_secure_cells():
    def body():
        start = time.perf_counter()
        for kind in ("SHARING", "ACCESS", "REQUEST"):
            for seed in SEEDS:
                res = run_scenario(_covert_secure_config(kind, seed))
                m = detection_metrics(res.report, res.injected)[kind]
                assert m.injected > 0, (kind, seed)
                assert m.detection_rate == 1.0, (kind, seed, m)
                assert m.false_positive_rate == 0.0, (kind, seed, m)
                assert len(res.report.violations) == len(res.injected), (kind, seed)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.1f}s"

    _report(
        "covert-secure: recipient omission/falsification of SHARING/ACCESS/REQUEST "
        "detected at rate 1.0 with zero false positives across 100 seeds in < 30 s",
        body,
    )


# ---------------------------------------------------------------------------
# 3. Covert-accountable cells behave covert-accountable (exact)
# ---------------------------------------------------------------------------


def test_covert_accountable_process():
    def body():
        for seed in SEEDS:
            cfg = scenario(
                {
                    "moneyapp": {
                        "strategy": "OMIT_ATTESTATION",
                        "deviation_rate": 0.3,
                        "target_kinds": ["PROCESS"],
                    }
                },
                authorizations=[],
                workload={"processes": 100},
                seed=seed,
            )
            res = run_scenario(cfg)
            k = len(res.injected)
            assert k > 0
            no_gt = detection_metrics(res.report, res.injected)["PROCESS"]
            assert no_gt.detection_rate == 0.0, (seed, no_gt)
            assert res.report.violations == []
            unattested = [
                v
                for v in res.audit_report.violations
                if v.kind is ViolationKind.UNATTESTED_ACTION
            ]
            assert len(unattested) == k == len(res.audit_report.violations), seed

    _report(
        "covert-accountable: recipient PROCESS omissions invisible without ground "
        "truth, exactly k UNATTESTED_ACTION with it, across 100 seeds",
        body,
    )


# ---------------------------------------------------------------------------
# 4. Red-model degradation (exact)
# ---------------------------------------------------------------------------


def test_red_model_degradation():
    def body():
        for seed in range(10):
            joint = {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 0.3,
                "target_kinds": ["ACCESS"],
                "collude_key": "cartel",
            }
            cfg = scenario(
                {"moneyapp": dict(joint), "firstbank": dict(joint)},
                workload={"accesses": 50},
                threat_model="red",
                seed=seed,
            )
            res = run_scenario(cfg)
            assert res.injected and len(res.injected) % 2 == 0  # both sides, same events
            assert {d.event_id for d in res.injected if d.party == "moneyapp"} == {
                d.event_id for d in res.injected if d.party == "firstbank"
            }
            m = detection_metrics(res.report, res.injected)["ACCESS"]
            assert m.detection_rate == 0.0 and m.detected == 0, (seed, m)

            one_side = {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 0.3,
                "target_kinds": ["ACCESS"],
            }
            cfg = scenario(
                {"moneyapp": one_side},
                workload={"accesses": 50},
                threat_model="red",
                seed=seed,
            )
            res = run_scenario(cfg)
            assert res.injected
            m = detection_metrics(res.report, res.injected)["ACCESS"]
            assert m.detection_rate == 1.0, (seed, m)
            assert m.false_positive_rate == 0.0

    _report(
        "red model: joint provider+recipient omission of the same ACCESS events is "
        "undetectable without ground truth; single-sided omission detected at 1.0",
        body,
    )


# ---------------------------------------------------------------------------
# 5. Consent state machine (exact)
# ---------------------------------------------------------------------------


def test_consent_state_machine_exhaustive_and_random():
    def body():
        alice = Party("alice", Role.CONSUMER)

        def consent(status):
            return Consent(
                "c", "moneyapp", "alice",
                frozenset({Term("financial.txn", "insights")}), 10, status,
            )

        legal = {
            (ConsentStatus.REQUESTED, ConsentAction.ACCEPT): ConsentStatus.ACCEPTED,
            (ConsentStatus.REQUESTED, ConsentAction.DENY): ConsentStatus.DENIED,
            (ConsentStatus.ACCEPTED, ConsentAction.REVOKE): ConsentStatus.REVOKED,
            (ConsentStatus.ACCEPTED, ConsentAction.EXPIRE): ConsentStatus.EXPIRED,
        }
        legal_count = illegal_count = 0
        for status in ConsentStatus:
            for action in ConsentAction:
                c = consent(status)
                expected = legal.get((status, action))
                if expected is None:
                    illegal_count += 1
                    try:
                        transition_consent(alice, c, action, now=11)
                        raise AssertionError(f"{status} x {action} should be illegal")
                    except IllegalTransition:
                        pass
                else:
                    legal_count += 1
                    assert transition_consent(alice, c, action, now=11).status is expected
        assert legal_count == 4 and illegal_count == 16
        # EXPIRE clock condition: overdue only
        try:
            transition_consent(None, consent(ConsentStatus.ACCEPTED), ConsentAction.EXPIRE, 10)
            raise AssertionError("EXPIRE before expiry must fail")
        except IllegalTransition:
            pass

        rng = random.Random(2024)
        statuses = set(ConsentStatus)
        for _ in range(10_000):
            c = consent(ConsentStatus.REQUESTED)
            for _ in range(rng.randrange(1, 8)):
                action = rng.choice(list(ConsentAction))
                actor = rng.choice([alice, Party("bob", Role.CONSUMER), None])
                before = c.status
                try:
                    c = transition_consent(actor, c, action, now=rng.randrange(0, 30))
                except (IllegalTransition, NotSubject):
                    assert c.status is before
                    continue
                assert legal[(before, action)] is c.status
                assert c.status in statuses

    _report(
        "consent machine: 5x4 table matches the transition preconditions; 10,000 "
        "random action sequences never reach an illegal state",
        body,
    )


# ---------------------------------------------------------------------------
# 6. Operational principle (exact)
# ---------------------------------------------------------------------------


def test_operational_principle_thousand_histories():
    def body():
        alice = Party("alice", Role.CONSUMER)
        moneyapp = Party("moneyapp", Role.RECIPIENT)
        rng = random.Random(7)
        for _ in range(1000):
            expiry = rng.randrange(2, 40)
            accept_at = rng.randrange(0, expiry)
            revoke_at = rng.randrange(accept_at + 1, 50) if rng.random() < 0.5 else None
            replay_permit_window(alice, moneyapp, expiry, accept_at, revoke_at, horizon=55)

    _report(
        "operational principle: permit holds exactly on [accept, min(expiry, revoke)) "
        "across 1,000 generated consent histories",
        body,
    )


# ---------------------------------------------------------------------------
# 7. Sync obligation table (exact)
# ---------------------------------------------------------------------------


def test_sync_obligation_table():
    def body():
        from test_sync import EXPECTED_COUNTS, RULE_TABLE, _event
        from otrace.sync import derive_attestations

        assert len(EventKind) == 13
        for kind in EventKind:
            att_kind, parties, record, auth = RULE_TABLE[kind]
            out = derive_attestations(_event(kind, record, auth))
            assert [p for p, _ in out] == parties, kind
            assert len(out) == EXPECTED_COUNTS[kind], kind
            assert all(a.kind is att_kind for _, a in out), kind

    _report(
        "sync rules: all 13 event kinds emit exactly the obligated party sets",
        body,
    )


# ---------------------------------------------------------------------------
# 8. Determinism & persistence (exact)
# ---------------------------------------------------------------------------


def test_determinism_and_persistence(tmp_path):
    def body():
        cfg = scenario(
            {
                "moneyapp": {
                    "strategy": "OMIT_ATTESTATION",
                    "deviation_rate": 0.4,
                    "target_kinds": ["ACCESS"],
                }
            },
            workload={"accesses": 25, "processes": 10, "requests": 3},
            seed=1234,
        )
        a = run_scenario(cfg).write_outputs(tmp_path / "a")
        b = run_scenario(cfg).write_outputs(tmp_path / "b")
        for name in ("ground_truth", "attested", "report", "report_audit", "consents"):
            assert a[name].read_bytes() == b[name].read_bytes(), name

        # lossless round trip of the attested log
        res = run_scenario(cfg)
        reread = read_log(a["attested"])
        assert [attestation_to_record(x) for x in reread.entries()] == [
            attestation_to_record(x) for x in res.log.entries()
        ]
        from otrace.canon import parse_canonical
        from otrace.records import event_from_record

        events = [
            event_from_record(parse_canonical(line))
            for line in a["ground_truth"].read_text().splitlines()
        ]
        assert [canonical_text(event_to_record(e)) for e in events] == [
            canonical_text(event_to_record(e)) for e in res.ground_truth
        ]

        # agent restart preserves the queryable trail
        from otrace.agent import TraceabilityAgent
        from otrace.concepts import RequestType

        store = tmp_path / "store"
        agent = TraceabilityAgent(agent_id="agent1", store_dir=store)
        agent.register_party("alice", Role.CONSUMER)
        agent.register_party("moneyapp", Role.RECIPIENT)
        agent.register_introduction("alice", "moneyapp")
        agent.submit_rights_request("alice", "moneyapp", RequestType.DELETE)
        before = [attestation_to_record(x) for x in agent.log.entries()]
        assert before
        agent.close()
        revived = TraceabilityAgent(agent_id="agent1", store_dir=store)
        assert [attestation_to_record(x) for x in revived.log.entries()] == before
        revived.close()

    _report(
        "determinism & persistence: fixed seed gives byte-identical logs/reports, "
        "logs round-trip losslessly, agent restart preserves the trail",
        body,
    )


# ---------------------------------------------------------------------------
# 9. Rights-request ordering (exact)
# ---------------------------------------------------------------------------


def test_rights_request_ordering_and_overdue():
    def body():
        cfg = scenario(workload={"requests": 10}, seed=5)
        res = run_scenario(cfg)
        forwards = {
            a.payload["request_id"]: a
            for a in res.log.entries()
            if a.payload["action"] == "request_forward"
        }
        assert len(forwards) == 10
        responses = 0
        for att in res.log.entries():
            if att.kind is AttestationKind.REQUEST and att.payload["action"] in (
                "request_receive",
                "request_complete",
                "request_deny",
            ):
                fwd = forwards[att.payload["request_id"]]
                assert fwd.timestamp <= fwd.payload["forwarded_at"] <= att.timestamp
                responses += 1
        assert responses == 20
        assert res.report.violations == []

        overdue = scenario(
            {"moneyapp": {"strategy": "IGNORE_REQUESTS", "deviation_rate": 1.0}},
            workload={"requests": 3},
            seed=6,
        )
        res = run_scenario(overdue)
        kinds = [v.kind for v in res.report.violations]
        assert kinds == [ViolationKind.UNFULFILLED_REQUEST] * 3

    _report(
        "rights requests: agent record <= forward <= controller response in every "
        "run; overdue requests yield UNFULFILLED_REQUEST",
        body,
    )
