"""Completeness engine: guarantee matrix, pairing, violation detection."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from conftest import scenario
from otrace.concepts import (
    Authorization,
    Basis,
    BasisKind,
    DataUse,
    Operation,
    Role,
)
from otrace.ids import IdAllocator
from otrace.reconcile import (
    GuaranteeClass,
    ThreatModel,
    ViolationKind,
    classify_guarantee,
    pair_attestations,
    reconcile,
)
from otrace.sim import detection_metrics, run_scenario
from otrace.sync import (
    AttestationKind,
    EventKind,
    derive_attestations,
    make_event,
)

BLUE = ThreatModel.blue()
RED = ThreatModel.red()

# The guarantee matrix, row by row: (kind, provider-cell, recipient-cell) per model.
TABLE_BLUE = {
    AttestationKind.CONSENT: (GuaranteeClass.ASSUMED, GuaranteeClass.CONSUMER_DEPENDENT),
    AttestationKind.SHARING: (GuaranteeClass.ASSUMED, GuaranteeClass.COVERT_SECURE),
    AttestationKind.ACCESS: (GuaranteeClass.ASSUMED, GuaranteeClass.COVERT_SECURE),
    AttestationKind.PROCESS: (GuaranteeClass.ASSUMED, GuaranteeClass.COVERT_ACCOUNTABLE),
    AttestationKind.REQUEST: (GuaranteeClass.ASSUMED, GuaranteeClass.COVERT_SECURE),
}
TABLE_RED = {
    AttestationKind.CONSENT: (
        GuaranteeClass.CONSUMER_DEPENDENT,
        GuaranteeClass.CONSUMER_DEPENDENT,
    ),
    AttestationKind.SHARING: (
        GuaranteeClass.COVERT_ACCOUNTABLE,
        GuaranteeClass.COVERT_ACCOUNTABLE,
    ),
    AttestationKind.ACCESS: (
        GuaranteeClass.COVERT_ACCOUNTABLE,
        GuaranteeClass.COVERT_ACCOUNTABLE,
    ),
    AttestationKind.PROCESS: (
        GuaranteeClass.COVERT_ACCOUNTABLE,
        GuaranteeClass.COVERT_ACCOUNTABLE,
    ),
    AttestationKind.REQUEST: (
        GuaranteeClass.COVERT_ACCOUNTABLE,
        GuaranteeClass.COVERT_ACCOUNTABLE,
    ),
}


def test_classify_all_twenty_cells():
    checked = 0
    for kind, (prov, recv) in TABLE_BLUE.items():
        assert classify_guarantee(kind, Role.PROVIDER, BLUE) is prov
        assert classify_guarantee(kind, Role.RECIPIENT, BLUE) is recv
        checked += 2
    for kind, (prov, recv) in TABLE_RED.items():
        assert classify_guarantee(kind, Role.PROVIDER, RED) is prov
        assert classify_guarantee(kind, Role.RECIPIENT, RED) is recv
        checked += 2
    assert checked == 20


def test_classify_examples():
    assert classify_guarantee(AttestationKind.CONSENT, Role.RECIPIENT, BLUE) is (
        GuaranteeClass.CONSUMER_DEPENDENT
    )
    assert classify_guarantee(AttestationKind.PROCESS, Role.RECIPIENT, BLUE) is (
        GuaranteeClass.COVERT_ACCOUNTABLE
    )
    assert classify_guarantee(AttestationKind.SHARING, Role.RECIPIENT, BLUE) is (
        GuaranteeClass.COVERT_SECURE
    )


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------


def _access_attestations(ids, i, tick=10):
    auth = Authorization(
        f"a{i}", "alice", "firstbank", "moneyapp", frozenset({"financial.txn"}), 1000
    )
    use = DataUse(
        f"u{i}", "moneyapp", "alice", "financial.txn", Operation.SHARE,
        Basis(BasisKind.AUTHORIZATION, auth.id, 3),
    )
    event = make_event(ids, EventKind.DATA_ACCESS, "moneyapp", tick, use, authorization=auth)
    return [a for _, a in derive_attestations(event)]


def test_pairing_oracle_random_omissions():
    """N paired + k one-side-omitted events -> exactly N pairs and k unpaired."""
    rng = random.Random(2)
    ids = IdAllocator()
    entries, n_pairs, n_omitted = [], 0, 0
    tick = 10
    for i in range(60):
        tick += 1
        both = _access_attestations(ids, i, tick)
        if rng.random() < 0.3:
            entries.append(both[rng.randrange(2)])
            n_omitted += 1
        else:
            entries.extend(both)
            n_pairs += 1
    result = pair_attestations(entries)
    assert len(result.pairs) == n_pairs
    assert len(result.unpaired) == n_omitted
    assert all(p.consistent for p in result.pairs)


def test_pairing_consistent_example():
    atts = _access_attestations(IdAllocator(), 1)
    result = pair_attestations(atts)
    assert len(result.pairs) == 1
    assert result.pairs[0].consistent
    assert not result.unpaired


def test_pairing_missing_counterpart_example():
    atts = _access_attestations(IdAllocator(), 1)
    result = pair_attestations([atts[1]])  # recipient side only
    assert not result.pairs
    assert len(result.unpaired) == 1


def test_pairing_skew_beyond_window_breaks_the_pair():
    from dataclasses import replace

    atts = _access_attestations(IdAllocator(), 1, tick=10)
    skewed = [atts[0], replace(atts[1], timestamp=atts[0].timestamp + 3)]
    result = pair_attestations(skewed)
    assert not result.pairs
    assert len(result.unpaired) == 2

    within = [atts[0], replace(atts[1], timestamp=atts[0].timestamp + 2)]
    result = pair_attestations(within)
    assert len(result.pairs) == 1 and result.pairs[0].consistent


def test_sharing_subject_copy_is_single_entry():
    ids = IdAllocator()
    auth = Authorization("a1", "alice", "firstbank", "moneyapp", frozenset({"d"}), 100)
    event = make_event(ids, EventKind.AUTHORIZE, "alice", 5, auth)
    atts = [a for _, a in derive_attestations(event)]
    result = pair_attestations(atts)
    assert len(result.pairs) == 1  # provider <-> recipient
    assert len(result.single) == 1  # the subject's own copy
    assert result.single[0].party == "alice"


# ---------------------------------------------------------------------------
# reconcile on simulator-generated logs
# ---------------------------------------------------------------------------


def test_honest_full_trace_zero_violations():
    res = run_scenario(scenario(workload={"accesses": 10, "processes": 5, "requests": 3}))
    assert res.report.violations == []
    assert res.audit_report.violations == []


def test_streams_cover_five_kinds_both_roles():
    res = run_scenario(scenario())
    assert len(res.report.streams) == 10
    for (kind, role), cls in res.report.streams.items():
        expected = TABLE_BLUE[kind][0 if role is Role.PROVIDER else 1]
        assert cls is expected


BASE_CONSENT = {
    "controller": "moneyapp",
    "subject": "alice",
    "terms": [["financial.txn", "insights"]],
    "expiry": 100000,
}
BASE_AUTH = {
    "subject": "alice",
    "provider": "firstbank",
    "recipient": "moneyapp",
    "data": ["financial.txn"],
    "expiration": 100000,
}


def test_process_under_revoked_consent_flags_unconsented_term():
    cfg = scenario(
        consents=[{**BASE_CONSENT, "revoke_tick": 8}],
        schedule=[{"tick": 12, "action": "process", "params": {"consent": 0}}],
    )
    res = run_scenario(cfg)
    kinds = [v.kind for v in res.report.violations]
    assert kinds == [ViolationKind.UNCONSENTED_TERM]
    assert res.report.violations[0].responsible == ("moneyapp",)


def test_use_past_expiry_flags_expired_basis():
    cfg = scenario(
        consents=[{**BASE_CONSENT, "expiry": 10}],
        schedule=[{"tick": 20, "action": "process", "params": {"consent": 0}}],
    )
    res = run_scenario(cfg)
    assert [v.kind for v in res.report.violations] == [ViolationKind.EXPIRED_BASIS]


def test_access_past_revoked_authorization_flags_expired_basis():
    cfg = scenario(
        authorizations=[{**BASE_AUTH, "revoke_tick": 9}],
        schedule=[{"tick": 15, "action": "access", "params": {"authorization": 0}}],
    )
    res = run_scenario(cfg)
    assert [v.kind for v in res.report.violations] == [ViolationKind.EXPIRED_BASIS]


def test_omitted_process_invisible_without_ground_truth():
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 1.0,
                "target_kinds": ["PROCESS"],
            }
        },
        workload={"processes": 1},
    )
    res = run_scenario(cfg)
    assert res.report.violations == []
    audit_kinds = [v.kind for v in res.audit_report.violations]
    assert audit_kinds == [ViolationKind.UNATTESTED_ACTION]


def test_unfulfilled_request_attribution_and_tick():
    cfg = scenario(
        {"moneyapp": {"strategy": "IGNORE_REQUESTS", "deviation_rate": 1.0}},
        workload={"requests": 2},
    )
    res = run_scenario(cfg)
    assert len(res.report.violations) == 2
    for v in res.report.violations:
        assert v.kind is ViolationKind.UNFULFILLED_REQUEST
        assert v.responsible == ("moneyapp",)
        assert res.final_tick > v.tick  # past the deadline


def test_blue_attribution_names_recipient_even_if_provider_side_missing():
    cfg = scenario(
        {
            "firstbank": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 1.0,
                "target_kinds": ["ACCESS"],
            }
        },
        workload={"accesses": 1},
    )
    res = run_scenario(cfg)
    assert len(res.report.violations) == 1
    v = res.report.violations[0]
    assert v.kind is ViolationKind.MISSING_COUNTERPART
    assert v.responsible == ("moneyapp",)  # untrusted side under blue


def test_red_attribution_lists_both_candidates():
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 1.0,
                "target_kinds": ["ACCESS"],
            }
        },
        workload={"accesses": 1},
        threat_model="red",
    )
    res = run_scenario(cfg)
    v = res.report.violations[0]
    assert set(v.responsible) == {"firstbank", "moneyapp"}


def test_content_mismatch_pairs_with_unequal_digests():
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "FALSIFY_CONTENT",
                "deviation_rate": 1.0,
                "target_kinds": ["ACCESS"],
            }
        },
        workload={"accesses": 3},
    )
    res = run_scenario(cfg)
    assert [v.kind for v in res.report.violations] == [ViolationKind.CONTENT_MISMATCH] * 3


def test_consent_anomalies_go_to_review_not_violations():
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 1.0,
                "target_kinds": ["CONSENT"],
            }
        }
    )
    res = run_scenario(cfg)
    assert res.report.violations == []
    assert res.report.review  # surfaced for the consumer instead


def test_violation_evidence_reverifies():
    """Every violation's evidence resolves to checkable entries or events."""
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 0.5,
                "target_kinds": ["ACCESS"],
            }
        },
        workload={"accesses": 20},
        seed=13,
    )
    res = run_scenario(cfg)
    assert res.report.violations
    by_id = {a.id: a for a in res.log.entries()}
    event_ids = {e.id for e in res.ground_truth}
    for v in res.report.violations:
        assert v.evidence
        for ref in v.evidence:
            assert ref in by_id or ref in event_ids
        if v.kind is ViolationKind.MISSING_COUNTERPART:
            # the cited present entry really does lack its counterpart
            (event_ref, present_ref) = v.evidence
            present = by_id[present_ref]
            others = [
                a
                for a in res.log.entries()
                if a.action_id == present.action_id and a.party != present.party
                and a.party in (present.payload["provider"], present.payload["recipient"])
            ]
            assert others == []


# ---------------------------------------------------------------------------
# detection completeness against an oracle of injected deviations
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "overrides,workload",
    [
        (
            {"moneyapp": {"strategy": "OMIT_ATTESTATION", "deviation_rate": 0.3,
                          "target_kinds": ["ACCESS"]}},
            {"accesses": 30},
        ),
        (
            {"moneyapp": {"strategy": "FALSIFY_CONTENT", "deviation_rate": 0.3,
                          "target_kinds": ["SHARING"]}},
            {"sharings": 30},
        ),
        (
            {"moneyapp": {"strategy": "OVERREACH_TERMS", "deviation_rate": 0.3}},
            {"processes": 30},
        ),
        (
            {"moneyapp": {"strategy": "IGNORE_REQUESTS", "deviation_rate": 0.3}},
            {"requests": 30},
        ),
        (
            {"moneyapp": {"strategy": "UNATTESTED_USE", "deviation_rate": 0.3,
                          "target_kinds": ["PROCESS"]}},
            {"processes": 30},
        ),
    ],
)
def test_audit_finds_exactly_the_injected_set(overrides, workload):
    for seed in range(5):
        res = run_scenario(scenario(overrides, workload=workload, seed=seed))
        metrics = detection_metrics(res.audit_report, res.injected)
        m = metrics["overall"]
        assert m.injected == len(res.injected)
        assert m.detection_rate == 1.0, (overrides, seed, m)
        assert m.false_positive_rate == 0.0, (overrides, seed, m)
        # exactness: one violation per injected deviation, none extra
        assert len(res.audit_report.violations) == len(res.injected)


def test_use_past_expiry_detection_completeness():
    cfg = scenario(
        consents=[{**BASE_CONSENT, "expiry": 15}],
        workload={"processes": 10, "start_tick": 10},
    )
    res = run_scenario(cfg)
    past_expiry = [d for d in res.injected if d.kind.value == "USE_PAST_EXPIRY"]
    assert len(past_expiry) == 5  # ticks 15..19 of 10..19
    metrics = detection_metrics(res.audit_report, res.injected)
    assert metrics["overall"].detection_rate == 1.0
    assert metrics["overall"].false_positive_rate == 0.0


def test_counters_total_per_kind():
    cfg = scenario(
        {
            "moneyapp": {
                "strategy": "OMIT_ATTESTATION",
                "deviation_rate": 1.0,
                "target_kinds": ["ACCESS"],
            }
        },
        workload={"accesses": 4},
    )
    res = run_scenario(cfg)
    assert res.report.counters[ViolationKind.MISSING_COUNTERPART] == 4
    assert sum(res.report.counters.values()) == len(res.report.violations)
    assert set(res.report.counters) == set(ViolationKind)


def test_report_serialization_is_deterministic():
    cfg = scenario(workload={"accesses": 3})
    a = run_scenario(cfg).report.to_dict()
    b = run_scenario(cfg).report.to_dict()
    assert a == b
    assert Counter(str(a)) == Counter(str(b))
