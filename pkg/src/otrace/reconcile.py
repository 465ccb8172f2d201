"""Completeness engine: double-entry pairing, compliance checks, guarantees.

Double entry works here the way it does in bookkeeping: two parties
independently record the same event, and the books must agree. Sharing
and access attestations pair provider<->recipient, rights-request records
pair the agent's intake entry with the controller's terminal response,
and consent transitions pair subject<->controller. A missing or
inconsistent entry in a stream with a root of trust is a detectable
violation; streams without one (a recipient's local processing) can only
be audited against a ground-truth event log, which is exactly the
boundary the guarantee matrix encodes.

Violation kinds and when they fire (no ground truth needed):

  MISSING_COUNTERPART   one side of a sharing/access pair absent
  CONTENT_MISMATCH      both sides present but contents disagree
  UNCONSENTED_TERM      attested use not covered by an accepted consent
                        (or outside the authorization's data scope)
  EXPIRED_BASIS         attested use after its basis expired / was cut off
  UNFULFILLED_REQUEST   forwarded rights request past deadline, no response

Audit mode (ground truth supplied) adds:

  UNATTESTED_ACTION     a performed action with no attestation where the
                        absence was not already visible via a counterpart

Consent streams are consumer-dependent: anomalies there go to the report's
review list for a human, never to the violations list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .concepts import Authorization, Consent, ConsentStatus, Role
from .sync import (
    FORWARD_ACTION,
    ActionEvent,
    Attestation,
    AttestationKind,
    EventKind,
    derive_attestations,
)
from .store import AttestationLog

#: paired entries may be submitted a little apart; larger skew breaks the pair
PAIR_TICK_WINDOW = 2

_TERMINAL_REQUEST_ACTIONS = (EventKind.REQUEST_COMPLETE.value, EventKind.REQUEST_DENY.value)
_CONSENT_PAIRED_ACTIONS = (
    EventKind.CONSENT_ACCEPT.value,
    EventKind.CONSENT_DENY.value,
    EventKind.CONSENT_REVOKE.value,
)


class TrustLevel(str, Enum):
    TRUSTED = "TRUSTED"
    SEMI_HONEST = "SEMI_HONEST"
    COVERT = "COVERT"


@dataclass(frozen=True)
class ThreatModel:
    """Who is trusted. The agent is always trusted; recipients are covert.

    The blue model has a trusted or semi-honest provider (the distinction
    is immaterial for completeness and kept only as a label); the red
    model makes the provider covert too.
    """

    provider_trust: TrustLevel
    recipient_trust: TrustLevel = TrustLevel.COVERT
    agent_trust: TrustLevel = TrustLevel.TRUSTED

    @property
    def label(self) -> str:
        return "red" if self.provider_trust is TrustLevel.COVERT else "blue"

    @classmethod
    def blue(cls, provider_trust: TrustLevel = TrustLevel.TRUSTED) -> "ThreatModel":
        if provider_trust is TrustLevel.COVERT:
            raise ValueError("blue model requires a trusted or semi-honest provider")
        return cls(provider_trust=provider_trust)

    @classmethod
    def red(cls) -> "ThreatModel":
        return cls(provider_trust=TrustLevel.COVERT)

    @classmethod
    def from_label(cls, label: str) -> "ThreatModel":
        if label == "blue":
            return cls.blue()
        if label == "red":
            return cls.red()
        raise ValueError(f"unknown threat model {label!r}")


class GuaranteeClass(str, Enum):
    ASSUMED = "assumed"
    CONSUMER_DEPENDENT = "consumer-dependent"
    COVERT_SECURE = "covert-secure"
    COVERT_ACCOUNTABLE = "covert-accountable"


#: completeness guarantee per (attestation kind, controller role, model label)
GUARANTEE_MATRIX: dict[tuple[AttestationKind, Role, str], GuaranteeClass] = {
    (AttestationKind.CONSENT, Role.PROVIDER, "blue"): GuaranteeClass.ASSUMED,
    (AttestationKind.SHARING, Role.PROVIDER, "blue"): GuaranteeClass.ASSUMED,
    (AttestationKind.ACCESS, Role.PROVIDER, "blue"): GuaranteeClass.ASSUMED,
    (AttestationKind.PROCESS, Role.PROVIDER, "blue"): GuaranteeClass.ASSUMED,
    (AttestationKind.REQUEST, Role.PROVIDER, "blue"): GuaranteeClass.ASSUMED,
    (AttestationKind.CONSENT, Role.RECIPIENT, "blue"): GuaranteeClass.CONSUMER_DEPENDENT,
    (AttestationKind.SHARING, Role.RECIPIENT, "blue"): GuaranteeClass.COVERT_SECURE,
    (AttestationKind.ACCESS, Role.RECIPIENT, "blue"): GuaranteeClass.COVERT_SECURE,
    (AttestationKind.PROCESS, Role.RECIPIENT, "blue"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.REQUEST, Role.RECIPIENT, "blue"): GuaranteeClass.COVERT_SECURE,
    (AttestationKind.CONSENT, Role.PROVIDER, "red"): GuaranteeClass.CONSUMER_DEPENDENT,
    (AttestationKind.SHARING, Role.PROVIDER, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.ACCESS, Role.PROVIDER, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.PROCESS, Role.PROVIDER, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.REQUEST, Role.PROVIDER, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.CONSENT, Role.RECIPIENT, "red"): GuaranteeClass.CONSUMER_DEPENDENT,
    (AttestationKind.SHARING, Role.RECIPIENT, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.ACCESS, Role.RECIPIENT, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.PROCESS, Role.RECIPIENT, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
    (AttestationKind.REQUEST, Role.RECIPIENT, "red"): GuaranteeClass.COVERT_ACCOUNTABLE,
}

MATRIX_KINDS = (
    AttestationKind.CONSENT,
    AttestationKind.SHARING,
    AttestationKind.ACCESS,
    AttestationKind.PROCESS,
    AttestationKind.REQUEST,
)


def classify_guarantee(
    kind: AttestationKind, controller_role: Role, model: ThreatModel
) -> GuaranteeClass:
    """Exact matrix lookup; total over the five kinds and two controller roles."""
    return GUARANTEE_MATRIX[(kind, controller_role, model.label)]


class ViolationKind(str, Enum):
    MISSING_COUNTERPART = "MISSING_COUNTERPART"
    CONTENT_MISMATCH = "CONTENT_MISMATCH"
    UNCONSENTED_TERM = "UNCONSENTED_TERM"
    EXPIRED_BASIS = "EXPIRED_BASIS"
    UNFULFILLED_REQUEST = "UNFULFILLED_REQUEST"
    UNATTESTED_ACTION = "UNATTESTED_ACTION"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    stream: AttestationKind
    subject: str
    responsible: tuple[str, ...]
    evidence: tuple[str, ...]
    tick: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "stream": self.stream.value,
            "subject": self.subject,
            "responsible": list(self.responsible),
            "evidence": list(self.evidence),
            "tick": self.tick,
        }


@dataclass(frozen=True)
class AttestationPair:
    """Two entries recording the same event; ``left`` is the root-of-trust side."""

    key: str
    kind: AttestationKind
    left: Attestation
    right: Attestation
    consistent: bool


@dataclass
class PairingResult:
    pairs: list[AttestationPair]
    unpaired: list[Attestation]
    single: list[Attestation]


@dataclass(frozen=True)
class ReviewItem:
    """Consumer-dependent stream anomaly, surfaced for human review."""

    note: str
    attestation_ids: tuple[str, ...]
    action_id: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "note": self.note,
            "attestation_ids": list(self.attestation_ids),
            "action_id": self.action_id,
        }


@dataclass
class ReconciliationReport:
    model: ThreatModel
    now: int
    violations: list[Violation]
    streams: dict[tuple[AttestationKind, Role], GuaranteeClass]
    counters: dict[ViolationKind, int]
    pairing: PairingResult
    review: list[ReviewItem] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.label,
            "now": self.now,
            "violations": [v.to_dict() for v in self.violations],
            "streams": {
                f"{kind.value}/{role.value}": cls.value
                for (kind, role), cls in self.streams.items()
            },
            "counters": {k.value: n for k, n in self.counters.items()},
            "pairs": [
                {
                    "key": p.key,
                    "kind": p.kind.value,
                    "left": p.left.id,
                    "right": p.right.id,
                    "consistent": p.consistent,
                }
                for p in self.pairing.pairs
            ],
            "unpaired": [a.id for a in self.pairing.unpaired],
            "review": [r.to_dict() for r in self.review],
        }

    def summary_text(self) -> str:
        lines = [
            f"reconciliation model={self.model.label} now={self.now}",
            f"  pairs={len(self.pairing.pairs)} unpaired={len(self.pairing.unpaired)} "
            f"single={len(self.pairing.single)} review={len(self.review)}",
            f"  violations={len(self.violations)}",
        ]
        for kind in ViolationKind:
            n = self.counters.get(kind, 0)
            if n:
                lines.append(f"    {kind.value}: {n}")
        for v in self.violations:
            lines.append(
                f"  - {v.kind.value} [{v.stream.value}] subject={v.subject} "
                f"responsible={','.join(v.responsible)} tick={v.tick} "
                f"evidence={','.join(v.evidence)}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------


def _entries_of(log: AttestationLog | Iterable[Attestation]) -> list[Attestation]:
    if isinstance(log, AttestationLog):
        return log.entries()
    return list(log)


def pair_attestations(log: AttestationLog | Iterable[Attestation]) -> PairingResult:
    """Match double-entry attestations; everything else is single-entry.

    Sharing/access entries are matched provider<->recipient on the shared
    action id in their payloads (equal content implies equal digests; a
    falsified counterpart still matches the action and surfaces as an
    inconsistent pair). Request entries match the agent's forward record
    with the controller's terminal response by request id. Consent
    transitions and introductions match subject<->controller. Process,
    consent-request and request-progress entries expect no counterpart.
    """
    entries = _entries_of(log)
    pairs: list[AttestationPair] = []
    unpaired: list[Attestation] = []
    single: list[Attestation] = []

    shared: dict[str, dict[str, Attestation]] = {}
    consentish: dict[str, dict[str, Attestation]] = {}
    fwd_by_request: dict[str, Attestation] = {}
    terminal_by_request: dict[str, Attestation] = {}

    for a in entries:
        if a.kind in (AttestationKind.SHARING, AttestationKind.ACCESS):
            p = a.payload
            if a.party == p.get("provider") or a.party == p.get("recipient"):
                shared.setdefault(a.action_id, {})[a.party] = a
            else:
                single.append(a)  # the subject's own copy of a sharing event
        elif a.kind is AttestationKind.REQUEST:
            p = a.payload
            if p["action"] == FORWARD_ACTION:
                fwd_by_request[p["request_id"]] = a
            elif p["action"] in _TERMINAL_REQUEST_ACTIONS:
                terminal_by_request[p["request_id"]] = a
            else:
                single.append(a)  # request_send / request_receive progress records
        elif a.kind in (AttestationKind.CONSENT, AttestationKind.INTRODUCTION):
            p = a.payload
            if p["action"] in _CONSENT_PAIRED_ACTIONS or a.kind is AttestationKind.INTRODUCTION:
                consentish.setdefault(a.action_id, {})[a.party] = a
            else:
                single.append(a)  # consent_request has a single obligated party
        else:
            single.append(a)

    for action_id, sides in shared.items():
        sample = next(iter(sides.values()))
        provider = sample.payload["provider"]
        recipient = sample.payload["recipient"]
        left, right = sides.get(provider), sides.get(recipient)
        if left is not None and right is not None:
            if abs(left.timestamp - right.timestamp) <= PAIR_TICK_WINDOW:
                pairs.append(
                    AttestationPair(
                        key=action_id,
                        kind=sample.kind,
                        left=left,
                        right=right,
                        consistent=left.content_digest == right.content_digest,
                    )
                )
            else:
                unpaired.extend([left, right])
        else:
            unpaired.append(left or right)  # type: ignore[arg-type]

    for request_id, fwd in fwd_by_request.items():
        terminal = terminal_by_request.pop(request_id, None)
        if terminal is None:
            unpaired.append(fwd)
            continue
        consistent = all(
            fwd.payload[k] == terminal.payload[k] for k in ("subject", "controller", "type")
        )
        pairs.append(
            AttestationPair(
                key=request_id,
                kind=AttestationKind.REQUEST,
                left=fwd,
                right=terminal,
                consistent=consistent,
            )
        )
    unpaired.extend(terminal_by_request.values())  # responses with no intake record

    for action_id, sides in consentish.items():
        sample = next(iter(sides.values()))
        subj = sample.payload["subject"]
        ctrl = sample.payload["controller"]
        left, right = sides.get(subj), sides.get(ctrl)
        if left is not None and right is not None:
            pairs.append(
                AttestationPair(
                    key=action_id,
                    kind=sample.kind,
                    left=left,
                    right=right,
                    consistent=left.content_digest == right.content_digest,
                )
            )
        else:
            unpaired.append(left or right)  # type: ignore[arg-type]

    return PairingResult(pairs=pairs, unpaired=unpaired, single=single)


# ---------------------------------------------------------------------------
# Compliance checks
# ---------------------------------------------------------------------------


def _consent_timeline(entries: Iterable[Attestation]) -> dict[str, dict[str, int]]:
    """When each consent was accepted/denied/revoked, per the logged ticks."""
    timeline: dict[str, dict[str, int]] = {}
    actions = {
        EventKind.CONSENT_ACCEPT.value: "accept",
        EventKind.CONSENT_DENY.value: "deny",
        EventKind.CONSENT_REVOKE.value: "revoke",
    }
    for a in entries:
        if a.kind is not AttestationKind.CONSENT:
            continue
        name = actions.get(a.payload["action"])
        if name is None:
            continue
        info = timeline.setdefault(a.payload["consent_id"], {})
        tick = a.payload["tick"]
        info[name] = min(info[name], tick) if name in info else tick
    return timeline


def _accepted_at(
    consent: Consent, tick: int, timeline: Mapping[str, Mapping[str, int]]
) -> bool:
    info = timeline.get(consent.id, {})
    accept = info.get("accept")
    if accept is None:
        # No logged acceptance: fall back to the record's final status only.
        ever_accepted = consent.status in (
            ConsentStatus.ACCEPTED,
            ConsentStatus.REVOKED,
            ConsentStatus.EXPIRED,
        )
        if not ever_accepted:
            return False
        accept = 0
    if tick < accept:
        return False
    revoke = info.get("revoke")
    if revoke is not None and tick >= revoke:
        return False
    return True


def _consent_covers(consent: Consent, data: str) -> bool:
    return any(t.data_type == data for t in consent.terms)


def _permitted(
    consents: Mapping[str, Consent],
    timeline: Mapping[str, Mapping[str, int]],
    controller: str,
    subject: str,
    data: str,
    tick: int,
) -> bool:
    """Some accepted consent between the parties covered ``data`` at ``tick``."""
    for c in consents.values():
        if (
            c.controller == controller
            and c.subject == subject
            and _consent_covers(c, data)
            and tick < c.expiry
            and _accepted_at(c, tick, timeline)
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# Reconcile
# ---------------------------------------------------------------------------


def _attribute_shared(model: ThreatModel, payload: Mapping[str, Any]) -> tuple[str, ...]:
    """Blame for a sharing/access anomaly: the untrusted side, or both."""
    if model.label == "blue":
        return (payload["recipient"],)
    return (payload["provider"], payload["recipient"])


def reconcile(
    log: AttestationLog | Iterable[Attestation],
    consents: Iterable[Consent],
    authorizations: Iterable[Authorization],
    model: ThreatModel,
    ground_truth: Iterable[ActionEvent] | None = None,
    now: int | None = None,
) -> ReconciliationReport:
    """Analyze a log snapshot and report violations plus guarantee classes.

    ``now`` is the reconciliation horizon (deadline checks); it defaults to
    the latest timestamp seen in the log. With ``ground_truth`` supplied,
    audit mode additionally reports actions that never reached the log at
    all; each (event, party) obligation yields at most one violation
    across both passes.
    """
    entries = _entries_of(log)
    consents_by_id = {c.id: c for c in consents}
    auths_by_id = {a.id: a for a in authorizations}
    if now is None:
        horizon = 0
        for a in entries:
            horizon = max(horizon, a.timestamp)
        now = horizon

    pairing = pair_attestations(entries)
    timeline = _consent_timeline(entries)
    violations: list[Violation] = []
    review: list[ReviewItem] = []
    # (action_id, party) obligations whose absence is already reported
    explained_missing: set[tuple[str, str]] = set()
    # request ids already reported as unfulfilled
    explained_requests: set[str] = set()
    # action ids whose content disagreement is already reported
    flagged_mismatch: set[str] = set()

    # -- double-entry anomalies ---------------------------------------------
    for u in pairing.unpaired:
        p = u.payload
        if u.kind in (AttestationKind.SHARING, AttestationKind.ACCESS):
            absent = p["recipient"] if u.party == p["provider"] else p["provider"]
            explained_missing.add((u.action_id, absent))
            violations.append(
                Violation(
                    kind=ViolationKind.MISSING_COUNTERPART,
                    stream=u.kind,
                    subject=u.subject,
                    responsible=_attribute_shared(model, p),
                    evidence=(u.action_id, u.id),
                    tick=u.timestamp,
                )
            )
        elif u.kind is AttestationKind.REQUEST:
            if p["action"] == FORWARD_ACTION:
                if now > p["deadline"]:
                    explained_requests.add(p["request_id"])
                    violations.append(
                        Violation(
                            kind=ViolationKind.UNFULFILLED_REQUEST,
                            stream=AttestationKind.REQUEST,
                            subject=u.subject,
                            responsible=(p["controller"],),
                            evidence=(p["request_id"], u.id),
                            tick=p["deadline"],
                        )
                    )
                # else: still in flight; not an anomaly yet
            else:
                violations.append(
                    Violation(
                        kind=ViolationKind.MISSING_COUNTERPART,
                        stream=AttestationKind.REQUEST,
                        subject=u.subject,
                        responsible=(p["controller"],),
                        evidence=(p["request_id"], u.id),
                        tick=u.timestamp,
                    )
                )
        else:
            review.append(
                ReviewItem(
                    note=f"unpaired {u.kind.value.lower()} entry by {u.party}",
                    attestation_ids=(u.id,),
                    action_id=u.action_id,
                )
            )

    for pair in pairing.pairs:
        if pair.consistent:
            continue
        if pair.kind in (AttestationKind.SHARING, AttestationKind.ACCESS):
            flagged_mismatch.add(pair.key)
            violations.append(
                Violation(
                    kind=ViolationKind.CONTENT_MISMATCH,
                    stream=pair.kind,
                    subject=pair.left.subject,
                    responsible=_attribute_shared(model, pair.left.payload),
                    evidence=(pair.key, pair.left.id, pair.right.id),
                    tick=pair.left.timestamp,
                )
            )
        elif pair.kind is AttestationKind.REQUEST:
            flagged_mismatch.add(pair.right.action_id)
            violations.append(
                Violation(
                    kind=ViolationKind.CONTENT_MISMATCH,
                    stream=AttestationKind.REQUEST,
                    subject=pair.left.subject,
                    responsible=(pair.left.payload["controller"],),
                    evidence=(pair.key, pair.left.id, pair.right.id),
                    tick=pair.right.timestamp,
                )
            )
        else:
            flagged_mismatch.add(pair.key)
            review.append(
                ReviewItem(
                    note=f"inconsistent {pair.kind.value.lower()} pair",
                    attestation_ids=(pair.left.id, pair.right.id),
                    action_id=pair.key,
                )
            )

    # -- term compliance of attested uses -----------------------------------
    checked: set[str] = set()
    for a in entries:
        if a.kind not in (AttestationKind.PROCESS, AttestationKind.ACCESS):
            continue
        if a.action_id in checked or a.action_id in flagged_mismatch:
            continue
        checked.add(a.action_id)
        p = a.payload
        tick = p["tick"]
        data = p["data"]
        basis = p["basis"]
        if a.kind is AttestationKind.ACCESS:
            responsible = _attribute_shared(model, p)
            acting_controller = p["recipient"]
        else:
            responsible = (p["controller"],)
            acting_controller = p["controller"]
        evidence = (a.action_id, a.id)

        def _flag(kind: ViolationKind) -> None:
            violations.append(
                Violation(
                    kind=kind,
                    stream=a.kind,
                    subject=a.subject,
                    responsible=responsible,
                    evidence=evidence,
                    tick=tick,
                )
            )

        if basis["kind"] == "AUTHORIZATION":
            auth = auths_by_id.get(basis["ref_id"])
            if auth is None:
                _flag(ViolationKind.UNCONSENTED_TERM)
            elif tick >= auth.expiration:
                _flag(ViolationKind.EXPIRED_BASIS)
            elif data not in auth.data:
                _flag(ViolationKind.UNCONSENTED_TERM)
            elif a.kind is AttestationKind.ACCESS and not _permitted(
                consents_by_id, timeline, acting_controller, a.subject, data, tick
            ):
                _flag(ViolationKind.UNCONSENTED_TERM)
        else:
            consent = consents_by_id.get(basis["ref_id"])
            if consent is None:
                _flag(ViolationKind.UNCONSENTED_TERM)
            elif tick >= consent.expiry:
                _flag(ViolationKind.EXPIRED_BASIS)
            elif not _consent_covers(consent, data):
                _flag(ViolationKind.UNCONSENTED_TERM)
            elif not _accepted_at(consent, tick, timeline):
                _flag(ViolationKind.UNCONSENTED_TERM)

    # -- audit against ground truth ------------------------------------------
    if ground_truth is not None:
        by_party_action: dict[tuple[str, str], Attestation] = {
            (a.party, a.action_id): a for a in entries
        }
        request_events = (
            EventKind.REQUEST_RECEIVE,
            EventKind.REQUEST_COMPLETE,
            EventKind.REQUEST_DENY,
        )
        for event in ground_truth:
            if event.kind in request_events and event.record.id in explained_requests:
                continue  # absence already reported as UNFULFILLED_REQUEST
            for party, expected in derive_attestations(event):
                actual = by_party_action.get((party, event.id))
                if actual is None:
                    if (event.id, party) in explained_missing:
                        continue
                    violations.append(
                        Violation(
                            kind=ViolationKind.UNATTESTED_ACTION,
                            stream=expected.kind,
                            subject=expected.subject,
                            responsible=(party,),
                            evidence=(event.id,),
                            tick=event.tick,
                        )
                    )
                elif actual.content_digest != expected.content_digest:
                    if event.id in flagged_mismatch:
                        continue
                    flagged_mismatch.add(event.id)
                    violations.append(
                        Violation(
                            kind=ViolationKind.CONTENT_MISMATCH,
                            stream=expected.kind,
                            subject=expected.subject,
                            responsible=(party,),
                            evidence=(event.id, actual.id),
                            tick=event.tick,
                        )
                    )

    counters = {kind: 0 for kind in ViolationKind}
    for v in violations:
        counters[v.kind] += 1
    streams = {
        (kind, role): classify_guarantee(kind, role, model)
        for kind in MATRIX_KINDS
        for role in (Role.PROVIDER, Role.RECIPIENT)
    }
    return ReconciliationReport(
        model=model,
        now=now,
        violations=violations,
        streams=streams,
        counters=counters,
        pairing=pairing,
        review=review,
    )
