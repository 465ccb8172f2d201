"""Attestation synchronization: who must go on the record for each action.

Given a concept action event, ``derive_attestations`` returns the exact
set of attestations each party owes. The obligation table:

  event                    kind          obligated parties
  -----------------------  ------------  -------------------------------
  introduce                INTRODUCTION  subject, controller
  consent_request          CONSENT       controller
  consent_accept           CONSENT       subject, controller
  consent_deny             CONSENT       subject, controller
  consent_revoke           CONSENT       subject, controller
  authorize                SHARING       subject, provider, recipient
  authorization_revoke     SHARING       subject, provider, recipient
  data_use                 PROCESS       controller
  data_access              ACCESS        provider, recipient
  request_send             REQUEST       subject
  request_receive          REQUEST       controller
  request_complete         REQUEST       controller
  request_deny             REQUEST       controller

A data access is a SHARE use whose basis is an authorization; it crosses
the provider->recipient boundary, so both sides attest it (the paired
entries reconciliation checks against each other). Every other use is a
local process action attested only by its controller.

All obligated parties attest the same canonical payload, so their content
digests agree; the payload format is documented in the README and must
stay bit-exact across implementations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Union

from .canon import DIGEST_PREFIX, content_digest
from .concepts import (
    Authorization,
    Consent,
    DataUse,
    Introduction,
    RightsRequest,
)
from .errors import BadRange, UnknownEvent
from .ids import IdAllocator


class AttestationKind(str, Enum):
    CONSENT = "CONSENT"
    SHARING = "SHARING"
    ACCESS = "ACCESS"
    PROCESS = "PROCESS"
    REQUEST = "REQUEST"
    INTRODUCTION = "INTRODUCTION"


class EventKind(str, Enum):
    INTRODUCE = "introduce"
    CONSENT_REQUEST = "consent_request"
    CONSENT_ACCEPT = "consent_accept"
    CONSENT_DENY = "consent_deny"
    CONSENT_REVOKE = "consent_revoke"
    AUTHORIZE = "authorize"
    AUTHORIZATION_REVOKE = "authorization_revoke"
    DATA_USE = "data_use"
    DATA_ACCESS = "data_access"
    REQUEST_SEND = "request_send"
    REQUEST_RECEIVE = "request_receive"
    REQUEST_COMPLETE = "request_complete"
    REQUEST_DENY = "request_deny"


#: payload "action" value used by the agent's own intake record; not a
#: concept event, but it pairs with the controller's terminal attestation.
FORWARD_ACTION = "request_forward"

ConceptRecord = Union[Introduction, Consent, Authorization, DataUse, RightsRequest]


@dataclass(frozen=True)
class ActionEvent:
    """Post-state record of one concept action.

    ``record`` embeds the action's result; for DATA_ACCESS events
    ``authorization`` carries the resolved basis so the provider and
    recipient are known.
    """

    id: str
    kind: EventKind
    actor: str
    tick: int
    record: ConceptRecord
    authorization: Authorization | None = None


@dataclass(frozen=True)
class Attestation:
    """A party's timestamped, typed declaration of a data action.

    ``payload`` is the canonical content shared by every party attesting
    the same action; ``content_digest`` is recomputable from it. The
    ``timestamp`` is the submission tick and sits outside the digest so
    submission latency never breaks pairing.
    """

    id: str
    party: str
    kind: AttestationKind
    payload: dict[str, Any]
    content_digest: str
    timestamp: int

    @property
    def subject(self) -> str:
        return self.payload["subject"]

    @property
    def action_id(self) -> str:
        return self.payload["action_id"]

    @property
    def action(self) -> str:
        return self.payload["action"]

    def verify_digest(self) -> bool:
        return content_digest(self.payload) == self.content_digest


@dataclass(frozen=True)
class UpToDateCertificate:
    """Attests that a party's log slice covers [start_date, end_date]."""

    party: str
    start_date: int
    end_date: int
    covered_digests: frozenset[str]


def make_attestation(
    party: str, kind: AttestationKind, payload: dict[str, Any], timestamp: int
) -> Attestation:
    """Stamp and content-address a payload; the id is derived, not allocated."""
    digest = content_digest(payload)
    short = digest[len(DIGEST_PREFIX) :][:16]
    return Attestation(
        id=f"att:{party}:{short}",
        party=party,
        kind=kind,
        payload=payload,
        content_digest=digest,
        timestamp=timestamp,
    )


# ---------------------------------------------------------------------------
# Canonical payloads
# ---------------------------------------------------------------------------


def _terms_list(consent: Consent) -> list[list[str]]:
    return sorted([t.data_type, t.purpose] for t in consent.terms)


def _basis_dict(use: DataUse) -> dict[str, Any]:
    return {
        "kind": use.basis.kind.value,
        "ref_id": use.basis.ref_id,
        "timestamp": use.basis.timestamp,
    }


def event_payload(event: ActionEvent) -> dict[str, Any]:
    """Build the canonical attestation payload for ``event``.

    Set-valued fields are sorted here so semantically equal actions always
    canonicalize to the same bytes.
    """
    base: dict[str, Any] = {
        "action": event.kind.value,
        "action_id": event.id,
        "tick": event.tick,
    }
    r = event.record
    if event.kind is EventKind.INTRODUCE:
        assert isinstance(r, Introduction)
        base.update(
            introduction_id=r.id,
            subject=r.subject,
            controller=r.controller,
            trace_service=r.trace_service,
        )
    elif event.kind in (
        EventKind.CONSENT_REQUEST,
        EventKind.CONSENT_ACCEPT,
        EventKind.CONSENT_DENY,
        EventKind.CONSENT_REVOKE,
    ):
        assert isinstance(r, Consent)
        base.update(
            consent_id=r.id,
            subject=r.subject,
            controller=r.controller,
            terms=_terms_list(r),
            expiry=r.expiry,
            status=r.status.value,
        )
    elif event.kind in (EventKind.AUTHORIZE, EventKind.AUTHORIZATION_REVOKE):
        assert isinstance(r, Authorization)
        base.update(
            authorization_id=r.id,
            subject=r.subject,
            provider=r.provider,
            recipient=r.recipient,
            data=sorted(r.data),
            expiration=r.expiration,
        )
    elif event.kind is EventKind.DATA_USE:
        assert isinstance(r, DataUse)
        base.update(
            use_id=r.id,
            subject=r.subject,
            controller=r.controller,
            data=r.data,
            operation=r.operation.value,
            basis=_basis_dict(r),
        )
    elif event.kind is EventKind.DATA_ACCESS:
        assert isinstance(r, DataUse)
        auth = event.authorization
        if auth is None:
            raise UnknownEvent("data_access event lacks its resolved authorization")
        base.update(
            use_id=r.id,
            subject=r.subject,
            provider=auth.provider,
            recipient=auth.recipient,
            data=r.data,
            operation=r.operation.value,
            basis=_basis_dict(r),
        )
    elif event.kind in (
        EventKind.REQUEST_SEND,
        EventKind.REQUEST_RECEIVE,
        EventKind.REQUEST_COMPLETE,
        EventKind.REQUEST_DENY,
    ):
        assert isinstance(r, RightsRequest)
        base.update(
            request_id=r.id,
            subject=r.subject,
            controller=r.controller,
            type=r.type.value,
            status=r.status.value,
        )
    else:  # pragma: no cover - enum is closed
        raise UnknownEvent(str(event.kind))
    return base


# ---------------------------------------------------------------------------
# Obligations
# ---------------------------------------------------------------------------

_EVENT_ATT_KIND: dict[EventKind, AttestationKind] = {
    EventKind.INTRODUCE: AttestationKind.INTRODUCTION,
    EventKind.CONSENT_REQUEST: AttestationKind.CONSENT,
    EventKind.CONSENT_ACCEPT: AttestationKind.CONSENT,
    EventKind.CONSENT_DENY: AttestationKind.CONSENT,
    EventKind.CONSENT_REVOKE: AttestationKind.CONSENT,
    EventKind.AUTHORIZE: AttestationKind.SHARING,
    EventKind.AUTHORIZATION_REVOKE: AttestationKind.SHARING,
    EventKind.DATA_USE: AttestationKind.PROCESS,
    EventKind.DATA_ACCESS: AttestationKind.ACCESS,
    EventKind.REQUEST_SEND: AttestationKind.REQUEST,
    EventKind.REQUEST_RECEIVE: AttestationKind.REQUEST,
    EventKind.REQUEST_COMPLETE: AttestationKind.REQUEST,
    EventKind.REQUEST_DENY: AttestationKind.REQUEST,
}


def attestation_kind_for(kind: EventKind) -> AttestationKind:
    try:
        return _EVENT_ATT_KIND[kind]
    except KeyError:
        raise UnknownEvent(str(kind)) from None


def obligated_parties(event: ActionEvent) -> list[str]:
    """Who owes an attestation for this event, in canonical order."""
    r = event.record
    if event.kind is EventKind.INTRODUCE:
        assert isinstance(r, Introduction)
        return [r.subject, r.controller]
    if event.kind is EventKind.CONSENT_REQUEST:
        assert isinstance(r, Consent)
        return [r.controller]
    if event.kind in (
        EventKind.CONSENT_ACCEPT,
        EventKind.CONSENT_DENY,
        EventKind.CONSENT_REVOKE,
    ):
        assert isinstance(r, Consent)
        return [r.subject, r.controller]
    if event.kind in (EventKind.AUTHORIZE, EventKind.AUTHORIZATION_REVOKE):
        assert isinstance(r, Authorization)
        return [r.subject, r.provider, r.recipient]
    if event.kind is EventKind.DATA_USE:
        assert isinstance(r, DataUse)
        return [r.controller]
    if event.kind is EventKind.DATA_ACCESS:
        auth = event.authorization
        if auth is None:
            raise UnknownEvent("data_access event lacks its resolved authorization")
        return [auth.provider, auth.recipient]
    if event.kind is EventKind.REQUEST_SEND:
        assert isinstance(r, RightsRequest)
        return [r.subject]
    if event.kind in (
        EventKind.REQUEST_RECEIVE,
        EventKind.REQUEST_COMPLETE,
        EventKind.REQUEST_DENY,
    ):
        assert isinstance(r, RightsRequest)
        return [r.controller]
    raise UnknownEvent(str(event.kind))


def derive_attestations(event: ActionEvent) -> list[tuple[str, Attestation]]:
    """The exact attestation obligations of each party for ``event``.

    Stateless and deterministic: every obligated party gets the same
    payload (hence the same digest), stamped at the action tick.
    """
    payload = event_payload(event)
    kind = attestation_kind_for(event.kind)
    return [
        (party, make_attestation(party, kind, payload, event.tick))
        for party in obligated_parties(event)
    ]


def up_to_date_certificate(
    party: str, start: int, end: int, log: Iterable[Attestation]
) -> UpToDateCertificate:
    """Certify that the party's attestations in [start, end] are all covered."""
    if end < start:
        raise BadRange(f"end {end} before start {start}")
    covered = frozenset(
        a.content_digest for a in log if a.party == party and start <= a.timestamp <= end
    )
    return UpToDateCertificate(
        party=party, start_date=start, end_date=end, covered_digests=covered
    )


def build_forward_attestation(
    agent: str,
    request: RightsRequest,
    forwarded_at: int,
    deadline: int,
    tick: int,
) -> Attestation:
    """The agent's own intake record for a rights request.

    Appended before the request is forwarded; it is the root-of-trust
    entry the controller's terminal attestation must pair with by
    ``request_id`` before ``deadline``.
    """
    payload = {
        "action": FORWARD_ACTION,
        "action_id": f"fwd:{request.id}",
        "tick": tick,
        "request_id": request.id,
        "subject": request.subject,
        "controller": request.controller,
        "type": request.type.value,
        "forwarded_at": forwarded_at,
        "deadline": deadline,
    }
    return make_attestation(agent, AttestationKind.REQUEST, payload, tick)


def make_event(
    ids: IdAllocator,
    kind: EventKind,
    actor: str,
    tick: int,
    record: ConceptRecord,
    authorization: Authorization | None = None,
) -> ActionEvent:
    """Allocate an event id and wrap the action's post-state."""
    return ActionEvent(
        id=ids.next("evt"),
        kind=kind,
        actor=actor,
        tick=tick,
        record=record,
        authorization=authorization,
    )
