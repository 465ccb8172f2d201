"""Core traceability concepts as pure, deterministic state machines.

Six concepts: introduction, consent, authorization, data use, data
subject (rights) request, and the party vocabulary they share. All
operations are pure: they take explicit inputs (including the current
logical tick where time matters) and return fresh values; nothing here
holds mutable state. Stores and services build on top.

Time is a logical non-negative integer tick supplied by the caller's
clock context. "Expired" is evaluated lazily at read time (plus the
explicit sweep below); a consent permits use at tick t only while
accepted and strictly before its expiry, and an authorization is active
only strictly before its expiration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    DanglingBasis,
    DuplicateIntroduction,
    EmptyData,
    EmptyTerms,
    IllegalTransition,
    NotController,
    NotSubject,
    RoleMismatch,
)
from .ids import IdAllocator

# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


class Role(str, Enum):
    CONSUMER = "CONSUMER"
    PROVIDER = "PROVIDER"
    RECIPIENT = "RECIPIENT"
    AGENT = "AGENT"


CONTROLLER_ROLES = frozenset({Role.PROVIDER, Role.RECIPIENT})


@dataclass(frozen=True)
class Party:
    """A participant; ``id`` is unique in a scenario, ``role`` is fixed."""

    id: str
    role: Role


@dataclass(frozen=True, order=True)
class Term:
    """One granular unit of consent: a (data type, purpose) pair.

    Both fields are dot-namespaced strings compared exactly; there is no
    taxonomy subsumption (``financial.*`` does not cover ``financial.txn``).
    """

    data_type: str
    purpose: str

    def __post_init__(self) -> None:
        if not self.data_type or not self.purpose:
            raise ValueError("term fields must be non-empty")


class ConsentStatus(str, Enum):
    REQUESTED = "REQUESTED"
    ACCEPTED = "ACCEPTED"
    DENIED = "DENIED"
    REVOKED = "REVOKED"
    EXPIRED = "EXPIRED"


class ConsentAction(str, Enum):
    ACCEPT = "ACCEPT"
    DENY = "DENY"
    REVOKE = "REVOKE"
    EXPIRE = "EXPIRE"


#: Legal (status, action) -> new status. Everything else is ILLEGAL_TRANSITION.
#: EXPIRE additionally requires expiry < now; ACCEPT/DENY/REVOKE are
#: subject-only actions.
CONSENT_TRANSITIONS: dict[tuple[ConsentStatus, ConsentAction], ConsentStatus] = {
    (ConsentStatus.REQUESTED, ConsentAction.ACCEPT): ConsentStatus.ACCEPTED,
    (ConsentStatus.REQUESTED, ConsentAction.DENY): ConsentStatus.DENIED,
    (ConsentStatus.ACCEPTED, ConsentAction.REVOKE): ConsentStatus.REVOKED,
    (ConsentStatus.ACCEPTED, ConsentAction.EXPIRE): ConsentStatus.EXPIRED,
}


@dataclass(frozen=True)
class Consent:
    """A subject<->controller agreement over a set of terms."""

    id: str
    controller: str
    subject: str
    terms: frozenset[Term]
    expiry: int
    status: ConsentStatus

    def allowed_actions(self, now: int | None = None) -> list[ConsentAction]:
        """Actions legal from the current status (EXPIRE only once overdue)."""
        out = []
        for (status, action), _ in CONSENT_TRANSITIONS.items():
            if status is not self.status:
                continue
            if action is ConsentAction.EXPIRE and now is not None and not self.expiry < now:
                continue
            out.append(action)
        return out


@dataclass(frozen=True)
class Authorization:
    """Subject's grant letting a provider share data with a recipient."""

    id: str
    subject: str
    provider: str
    recipient: str
    data: frozenset[str]
    expiration: int

    def is_active(self, now: int) -> bool:
        return self.expiration > now


@dataclass(frozen=True)
class Introduction:
    """Connects a controller to the subject's traceability service."""

    id: str
    subject: str
    controller: str
    trace_service: str

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.subject, self.controller, self.trace_service)


class BasisKind(str, Enum):
    CONSENT = "CONSENT"
    AUTHORIZATION = "AUTHORIZATION"


@dataclass(frozen=True)
class Basis:
    """The consent or authorization legitimizing a specific data use."""

    kind: BasisKind
    ref_id: str
    timestamp: int


class Operation(str, Enum):
    COLLECT = "COLLECT"
    READ = "READ"
    DERIVE = "DERIVE"
    SHARE = "SHARE"
    DELETE = "DELETE"


@dataclass(frozen=True)
class DataUse:
    """One use of a subject's data by a controller, under exactly one basis."""

    id: str
    controller: str
    subject: str
    data: str
    operation: Operation
    basis: Basis


class RequestType(str, Enum):
    ACCESS = "ACCESS"
    CORRECT = "CORRECT"
    DELETE = "DELETE"
    OPTOUT = "OPTOUT"


class RequestStatus(str, Enum):
    SENT = "SENT"
    RECEIVED = "RECEIVED"
    COMPLETED = "COMPLETED"
    DENIED = "DENIED"


class RequestAction(str, Enum):
    RECEIVE = "RECEIVE"
    COMPLETE = "COMPLETE"
    DENY = "DENY"


REQUEST_TRANSITIONS: dict[tuple[RequestStatus, RequestAction], RequestStatus] = {
    (RequestStatus.SENT, RequestAction.RECEIVE): RequestStatus.RECEIVED,
    (RequestStatus.RECEIVED, RequestAction.COMPLETE): RequestStatus.COMPLETED,
    (RequestStatus.RECEIVED, RequestAction.DENY): RequestStatus.DENIED,
}


@dataclass(frozen=True)
class RightsRequest:
    """A data subject request (access/correct/delete/opt-out)."""

    id: str
    subject: str
    controller: str
    type: RequestType
    status: RequestStatus


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def introduce(
    subject: Party,
    controller: Party,
    trace_service: Party,
    existing: Iterable[Introduction] = (),
    ids: IdAllocator | None = None,
) -> Introduction:
    """Connect ``controller`` to the subject's traceability service.

    The trace service must have the AGENT role and the controller must be
    a provider or recipient; the (subject, controller, service) triple
    must be new.
    """
    if trace_service.role is not Role.AGENT:
        raise RoleMismatch(f"{trace_service.id} is {trace_service.role.value}, not AGENT")
    if controller.role not in CONTROLLER_ROLES:
        raise RoleMismatch(f"{controller.id} is {controller.role.value}, not a controller")
    triple = (subject.id, controller.id, trace_service.id)
    for intro in existing:
        if intro.triple == triple:
            raise DuplicateIntroduction(f"{triple} already introduced")
    ids = ids or IdAllocator()
    return Introduction(
        id=ids.next(f"{subject.id}.intro"),
        subject=subject.id,
        controller=controller.id,
        trace_service=trace_service.id,
    )


def request_consent(
    controller: Party,
    subject: Party,
    terms: Iterable[Term],
    expiry: int,
    ids: IdAllocator | None = None,
) -> Consent:
    """Controller asks the subject for consent over ``terms`` until ``expiry``."""
    term_set = frozenset(terms)
    if not term_set:
        raise EmptyTerms("consent requires at least one term")
    ids = ids or IdAllocator()
    return Consent(
        id=ids.next(f"{controller.id}.consent"),
        controller=controller.id,
        subject=subject.id,
        terms=term_set,
        expiry=expiry,
        status=ConsentStatus.REQUESTED,
    )


def transition_consent(
    actor: Party | None,
    consent: Consent,
    action: ConsentAction,
    now: int,
) -> Consent:
    """Apply one consent lifecycle action.

    ACCEPT/DENY require REQUESTED, REVOKE requires ACCEPTED, and all three
    may only be performed by the consent's subject. EXPIRE is a background
    action (``actor`` ignored) that requires ACCEPTED and expiry < now.
    """
    new_status = CONSENT_TRANSITIONS.get((consent.status, action))
    if new_status is None:
        raise IllegalTransition(f"{action.value} from {consent.status.value}")
    if action is ConsentAction.EXPIRE:
        if not consent.expiry < now:
            raise IllegalTransition(f"expiry {consent.expiry} not before now {now}")
    else:
        if actor is None or actor.id != consent.subject:
            raise NotSubject(f"{action.value} on {consent.id} is subject-only")
    return replace(consent, status=new_status)


def sweep_expirations(consents: Iterable[Consent], now: int) -> list[Consent]:
    """Apply the background EXPIRE action to every overdue accepted consent."""
    out = []
    for c in consents:
        if c.status is ConsentStatus.ACCEPTED and c.expiry < now:
            c = replace(c, status=ConsentStatus.EXPIRED)
        out.append(c)
    return out


def check_permit(
    controller: str,
    subject: str,
    term: Term,
    consents: Iterable[Consent],
    now: int,
) -> bool:
    """True iff some accepted consent between the parties covers ``term`` at ``now``.

    Permission holds on ticks in [accept, min(expiry, revoke)): an accepted
    consent stops permitting at its expiry tick even before the lazy EXPIRE
    sweep has run.
    """
    for c in consents:
        if (
            c.controller == controller
            and c.subject == subject
            and c.status is ConsentStatus.ACCEPTED
            and term in c.terms
            and now < c.expiry
        ):
            return True
    return False


def authorize(
    subject: Party,
    provider: Party,
    recipient: Party,
    data: Iterable[str],
    expiration: int,
    ids: IdAllocator | None = None,
) -> Authorization:
    """Subject authorizes ``provider`` to share ``data`` with ``recipient``."""
    if provider.role is not Role.PROVIDER:
        raise RoleMismatch(f"{provider.id} is {provider.role.value}, not PROVIDER")
    if recipient.role is not Role.RECIPIENT:
        raise RoleMismatch(f"{recipient.id} is {recipient.role.value}, not RECIPIENT")
    if provider.id == recipient.id:
        raise RoleMismatch("provider and recipient must differ")
    data_set = frozenset(data)
    if not data_set:
        raise EmptyData("authorization requires at least one data type")
    ids = ids or IdAllocator()
    return Authorization(
        id=ids.next(f"{subject.id}.auth"),
        subject=subject.id,
        provider=provider.id,
        recipient=recipient.id,
        data=data_set,
        expiration=expiration,
    )


def revoke_authorization(subject: Party, auth: Authorization, now: int) -> Authorization:
    """Cut the authorization off at ``now``; inactive for every later tick."""
    if subject.id != auth.subject:
        raise NotSubject(f"{subject.id} does not own {auth.id}")
    return replace(auth, expiration=now)


def record_use(
    controller: Party,
    subject: Party,
    data: str,
    operation: Operation,
    basis: Basis,
    consents: Mapping[str, Consent] = {},
    authorizations: Mapping[str, Authorization] = {},
    ids: IdAllocator | None = None,
) -> DataUse:
    """Record one data use; the basis must resolve to a known record of its kind."""
    known = consents if basis.kind is BasisKind.CONSENT else authorizations
    if basis.ref_id not in known:
        raise DanglingBasis(f"{basis.kind.value} {basis.ref_id} not found")
    ids = ids or IdAllocator()
    return DataUse(
        id=ids.next(f"{controller.id}.use"),
        controller=controller.id,
        subject=subject.id,
        data=data,
        operation=operation,
        basis=basis,
    )


def get_basis(use: DataUse) -> Basis:
    """Every use pairs with exactly the basis it was recorded under."""
    return use.basis


def send_request(
    subject: Party,
    controller: Party,
    type: RequestType,
    ids: IdAllocator | None = None,
) -> RightsRequest:
    """Open a data subject request; it starts in SENT."""
    ids = ids or IdAllocator()
    return RightsRequest(
        id=ids.next(f"{subject.id}.dsr"),
        subject=subject.id,
        controller=controller.id,
        type=type,
        status=RequestStatus.SENT,
    )


def transition_request(
    actor: Party,
    req: RightsRequest,
    action: RequestAction,
) -> RightsRequest:
    """Controller-side progress on a rights request (receive, then complete/deny)."""
    if actor.id != req.controller:
        raise NotController(f"{actor.id} is not the controller of {req.id}")
    new_status = REQUEST_TRANSITIONS.get((req.status, action))
    if new_status is None:
        raise IllegalTransition(f"{action.value} from {req.status.value}")
    return replace(req, status=new_status)
