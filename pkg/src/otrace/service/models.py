"""Pydantic request/response models for the agent's HTTP surface."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from ..agent import ForwardedRequest
from ..concepts import (
    Authorization,
    Consent,
    ConsentAction,
    ConsentStatus,
    Introduction,
    RequestAction,
    Role,
)
from ..sync import Attestation, AttestationKind


class PartyIn(BaseModel):
    id: str
    role: Role


class PartyOut(BaseModel):
    id: str
    role: Role


class IntroductionIn(BaseModel):
    subject: str
    controller: str


class IntroductionOut(BaseModel):
    id: str
    subject: str
    controller: str
    trace_service: str

    @classmethod
    def of(cls, intro: Introduction) -> "IntroductionOut":
        return cls(
            id=intro.id,
            subject=intro.subject,
            controller=intro.controller,
            trace_service=intro.trace_service,
        )


class AttestationIn(BaseModel):
    party: str
    kind: AttestationKind
    payload: dict[str, Any]
    content_digest: str | None = None


class AttestationOut(BaseModel):
    id: str
    party: str
    kind: AttestationKind
    payload: dict[str, Any]
    content_digest: str
    timestamp: int

    @classmethod
    def of(cls, att: Attestation) -> "AttestationOut":
        return cls(
            id=att.id,
            party=att.party,
            kind=att.kind,
            payload=dict(att.payload),
            content_digest=att.content_digest,
            timestamp=att.timestamp,
        )


class ReceiptOut(BaseModel):
    id: str
    timestamp: int


class ConsentRequestIn(BaseModel):
    subject: str
    terms: list[tuple[str, str]] = Field(min_length=1)
    expiry: int


class ConsentActionIn(BaseModel):
    action: ConsentAction


class ConsentOut(BaseModel):
    id: str
    controller: str
    subject: str
    terms: list[tuple[str, str]]
    expiry: int
    status: ConsentStatus
    allowed_actions: list[ConsentAction]

    @classmethod
    def of(cls, consent: Consent) -> "ConsentOut":
        subject_actions = [
            a
            for a in consent.allowed_actions()
            if a is not ConsentAction.EXPIRE  # background action, never offered
        ]
        return cls(
            id=consent.id,
            controller=consent.controller,
            subject=consent.subject,
            terms=sorted((t.data_type, t.purpose) for t in consent.terms),
            expiry=consent.expiry,
            status=consent.status,
            allowed_actions=subject_actions,
        )


class AuthorizationIn(BaseModel):
    provider: str
    recipient: str
    data: list[str] = Field(min_length=1)
    expiration: int


class AuthorizationOut(BaseModel):
    id: str
    subject: str
    provider: str
    recipient: str
    data: list[str]
    expiration: int

    @classmethod
    def of(cls, auth: Authorization) -> "AuthorizationOut":
        return cls(
            id=auth.id,
            subject=auth.subject,
            provider=auth.provider,
            recipient=auth.recipient,
            data=sorted(auth.data),
            expiration=auth.expiration,
        )


class RightsRequestIn(BaseModel):
    controller: str
    type: str


class RequestTransitionIn(BaseModel):
    action: RequestAction


class RightsRequestOut(BaseModel):
    id: str
    subject: str
    controller: str
    type: str
    status: str
    forwarded_at: int
    deadline: int

    @classmethod
    def of(cls, fr: ForwardedRequest) -> "RightsRequestOut":
        return cls(
            id=fr.request.id,
            subject=fr.request.subject,
            controller=fr.request.controller,
            type=fr.request.type.value,
            status=fr.request.status.value,
            forwarded_at=fr.forwarded_at,
            deadline=fr.deadline,
        )


class ObligationOut(BaseModel):
    kind: AttestationKind
    payload: dict[str, Any]


class SweepOut(BaseModel):
    expired: list[str]


class ClockOut(BaseModel):
    tick: int
