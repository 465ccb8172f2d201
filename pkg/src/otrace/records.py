"""Serialization of concept records and events to canonical dicts.

Used for the scenario outputs (ground-truth log, consent/authorization
registries) and by the verify CLI to load them back. Everything
round-trips losslessly through canon.py lines.
"""

from __future__ import annotations

from typing import Any

from .concepts import (
    Authorization,
    Basis,
    BasisKind,
    Consent,
    ConsentStatus,
    DataUse,
    Introduction,
    Operation,
    RequestStatus,
    RequestType,
    RightsRequest,
    Term,
)
from .sync import ActionEvent, EventKind

RECORD_TYPES = ("introduction", "consent", "authorization", "data_use", "rights_request")


def consent_to_record(c: Consent) -> dict[str, Any]:
    return {
        "type": "consent",
        "id": c.id,
        "controller": c.controller,
        "subject": c.subject,
        "terms": sorted([t.data_type, t.purpose] for t in c.terms),
        "expiry": c.expiry,
        "status": c.status.value,
    }


def consent_from_record(d: dict[str, Any]) -> Consent:
    return Consent(
        id=d["id"],
        controller=d["controller"],
        subject=d["subject"],
        terms=frozenset(Term(dt, p) for dt, p in d["terms"]),
        expiry=d["expiry"],
        status=ConsentStatus(d["status"]),
    )


def authorization_to_record(a: Authorization) -> dict[str, Any]:
    return {
        "type": "authorization",
        "id": a.id,
        "subject": a.subject,
        "provider": a.provider,
        "recipient": a.recipient,
        "data": sorted(a.data),
        "expiration": a.expiration,
    }


def authorization_from_record(d: dict[str, Any]) -> Authorization:
    return Authorization(
        id=d["id"],
        subject=d["subject"],
        provider=d["provider"],
        recipient=d["recipient"],
        data=frozenset(d["data"]),
        expiration=d["expiration"],
    )


def introduction_to_record(i: Introduction) -> dict[str, Any]:
    return {
        "type": "introduction",
        "id": i.id,
        "subject": i.subject,
        "controller": i.controller,
        "trace_service": i.trace_service,
    }


def introduction_from_record(d: dict[str, Any]) -> Introduction:
    return Introduction(
        id=d["id"],
        subject=d["subject"],
        controller=d["controller"],
        trace_service=d["trace_service"],
    )


def data_use_to_record(u: DataUse) -> dict[str, Any]:
    return {
        "type": "data_use",
        "id": u.id,
        "controller": u.controller,
        "subject": u.subject,
        "data": u.data,
        "operation": u.operation.value,
        "basis": {
            "kind": u.basis.kind.value,
            "ref_id": u.basis.ref_id,
            "timestamp": u.basis.timestamp,
        },
    }


def data_use_from_record(d: dict[str, Any]) -> DataUse:
    b = d["basis"]
    return DataUse(
        id=d["id"],
        controller=d["controller"],
        subject=d["subject"],
        data=d["data"],
        operation=Operation(d["operation"]),
        basis=Basis(kind=BasisKind(b["kind"]), ref_id=b["ref_id"], timestamp=b["timestamp"]),
    )


def rights_request_to_record(r: RightsRequest) -> dict[str, Any]:
    return {
        "type": "rights_request",
        "id": r.id,
        "subject": r.subject,
        "controller": r.controller,
        "request_type": r.type.value,
        "status": r.status.value,
    }


def rights_request_from_record(d: dict[str, Any]) -> RightsRequest:
    return RightsRequest(
        id=d["id"],
        subject=d["subject"],
        controller=d["controller"],
        type=RequestType(d["request_type"]),
        status=RequestStatus(d["status"]),
    )


_TO_RECORD = {
    Introduction: introduction_to_record,
    Consent: consent_to_record,
    Authorization: authorization_to_record,
    DataUse: data_use_to_record,
    RightsRequest: rights_request_to_record,
}

_FROM_RECORD = {
    "introduction": introduction_from_record,
    "consent": consent_from_record,
    "authorization": authorization_from_record,
    "data_use": data_use_from_record,
    "rights_request": rights_request_from_record,
}


def record_to_dict(record: Any) -> dict[str, Any]:
    return _TO_RECORD[type(record)](record)


def record_from_dict(d: dict[str, Any]) -> Any:
    return _FROM_RECORD[d["type"]](d)


def event_to_record(e: ActionEvent) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": e.id,
        "kind": e.kind.value,
        "actor": e.actor,
        "tick": e.tick,
        "record": record_to_dict(e.record),
    }
    if e.authorization is not None:
        out["authorization"] = authorization_to_record(e.authorization)
    return out


def event_from_record(d: dict[str, Any]) -> ActionEvent:
    auth = d.get("authorization")
    return ActionEvent(
        id=d["id"],
        kind=EventKind(d["kind"]),
        actor=d["actor"],
        tick=d["tick"],
        record=record_from_dict(d["record"]),
        authorization=authorization_from_record(auth) if auth else None,
    )
