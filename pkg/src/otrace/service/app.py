"""FastAPI application exposing the traceability agent.

Identity is simulation-grade: callers pass their party id in the
``X-Party-Id`` header and the agent trusts it (transport identity per the
threat model; the agent itself is the trusted component). All errors
return a structured body: ``{"error": {"code": ..., "detail": ...}}``
with the same stable codes the library raises.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse

from ..agent import DEFAULT_REQUEST_WINDOW, TraceabilityAgent
from ..concepts import RequestType, Role
from ..errors import InvalidConfig, OTraceError, Unauthorized
from ..reconcile import ThreatModel
from ..sync import AttestationKind
from . import models

_STATUS_BY_CODE = {
    "IMPERSONATION": 403,
    "UNAUTHORIZED": 403,
    "NOT_INTRODUCED": 403,
    "NOT_SUBJECT": 403,
    "NOT_CONTROLLER": 403,
    "UNKNOWN_RECORD": 404,
    "ILLEGAL_TRANSITION": 409,
    "DUPLICATE_INTRODUCTION": 409,
    "DIGEST_MISMATCH": 400,
    "ROLE_MISMATCH": 400,
    "EMPTY_TERMS": 400,
    "EMPTY_DATA": 400,
    "BAD_RANGE": 400,
    "DANGLING_BASIS": 400,
    "INVALID_CONFIG": 400,
}


def _caller(x_party_id: str = Header(default="")) -> str:
    if not x_party_id:
        raise Unauthorized("missing X-Party-Id header")
    return x_party_id


def create_app(
    agent: TraceabilityAgent | None = None,
    store_dir: Path | str | None = None,
    agent_id: str = "agent",
    request_window: int = DEFAULT_REQUEST_WINDOW,
    threat_model: str = "blue",
) -> FastAPI:
    """Build the service around an agent (new or injected for tests)."""
    if agent is None:
        agent = TraceabilityAgent(
            agent_id=agent_id,
            store_dir=store_dir,
            request_window=request_window,
            threat_model=ThreatModel.from_label(threat_model),
        )
    app = FastAPI(title="otrace traceability agent", version="0.1.0")
    app.state.agent = agent

    @app.exception_handler(OTraceError)
    async def _otrace_error(_: Request, exc: OTraceError) -> JSONResponse:
        body = {"error": {"code": exc.code, "detail": exc.detail}}
        if isinstance(exc, InvalidConfig):
            body["error"]["problems"] = [list(p) for p in exc.problems]
        return JSONResponse(status_code=_STATUS_BY_CODE.get(exc.code, 400), content=body)

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok", "agent": agent.agent_id}

    @app.get("/clock", response_model=models.ClockOut)
    def clock() -> models.ClockOut:
        return models.ClockOut(tick=agent.clock.tick)

    # -- parties & introductions ------------------------------------------------

    @app.post("/parties", response_model=models.PartyOut)
    def register_party(body: models.PartyIn) -> models.PartyOut:
        party = agent.register_party(body.id, body.role)
        return models.PartyOut(id=party.id, role=party.role)

    @app.post("/introductions", response_model=models.IntroductionOut)
    def post_introduction(
        body: models.IntroductionIn, caller: str = Depends(_caller)
    ) -> models.IntroductionOut:
        if caller != body.subject:
            raise Unauthorized("introductions are initiated by their subject")
        return models.IntroductionOut.of(
            agent.register_introduction(body.subject, body.controller)
        )

    @app.get("/introductions", response_model=list[models.IntroductionOut])
    def get_introductions(
        subject: str | None = Query(default=None), caller: str = Depends(_caller)
    ) -> list[models.IntroductionOut]:
        role = agent.parties.get(caller)
        if role is not None and role.role is Role.CONSUMER:
            if subject is not None and subject != caller:
                raise Unauthorized("consumers may only list their own introductions")
            subject = caller
        return [models.IntroductionOut.of(i) for i in agent.list_introductions(subject)]

    # -- attestations -------------------------------------------------------------

    @app.post("/attestations", response_model=models.ReceiptOut)
    def post_attestation(
        body: models.AttestationIn, caller: str = Depends(_caller)
    ) -> models.ReceiptOut:
        att = agent.append_attestation(
            submitter=caller,
            party=body.party,
            kind=body.kind,
            payload=body.payload,
            claimed_digest=body.content_digest,
        )
        return models.ReceiptOut(id=att.id, timestamp=att.timestamp)

    @app.get("/attestations", response_model=list[models.AttestationOut])
    def get_attestations(
        subject: str | None = Query(default=None),
        party: str | None = Query(default=None),
        kind: AttestationKind | None = Query(default=None),
        tick_from: int | None = Query(default=None, alias="from"),
        tick_to: int | None = Query(default=None, alias="to"),
        caller: str = Depends(_caller),
    ) -> list[models.AttestationOut]:
        entries = agent.query_attestations(
            caller,
            subject=subject,
            party=party,
            kind=kind,
            tick_from=tick_from,
            tick_to=tick_to,
        )
        return [models.AttestationOut.of(a) for a in entries]

    @app.get("/obligations", response_model=list[models.ObligationOut])
    def get_obligations(caller: str = Depends(_caller)) -> list[models.ObligationOut]:
        return [models.ObligationOut(**o) for o in agent.obligations(caller)]

    # -- consents -------------------------------------------------------------------

    @app.post("/consents", response_model=models.ConsentOut)
    def post_consent(
        body: models.ConsentRequestIn, caller: str = Depends(_caller)
    ) -> models.ConsentOut:
        consent = agent.open_consent_request(caller, body.subject, body.terms, body.expiry)
        return models.ConsentOut.of(consent)

    @app.get("/consents", response_model=list[models.ConsentOut])
    def get_consents(
        subject: str | None = Query(default=None),
        controller: str | None = Query(default=None),
        caller: str = Depends(_caller),
    ) -> list[models.ConsentOut]:
        consents = agent.list_consents(caller, subject=subject, controller=controller)
        return [models.ConsentOut.of(c) for c in consents]

    @app.post("/consents/sweep", response_model=models.SweepOut)
    def sweep_consents(caller: str = Depends(_caller)) -> models.SweepOut:
        if caller != agent.agent_id:
            raise Unauthorized("only the agent operator runs expiry sweeps")
        return models.SweepOut(expired=agent.sweep_consents())

    @app.post("/consents/{consent_id}/actions", response_model=models.ConsentOut)
    def act_on_consent(
        consent_id: str, body: models.ConsentActionIn, caller: str = Depends(_caller)
    ) -> models.ConsentOut:
        return models.ConsentOut.of(agent.act_on_consent(caller, consent_id, body.action))

    # -- authorizations ----------------------------------------------------------------

    @app.post("/authorizations", response_model=models.AuthorizationOut)
    def post_authorization(
        body: models.AuthorizationIn, caller: str = Depends(_caller)
    ) -> models.AuthorizationOut:
        auth = agent.grant_authorization(
            caller, body.provider, body.recipient, body.data, body.expiration
        )
        return models.AuthorizationOut.of(auth)

    @app.get("/authorizations", response_model=list[models.AuthorizationOut])
    def get_authorizations(
        subject: str | None = Query(default=None), caller: str = Depends(_caller)
    ) -> list[models.AuthorizationOut]:
        role = agent.parties.get(caller)
        if role is not None and role.role is Role.CONSUMER:
            subject = caller
        return [models.AuthorizationOut.of(a) for a in agent.list_authorizations(subject)]

    @app.post("/authorizations/{auth_id}/revoke", response_model=models.AuthorizationOut)
    def revoke_authorization(auth_id: str, caller: str = Depends(_caller)):
        return models.AuthorizationOut.of(agent.revoke_authorization_grant(caller, auth_id))

    # -- rights requests -----------------------------------------------------------------

    @app.post("/rights-requests", response_model=models.RightsRequestOut)
    def post_rights_request(
        body: models.RightsRequestIn, caller: str = Depends(_caller)
    ) -> models.RightsRequestOut:
        fr = agent.submit_rights_request(caller, body.controller, RequestType(body.type))
        return models.RightsRequestOut.of(fr)

    @app.get("/rights-requests", response_model=list[models.RightsRequestOut])
    def list_rights_requests(
        controller: str | None = Query(default=None),
        subject: str | None = Query(default=None),
        caller: str = Depends(_caller),
    ) -> list[models.RightsRequestOut]:
        role = agent.parties.get(caller)
        if role is not None:
            if role.role is Role.CONSUMER:
                subject = caller
            elif role.role in (Role.PROVIDER, Role.RECIPIENT):
                controller = caller
        return [
            models.RightsRequestOut.of(fr)
            for fr in agent.list_requests(controller=controller, subject=subject)
        ]

    @app.get("/rights-requests/{request_id}", response_model=models.RightsRequestOut)
    def get_rights_request(request_id: str) -> models.RightsRequestOut:
        return models.RightsRequestOut.of(agent.get_request(request_id))

    @app.post("/rights-requests/{request_id}/transition", response_model=models.RightsRequestOut)
    def transition_rights_request(
        request_id: str, body: models.RequestTransitionIn, caller: str = Depends(_caller)
    ) -> models.RightsRequestOut:
        return models.RightsRequestOut.of(
            agent.transition_rights_request(caller, request_id, body.action)
        )

    # -- reports ----------------------------------------------------------------------------

    @app.get("/reports/reconciliation")
    def reconciliation_report() -> dict:
        return agent.reconciliation_report().to_dict()

    return app
