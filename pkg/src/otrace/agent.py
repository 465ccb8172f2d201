"""The traceability agent: trusted custodian of the attestation trail.

Holds the append-only attestation log plus the registries a consumer-side
agent needs (parties, introductions, consents, authorizations, rights
requests) and enforces the submission rules: a submitter may only speak
for itself, digests must verify, and controllers may only attest about
subjects who introduced them here.

Rights requests follow the intake-before-forward discipline: the agent
appends its own request attestation, then forwards (records the forward
with a response deadline). Controllers learn their outstanding sync
obligations from the obligations feed and satisfy them through normal
attestation submission, which keeps double-entry meaningful: the agent
never writes a controller's side of a pair.

State persists as two append-only files per store directory:
``attestations.jsonl`` (the canonical trail, one record per line) and
``registry.jsonl`` (everything else); both are replayed on startup, so a
restart preserves the full queryable state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .canon import canonical_text, content_digest, parse_canonical
from .concepts import (
    Authorization,
    Consent,
    ConsentAction,
    ConsentStatus,
    Introduction,
    Party,
    RequestAction,
    RequestType,
    RightsRequest,
    Role,
    Term,
    authorize,
    introduce,
    request_consent,
    revoke_authorization,
    send_request,
    sweep_expirations,
    transition_consent,
    transition_request,
)
from .errors import (
    DigestMismatch,
    Impersonation,
    NotIntroduced,
    RoleMismatch,
    Unauthorized,
    UnknownRecord,
)
from .ids import IdAllocator
from .reconcile import ReconciliationReport, ThreatModel, reconcile
from .records import (
    authorization_from_record,
    authorization_to_record,
    consent_from_record,
    consent_to_record,
    introduction_from_record,
    introduction_to_record,
    rights_request_from_record,
    rights_request_to_record,
)
from .store import AttestationLog
from .sync import (
    ActionEvent,
    Attestation,
    AttestationKind,
    EventKind,
    build_forward_attestation,
    derive_attestations,
    make_attestation,
)

DEFAULT_REQUEST_WINDOW = 45


@dataclass(frozen=True)
class ForwardedRequest:
    """A rights request the agent has forwarded to its controller."""

    request: RightsRequest
    forwarded_at: int
    deadline: int

    def __post_init__(self) -> None:
        if not self.deadline > self.forwarded_at:
            raise ValueError("deadline must come after forwarding")


class LogicalClock:
    """Monotone tick counter; the agent is the clock context for callers."""

    def __init__(self, start: int = 0):
        self._tick = start

    @property
    def tick(self) -> int:
        return self._tick

    def advance(self) -> int:
        self._tick += 1
        return self._tick

    def advance_to(self, tick: int) -> int:
        self._tick = max(self._tick, tick)
        return self._tick


class TraceabilityAgent:
    """One agent instance = one trust domain with one trail."""

    def __init__(
        self,
        agent_id: str = "agent",
        store_dir: Path | str | None = None,
        request_window: int = DEFAULT_REQUEST_WINDOW,
        threat_model: ThreatModel | None = None,
    ):
        self.agent_id = agent_id
        self.request_window = request_window
        self.threat_model = threat_model or ThreatModel.blue()
        self.clock = LogicalClock()
        self.ids = IdAllocator()
        self.parties: dict[str, Party] = {agent_id: Party(agent_id, Role.AGENT)}
        self.introductions: list[Introduction] = []
        self.consents: dict[str, Consent] = {}
        self.authorizations: dict[str, Authorization] = {}
        self.requests: dict[str, ForwardedRequest] = {}
        # outstanding sync obligations: (party, action_id) -> {kind, payload}
        self.pending: dict[tuple[str, str], dict[str, Any]] = {}

        self._registry_fh = None
        if store_dir is not None:
            store_dir = Path(store_dir)
            store_dir.mkdir(parents=True, exist_ok=True)
            registry_path = store_dir / "registry.jsonl"
            if registry_path.exists():
                self._replay_registry(registry_path)
            self.log = AttestationLog(store_dir / "attestations.jsonl")
            for att in self.log.entries():
                self.clock.advance_to(att.timestamp)
            self._registry_fh = registry_path.open("a", encoding="utf-8")
        else:
            self.log = AttestationLog()

    def close(self) -> None:
        self.log.close()
        if self._registry_fh is not None:
            self._registry_fh.close()
            self._registry_fh = None

    # -- persistence ----------------------------------------------------------

    def _persist(self, record: dict[str, Any]) -> None:
        if self._registry_fh is not None:
            self._registry_fh.write(canonical_text(record) + "\n")
            self._registry_fh.flush()

    def _replay_registry(self, path: Path) -> None:
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = parse_canonical(line)
                self._apply_registry(rec)
                self.clock.advance_to(rec.get("tick", 0))

    def _apply_registry(self, rec: dict[str, Any]) -> None:
        rtype = rec["rtype"]
        if rtype == "party":
            self.parties[rec["id"]] = Party(rec["id"], Role(rec["role"]))
        elif rtype == "introduction":
            self.introductions.append(introduction_from_record(rec["record"]))
        elif rtype in ("consent", "consent_update"):
            c = consent_from_record(rec["record"])
            self.consents[c.id] = c
        elif rtype in ("authorization", "authorization_update"):
            a = authorization_from_record(rec["record"])
            self.authorizations[a.id] = a
        elif rtype == "request":
            r = rights_request_from_record(rec["record"])
            self.requests[r.id] = ForwardedRequest(
                request=r, forwarded_at=rec["forwarded_at"], deadline=rec["deadline"]
            )
        elif rtype == "request_update":
            r = rights_request_from_record(rec["record"])
            old = self.requests[r.id]
            self.requests[r.id] = ForwardedRequest(
                request=r, forwarded_at=old.forwarded_at, deadline=old.deadline
            )
        elif rtype == "obligation":
            self.pending[(rec["party"], rec["payload"]["action_id"])] = {
                "kind": rec["kind"],
                "payload": rec["payload"],
            }
        elif rtype == "obligation_done":
            self.pending.pop((rec["party"], rec["action_id"]), None)
        else:
            raise UnknownRecord(f"registry record type {rtype!r}")

    # -- helpers --------------------------------------------------------------

    def _party(self, party_id: str) -> Party:
        p = self.parties.get(party_id)
        if p is None:
            raise UnknownRecord(f"party {party_id!r} not registered")
        return p

    def _introduced(self, subject: str, controller: str) -> bool:
        return any(
            i.subject == subject and i.controller == controller for i in self.introductions
        )

    def _note_obligations(
        self, event: ActionEvent, auto_parties: tuple[str, ...], tick: int
    ) -> None:
        """Append the auto-submitted sides; queue everyone else's obligation."""
        for party, att in derive_attestations(event):
            if party in auto_parties:
                self.log.append(att)
            else:
                self.pending[(party, att.action_id)] = {
                    "kind": att.kind.value,
                    "payload": att.payload,
                }
                self._persist(
                    {
                        "rtype": "obligation",
                        "party": party,
                        "kind": att.kind.value,
                        "payload": att.payload,
                        "tick": tick,
                    }
                )

    # -- parties & introductions ----------------------------------------------

    def register_party(self, party_id: str, role: Role) -> Party:
        existing = self.parties.get(party_id)
        if existing is not None:
            if existing.role is not role:
                raise RoleMismatch(f"{party_id} already registered as {existing.role.value}")
            return existing
        party = Party(party_id, role)
        self.parties[party_id] = party
        self._persist({"rtype": "party", "id": party_id, "role": role.value, "tick": self.clock.tick})
        return party

    def register_introduction(self, subject_id: str, controller_id: str) -> Introduction:
        tick = self.clock.advance()
        intro = introduce(
            self._party(subject_id),
            self._party(controller_id),
            self._party(self.agent_id),
            existing=self.introductions,
            ids=self.ids,
        )
        self.introductions.append(intro)
        self._persist(
            {"rtype": "introduction", "record": introduction_to_record(intro), "tick": tick}
        )
        event = ActionEvent(
            id=self.ids.next("evt"),
            kind=EventKind.INTRODUCE,
            actor=subject_id,
            tick=tick,
            record=intro,
        )
        self._note_obligations(event, auto_parties=(subject_id,), tick=tick)
        return intro

    def list_introductions(self, subject: str | None = None) -> list[Introduction]:
        return [i for i in self.introductions if subject is None or i.subject == subject]

    # -- attestation submission & queries ---------------------------------------

    def append_attestation(
        self, submitter: str, party: str, kind: AttestationKind, payload: dict[str, Any],
        claimed_digest: str | None = None,
    ) -> Attestation:
        """Validate and append one attestation; returns the stored entry."""
        if submitter != party:
            raise Impersonation(f"{submitter} cannot attest as {party}")
        if claimed_digest is not None and claimed_digest != content_digest(payload):
            raise DigestMismatch(f"claimed digest does not match payload for {party}")
        for field in ("subject", "action", "action_id", "tick"):
            if field not in payload:
                raise UnknownRecord(f"payload lacks {field!r}")
        subject = payload["subject"]
        if party not in (subject, self.agent_id) and not self._introduced(subject, party):
            raise NotIntroduced(f"{party} was not introduced for {subject}")
        tick = self.clock.advance()
        att = make_attestation(party, kind, payload, tick)
        self.log.append(att)
        done = self.pending.pop((party, att.action_id), None)
        if done is not None:
            self._persist(
                {"rtype": "obligation_done", "party": party, "action_id": att.action_id, "tick": tick}
            )
        return att

    def query_attestations(
        self,
        caller: str,
        subject: str | None = None,
        party: str | None = None,
        kind: AttestationKind | None = None,
        tick_from: int | None = None,
        tick_to: int | None = None,
    ) -> list[Attestation]:
        """Filtered trail view under the caller's isolation rules.

        Consumers see only their own subject's entries; controllers see
        only entries they submitted; the agent operator sees everything.
        """
        role = self._party(caller).role
        if role is Role.CONSUMER:
            if subject is not None and subject != caller:
                raise Unauthorized(f"{caller} may only query subject={caller}")
            subject = caller
        elif role in (Role.PROVIDER, Role.RECIPIENT):
            if party is not None and party != caller:
                raise Unauthorized(f"{caller} may only query its own submissions")
            party = caller
        return self.log.query(
            subject=subject, party=party, kind=kind, tick_from=tick_from, tick_to=tick_to
        )

    def obligations(self, party: str) -> list[dict[str, Any]]:
        """Outstanding sync obligations for ``party``: kind + payload to attest."""
        return [
            {"kind": entry["kind"], "payload": dict(entry["payload"])}
            for (pid, _), entry in sorted(self.pending.items())
            if pid == party
        ]

    # -- consents ---------------------------------------------------------------

    def open_consent_request(
        self, controller_id: str, subject_id: str, terms: list[tuple[str, str]], expiry: int
    ) -> Consent:
        """Controller files a consent request; the call is its attestation."""
        if not self._introduced(subject_id, controller_id):
            raise NotIntroduced(f"{controller_id} was not introduced for {subject_id}")
        tick = self.clock.advance()
        consent = request_consent(
            self._party(controller_id),
            self._party(subject_id),
            [Term(dt, p) for dt, p in terms],
            expiry,
            ids=self.ids,
        )
        self.consents[consent.id] = consent
        self._persist({"rtype": "consent", "record": consent_to_record(consent), "tick": tick})
        event = ActionEvent(
            id=self.ids.next("evt"),
            kind=EventKind.CONSENT_REQUEST,
            actor=controller_id,
            tick=tick,
            record=consent,
        )
        self._note_obligations(event, auto_parties=(controller_id,), tick=tick)
        return consent

    def _lazy_expire(self, consent: Consent, now: int) -> Consent:
        if consent.status is ConsentStatus.ACCEPTED and consent.expiry < now:
            expired = transition_consent(None, consent, ConsentAction.EXPIRE, now)
            self.consents[consent.id] = expired
            self._persist(
                {"rtype": "consent_update", "record": consent_to_record(expired), "tick": now}
            )
            return expired
        return consent

    def act_on_consent(self, subject_id: str, consent_id: str, action: ConsentAction) -> Consent:
        """Subject-side lifecycle action, relayed by the agent."""
        consent = self.consents.get(consent_id)
        if consent is None:
            raise UnknownRecord(f"consent {consent_id!r} not found")
        tick = self.clock.advance()
        consent = self._lazy_expire(consent, tick)
        updated = transition_consent(self._party(subject_id), consent, action, tick)
        self.consents[consent_id] = updated
        self._persist({"rtype": "consent_update", "record": consent_to_record(updated), "tick": tick})
        kind = {
            ConsentAction.ACCEPT: EventKind.CONSENT_ACCEPT,
            ConsentAction.DENY: EventKind.CONSENT_DENY,
            ConsentAction.REVOKE: EventKind.CONSENT_REVOKE,
        }[action]
        event = ActionEvent(
            id=self.ids.next("evt"), kind=kind, actor=subject_id, tick=tick, record=updated
        )
        self._note_obligations(event, auto_parties=(subject_id,), tick=tick)
        return updated

    def sweep_consents(self) -> list[str]:
        """Explicit background expiry pass; returns newly expired consent ids."""
        now = self.clock.tick
        expired = []
        for cid, c in list(self.consents.items()):
            if c.status is ConsentStatus.ACCEPTED and c.expiry < now:
                self._lazy_expire(c, now)
                expired.append(cid)
        return expired

    def list_consents(
        self, caller: str, subject: str | None = None, controller: str | None = None
    ) -> list[Consent]:
        role = self._party(caller).role
        if role is Role.CONSUMER:
            if subject is not None and subject != caller:
                raise Unauthorized(f"{caller} may only list their own consents")
            subject = caller
        elif role in (Role.PROVIDER, Role.RECIPIENT):
            if controller is not None and controller != caller:
                raise Unauthorized(f"{caller} may only list consents naming them")
            controller = caller
        now = self.clock.tick
        out = []
        for c in self.consents.values():
            if subject is not None and c.subject != subject:
                continue
            if controller is not None and c.controller != controller:
                continue
            view = c
            if c.status is ConsentStatus.ACCEPTED and c.expiry < now:
                view = sweep_expirations([c], now)[0]  # lazy read-time expiry
            out.append(view)
        return out

    # -- authorizations -----------------------------------------------------------

    def grant_authorization(
        self,
        subject_id: str,
        provider_id: str,
        recipient_id: str,
        data: list[str],
        expiration: int,
    ) -> Authorization:
        tick = self.clock.advance()
        auth = authorize(
            self._party(subject_id),
            self._party(provider_id),
            self._party(recipient_id),
            data,
            expiration,
            ids=self.ids,
        )
        self.authorizations[auth.id] = auth
        self._persist(
            {"rtype": "authorization", "record": authorization_to_record(auth), "tick": tick}
        )
        event = ActionEvent(
            id=self.ids.next("evt"),
            kind=EventKind.AUTHORIZE,
            actor=subject_id,
            tick=tick,
            record=auth,
        )
        self._note_obligations(event, auto_parties=(subject_id,), tick=tick)
        return auth

    def revoke_authorization_grant(self, subject_id: str, auth_id: str) -> Authorization:
        auth = self.authorizations.get(auth_id)
        if auth is None:
            raise UnknownRecord(f"authorization {auth_id!r} not found")
        tick = self.clock.advance()
        updated = revoke_authorization(self._party(subject_id), auth, tick)
        self.authorizations[auth_id] = updated
        self._persist(
            {
                "rtype": "authorization_update",
                "record": authorization_to_record(updated),
                "tick": tick,
            }
        )
        event = ActionEvent(
            id=self.ids.next("evt"),
            kind=EventKind.AUTHORIZATION_REVOKE,
            actor=subject_id,
            tick=tick,
            record=updated,
        )
        self._note_obligations(event, auto_parties=(subject_id,), tick=tick)
        return updated

    def list_authorizations(self, subject: str | None = None) -> list[Authorization]:
        return [
            a for a in self.authorizations.values() if subject is None or a.subject == subject
        ]

    # -- rights requests -----------------------------------------------------------

    def submit_rights_request(
        self, subject_id: str, controller_id: str, rtype: RequestType
    ) -> ForwardedRequest:
        """Intake, record, then forward; the agent's entry precedes the forward."""
        if not self._introduced(subject_id, controller_id):
            raise NotIntroduced(f"{controller_id} was not introduced for {subject_id}")
        send_tick = self.clock.advance()
        request = send_request(
            self._party(subject_id), self._party(controller_id), rtype, ids=self.ids
        )
        event = ActionEvent(
            id=self.ids.next("evt"),
            kind=EventKind.REQUEST_SEND,
            actor=subject_id,
            tick=send_tick,
            record=request,
        )
        self._note_obligations(event, auto_parties=(subject_id,), tick=send_tick)

        fwd_tick = self.clock.advance()
        deadline = fwd_tick + self.request_window
        self.log.append(
            build_forward_attestation(
                self.agent_id, request, forwarded_at=fwd_tick, deadline=deadline, tick=fwd_tick
            )
        )
        forwarded = ForwardedRequest(request=request, forwarded_at=fwd_tick, deadline=deadline)
        self.requests[request.id] = forwarded
        self._persist(
            {
                "rtype": "request",
                "record": rights_request_to_record(request),
                "forwarded_at": fwd_tick,
                "deadline": deadline,
                "tick": fwd_tick,
            }
        )
        return forwarded

    def get_request(self, request_id: str) -> ForwardedRequest:
        fr = self.requests.get(request_id)
        if fr is None:
            raise UnknownRecord(f"rights request {request_id!r} not found")
        return fr

    def list_requests(
        self, controller: str | None = None, subject: str | None = None
    ) -> list[ForwardedRequest]:
        out = []
        for fr in self.requests.values():
            if controller is not None and fr.request.controller != controller:
                continue
            if subject is not None and fr.request.subject != subject:
                continue
            out.append(fr)
        return out

    def transition_rights_request(
        self, controller_id: str, request_id: str, action: RequestAction
    ) -> ForwardedRequest:
        """Controller-side progress; the call carries its attestation."""
        fr = self.get_request(request_id)
        tick = self.clock.advance()
        updated = transition_request(self._party(controller_id), fr.request, action)
        forwarded = ForwardedRequest(
            request=updated, forwarded_at=fr.forwarded_at, deadline=fr.deadline
        )
        self.requests[request_id] = forwarded
        self._persist(
            {"rtype": "request_update", "record": rights_request_to_record(updated), "tick": tick}
        )
        kind = {
            RequestAction.RECEIVE: EventKind.REQUEST_RECEIVE,
            RequestAction.COMPLETE: EventKind.REQUEST_COMPLETE,
            RequestAction.DENY: EventKind.REQUEST_DENY,
        }[action]
        event = ActionEvent(
            id=self.ids.next("evt"), kind=kind, actor=controller_id, tick=tick, record=updated
        )
        self._note_obligations(event, auto_parties=(controller_id,), tick=tick)
        return forwarded

    # -- reconciliation --------------------------------------------------------------

    def reconciliation_report(self) -> ReconciliationReport:
        now = self.clock.tick
        consents = sweep_expirations(self.consents.values(), now)
        return reconcile(
            self.log, consents, self.authorizations.values(), self.threat_model, now=now
        )
