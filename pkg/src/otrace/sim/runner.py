"""Deterministic multi-party scenario runner.

Executes the protocol's subprotocols over a simulated in-process
transport (FIFO, optional fixed latency): traceability setup, consent
agreement, sharing setup, data access, local processing, and rights
requests. Every performed action lands in the ground-truth event list;
each obligated party's attestations are then filtered through its
behavior profile, and the difference between the two logs is exactly the
recorded deviation list. Reconciliation runs twice, with and without the
ground truth, so the detectable/undetectable boundary is measurable.

Fixed seed implies byte-identical outputs: ids come from one allocator in
schedule order and deviation coins are hash-derived, never drawn from a
shared mutable stream.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ..canon import canonical_text
from ..concepts import (
    Authorization,
    Basis,
    BasisKind,
    Consent,
    ConsentAction,
    Operation,
    Party,
    RequestAction,
    RequestType,
    RightsRequest,
    Role,
    authorize,
    introduce,
    record_use,
    request_consent,
    revoke_authorization,
    send_request,
    sweep_expirations,
    transition_consent,
    transition_request,
)
from ..errors import InvalidConfig
from ..ids import IdAllocator
from ..reconcile import ReconciliationReport, ThreatModel, reconcile
from ..records import authorization_to_record, consent_to_record, event_to_record
from ..store import AttestationLog, write_log
from ..sync import (
    ActionEvent,
    AttestationKind,
    EventKind,
    build_forward_attestation,
    derive_attestations,
    make_attestation,
    make_event,
)
from .behaviors import deviation_coin, event_rng, falsify_payload
from .config import AuthorizationSetup, ScenarioConfig, Strategy

try:
    from enum import StrEnum
except ImportError:  # pragma: no cover
    from enum import Enum

    class StrEnum(str, Enum):
        pass


class DeviationKind(StrEnum):
    OMIT = "OMIT"
    FALSIFY = "FALSIFY"
    OVERREACH_TERM = "OVERREACH_TERM"
    USE_PAST_EXPIRY = "USE_PAST_EXPIRY"
    IGNORE_REQUEST = "IGNORE_REQUEST"
    UNATTESTED_USE = "UNATTESTED_USE"


@dataclass(frozen=True)
class Deviation:
    """One profile decision that made the attested log diverge from truth.

    ``markers`` are the identifiers a detecting violation would cite in its
    evidence (event ids, request ids); metrics match on them.
    """

    kind: DeviationKind
    party: str
    attestation_kind: AttestationKind
    event_id: str
    markers: frozenset[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "party": self.party,
            "attestation_kind": self.attestation_kind.value,
            "event_id": self.event_id,
            "markers": sorted(self.markers),
        }


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    parties: dict[str, Party]
    ground_truth: list[ActionEvent]
    log: AttestationLog
    consents: dict[str, Consent]
    authorizations: dict[str, Authorization]
    injected: list[Deviation]
    report: ReconciliationReport
    audit_report: ReconciliationReport
    final_tick: int

    def write_outputs(self, out_dir: Path | str) -> dict[str, Path]:
        """Write all scenario artifacts as canonical line/structured files."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "ground_truth": out / "ground_truth.jsonl",
            "attested": out / "attested.jsonl",
            "consents": out / "consents.json",
            "authorizations": out / "authorizations.json",
            "report": out / "report.json",
            "report_audit": out / "report_audit.json",
            "deviations": out / "deviations.jsonl",
            "summary": out / "summary.txt",
        }
        with paths["ground_truth"].open("w", encoding="utf-8") as fh:
            for e in self.ground_truth:
                fh.write(canonical_text(event_to_record(e)) + "\n")
        write_log(paths["attested"], self.log.entries())
        paths["consents"].write_text(
            canonical_text([consent_to_record(c) for c in self.consents.values()]) + "\n",
            encoding="utf-8",
        )
        paths["authorizations"].write_text(
            canonical_text([authorization_to_record(a) for a in self.authorizations.values()])
            + "\n",
            encoding="utf-8",
        )
        paths["report"].write_text(
            canonical_text(self.report.to_dict()) + "\n", encoding="utf-8"
        )
        paths["report_audit"].write_text(
            canonical_text(self.audit_report.to_dict()) + "\n", encoding="utf-8"
        )
        with paths["deviations"].open("w", encoding="utf-8") as fh:
            for d in self.injected:
                fh.write(canonical_text(d.to_dict()) + "\n")
        paths["summary"].write_text(
            self.report.summary_text() + "\naudit mode:\n" + self.audit_report.summary_text(),
            encoding="utf-8",
        )
        return paths


# (tick, seq, action name, params); seq keeps same-tick order deterministic
_Step = tuple[int, int, str, dict[str, Any]]


class _Run:
    def __init__(self, cfg: ScenarioConfig, store_path: Path | str | None):
        self.cfg = cfg
        self.parties = {p.id: Party(p.id, p.role) for p in cfg.parties}
        self.profiles = {p.id: p for p in cfg.parties}
        self.agent = cfg.party(Role.AGENT).id
        self.ids = IdAllocator()
        self.log = AttestationLog(store_path)
        self.ground_truth: list[ActionEvent] = []
        self.consents: dict[str, Consent] = {}
        self.consent_order: list[str] = []
        self.consent_windows: dict[str, dict[str, int]] = {}
        self.auths: dict[str, Authorization] = {}
        self.auth_order: list[str] = []
        self.auth_grant_tick: dict[str, int] = {}
        self.injected: list[Deviation] = []
        self.requests: dict[str, RightsRequest] = {}
        self.max_tick = 0
        self._queue: list[_Step] = []
        self._seq = 0

    # -- party lookups ------------------------------------------------------

    def _first(self, role: Role) -> str:
        for p in self.cfg.parties:
            if p.role is role:
                return p.id
        raise InvalidConfig([("parties", f"workload needs a party with role {role.value}")])

    # -- emission -----------------------------------------------------------

    def emit(
        self,
        kind: EventKind,
        actor: str,
        tick: int,
        record: Any,
        authorization: Authorization | None = None,
    ) -> ActionEvent:
        """Record the action in ground truth, then run each party's sync step."""
        event = make_event(self.ids, kind, actor, tick, record, authorization)
        self.ground_truth.append(event)
        self.max_tick = max(self.max_tick, tick)
        for party, att in derive_attestations(event):
            self._sync_step(event, party, att)
        return event

    def _deviation_scope(self, att) -> bool:
        # Only the double-entry side of the request stream is worth hiding;
        # progress (receive) records have no counterpart to disagree with.
        if att.kind is AttestationKind.REQUEST:
            return att.payload["action"] in (
                EventKind.REQUEST_COMPLETE.value,
                EventKind.REQUEST_DENY.value,
            )
        return True

    def _sync_step(self, event: ActionEvent, party: str, att) -> None:
        prof = self.profiles[party]
        if self.cfg.latency:
            att = replace(att, timestamp=event.tick + self.cfg.latency)
        targeted = not prof.target_kinds or att.kind in prof.target_kinds
        group = prof.collude_key or party
        strategy = prof.strategy
        if (
            strategy in (Strategy.OMIT_ATTESTATION, Strategy.UNATTESTED_USE)
            and targeted
            and self._deviation_scope(att)
            and deviation_coin(self.cfg.seed, group, event.id, prof.deviation_rate)
        ):
            kind = (
                DeviationKind.UNATTESTED_USE
                if strategy is Strategy.UNATTESTED_USE
                else DeviationKind.OMIT
            )
            self.injected.append(
                Deviation(
                    kind=kind,
                    party=party,
                    attestation_kind=att.kind,
                    event_id=event.id,
                    markers=self._markers(event, att),
                )
            )
            return
        if (
            strategy is Strategy.FALSIFY_CONTENT
            and targeted
            and self._deviation_scope(att)
            and deviation_coin(self.cfg.seed, group, event.id, prof.deviation_rate)
        ):
            rng = event_rng(self.cfg.seed, f"falsify:{group}", event.id)
            mutated = falsify_payload(att.payload, rng)
            forged = make_attestation(party, att.kind, mutated, att.timestamp)
            self.log.append(forged)
            self.injected.append(
                Deviation(
                    kind=DeviationKind.FALSIFY,
                    party=party,
                    attestation_kind=att.kind,
                    event_id=event.id,
                    markers=self._markers(event, att) | {forged.id},
                )
            )
            return
        self.log.append(att)

    @staticmethod
    def _markers(event: ActionEvent, att) -> frozenset[str]:
        markers = {event.id, att.id}
        request_id = att.payload.get("request_id")
        if request_id:
            markers.add(request_id)
        return frozenset(markers)

    # -- setup phases ---------------------------------------------------------

    def _intro_pairs(self) -> list[tuple[str, str]]:
        pairs: list[tuple[str, str]] = []
        seen = set()

        def add(subject: str, controller: str) -> None:
            if (subject, controller) not in seen:
                seen.add((subject, controller))
                pairs.append((subject, controller))

        for c in self.cfg.consents:
            add(c.subject, c.controller)
        for a in self.cfg.authorizations:
            add(a.subject, a.provider)
            add(a.subject, a.recipient)
        wl = self.cfg.workload
        if wl.accesses or wl.processes or wl.sharings or wl.requests:
            consumer = self._first(Role.CONSUMER)
            for p in self.cfg.parties:
                if p.role in (Role.PROVIDER, Role.RECIPIENT):
                    add(consumer, p.id)
        return pairs

    def _push(self, tick: int, action: str, params: dict[str, Any]) -> None:
        heapq.heappush(self._queue, (tick, self._seq, action, params))
        self._seq += 1

    def _seed_steps(self) -> None:
        for subject, controller in self._intro_pairs():
            self._push(0, "intro", {"subject": subject, "controller": controller})
        for i, c in enumerate(self.cfg.consents):
            self._push(c.request_tick, "consent_request", {"idx": i})
            if c.decision is not None:
                decide = c.decide_tick if c.decide_tick is not None else c.request_tick + 1
                self._push(decide, "consent_decide", {"idx": i})
            if c.revoke_tick is not None:
                self._push(c.revoke_tick, "consent_revoke", {"idx": i})
        for i, a in enumerate(self.cfg.authorizations):
            self._push(a.grant_tick, "authorize", {"idx": i})
            if a.revoke_tick is not None:
                self._push(a.revoke_tick, "auth_revoke", {"idx": i})

        wl = self.cfg.workload
        tick = wl.start_tick
        for i in range(wl.sharings):
            self._push(tick + i * wl.spacing, "workload_sharing", {"i": i})
        for i in range(wl.accesses):
            self._push(tick + i * wl.spacing, "access", {"i": i})
        for i in range(wl.processes):
            self._push(tick + i * wl.spacing, "process", {"i": i})
        for i in range(wl.requests):
            self._push(tick + i * wl.spacing, "request", {"i": i})
        for s in self.cfg.schedule:
            self._push(s.tick, s.action, dict(s.params))

    # -- step execution -------------------------------------------------------

    def _do_intro(self, tick: int, subject: str, controller: str) -> None:
        intro = introduce(
            self.parties[subject],
            self.parties[controller],
            self.parties[self.agent],
            existing=(),
            ids=self.ids,
        )
        self.emit(EventKind.INTRODUCE, subject, tick, intro)

    def _do_consent_request(self, tick: int, idx: int) -> None:
        setup = self.cfg.consents[idx]
        consent = request_consent(
            self.parties[setup.controller],
            self.parties[setup.subject],
            [self._term(dt, p) for dt, p in setup.terms],
            setup.expiry,
            ids=self.ids,
        )
        self.consents[consent.id] = consent
        self.consent_order.append(consent.id)
        self.consent_windows[consent.id] = {}
        self.emit(EventKind.CONSENT_REQUEST, setup.controller, tick, consent)

    @staticmethod
    def _term(data_type: str, purpose: str):
        from ..concepts import Term

        return Term(data_type, purpose)

    def _consent_id(self, idx: int) -> str:
        return self.consent_order[idx]

    def _do_consent_decide(self, tick: int, idx: int) -> None:
        setup = self.cfg.consents[idx]
        cid = self._consent_id(idx)
        action = ConsentAction.ACCEPT if setup.decision == "accept" else ConsentAction.DENY
        updated = transition_consent(self.parties[setup.subject], self.consents[cid], action, tick)
        self.consents[cid] = updated
        key = "accept" if action is ConsentAction.ACCEPT else "deny"
        self.consent_windows[cid][key] = tick
        kind = (
            EventKind.CONSENT_ACCEPT
            if action is ConsentAction.ACCEPT
            else EventKind.CONSENT_DENY
        )
        self.emit(kind, setup.subject, tick, updated)

    def _do_consent_revoke(self, tick: int, idx: int) -> None:
        setup = self.cfg.consents[idx]
        cid = self._consent_id(idx)
        updated = transition_consent(
            self.parties[setup.subject], self.consents[cid], ConsentAction.REVOKE, tick
        )
        self.consents[cid] = updated
        self.consent_windows[cid]["revoke"] = tick
        self.emit(EventKind.CONSENT_REVOKE, setup.subject, tick, updated)

    def _do_authorize(self, tick: int, setup: AuthorizationSetup) -> Authorization:
        auth = authorize(
            self.parties[setup.subject],
            self.parties[setup.provider],
            self.parties[setup.recipient],
            setup.data,
            setup.expiration,
            ids=self.ids,
        )
        self.auths[auth.id] = auth
        self.auth_order.append(auth.id)
        self.auth_grant_tick[auth.id] = tick
        self.emit(EventKind.AUTHORIZE, setup.subject, tick, auth)
        return auth

    def _do_auth_revoke(self, tick: int, idx: int) -> None:
        aid = self.auth_order[idx]
        auth = self.auths[aid]
        updated = revoke_authorization(self.parties[auth.subject], auth, tick)
        self.auths[aid] = updated
        self.emit(EventKind.AUTHORIZATION_REVOKE, auth.subject, tick, updated)

    def _workload_sharing_setup(self, i: int) -> AuthorizationSetup:
        base = (
            self.cfg.authorizations[0]
            if self.cfg.authorizations
            else AuthorizationSetup(
                subject=self._first(Role.CONSUMER),
                provider=self._first(Role.PROVIDER),
                recipient=self._first(Role.RECIPIENT),
                data=["workload.data"],
                expiration=10_000,
            )
        )
        return AuthorizationSetup(
            subject=base.subject,
            provider=base.provider,
            recipient=base.recipient,
            data=[f"{base.data[0]}.{i}"],
            expiration=base.expiration,
        )

    # -- use / access / request steps ------------------------------------------

    def _inspect_use(self, event: ActionEvent, acting: str) -> None:
        """Label non-compliant uses as injected deviations (the generator's oracle)."""
        use = event.record
        basis = use.basis
        tick = event.tick
        kind: DeviationKind | None = None
        if basis.kind is BasisKind.CONSENT:
            consent = self.consents.get(basis.ref_id)
            if consent is None:
                kind = DeviationKind.OVERREACH_TERM
            elif tick >= consent.expiry:
                kind = DeviationKind.USE_PAST_EXPIRY
            elif not any(t.data_type == use.data for t in consent.terms):
                kind = DeviationKind.OVERREACH_TERM
            elif not self._accepted_window(basis.ref_id, tick):
                kind = DeviationKind.OVERREACH_TERM
        else:
            auth = self.auths.get(basis.ref_id)
            if auth is None:
                kind = DeviationKind.OVERREACH_TERM
            elif tick >= auth.expiration:
                kind = DeviationKind.USE_PAST_EXPIRY
            elif use.data not in auth.data:
                kind = DeviationKind.OVERREACH_TERM
            elif event.kind is EventKind.DATA_ACCESS and not self._consent_coverage(
                acting, use.subject, use.data, tick
            ):
                kind = DeviationKind.OVERREACH_TERM
        if kind is not None:
            att_kind = (
                AttestationKind.ACCESS
                if event.kind is EventKind.DATA_ACCESS
                else AttestationKind.PROCESS
            )
            self.injected.append(
                Deviation(
                    kind=kind,
                    party=acting,
                    attestation_kind=att_kind,
                    event_id=event.id,
                    markers=frozenset({event.id}),
                )
            )

    def _accepted_window(self, consent_id: str, tick: int) -> bool:
        window = self.consent_windows.get(consent_id, {})
        accept = window.get("accept")
        if accept is None or tick < accept:
            return False
        revoke = window.get("revoke")
        return revoke is None or tick < revoke

    def _consent_coverage(self, controller: str, subject: str, data: str, tick: int) -> bool:
        for cid, c in self.consents.items():
            if (
                c.controller == controller
                and c.subject == subject
                and any(t.data_type == data for t in c.terms)
                and tick < c.expiry
                and self._accepted_window(cid, tick)
            ):
                return True
        return False

    def _do_access(self, tick: int, params: dict[str, Any]) -> None:
        idx = params.get("authorization", 0)
        aid = self.auth_order[idx]
        auth = self.auths[aid]
        data = params.get("data", sorted(auth.data)[0])
        recipient = self.parties[auth.recipient]
        use = record_use(
            recipient,
            self.parties[auth.subject],
            data,
            Operation.SHARE,
            Basis(BasisKind.AUTHORIZATION, auth.id, self.auth_grant_tick.get(auth.id, 0)),
            consents=self.consents,
            authorizations=self.auths,
            ids=self.ids,
        )
        event = self.emit(EventKind.DATA_ACCESS, auth.recipient, tick, use, authorization=auth)
        self._inspect_use(event, auth.recipient)

    def _do_process(self, tick: int, params: dict[str, Any]) -> None:
        idx = params.get("consent", 0)
        cid = self._consent_id(idx)
        consent = self.consents[cid]
        controller = params.get("controller", consent.controller)
        prof = self.profiles[controller]
        data = params.get("data")
        if data is None:
            data = sorted(t.data_type for t in consent.terms)[0]
            i = params.get("i", 0)
            if prof.strategy is Strategy.OVERREACH_TERMS and deviation_coin(
                self.cfg.seed, prof.collude_key or controller, f"plan:process:{i}", prof.deviation_rate
            ):
                data = "covert.overreach"
        accept_tick = self.consent_windows.get(cid, {}).get("accept", 0)
        use = record_use(
            self.parties[controller],
            self.parties[consent.subject],
            data,
            Operation.DERIVE,
            Basis(BasisKind.CONSENT, cid, accept_tick),
            consents=self.consents,
            authorizations=self.auths,
            ids=self.ids,
        )
        event = self.emit(EventKind.DATA_USE, controller, tick, use)
        self._inspect_use(event, controller)

    def _do_request(self, tick: int, params: dict[str, Any]) -> None:
        subject = params.get("subject", self._first(Role.CONSUMER))
        controller = params.get("controller", self._first(Role.RECIPIENT))
        i = params.get("i", 0)
        types = [RequestType.DELETE, RequestType.ACCESS, RequestType.CORRECT, RequestType.OPTOUT]
        rtype = RequestType(params["type"]) if "type" in params else types[i % len(types)]

        req = send_request(self.parties[subject], self.parties[controller], rtype, ids=self.ids)
        self.requests[req.id] = req
        self.emit(EventKind.REQUEST_SEND, subject, tick, req)
        # the agent records its intake entry before forwarding
        deadline = tick + self.cfg.request_window
        fwd = build_forward_attestation(self.agent, req, forwarded_at=tick, deadline=deadline, tick=tick)
        self.log.append(fwd)
        self.max_tick = max(self.max_tick, tick)

        prof = self.profiles[controller]
        if prof.strategy is Strategy.IGNORE_REQUESTS and deviation_coin(
            self.cfg.seed, prof.collude_key or controller, f"req:{req.id}", prof.deviation_rate
        ):
            self.injected.append(
                Deviation(
                    kind=DeviationKind.IGNORE_REQUEST,
                    party=controller,
                    attestation_kind=AttestationKind.REQUEST,
                    event_id=req.id,
                    markers=frozenset({req.id}),
                )
            )
            return
        self._push(tick + 1, "request_receive", {"request_id": req.id})
        self._push(tick + 2, "request_complete", {"request_id": req.id})

    def _do_request_receive(self, tick: int, params: dict[str, Any]) -> None:
        req = self.requests[params["request_id"]]
        received = transition_request(self.parties[req.controller], req, RequestAction.RECEIVE)
        self.requests[req.id] = received
        self.emit(EventKind.REQUEST_RECEIVE, req.controller, tick, received)

    def _do_request_complete(self, tick: int, params: dict[str, Any]) -> None:
        req = self.requests[params["request_id"]]
        done = transition_request(self.parties[req.controller], req, RequestAction.COMPLETE)
        self.requests[req.id] = done
        self.emit(EventKind.REQUEST_COMPLETE, req.controller, tick, done)

    # -- top level --------------------------------------------------------------

    def run(self) -> ScenarioResult:
        dispatch = {
            "intro": lambda t, p: self._do_intro(t, p["subject"], p["controller"]),
            "consent_request": lambda t, p: self._do_consent_request(t, p["idx"]),
            "consent_decide": lambda t, p: self._do_consent_decide(t, p["idx"]),
            "consent_revoke": lambda t, p: self._do_consent_revoke(t, p["idx"]),
            "revoke_consent": lambda t, p: self._do_consent_revoke(t, p.get("consent", 0)),
            "authorize": lambda t, p: self._do_authorize(t, self.cfg.authorizations[p["idx"]]),
            "auth_revoke": lambda t, p: self._do_auth_revoke(t, p["idx"]),
            "revoke_authorization": lambda t, p: self._do_auth_revoke(t, p.get("authorization", 0)),
            "workload_sharing": lambda t, p: self._do_authorize(
                t, self._workload_sharing_setup(p["i"])
            ),
            "access": self._do_access,
            "process": self._do_process,
            "request": self._do_request,
            "request_receive": self._do_request_receive,
            "request_complete": self._do_request_complete,
        }
        self._seed_steps()
        while self._queue:
            tick, _, action, params = heapq.heappop(self._queue)
            dispatch[action](tick, params)

        final_tick = self.cfg.final_tick
        if final_tick is None:
            final_tick = self.max_tick + self.cfg.request_window + 1
        final_consents = {
            cid: c
            for cid, c in zip(
                self.consents.keys(),
                sweep_expirations(self.consents.values(), final_tick),
            )
        }
        model = ThreatModel.from_label(self.cfg.threat_model)
        report = reconcile(
            self.log, final_consents.values(), self.auths.values(), model, now=final_tick
        )
        audit = reconcile(
            self.log,
            final_consents.values(),
            self.auths.values(),
            model,
            ground_truth=self.ground_truth,
            now=final_tick,
        )
        return ScenarioResult(
            config=self.cfg,
            parties=self.parties,
            ground_truth=self.ground_truth,
            log=self.log,
            consents=final_consents,
            authorizations=self.auths,
            injected=self.injected,
            report=report,
            audit_report=audit,
            final_tick=final_tick,
        )


def run_scenario(
    config: ScenarioConfig, store_path: Path | str | None = None
) -> ScenarioResult:
    """Execute a validated scenario; deterministic for a fixed config."""
    return _Run(config, store_path).run()
