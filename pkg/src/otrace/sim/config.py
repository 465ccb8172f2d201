"""Scenario configuration: parties, behavior, setup, workload, schedule.

Configs are YAML or JSON files validated into pydantic models; validation
failures surface as INVALID_CONFIG with one (field path, message) pair per
problem. A fixed seed makes the whole run byte-reproducible.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..concepts import Role
from ..errors import InvalidConfig
from ..sync import AttestationKind

try:
    from enum import StrEnum  # py311+
except ImportError:  # pragma: no cover
    from enum import Enum

    class StrEnum(str, Enum):
        pass


class Strategy(StrEnum):
    HONEST = "HONEST"
    OMIT_ATTESTATION = "OMIT_ATTESTATION"
    FALSIFY_CONTENT = "FALSIFY_CONTENT"
    OVERREACH_TERMS = "OVERREACH_TERMS"
    IGNORE_REQUESTS = "IGNORE_REQUESTS"
    UNATTESTED_USE = "UNATTESTED_USE"


class PartyConfig(BaseModel):
    id: str
    role: Role
    strategy: Strategy = Strategy.HONEST
    deviation_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    target_kinds: list[AttestationKind] = Field(default_factory=list)
    # parties sharing a collusion key flip the same per-event deviation coin
    collude_key: str | None = None

    @model_validator(mode="after")
    def _honest_never_deviates(self) -> "PartyConfig":
        if self.strategy is Strategy.HONEST and self.deviation_rate != 0.0:
            raise ValueError("HONEST strategy requires deviation_rate = 0")
        return self


class ConsentSetup(BaseModel):
    controller: str
    subject: str
    terms: list[tuple[str, str]] = Field(min_length=1)
    expiry: int = Field(ge=0)
    decision: Literal["accept", "deny"] | None = "accept"
    request_tick: int = 1
    decide_tick: int | None = None
    revoke_tick: int | None = None

    @model_validator(mode="after")
    def _ordered_ticks(self) -> "ConsentSetup":
        decide = self.decide_tick if self.decide_tick is not None else self.request_tick + 1
        if decide <= self.request_tick:
            raise ValueError("decide_tick must come after request_tick")
        if self.revoke_tick is not None and self.revoke_tick <= decide:
            raise ValueError("revoke_tick must come after the decision")
        return self


class AuthorizationSetup(BaseModel):
    subject: str
    provider: str
    recipient: str
    data: list[str] = Field(min_length=1)
    expiration: int = Field(ge=0)
    grant_tick: int = 3
    revoke_tick: int | None = None


class Workload(BaseModel):
    """Generated bulk events, all referencing the first matching setup records."""

    accesses: int = Field(default=0, ge=0)
    processes: int = Field(default=0, ge=0)
    sharings: int = Field(default=0, ge=0)
    requests: int = Field(default=0, ge=0)
    start_tick: int = Field(default=10, ge=0)
    spacing: int = Field(default=1, ge=1)


class ScheduledAction(BaseModel):
    tick: int = Field(ge=0)
    action: Literal[
        "access", "process", "request", "revoke_consent", "revoke_authorization"
    ]
    params: dict[str, Any] = Field(default_factory=dict)


class ScenarioConfig(BaseModel):
    name: str = "scenario"
    seed: int = 0
    threat_model: Literal["blue", "red"] = "blue"
    request_window: int = Field(default=45, ge=1)
    latency: int = Field(default=0, ge=0)
    final_tick: int | None = None
    parties: list[PartyConfig] = Field(min_length=1)
    consents: list[ConsentSetup] = Field(default_factory=list)
    authorizations: list[AuthorizationSetup] = Field(default_factory=list)
    workload: Workload = Field(default_factory=Workload)
    schedule: list[ScheduledAction] = Field(default_factory=list)

    @field_validator("schedule")
    @classmethod
    def _schedule_sorted(cls, v: list[ScheduledAction]) -> list[ScheduledAction]:
        ticks = [s.tick for s in v]
        if ticks != sorted(ticks):
            raise ValueError("schedule ticks must be sorted")
        return v

    @model_validator(mode="after")
    def _cross_checks(self) -> "ScenarioConfig":
        ids = [p.id for p in self.parties]
        if len(ids) != len(set(ids)):
            raise ValueError("party ids must be unique")
        roles = {p.id: p.role for p in self.parties}
        if Role.AGENT not in roles.values():
            raise ValueError("scenario needs a traceability agent party")
        for i, c in enumerate(self.consents):
            if c.subject not in roles:
                raise ValueError(f"consents[{i}].subject {c.subject!r} is not a party")
            if roles.get(c.controller) not in (Role.PROVIDER, Role.RECIPIENT):
                raise ValueError(f"consents[{i}].controller {c.controller!r} is not a controller")
        for i, a in enumerate(self.authorizations):
            if roles.get(a.provider) is not Role.PROVIDER:
                raise ValueError(f"authorizations[{i}].provider {a.provider!r} lacks PROVIDER role")
            if roles.get(a.recipient) is not Role.RECIPIENT:
                raise ValueError(
                    f"authorizations[{i}].recipient {a.recipient!r} lacks RECIPIENT role"
                )
            if a.subject not in roles:
                raise ValueError(f"authorizations[{i}].subject {a.subject!r} is not a party")
        return self

    def party(self, role: Role) -> PartyConfig:
        """First party with ``role``; scenarios are small enough for this."""
        for p in self.parties:
            if p.role is role:
                return p
        raise InvalidConfig([("parties", f"no party with role {role.value}")])


def validate_config(raw: dict[str, Any]) -> ScenarioConfig:
    """Parse a raw mapping, converting pydantic errors to INVALID_CONFIG."""
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        problems = [
            (".".join(str(part) for part in err["loc"]) or "<root>", err["msg"])
            for err in exc.errors()
        ]
        raise InvalidConfig(problems) from exc


def load_scenario(path: Path | str) -> ScenarioConfig:
    """Load and validate a YAML/JSON scenario file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise InvalidConfig([(str(path), f"unparseable config: {exc}")]) from exc
    if not isinstance(raw, dict):
        raise InvalidConfig([(str(path), "config root must be a mapping")])
    return validate_config(raw)
