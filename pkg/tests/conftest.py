from __future__ import annotations

import pytest

from otrace.concepts import Party, Role
from otrace.sim import ScenarioConfig


@pytest.fixture
def alice() -> Party:
    return Party("alice", Role.CONSUMER)


@pytest.fixture
def firstbank() -> Party:
    return Party("firstbank", Role.PROVIDER)


@pytest.fixture
def moneyapp() -> Party:
    return Party("moneyapp", Role.RECIPIENT)


@pytest.fixture
def agent1() -> Party:
    return Party("agent1", Role.AGENT)


def scenario(overrides: dict[str, dict] | None = None, **kw) -> ScenarioConfig:
    """Open-banking base scenario: alice, firstbank, moneyapp, agent1."""
    raw = {
        "seed": 0,
        "parties": [
            {"id": "alice", "role": "CONSUMER"},
            {"id": "firstbank", "role": "PROVIDER"},
            {"id": "moneyapp", "role": "RECIPIENT"},
            {"id": "agent1", "role": "AGENT"},
        ],
        "consents": [
            {
                "controller": "moneyapp",
                "subject": "alice",
                "terms": [["financial.txn", "insights"]],
                "expiry": 100000,
            }
        ],
        "authorizations": [
            {
                "subject": "alice",
                "provider": "firstbank",
                "recipient": "moneyapp",
                "data": ["financial.txn"],
                "expiration": 100000,
            }
        ],
    }
    if overrides:
        for p in raw["parties"]:
            if p["id"] in overrides:
                p.update(overrides[p["id"]])
    raw.update(kw)
    return ScenarioConfig.model_validate(raw)
