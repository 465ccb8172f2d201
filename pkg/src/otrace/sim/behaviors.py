"""Deviation decisions and content falsification.

Deviation coins are hash-derived from (seed, group, event id) rather than
drawn from a sequential stream, so they are order-independent and two
colluding parties (same ``collude_key``) always deviate on exactly the
same events.
"""

from __future__ import annotations

import random
from typing import Any

from ..concepts import RequestType
from ..sync import EventKind

_CONSENT_ACTIONS = {
    EventKind.CONSENT_REQUEST.value,
    EventKind.CONSENT_ACCEPT.value,
    EventKind.CONSENT_DENY.value,
    EventKind.CONSENT_REVOKE.value,
}
_SHARING_ACTIONS = {EventKind.AUTHORIZE.value, EventKind.AUTHORIZATION_REVOKE.value}
_USE_ACTIONS = {EventKind.DATA_USE.value, EventKind.DATA_ACCESS.value}
_REQUEST_ACTIONS = {
    EventKind.REQUEST_SEND.value,
    EventKind.REQUEST_RECEIVE.value,
    EventKind.REQUEST_COMPLETE.value,
    EventKind.REQUEST_DENY.value,
}


def event_rng(seed: int, group: str, event_key: str) -> random.Random:
    return random.Random(f"{seed}:{group}:{event_key}")


def deviation_coin(seed: int, group: str, event_key: str, rate: float) -> bool:
    """True when the party (or collusion group) deviates on this event."""
    if rate <= 0.0:
        return False
    if rate >= 1.0:
        return True
    return event_rng(seed, group, event_key).random() < rate


def falsify_payload(payload: dict[str, Any], rng: random.Random) -> dict[str, Any]:
    """One canonical content mutation per payload family.

    Consent payloads get a term's purpose swapped for a bogus one; sharing
    payloads a renamed data type; use/access payloads a mutated data field;
    request payloads a flipped request type. The action id is never touched,
    so the falsified entry still claims the same underlying event.
    """
    out = dict(payload)
    action = payload["action"]
    bogus = f"covert.{rng.randrange(1, 1000)}"
    if action in _CONSENT_ACTIONS:
        terms = [list(t) for t in payload["terms"]]
        terms[0] = [terms[0][0], bogus]
        out["terms"] = sorted(terms)
    elif action in _SHARING_ACTIONS:
        data = list(payload["data"])
        data[0] = bogus
        out["data"] = sorted(data)
    elif action in _USE_ACTIONS:
        out["data"] = bogus
    elif action in _REQUEST_ACTIONS:
        others = [t.value for t in RequestType if t.value != payload["type"]]
        out["type"] = others[rng.randrange(len(others))]
    else:  # introduce
        out["trace_service"] = bogus
    return out
