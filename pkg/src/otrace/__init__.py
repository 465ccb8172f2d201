"""Reference implementation of the OTrace data-traceability protocol."""

from .concepts import (
    Authorization,
    Basis,
    BasisKind,
    Consent,
    ConsentAction,
    ConsentStatus,
    DataUse,
    Introduction,
    Operation,
    Party,
    RequestAction,
    RequestStatus,
    RequestType,
    RightsRequest,
    Role,
    Term,
)
from .reconcile import (
    GuaranteeClass,
    ReconciliationReport,
    ThreatModel,
    Violation,
    ViolationKind,
    classify_guarantee,
    pair_attestations,
    reconcile,
)
from .store import AttestationLog
from .sync import (
    ActionEvent,
    Attestation,
    AttestationKind,
    EventKind,
    derive_attestations,
    up_to_date_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "Party",
    "Role",
    "Term",
    "Consent",
    "ConsentStatus",
    "ConsentAction",
    "Authorization",
    "Introduction",
    "Basis",
    "BasisKind",
    "DataUse",
    "Operation",
    "RightsRequest",
    "RequestType",
    "RequestStatus",
    "RequestAction",
    "ActionEvent",
    "Attestation",
    "AttestationKind",
    "EventKind",
    "derive_attestations",
    "up_to_date_certificate",
    "AttestationLog",
    "ThreatModel",
    "GuaranteeClass",
    "classify_guarantee",
    "pair_attestations",
    "reconcile",
    "ReconciliationReport",
    "Violation",
    "ViolationKind",
    "__version__",
]
