"""Detection metrics: how much of the injected deviation set a report found.

A violation matches a deviation when its evidence cites one of the
deviation's markers (event or request ids); when several deviations share
a marker (colluding parties on the same event), responsibility breaks the
tie. Rates:

  detection_rate      = |detected AND injected| / |injected|
  false_positive_rate = |detected \\ injected| / |detected|   (0/0 -> 0)

computed per attestation kind and overall.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..reconcile import ReconciliationReport, Violation
from .runner import Deviation


@dataclass(frozen=True)
class KindMetrics:
    injected: int
    detected: int
    matched: int
    detection_rate: float
    false_positive_rate: float

    def to_dict(self) -> dict[str, float | int]:
        return {
            "injected": self.injected,
            "detected": self.detected,
            "matched": self.matched,
            "detection_rate": self.detection_rate,
            "false_positive_rate": self.false_positive_rate,
        }


def _rate(numer: int, denom: int) -> float:
    return 0.0 if denom == 0 else numer / denom


def match_violations(
    violations: list[Violation], injected: list[Deviation]
) -> tuple[dict[int, int], list[int]]:
    """Greedy 1:1 matching violation->deviation on evidence markers.

    Returns (violation index -> deviation index, unmatched violation indexes).
    """
    matched_dev: set[int] = set()
    mapping: dict[int, int] = {}
    unmatched: list[int] = []
    for vi, v in enumerate(violations):
        evidence = set(v.evidence)
        candidates = [
            di
            for di, d in enumerate(injected)
            if di not in matched_dev and evidence & d.markers
        ]
        preferred = [di for di in candidates if injected[di].party in v.responsible]
        pick = (preferred or candidates)[:1]
        if pick:
            mapping[vi] = pick[0]
            matched_dev.add(pick[0])
        else:
            unmatched.append(vi)
    return mapping, unmatched


def detection_metrics(
    report: ReconciliationReport, injected: list[Deviation]
) -> dict[str, KindMetrics]:
    """Per-attestation-kind recall and false-positive rates for one run."""
    mapping, unmatched = match_violations(report.violations, injected)

    kinds = sorted(
        {d.attestation_kind for d in injected} | {v.stream for v in report.violations},
        key=lambda k: k.value,
    )
    out: dict[str, KindMetrics] = {}
    for kind in kinds:
        injected_k = [i for i, d in enumerate(injected) if d.attestation_kind is kind]
        detected_k = [i for i, v in enumerate(report.violations) if v.stream is kind]
        matched_devs_k = [di for di in mapping.values() if injected[di].attestation_kind is kind]
        false_k = [vi for vi in unmatched if report.violations[vi].stream is kind]
        out[kind.value] = KindMetrics(
            injected=len(injected_k),
            detected=len(detected_k),
            matched=len(matched_devs_k),
            detection_rate=_rate(len(matched_devs_k), len(injected_k)),
            false_positive_rate=_rate(len(false_k), len(detected_k)),
        )
    out["overall"] = KindMetrics(
        injected=len(injected),
        detected=len(report.violations),
        matched=len(mapping),
        detection_rate=_rate(len(mapping), len(injected)),
        false_positive_rate=_rate(len(unmatched), len(report.violations)),
    )
    return out


def metrics_table(metrics: dict[str, KindMetrics]) -> str:
    """Flat tab-separated table, one row per attestation kind."""
    lines = ["kind\tinjected\tdetected\tmatched\tdetection_rate\tfalse_positive_rate"]
    for kind in sorted(metrics):
        m = metrics[kind]
        lines.append(
            f"{kind}\t{m.injected}\t{m.detected}\t{m.matched}"
            f"\t{m.detection_rate:.6f}\t{m.false_positive_rate:.6f}"
        )
    return "\n".join(lines) + "\n"
