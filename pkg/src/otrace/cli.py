"""Operator command line: run scenarios, verify logs, print the matrix, serve.

Exit codes: 0 = success / no violations, 2 = violations found,
1 = usage, config or parse error. Every command is a thin shell over the
library; results are identical to calling the modules directly.
"""

from __future__ import annotations

import socket
import sys
from pathlib import Path

import click

from .canon import canonical_text, parse_canonical
from .errors import OTraceError
from .reconcile import (
    GUARANTEE_MATRIX,
    MATRIX_KINDS,
    ReconciliationReport,
    ThreatModel,
    Violation,
    ViolationKind,
    reconcile,
)
from .concepts import Role
from .records import authorization_from_record, consent_from_record
from .sim import detection_metrics, load_scenario, run_scenario
from .sim.metrics import metrics_table
from .store import read_log_lenient


@click.group()
def main() -> None:
    """Traceability protocol tools."""


def _echo_report(report: ReconciliationReport, fmt: str) -> None:
    if fmt == "structured":
        click.echo(canonical_text(report.to_dict()))
    else:
        click.echo(report.summary_text(), nl=False)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option(
    "--format", "fmt", type=click.Choice(["text", "structured"]), default="text",
    help="stdout format (default text)",
)
def run(scenario: Path, out_dir: Path, seed: int | None, fmt: str) -> None:
    """Run a scenario config; write logs, reports and metrics to --out."""
    try:
        config = load_scenario(scenario)
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
        result = run_scenario(config)
    except OTraceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    paths = result.write_outputs(out_dir)
    metrics = detection_metrics(result.report, result.injected)
    metrics_path = out_dir / "metrics.tsv"
    metrics_path.write_text(metrics_table(metrics), encoding="utf-8")
    _echo_report(result.report, fmt)
    click.echo(f"report: {paths['report']}", err=True)
    sys.exit(2 if result.report.violations else 0)


@main.command()
@click.argument("log_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--consents", "consents_path", required=True, type=click.Path(path_type=Path))
@click.option("--auths", "auths_path", required=True, type=click.Path(path_type=Path))
@click.option("--model", type=click.Choice(["blue", "red"]), default="blue")
@click.option("--now", type=int, default=None, help="reconciliation horizon tick")
@click.option("--out", "report_path", type=click.Path(path_type=Path), default=None)
@click.option("--format", "fmt", type=click.Choice(["text", "structured"]), default="text")
def verify(
    log_path: Path,
    consents_path: Path,
    auths_path: Path,
    model: str,
    now: int | None,
    report_path: Path | None,
    fmt: str,
) -> None:
    """Offline audit: reconcile a log file against consent/authorization registries."""
    try:
        entries, tampered = read_log_lenient(log_path)
        consents = [
            consent_from_record(r)
            for r in parse_canonical(consents_path.read_text(encoding="utf-8"))
        ]
        auths = [
            authorization_from_record(r)
            for r in parse_canonical(auths_path.read_text(encoding="utf-8"))
        ]
    except OTraceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:  # unreadable / truncated / malformed inputs
        click.echo(f"error: cannot parse inputs: {exc}", err=True)
        sys.exit(1)
    report = reconcile(entries, consents, auths, ThreatModel.from_label(model), now=now)
    for att in tampered:
        # stored digest does not match the stored payload: the line was altered
        report.violations.insert(
            0,
            Violation(
                kind=ViolationKind.CONTENT_MISMATCH,
                stream=att.kind,
                subject=att.subject,
                responsible=(att.party,),
                evidence=(att.id,),
                tick=att.timestamp,
            ),
        )
        report.counters[ViolationKind.CONTENT_MISMATCH] += 1
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(canonical_text(report.to_dict()) + "\n", encoding="utf-8")
    _echo_report(report, fmt)
    sys.exit(2 if report.violations else 0)


@main.command()
@click.argument("model", type=click.Choice(["blue", "red"]))
@click.option("--format", "fmt", type=click.Choice(["text", "structured"]), default="text")
def matrix(model: str, fmt: str) -> None:
    """Print the completeness guarantee matrix for a threat model."""
    if fmt == "structured":
        cells = {
            f"{kind.value}/{role.value}": GUARANTEE_MATRIX[(kind, role, model)].value
            for kind in MATRIX_KINDS
            for role in (Role.PROVIDER, Role.RECIPIENT)
        }
        click.echo(canonical_text({"model": model, "cells": cells}))
        return
    width = max(len(k.value) for k in MATRIX_KINDS) + 4
    width = max(width, len("attestation") + 2)
    click.echo(f"completeness guarantees ({model} model)")
    click.echo(f"{'attestation':<{width}}{'provider':<22}recipient")
    for kind in MATRIX_KINDS:
        provider = GUARANTEE_MATRIX[(kind, Role.PROVIDER, model)].value
        recipient = GUARANTEE_MATRIX[(kind, Role.RECIPIENT, model)].value
        click.echo(f"{kind.value.lower():<{width}}{provider:<22}{recipient}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--store",
    "store_dir",
    envvar="OTRACE_STORE",
    type=click.Path(path_type=Path),
    default=None,
    help="store directory (env OTRACE_STORE); omit for in-memory",
)
@click.option("--window", type=int, default=45, show_default=True, help="rights-request deadline window")
@click.option("--agent-id", default="agent", show_default=True)
@click.option("--model", type=click.Choice(["blue", "red"]), default="blue", show_default=True)
def serve(
    port: int, host: str, store_dir: Path | None, window: int, agent_id: str, model: str
) -> None:
    """Run the traceability agent service."""
    import uvicorn

    from .service import create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        click.echo(f"error: cannot bind {host}:{port}: {exc}", err=True)
        sys.exit(1)
    finally:
        probe.close()

    app = create_app(
        store_dir=store_dir, agent_id=agent_id, request_window=window, threat_model=model
    )
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        app.state.agent.close()  # flush the store on shutdown


if __name__ == "__main__":
    main()
