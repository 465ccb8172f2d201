/**
 * Rights-request submission and the status chip that tracks it by
 * polling the agent (pull model; the agent pushes nothing).
 */

import { AgentClient, AgentError } from "./api";
import type { ReconciliationReport, RequestStatus, RequestType, RightsRequestView } from "./types";

export interface RequestChip {
  id: string;
  controller: string;
  type: RequestType;
  status: RequestStatus;
  overdue: boolean;
}

export interface SubmitResult {
  request?: RightsRequestView;
  error?: string;
}

/**
 * File a rights request with a controller from the subject's
 * introductions. Unknown controllers surface inline instead of throwing.
 */
export async function submitRequest(
  client: AgentClient,
  controller: string,
  type: RequestType,
): Promise<SubmitResult> {
  const intros = await client.introductions(client.partyId);
  if (!intros.some((i) => i.controller === controller)) {
    return { error: `${controller} is not among your introductions` };
  }
  try {
    return { request: await client.submitRightsRequest(controller, type) };
  } catch (err) {
    if (err instanceof AgentError) {
      return { error: `${err.code}: ${err.detail}` };
    }
    throw err;
  }
}

/** Chip state for one request; overdue comes from the reconciliation report. */
export function chipFor(
  request: RightsRequestView,
  report: ReconciliationReport | null,
): RequestChip {
  const overdue =
    report !== null &&
    report.violations.some(
      (v) => v.kind === "UNFULFILLED_REQUEST" && v.evidence.includes(request.id),
    );
  return {
    id: request.id,
    controller: request.controller,
    type: request.type,
    status: request.status,
    overdue,
  };
}

const SETTLED: RequestStatus[] = ["COMPLETED", "DENIED"];

/**
 * Poll the request until the controller settles it (or the deadline for
 * waiting passes). Returns the last view seen.
 */
export async function trackUntilSettled(
  client: AgentClient,
  id: string,
  opts: { intervalMs?: number; timeoutMs?: number } = {},
): Promise<RightsRequestView> {
  const interval = opts.intervalMs ?? 200;
  const timeout = opts.timeoutMs ?? 15_000;
  const started = Date.now();
  let view = await client.rightsRequest(id);
  while (!SETTLED.includes(view.status) && Date.now() - started < timeout) {
    await new Promise((resolve) => setTimeout(resolve, interval));
    view = await client.rightsRequest(id);
  }
  return view;
}

const CHIP_STYLE: Record<RequestStatus, string> = {
  SENT: "background:#e3f2fd;color:#1565c0",
  RECEIVED: "background:#fff3e0;color:#e65100",
  COMPLETED: "background:#e8f5e9;color:#2e7d32",
  DENIED: "background:#ffebee;color:#c62828",
};

export function renderChip(chip: RequestChip): string {
  const warning = chip.overdue ? ` <span class="warn">unfulfilled past deadline</span>` : "";
  return (
    `<span class="chip" data-id="${chip.id}" style="${CHIP_STYLE[chip.status]}">` +
    `${chip.type} @ ${chip.controller}: ${chip.status}</span>${warning}`
  );
}
