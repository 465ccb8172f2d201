/**
 * Typed client for the traceability agent.
 *
 * The session is simulation-grade: a logged-in subject id carried in the
 * X-Party-Id header on every call (the agent trusts transport identity).
 */

import type {
  ApiErrorBody,
  Attestation,
  AttestationKind,
  ConsentAction,
  ConsentView,
  IntroductionView,
  Obligation,
  ReconciliationReport,
  RequestType,
  RightsRequestView,
  Role,
} from "./types";

export class AgentError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class AgentClient {
  constructor(
    readonly baseUrl: string,
    readonly partyId: string,
  ) {}

  /** "Log in" as another party (stub session; used by test harnesses). */
  as(partyId: string): AgentClient {
    return new AgentClient(this.baseUrl, partyId);
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: {
        "X-Party-Id": this.partyId,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let code = `HTTP_${response.status}`;
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as ApiErrorBody;
        if (parsed.error) {
          code = parsed.error.code;
          detail = parsed.error.detail;
        }
      } catch {
        // non-JSON error body; keep the HTTP status
      }
      throw new AgentError(code, detail, response.status);
    }
    return (await response.json()) as T;
  }

  private query(params: Record<string, string | number | undefined>): string {
    const entries = Object.entries(params).filter(([, v]) => v !== undefined);
    if (!entries.length) return "";
    const search = new URLSearchParams(
      entries.map(([k, v]) => [k, String(v)] as [string, string]),
    );
    return "?" + search.toString();
  }

  registerParty(id: string, role: Role): Promise<{ id: string; role: Role }> {
    return this.call("POST", "/parties", { id, role });
  }

  introduce(controller: string): Promise<IntroductionView> {
    return this.call("POST", "/introductions", { subject: this.partyId, controller });
  }

  introductions(subject?: string): Promise<IntroductionView[]> {
    return this.call("GET", "/introductions" + this.query({ subject }));
  }

  attestations(filter: {
    subject?: string;
    party?: string;
    kind?: AttestationKind;
    from?: number;
    to?: number;
  } = {}): Promise<Attestation[]> {
    return this.call("GET", "/attestations" + this.query(filter));
  }

  submitAttestation(body: {
    party: string;
    kind: AttestationKind;
    payload: Record<string, unknown>;
    content_digest?: string;
  }): Promise<{ id: string; timestamp: number }> {
    return this.call("POST", "/attestations", body);
  }

  obligations(): Promise<Obligation[]> {
    return this.call("GET", "/obligations");
  }

  openConsent(subject: string, terms: [string, string][], expiry: number): Promise<ConsentView> {
    return this.call("POST", "/consents", { subject, terms, expiry });
  }

  consents(filter: { subject?: string; controller?: string } = {}): Promise<ConsentView[]> {
    return this.call("GET", "/consents" + this.query(filter));
  }

  actOnConsent(consentId: string, action: ConsentAction): Promise<ConsentView> {
    return this.call("POST", `/consents/${encodeURIComponent(consentId)}/actions`, { action });
  }

  submitRightsRequest(controller: string, type: RequestType): Promise<RightsRequestView> {
    return this.call("POST", "/rights-requests", { controller, type });
  }

  rightsRequest(id: string): Promise<RightsRequestView> {
    return this.call("GET", `/rights-requests/${encodeURIComponent(id)}`);
  }

  rightsRequests(filter: { controller?: string; subject?: string } = {}): Promise<
    RightsRequestView[]
  > {
    return this.call("GET", "/rights-requests" + this.query(filter));
  }

  transitionRightsRequest(
    id: string,
    action: "RECEIVE" | "COMPLETE" | "DENY",
  ): Promise<RightsRequestView> {
    return this.call("POST", `/rights-requests/${encodeURIComponent(id)}/transition`, { action });
  }

  reconciliationReport(): Promise<ReconciliationReport> {
    return this.call("GET", "/reports/reconciliation");
  }

  clock(): Promise<{ tick: number }> {
    return this.call("GET", "/clock");
  }

  healthz(): Promise<{ status: string }> {
    return this.call("GET", "/healthz");
  }
}
