/**
 * Wire types for the traceability agent's HTTP API.
 *
 * These mirror the service's response models one-to-one; the dashboard
 * never invents state of its own, so everything rendered is reproducible
 * from values of these shapes.
 */

export type Role = "CONSUMER" | "PROVIDER" | "RECIPIENT" | "AGENT";

export type AttestationKind =
  | "CONSENT"
  | "SHARING"
  | "ACCESS"
  | "PROCESS"
  | "REQUEST"
  | "INTRODUCTION";

export type ConsentStatus = "REQUESTED" | "ACCEPTED" | "DENIED" | "REVOKED" | "EXPIRED";

export type ConsentAction = "ACCEPT" | "DENY" | "REVOKE";

export type RequestType = "ACCESS" | "CORRECT" | "DELETE" | "OPTOUT";

export type RequestStatus = "SENT" | "RECEIVED" | "COMPLETED" | "DENIED";

export interface Attestation {
  id: string;
  party: string;
  kind: AttestationKind;
  payload: Record<string, unknown>;
  content_digest: string;
  timestamp: number;
}

export interface IntroductionView {
  id: string;
  subject: string;
  controller: string;
  trace_service: string;
}

export interface ConsentView {
  id: string;
  controller: string;
  subject: string;
  terms: [string, string][];
  expiry: number;
  status: ConsentStatus;
  allowed_actions: ConsentAction[];
}

export interface RightsRequestView {
  id: string;
  subject: string;
  controller: string;
  type: RequestType;
  status: RequestStatus;
  forwarded_at: number;
  deadline: number;
}

export interface ViolationView {
  kind: string;
  stream: AttestationKind;
  subject: string;
  responsible: string[];
  evidence: string[];
  tick: number;
}

export interface PairView {
  key: string;
  kind: AttestationKind;
  left: string;
  right: string;
  consistent: boolean;
}

export interface ReviewView {
  note: string;
  attestation_ids: string[];
  action_id: string;
}

export interface ReconciliationReport {
  model: "blue" | "red";
  now: number;
  violations: ViolationView[];
  streams: Record<string, string>;
  counters: Record<string, number>;
  pairs: PairView[];
  unpaired: string[];
  review: ReviewView[];
}

export interface Obligation {
  kind: AttestationKind;
  payload: Record<string, unknown>;
}

export interface ApiErrorBody {
  error: { code: string; detail: string };
}
