/**
 * Scripted controller for end-to-end runs: polls its rights-request
 * inbox, settles requests, and satisfies its attestation obligations
 * through the same public endpoints a real controller would use.
 */

import { AgentClient } from "../src/api";

export class SimulatedController {
  constructor(readonly client: AgentClient) {}

  /** Submit every outstanding sync obligation as this controller. */
  async fulfilObligations(): Promise<number> {
    let done = 0;
    for (const ob of await this.client.obligations()) {
      await this.client.submitAttestation({
        party: this.client.partyId,
        kind: ob.kind,
        payload: ob.payload,
      });
      done += 1;
    }
    return done;
  }

  /** Receive and complete every unsettled forwarded request. */
  async settleInbox(): Promise<number> {
    let settled = 0;
    const inbox = await this.client.rightsRequests({ controller: this.client.partyId });
    for (const request of inbox) {
      if (request.status === "SENT") {
        await this.client.transitionRightsRequest(request.id, "RECEIVE");
        await this.client.transitionRightsRequest(request.id, "COMPLETE");
        settled += 1;
      } else if (request.status === "RECEIVED") {
        await this.client.transitionRightsRequest(request.id, "COMPLETE");
        settled += 1;
      }
    }
    return settled;
  }

  /** Poll inbox + obligations until nothing is pending or time runs out. */
  async runUntilIdle(timeoutMs = 10_000, intervalMs = 100): Promise<void> {
    const started = Date.now();
    while (Date.now() - started < timeoutMs) {
      const settled = await this.settleInbox();
      const attested = await this.fulfilObligations();
      if (settled === 0 && attested === 0) return;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
