import { describe, expect, it } from "vitest";

import { AgentClient, AgentError } from "../src/api";
import { LEGAL_SUBJECT_ACTIONS, actOnConsent, buildCard, renderCard } from "../src/consentCard";
import type { ConsentStatus, ConsentView } from "../src/types";

function consent(status: ConsentStatus): ConsentView {
  return {
    id: "moneyapp.consent-1",
    controller: "moneyapp",
    subject: "alice",
    terms: [["financial.txn", "insights"]],
    expiry: 100,
    status,
    allowed_actions: LEGAL_SUBJECT_ACTIONS[status],
  };
}

const ALL_STATUSES: ConsentStatus[] = ["REQUESTED", "ACCEPTED", "DENIED", "REVOKED", "EXPIRED"];

describe("consent cards", () => {
  it("offers exactly the legal transitions for every status", () => {
    const expected: Record<ConsentStatus, string[]> = {
      REQUESTED: ["ACCEPT", "DENY"],
      ACCEPTED: ["REVOKE"],
      DENIED: [],
      REVOKED: [],
      EXPIRED: [],
    };
    for (const status of ALL_STATUSES) {
      const card = buildCard(consent(status));
      expect(card.offeredActions, status).toEqual(expected[status]);
    }
  });

  it("renders one button per offered action and none on terminal cards", () => {
    const requested = renderCard(buildCard(consent("REQUESTED")));
    expect(requested).toContain('data-action="ACCEPT"');
    expect(requested).toContain('data-action="DENY"');
    expect(requested).not.toContain('data-action="REVOKE"');
    for (const status of ["DENIED", "REVOKED", "EXPIRED"] as ConsentStatus[]) {
      expect(renderCard(buildCard(consent(status)))).not.toContain("<button");
    }
  });

  it("refuses actions the card does not offer", async () => {
    const card = buildCard(consent("REVOKED"));
    await expect(
      actOnConsent(new AgentClient("http://unused", "alice"), card, "REVOKE"),
    ).rejects.toThrow(/not offered/);
  });

  it("relays an accept and re-renders with the new status", async () => {
    const client = {
      actOnConsent: async () => ({ ...consent("ACCEPTED"), allowed_actions: ["REVOKE"] }),
    } as unknown as AgentClient;
    const updated = await actOnConsent(client, buildCard(consent("REQUESTED")), "ACCEPT");
    expect(updated.consent.status).toBe("ACCEPTED");
    expect(updated.offeredActions).toEqual(["REVOKE"]);
  });

  it("refreshes to server truth when losing a race with expiry", async () => {
    const client = {
      actOnConsent: async () => {
        throw new AgentError("ILLEGAL_TRANSITION", "REVOKE from EXPIRED", 409);
      },
      consents: async () => [consent("EXPIRED")],
    } as unknown as AgentClient;
    const updated = await actOnConsent(client, buildCard(consent("ACCEPTED")), "REVOKE");
    expect(updated.consent.status).toBe("EXPIRED");
    expect(updated.offeredActions).toEqual([]);
    expect(updated.notice).toMatch(/ILLEGAL_TRANSITION/);
  });
});
