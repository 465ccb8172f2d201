/**
 * Consent cards: one per consent agreement, offering exactly the actions
 * the lifecycle state machine allows the subject to take right now.
 */

import { AgentClient, AgentError } from "./api";
import type { ConsentAction, ConsentStatus, ConsentView } from "./types";

/** Subject-side transitions per status; EXPIRE is background, never offered. */
export const LEGAL_SUBJECT_ACTIONS: Record<ConsentStatus, ConsentAction[]> = {
  REQUESTED: ["ACCEPT", "DENY"],
  ACCEPTED: ["REVOKE"],
  DENIED: [],
  REVOKED: [],
  EXPIRED: [],
};

export interface ConsentCard {
  consent: ConsentView;
  offeredActions: ConsentAction[];
  /** set when the server rejected an action and the card was refreshed */
  notice?: string;
}

export function buildCard(consent: ConsentView, notice?: string): ConsentCard {
  return {
    consent,
    offeredActions: [...LEGAL_SUBJECT_ACTIONS[consent.status]],
    ...(notice !== undefined ? { notice } : {}),
  };
}

/**
 * Relay one lifecycle action through the agent. On a server rejection
 * (e.g. losing a race with expiry) the card is refreshed to server truth
 * instead of keeping an optimistic state.
 */
export async function actOnConsent(
  client: AgentClient,
  card: ConsentCard,
  action: ConsentAction,
): Promise<ConsentCard> {
  if (!card.offeredActions.includes(action)) {
    throw new Error(`${action} is not offered for status ${card.consent.status}`);
  }
  try {
    const updated = await client.actOnConsent(card.consent.id, action);
    return buildCard(updated);
  } catch (err) {
    if (err instanceof AgentError) {
      const consents = await client.consents({ subject: card.consent.subject });
      const fresh = consents.find((c) => c.id === card.consent.id);
      if (fresh) {
        return buildCard(fresh, `${action.toLowerCase()} rejected: ${err.code}`);
      }
    }
    throw err;
  }
}

export function statusBadge(status: ConsentStatus): string {
  const styles: Record<ConsentStatus, string> = {
    REQUESTED: "background:#fff3e0;color:#e65100",
    ACCEPTED: "background:#e8f5e9;color:#2e7d32",
    DENIED: "background:#ffebee;color:#c62828",
    REVOKED: "background:#ffebee;color:#c62828",
    EXPIRED: "background:#f5f5f5;color:#616161",
  };
  return `<span class="status" style="${styles[status]}">${status}</span>`;
}

export function renderCard(card: ConsentCard): string {
  const c = card.consent;
  const terms = c.terms
    .map(([data, purpose]) => `<li><code>${data}</code> for <code>${purpose}</code></li>`)
    .join("");
  const buttons = card.offeredActions
    .map((a) => `<button data-consent="${c.id}" data-action="${a}">${a.toLowerCase()}</button>`)
    .join(" ");
  const notice = card.notice ? `<p class="notice">${card.notice}</p>` : "";
  return `<div class="consent-card" data-id="${c.id}">
  <header>${c.controller} ${statusBadge(c.status)}</header>
  <ul>${terms}</ul>
  <p>expires at tick ${c.expiry}</p>
  ${notice}
  <footer>${buttons}</footer>
</div>`;
}
