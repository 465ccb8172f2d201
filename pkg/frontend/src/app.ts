/**
 * Browser entry point: stub login, trail, consent cards, rights requests.
 * Pull model: a refresh button plus polling for in-flight request chips.
 */

import { AgentClient } from "./api";
import { actOnConsent, buildCard, renderCard, type ConsentCard } from "./consentCard";
import { chipFor, renderChip, submitRequest } from "./requests";
import { loadTrail, renderTrail } from "./trail";
import type { RequestType } from "./types";

const POLL_MS = 2000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class Dashboard {
  private client: AgentClient | null = null;
  private cards = new Map<string, ConsentCard>();
  private requestIds: string[] = [];
  private timer: number | undefined;

  async login(baseUrl: string, subject: string): Promise<void> {
    this.client = new AgentClient(baseUrl, subject);
    await this.client.healthz();
    el("session").textContent = `signed in as ${subject}`;
    this.timer ??= window.setInterval(() => void this.pollRequests(), POLL_MS);
    await this.refresh();
  }

  private need(): AgentClient {
    if (!this.client) throw new Error("not signed in");
    return this.client;
  }

  async refresh(): Promise<void> {
    const client = this.need();
    const trail = await loadTrail(client);
    el("trail").innerHTML = renderTrail(trail);

    const consents = await client.consents({ subject: client.partyId });
    this.cards.clear();
    for (const consent of consents) {
      this.cards.set(consent.id, buildCard(consent));
    }
    this.renderCards();
    await this.pollRequests();
  }

  private renderCards(): void {
    el("consents").innerHTML = [...this.cards.values()].map(renderCard).join("\n");
    for (const button of el("consents").querySelectorAll("button")) {
      button.addEventListener("click", () => {
        const id = button.dataset["consent"]!;
        const action = button.dataset["action"]! as "ACCEPT" | "DENY" | "REVOKE";
        void this.onConsentAction(id, action);
      });
    }
  }

  private async onConsentAction(id: string, action: "ACCEPT" | "DENY" | "REVOKE"): Promise<void> {
    const card = this.cards.get(id);
    if (!card) return;
    const updated = await actOnConsent(this.need(), card, action);
    this.cards.set(id, updated);
    this.renderCards();
  }

  async fileRequest(controller: string, type: RequestType): Promise<void> {
    const result = await submitRequest(this.need(), controller, type);
    if (result.error) {
      el("request-error").textContent = result.error;
      return;
    }
    el("request-error").textContent = "";
    this.requestIds.push(result.request!.id);
    await this.pollRequests();
  }

  private async pollRequests(): Promise<void> {
    if (!this.client) return;
    const report = await this.client.reconciliationReport();
    const chips: string[] = [];
    for (const id of this.requestIds) {
      const view = await this.client.rightsRequest(id);
      chips.push(renderChip(chipFor(view, report)));
    }
    el("requests").innerHTML = chips.join(" ");
  }
}

const dashboard = new Dashboard();

window.addEventListener("DOMContentLoaded", () => {
  el("login").addEventListener("click", () => {
    const base = el<HTMLInputElement>("agent-url").value || "http://127.0.0.1:8000";
    const subject = el<HTMLInputElement>("subject-id").value;
    void dashboard.login(base, subject).catch((err) => {
      el("session").textContent = String(err);
    });
  });
  el("refresh").addEventListener("click", () => void dashboard.refresh());
  el("file-request").addEventListener("click", () => {
    const controller = el<HTMLInputElement>("request-controller").value;
    const type = el<HTMLSelectElement>("request-type").value as RequestType;
    void dashboard.fileRequest(controller, type);
  });
});
