/**
 * The attestation trail view: the subject's entries grouped by the
 * attesting party and attestation kind, each badged with its pairing
 * status from the latest reconciliation report.
 *
 * The view holds no state of its own: flattening it returns exactly the
 * API payload it was built from (see the snapshot tests).
 */

import { AgentClient } from "./api";
import type { Attestation, AttestationKind, ReconciliationReport } from "./types";

export type Badge = "paired" | "unpaired" | "violation" | "single";

export interface TrailEntry {
  attestation: Attestation;
  badge: Badge;
}

export interface TrailGroup {
  party: string;
  kinds: Partial<Record<AttestationKind, TrailEntry[]>>;
}

export interface TrailView {
  subject: string;
  groups: TrailGroup[];
  total: number;
}

/** Badge per attestation id; violation evidence outranks pairing status. */
export function badgeIndex(report: ReconciliationReport | null): Map<string, Badge> {
  const index = new Map<string, Badge>();
  if (!report) return index;
  for (const pair of report.pairs) {
    index.set(pair.left, pair.consistent ? "paired" : "violation");
    index.set(pair.right, pair.consistent ? "paired" : "violation");
  }
  for (const id of report.unpaired) {
    index.set(id, "unpaired");
  }
  for (const violation of report.violations) {
    for (const ref of violation.evidence) {
      if (ref.startsWith("att:")) {
        index.set(ref, "violation");
      }
    }
  }
  return index;
}

export function buildTrail(
  subject: string,
  attestations: Attestation[],
  report: ReconciliationReport | null,
): TrailView {
  const badges = badgeIndex(report);
  const groups: TrailGroup[] = [];
  const byParty = new Map<string, TrailGroup>();
  for (const attestation of attestations) {
    let group = byParty.get(attestation.party);
    if (!group) {
      group = { party: attestation.party, kinds: {} };
      byParty.set(attestation.party, group);
      groups.push(group);
    }
    const entries = (group.kinds[attestation.kind] ??= []);
    entries.push({
      attestation,
      badge: badges.get(attestation.id) ?? "single",
    });
  }
  return { subject, groups, total: attestations.length };
}

/** Inverse of buildTrail's grouping, in original trail order. */
export function flattenTrail(view: TrailView): Attestation[] {
  const out: { attestation: Attestation }[] = [];
  for (const group of view.groups) {
    for (const entries of Object.values(group.kinds)) {
      out.push(...entries);
    }
  }
  return out
    .map((e) => e.attestation)
    .sort((a, b) => (a.timestamp - b.timestamp) || a.id.localeCompare(b.id));
}

/** Fetch the subject's trail plus pairing badges from the agent. */
export async function loadTrail(client: AgentClient): Promise<TrailView> {
  const attestations = await client.attestations({ subject: client.partyId });
  const report = await client.reconciliationReport();
  return buildTrail(client.partyId, attestations, report);
}

const BADGE_STYLE: Record<Badge, string> = {
  paired: "background:#e8f5e9;color:#2e7d32",
  unpaired: "background:#fff3e0;color:#e65100",
  violation: "background:#ffebee;color:#c62828",
  single: "background:#f5f5f5;color:#616161",
};

export function renderBadge(badge: Badge): string {
  return `<span class="badge" style="${BADGE_STYLE[badge]}">${badge}</span>`;
}

export function renderTrail(view: TrailView): string {
  if (view.total === 0) {
    return `<div class="trail empty"><p>No traceability records yet for ${view.subject}.</p></div>`;
  }
  const sections = view.groups
    .map((group) => {
      const kinds = Object.entries(group.kinds)
        .map(([kind, entries]) => {
          const items = (entries ?? [])
            .map(
              (e) =>
                `<li data-id="${e.attestation.id}">tick ${e.attestation.timestamp} ` +
                `<code>${String(e.attestation.payload["action"])}</code> ${renderBadge(e.badge)}</li>`,
            )
            .join("");
          return `<h4>${kind}</h4><ul>${items}</ul>`;
        })
        .join("");
      return `<section class="trail-group" data-party="${group.party}">
  <h3>${group.party}</h3>
  ${kinds}
</section>`;
    })
    .join("\n");
  return `<div class="trail" data-subject="${view.subject}">\n${sections}\n</div>`;
}
