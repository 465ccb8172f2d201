/**
 * Canonical JSON, matching the agent's serialization: keys sorted at
 * every level, compact separators, base-10 integers. Payloads in this
 * protocol are ASCII, so JSON.stringify's string escaping agrees with
 * the server's.
 */

export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const record = value as Record<string, unknown>;
  const keys = Object.keys(record).sort();
  return "{" + keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(record[k])).join(",") + "}";
}
