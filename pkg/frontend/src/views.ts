/**
 * View models and HTML rendering for the operator console.
 *
 * Pure functions: server responses in, view structures and markup out.
 * The queue mirrors the server's FIFO order (no client-side
 * reordering), every lineage node is rendered including failed and
 * superseded versions, and records with incomplete provenance are
 * visually flagged rather than hidden.
 */

import type {
  LineageChain,
  MemoryRecord,
  Provenance,
  QueueEntry,
} from "./api.js";

export interface QueueEntryView {
  candidateId: string;
  shortId: string;
  kind: string;
  resourceId: string;
  draftedBy: string;
  payloadPreview: string;
  evidenceSummaries: string[];
  ageLabel: string;
}

export interface QueueView {
  entries: QueueEntryView[];
  empty: boolean;
}

export interface LineageNodeView {
  id: string;
  shortId: string;
  status: string;
  decidedAt: string;
  supersedes: string | null;
  brokenEdge: boolean;
}

export interface LineageView {
  resourceId: string;
  nodes: LineageNodeView[];
}

export interface DecisionValidation {
  ok: boolean;
  problem?: string;
}

const PREVIEW_LIMIT = 120;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function payloadPreview(payload: Record<string, unknown>): string {
  const keys = Object.keys(payload).sort();
  const compact = JSON.stringify(
    Object.fromEntries(keys.map((key) => [key, payload[key]])),
  );
  if (compact.length <= PREVIEW_LIMIT) {
    return compact;
  }
  return `${compact.slice(0, PREVIEW_LIMIT - 3)}...`;
}

export function ageLabel(ageSeconds: number): string {
  if (ageSeconds < 60) {
    return `${Math.max(0, Math.floor(ageSeconds))}s`;
  }
  if (ageSeconds < 3600) {
    return `${Math.floor(ageSeconds / 60)}m`;
  }
  if (ageSeconds < 86400) {
    return `${Math.floor(ageSeconds / 3600)}h`;
  }
  return `${Math.floor(ageSeconds / 86400)}d`;
}

export function buildQueueView(entries: QueueEntry[]): QueueView {
  return {
    empty: entries.length === 0,
    entries: entries.map((entry) => ({
      candidateId: entry.candidate_id,
      shortId: entry.candidate_id.slice(0, 12),
      kind: entry.kind,
      resourceId: entry.resource_id,
      draftedBy: entry.drafted_by,
      payloadPreview: payloadPreview(entry.payload),
      evidenceSummaries: entry.evidence.map(
        (ref) => ref.summary ?? ref.note ?? ref.value,
      ),
      ageLabel: ageLabel(entry.age_seconds),
    })),
  };
}

/**
 * Rationale discipline: negative outcomes must say why. Ratification
 * may omit the note.
 */
export function validateDecision(
  outcome: string,
  note: string,
): DecisionValidation {
  if (outcome === "rejected" || outcome === "abstained") {
    if (!note.trim()) {
      return {
        ok: false,
        problem: `a rationale note is required to ${outcome.replace(/d$/, "")} a candidate`,
      };
    }
  }
  return { ok: true };
}

export function buildLineageView(chain: LineageChain): LineageView {
  const known = new Set(chain.versions.map((version) => version.id));
  return {
    resourceId: chain.resource_id,
    nodes: chain.versions.map((version) => {
      const supersedes = version.supersedes ?? null;
      return {
        id: version.id,
        shortId: version.id.slice(0, 12),
        status: version.status,
        decidedAt: version.decided_at ?? "-",
        supersedes,
        brokenEdge: supersedes !== null && !known.has(supersedes),
      };
    }),
  };
}

export function provenanceComplete(provenance: Provenance): boolean {
  return Boolean(
    provenance.drafted_by &&
      provenance.evidence.length > 0 &&
      provenance.ratified_by &&
      provenance.regime &&
      provenance.decided_at,
  );
}

export function provenanceBadge(record: MemoryRecord): string {
  return provenanceComplete(record.provenance)
    ? ""
    : '<span class="flag-incomplete">incomplete provenance</span>';
}

export function renderQueueHtml(view: QueueView): string {
  if (view.empty) {
    return '<div class="empty-state">no pending candidates</div>';
  }
  const items = view.entries
    .map((entry) => {
      const evidence = entry.evidenceSummaries.length
        ? entry.evidenceSummaries
            .map((summary) => `<li>${escapeHtml(summary)}</li>`)
            .join("")
        : '<li class="flag-incomplete">no evidence attached</li>';
      return [
        `<li class="queue-entry" data-candidate-id="${escapeHtml(entry.candidateId)}">`,
        `<span class="entry-id">${escapeHtml(entry.shortId)}</span>`,
        `<span class="entry-kind">${escapeHtml(entry.kind)}</span>`,
        `<span class="entry-resource">${escapeHtml(entry.resourceId)}</span>`,
        `<span class="entry-age">waiting ${escapeHtml(entry.ageLabel)}</span>`,
        `<div class="entry-author">drafted by ${escapeHtml(entry.draftedBy)}</div>`,
        `<pre class="entry-payload">${escapeHtml(entry.payloadPreview)}</pre>`,
        `<ul class="entry-evidence">${evidence}</ul>`,
        '<div class="entry-actions">',
        `<button data-outcome="ratified" data-id="${escapeHtml(entry.candidateId)}">ratify</button>`,
        `<button data-outcome="rejected" data-id="${escapeHtml(entry.candidateId)}">reject</button>`,
        `<button data-outcome="abstained" data-id="${escapeHtml(entry.candidateId)}">abstain</button>`,
        "</div>",
        "</li>",
      ].join("");
    })
    .join("");
  return `<ul class="queue-list">${items}</ul>`;
}

export function renderLineageHtml(view: LineageView): string {
  const nodes = view.nodes
    .map((node) => {
      const edge =
        node.supersedes === null
          ? ""
          : node.brokenEdge
            ? `<div class="edge broken">supersedes ${escapeHtml(
                node.supersedes.slice(0, 12),
              )} [broken edge: ancestor missing]</div>`
            : `<div class="edge">supersedes ${escapeHtml(node.supersedes.slice(0, 12))}</div>`;
      return [
        `<li class="lineage-node status-${escapeHtml(node.status)}">`,
        `<span class="node-id">${escapeHtml(node.shortId)}</span>`,
        `<span class="badge badge-${escapeHtml(node.status)}">${escapeHtml(node.status)}</span>`,
        `<span class="node-decided">${escapeHtml(node.decidedAt)}</span>`,
        edge,
        "</li>",
      ].join("");
    })
    .join("");
  return [
    `<div class="lineage" data-resource="${escapeHtml(view.resourceId)}">`,
    `<h3>${escapeHtml(view.resourceId)}</h3>`,
    `<ol class="lineage-chain">${nodes}</ol>`,
    "</div>",
  ].join("");
}

export function renderMetricsHtml(metrics: {
  provenance_fidelity: number;
  selection_traceability: number;
  queue_depth: number;
  store_counts: Record<string, number>;
}): string {
  const counts = metrics.store_counts;
  return [
    '<dl class="metrics">',
    `<dt>provenance fidelity</dt><dd>${metrics.provenance_fidelity}</dd>`,
    `<dt>selection traceability</dt><dd>${metrics.selection_traceability}</dd>`,
    `<dt>queue depth</dt><dd>${metrics.queue_depth}</dd>`,
    `<dt>events</dt><dd>${counts["events_ratified"] ?? 0}/${counts["events_total"] ?? 0} ratified, ${counts["events_pending"] ?? 0} pending</dd>`,
    `<dt>active principles</dt><dd>${counts["principles_active"] ?? 0}</dd>`,
    `<dt>registry</dt><dd>${counts["registry_resources"] ?? 0} resources / ${counts["registry_versions"] ?? 0} versions</dd>`,
    "</dl>",
  ].join("");
}
