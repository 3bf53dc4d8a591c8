import { describe, expect, it } from "vitest";

import type { LineageChain, QueueEntry } from "../src/api.js";
import {
  ageLabel,
  buildLineageView,
  buildQueueView,
  escapeHtml,
  payloadPreview,
  provenanceComplete,
  renderLineageHtml,
  renderMetricsHtml,
  renderQueueHtml,
  validateDecision,
} from "../src/views.js";

function entry(overrides: Partial<QueueEntry> = {}): QueueEntry {
  return {
    candidate_id: "a".repeat(64),
    kind: "event",
    resource_id: "evt-queue-observation",
    payload: { topic: "queue-observation", summary: "queue doubled" },
    drafted_by: "atlas",
    evidence: [
      { kind: "free_text", value: "chart export", summary: "chart export" },
    ],
    enqueued_at: "2026-04-22T09:00:00Z",
    age_seconds: 90,
    ...overrides,
  };
}

describe("queue view", () => {
  it("mirrors server FIFO order without reordering", () => {
    const first = entry({ candidate_id: "1".repeat(64), age_seconds: 10 });
    const second = entry({
      candidate_id: "2".repeat(64),
      resource_id: "evt-retention-debate",
      age_seconds: 9999,
    });
    const view = buildQueueView([first, second]);
    expect(view.entries.map((e) => e.candidateId)).toEqual([
      first.candidate_id,
      second.candidate_id,
    ]);
  });

  it("renders an explicit empty state", () => {
    const html = renderQueueHtml(buildQueueView([]));
    expect(html).toContain("no pending candidates");
  });

  it("renders payload preview, evidence summaries, and age", () => {
    const html = renderQueueHtml(buildQueueView([entry()]));
    expect(html).toContain("queue-observation");
    expect(html).toContain("chart export");
    expect(html).toContain("waiting 1m");
    expect(html).toContain('data-outcome="ratified"');
    expect(html).toContain('data-outcome="abstained"');
  });

  it("flags evidence-free candidates instead of hiding them", () => {
    const html = renderQueueHtml(buildQueueView([entry({ evidence: [] })]));
    expect(html).toContain("no evidence attached");
  });

  it("escapes payload content", () => {
    const hostile = entry({
      payload: { topic: "<script>alert(1)</script>" },
    });
    const html = renderQueueHtml(buildQueueView([hostile]));
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("decision validation", () => {
  it("ratify needs no note", () => {
    expect(validateDecision("ratified", "").ok).toBe(true);
  });

  it.each(["rejected", "abstained"])("%s requires a rationale note", (outcome) => {
    const blocked = validateDecision(outcome, "   ");
    expect(blocked.ok).toBe(false);
    expect(blocked.problem).toMatch(/rationale/);
    expect(validateDecision(outcome, "not enough evidence").ok).toBe(true);
  });
});

describe("lineage view", () => {
  const v1 = "f".repeat(64);
  const v2 = "e".repeat(64);
  const v3 = "d".repeat(64);

  const registryChain: LineageChain = {
    resource_id: "reg-memory-registry",
    versions: [
      { id: v1, status: "failed", decided_at: "2026-03-20T15:00:00Z", supersedes: null },
      { id: v2, status: "superseded", decided_at: "2026-03-21T15:00:00Z", supersedes: null },
      { id: v3, status: "passed", decided_at: "2026-04-26T12:00:00Z", supersedes: v2 },
    ],
  };

  it("renders every version with its status badge", () => {
    const view = buildLineageView(registryChain);
    expect(view.nodes).toHaveLength(3);
    const html = renderLineageHtml(view);
    expect(html).toContain("badge-failed");
    expect(html).toContain("badge-superseded");
    expect(html).toContain("badge-passed");
    expect(html).toContain("reg-memory-registry");
  });

  it("renders supersedes edges", () => {
    const html = renderLineageHtml(buildLineageView(registryChain));
    expect(html).toContain(`supersedes ${v2.slice(0, 12)}`);
  });

  it("single version renders a single node", () => {
    const view = buildLineageView({
      resource_id: "evt-x",
      versions: [{ id: v1, status: "ratified", decided_at: null, supersedes: null }],
    });
    expect(view.nodes).toHaveLength(1);
    expect(view.nodes[0]?.decidedAt).toBe("-");
  });

  it("marks a broken edge without crashing", () => {
    const ghost = "9".repeat(64);
    const view = buildLineageView({
      resource_id: "evt-broken",
      versions: [
        { id: v1, status: "ratified", decided_at: null, supersedes: ghost },
      ],
    });
    expect(view.nodes[0]?.brokenEdge).toBe(true);
    const html = renderLineageHtml(view);
    expect(html).toContain("broken edge");
  });
});

describe("provenance flagging", () => {
  const complete = {
    drafted_by: "atlas",
    evidence: [{ kind: "free_text", value: "notes" }],
    ratified_by: "operator",
    regime: "human_ratified",
    decided_at: "2026-04-22T10:00:00Z",
  };

  it("complete provenance passes", () => {
    expect(provenanceComplete(complete)).toBe(true);
  });

  it.each(["ratified_by", "regime", "decided_at"])(
    "missing %s is flagged",
    (field) => {
      const partial = { ...complete, [field]: undefined };
      expect(provenanceComplete(partial)).toBe(false);
    },
  );

  it("empty evidence is flagged", () => {
    expect(provenanceComplete({ ...complete, evidence: [] })).toBe(false);
  });
});

describe("helpers", () => {
  it("age labels scale", () => {
    expect(ageLabel(30)).toBe("30s");
    expect(ageLabel(240)).toBe("4m");
    expect(ageLabel(7200)).toBe("2h");
    expect(ageLabel(200000)).toBe("2d");
  });

  it("payload preview truncates and sorts keys", () => {
    const preview = payloadPreview({ b: "x".repeat(500), a: 1 });
    expect(preview.length).toBeLessThanOrEqual(120);
    expect(preview.startsWith('{"a":1,"b":')).toBe(true);
    expect(preview.endsWith("...")).toBe(true);
  });

  it("escapeHtml covers the metacharacters", () => {
    expect(escapeHtml(`<a href="x">&'`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&#39;",
    );
  });

  it("metrics render the store counts", () => {
    const html = renderMetricsHtml({
      provenance_fidelity: 1,
      selection_traceability: 1,
      queue_depth: 2,
      store_counts: {
        events_total: 12,
        events_ratified: 10,
        events_pending: 2,
        principles_active: 8,
        registry_resources: 17,
        registry_versions: 22,
      },
    });
    expect(html).toContain("10/12 ratified, 2 pending");
    expect(html).toContain("17 resources / 22 versions");
  });
});
