/**
 * Scripted round-trip against a real fixture-loaded service:
 * the queue shows both pending candidates, ratifying one updates the
 * shared counts and shrinks the queue, and the registry resource's
 * lineage renders all three versions with their statuses.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import {
  buildLineageView,
  buildQueueView,
  renderLineageHtml,
  renderQueueHtml,
} from "../src/views.js";

const TOKEN = "console-test-token";
const PORT = 18744;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let storeDir: string;

async function waitForServer(api: ConsoleApi, attempts = 50): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      await api.getMetrics();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), "govmem-console-"));
  const store = join(storeDir, "store");
  const loaded = spawnSync(
    "python3",
    ["-m", "govmem.cli", "--store", store, "load-fixture", "paper-ecosystem"],
    { encoding: "utf-8" },
  );
  if (loaded.status !== 0) {
    throw new Error(`fixture load failed: ${loaded.stderr}`);
  }
  server = spawn(
    "python3",
    ["-m", "govmem.cli", "--store", store, "--token", TOKEN,
     "serve", "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForServer(new ConsoleApi({ baseUrl: BASE, operatorToken: TOKEN }));
}, 30000);

afterAll(() => {
  server?.kill();
  rmSync(storeDir, { recursive: true, force: true });
});

describe("console against a fixture-loaded service", () => {
  const api = () => new ConsoleApi({ baseUrl: BASE, operatorToken: TOKEN });

  it("renders both pending candidates from the fixture", async () => {
    const queue = await api().getQueue();
    const view = buildQueueView(queue.entries);
    expect(view.entries).toHaveLength(2);
    const html = renderQueueHtml(view);
    expect(html).toContain("evt-queue-observation");
    expect(html).toContain("evt-retention-debate");
  });

  it("ratifying one candidate updates counts and removes it from the queue", async () => {
    const client = api();
    const before = await client.getMetrics();
    const queueBefore = await client.getQueue();
    const target = queueBefore.entries[0]!;

    const decided = await client.submitDecision(
      target.candidate_id,
      "ratified",
      "",
    );
    expect(decided.status).toBe("ratified");

    const after = await client.getMetrics();
    expect(after.store_counts["events_ratified"]).toBe(
      (before.store_counts["events_ratified"] ?? 0) + 1,
    );
    expect(after.queue_depth).toBe(before.queue_depth - 1);

    const queueAfter = await client.getQueue();
    expect(
      queueAfter.entries.map((entry) => entry.candidate_id),
    ).not.toContain(target.candidate_id);
    const html = renderQueueHtml(buildQueueView(queueAfter.entries));
    expect(html).not.toContain(target.resource_id);
  });

  it("renders the registry lineage with all three versions and statuses", async () => {
    const chain = await api().getLineage("reg-memory-registry");
    const view = buildLineageView(chain);
    expect(view.nodes.map((node) => node.status)).toEqual([
      "failed",
      "superseded",
      "passed",
    ]);
    expect(view.nodes.some((node) => node.brokenEdge)).toBe(false);
    const html = renderLineageHtml(view);
    expect(html).toContain("badge-failed");
    expect(html).toContain("badge-superseded");
    expect(html).toContain("badge-passed");
  });

  it("a stale decision surfaces the conflict for a non-destructive refresh", async () => {
    const client = api();
    const queue = await client.getQueue();
    const target = queue.entries[0]!;
    await client.submitDecision(target.candidate_id, "rejected", "duplicate of prior event");
    const err = await client
      .submitDecision(target.candidate_id, "ratified", "")
      .catch((e) => e);
    expect(err.isConflict).toBe(true);
    // refresh still works and the entry is gone
    const refreshed = await client.getQueue();
    expect(
      refreshed.entries.map((entry) => entry.candidate_id),
    ).not.toContain(target.candidate_id);
  });

  it("rejects a bad operator token with an auth error", async () => {
    const bad = new ConsoleApi({ baseUrl: BASE, operatorToken: "wrong" });
    const err = await bad.getQueue().catch((e) => e);
    expect(err.isAuth).toBe(true);
  });
});
