/**
 * Browser wiring: polling, decision actions, lineage inspection.
 *
 * The console is read-only except through the decisions and supersede
 * endpoints; refresh at any moment is safe because the server owns all
 * state. Decision races surface as conflicts and trigger a
 * non-destructive refresh.
 */

import { ApiError, ConsoleApi, NetworkError } from "./api.js";
import {
  buildLineageView,
  buildQueueView,
  renderLineageHtml,
  renderMetricsHtml,
  renderQueueHtml,
  validateDecision,
} from "./views.js";

const DEFAULT_POLL_MS = 5000;

interface ConsoleElements {
  queue: HTMLElement;
  lineage: HTMLElement;
  metrics: HTMLElement;
  banner: HTMLElement;
  lineageForm: HTMLFormElement;
  lineageInput: HTMLInputElement;
}

export interface ConsoleOptions {
  baseUrl: string;
  operatorToken: string;
  pollIntervalMs?: number;
}

export class OperatorConsole {
  private api: ConsoleApi;
  private readonly pollMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly elements: ConsoleElements,
    options: ConsoleOptions,
  ) {
    this.api = new ConsoleApi({
      baseUrl: options.baseUrl,
      operatorToken: options.operatorToken,
    });
    this.pollMs = options.pollIntervalMs ?? DEFAULT_POLL_MS;
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollMs);
    this.elements.queue.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const outcome = target.getAttribute("data-outcome");
      const candidateId = target.getAttribute("data-id");
      if (outcome && candidateId) {
        void this.decide(candidateId, outcome);
      }
    });
    this.elements.lineageForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.showLineage(this.elements.lineageInput.value.trim());
    });
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async refresh(): Promise<void> {
    try {
      const [queue, metrics] = await Promise.all([
        this.api.getQueue(),
        this.api.getMetrics(),
      ]);
      this.elements.queue.innerHTML = renderQueueHtml(buildQueueView(queue.entries));
      this.elements.metrics.innerHTML = renderMetricsHtml(metrics);
      this.clearBanner();
    } catch (err) {
      this.report(err, "refresh failed");
    }
  }

  async decide(candidateId: string, outcome: string): Promise<void> {
    let note = "";
    if (outcome !== "ratified") {
      const entered = window.prompt(
        `Rationale for ${outcome} (required):`,
        "",
      );
      if (entered === null) {
        return; // operator cancelled
      }
      note = entered;
    }
    const validation = validateDecision(outcome, note);
    if (!validation.ok) {
      this.banner(validation.problem ?? "note required", "warn");
      return;
    }
    try {
      await this.api.submitDecision(
        candidateId,
        outcome as "ratified" | "rejected" | "abstained",
        note,
      );
      await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        this.banner("decided elsewhere; refreshing", "warn");
        await this.refresh();
        return;
      }
      this.report(err, "decision failed");
    }
  }

  async showLineage(resourceId: string): Promise<void> {
    if (!resourceId) {
      return;
    }
    try {
      const chain = await this.api.getLineage(resourceId);
      this.elements.lineage.innerHTML = renderLineageHtml(buildLineageView(chain));
      this.clearBanner();
    } catch (err) {
      this.report(err, `no lineage for ${resourceId}`);
    }
  }

  private report(err: unknown, context: string): void {
    if (err instanceof NetworkError) {
      this.banner(`${context}: server unreachable, retrying on next poll`, "error");
      return; // no state mutation; next poll retries
    }
    if (err instanceof ApiError && err.isAuth) {
      this.banner("operator token rejected; update it and reload", "error");
      return;
    }
    this.banner(`${context}: ${String(err)}`, "error");
  }

  private banner(message: string, level: "warn" | "error"): void {
    this.elements.banner.textContent = message;
    this.elements.banner.className = `banner banner-${level}`;
  }

  private clearBanner(): void {
    this.elements.banner.textContent = "";
    this.elements.banner.className = "banner";
  }
}

function required(id: string): HTMLElement {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`console page is missing #${id}`);
  }
  return element;
}

export function initFromDocument(): OperatorConsole {
  const params = new URLSearchParams(window.location.search);
  const baseUrl =
    params.get("api") ??
    (document.getElementById("api-url") as HTMLInputElement | null)?.value ??
    "http://127.0.0.1:8077";
  const operatorToken =
    params.get("token") ??
    (document.getElementById("api-token") as HTMLInputElement | null)?.value ??
    window.localStorage.getItem("govmem-operator-token") ??
    window.prompt("operator token:") ??
    "";
  window.localStorage.setItem("govmem-operator-token", operatorToken);
  const consoleApp = new OperatorConsole(
    {
      queue: required("queue"),
      lineage: required("lineage"),
      metrics: required("metrics"),
      banner: required("banner"),
      lineageForm: required("lineage-form") as HTMLFormElement,
      lineageInput: required("lineage-resource") as HTMLInputElement,
    },
    { baseUrl, operatorToken },
  );
  consoleApp.start();
  return consoleApp;
}

declare global {
  interface Window {
    __govmemConsole?: OperatorConsole;
  }
}

if (typeof document !== "undefined" && document.getElementById("queue")) {
  window.__govmemConsole = initFromDocument();
}
