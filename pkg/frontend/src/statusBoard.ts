import type { ApiClient } from "./api";
import type { CollectionStatus, StatusRow } from "./types";

const TERMINAL = new Set(["completed", "cancelled", "errored"]);
export const POLL_INTERVAL_MS = 2000;

/**
 * Auto-refreshing per-property status table. Polls every 2 s until the
 * collection reaches a terminal state; rendered counters never go backwards
 * even if a poll reads a laggy snapshot.
 */
export class StatusBoard {
  private timer: ReturnType<typeof setInterval> | null = null;
  private highWater = new Map<string, StatusRow>();
  readonly element: HTMLElement;
  private banner: HTMLElement;
  private table: HTMLTableElement;
  private stateLabel: HTMLElement;

  constructor(
    private client: ApiClient,
    private collectionId: string,
  ) {
    this.element = document.createElement("section");
    this.element.className = "status-board";
    this.stateLabel = document.createElement("p");
    this.stateLabel.className = "collection-state";
    this.banner = document.createElement("p");
    this.banner.className = "error-banner";
    this.banner.hidden = true;
    this.table = document.createElement("table");
    this.table.innerHTML =
      "<thead><tr><th>property</th><th>state</th><th>generated</th>" +
      "<th>executed</th><th>passed</th><th>failed</th><th>errored</th></tr></thead><tbody></tbody>";
    this.element.append(this.stateLabel, this.banner, this.table);
  }

  get polling(): boolean {
    return this.timer !== null;
  }

  start(): void {
    void this.poll();
    this.timer = setInterval(() => void this.poll(), POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async poll(): Promise<void> {
    let status: CollectionStatus;
    try {
      status = await this.client.getStatus(this.collectionId);
    } catch (error) {
      this.banner.hidden = false;
      this.banner.textContent = `status unavailable (${(error as Error).message}); retrying`;
      return;
    }
    this.banner.hidden = true;
    this.render(status);
    if (TERMINAL.has(status.state)) {
      this.stop();
    }
  }

  private render(status: CollectionStatus): void {
    this.stateLabel.textContent = `collection ${status.collection_id}: ${status.state}`;
    const body = this.table.querySelector("tbody")!;
    body.textContent = "";
    for (const row of status.runs) {
      const floor = this.highWater.get(row.run_id);
      const shown: StatusRow = floor
        ? {
            ...row,
            generated: Math.max(row.generated, floor.generated),
            executed: Math.max(row.executed, floor.executed),
            passed: Math.max(row.passed, floor.passed),
            failed: Math.max(row.failed, floor.failed),
            errored: Math.max(row.errored, floor.errored),
          }
        : row;
      this.highWater.set(row.run_id, shown);
      const tr = document.createElement("tr");
      tr.dataset.runId = row.run_id;
      for (const value of [
        row.property_id,
        row.state,
        shown.generated,
        shown.executed,
        shown.passed,
        shown.failed,
        shown.errored,
      ]) {
        const td = document.createElement("td");
        td.textContent = String(value);
        tr.append(td);
      }
      body.append(tr);
    }
  }
}
