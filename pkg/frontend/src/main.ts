import { ApiClient } from "./api";
import { renderComparison } from "./compare";
import { renderRunConfigurationForm } from "./configForm";
import { renderFailurePage } from "./failures";
import { renderMetricsPanel } from "./metricsPanel";
import { StatusBoard } from "./statusBoard";
import type { Subject } from "./types";

// Minimal single-page wiring: register is done via CLI/API, the console
// covers configure -> watch -> inspect -> drill down -> compare.

function section(title: string): HTMLElement {
  const el = document.createElement("section");
  const h = document.createElement("h1");
  h.textContent = title;
  el.append(h);
  document.body.append(el);
  return el;
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8321";
  const subjectId = params.get("subject");
  const projectId = params.get("project");
  const client = new ApiClient(base);

  const configSection = section("configure a test run");
  if (subjectId) {
    const definitions = await client.getProperties();
    const subject: Subject = {
      id: subjectId,
      project_id: projectId ?? "",
      model_id: "",
      data_properties: { modality: params.get("modality") ?? "tabular" },
    };
    renderRunConfigurationForm(configSection, subject, definitions, async (body) => {
      const config = await client.createConfig(subjectId, body);
      const started = await client.executeRun(config.id);
      const statusSection = section(`run ${started.collection_id}`);
      const board = new StatusBoard(client, started.collection_id);
      statusSection.append(board.element);
      board.start();
    });
  } else {
    const hint = document.createElement("p");
    hint.textContent = "open with ?subject=<id>&project=<id>&api=<base-url>";
    configSection.append(hint);
  }

  const runId = params.get("run");
  if (runId) {
    const metricsSection = section("metrics");
    metricsSection.append(renderMetricsPanel(await client.getMetrics(runId)));
    const failureSection = section("failing cases");
    const limit = 10;
    const load = async (offset: number): Promise<void> => {
      const page = await client.getFailures(runId, offset, limit);
      failureSection.querySelector(".failures")?.remove();
      failureSection.append(renderFailurePage(page, (next) => void load(next)).element);
    };
    await load(0);
  }

  const compareIds = params.get("collections");
  if (projectId && compareIds) {
    const compareSection = section("compare runs");
    compareSection.append(
      renderComparison(await client.compare(projectId, compareIds.split(","))),
    );
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => void boot());
  } else {
    void boot();
  }
}
