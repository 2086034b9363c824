import { renderHeatmap } from "./heatmap";
import type { MetricReport } from "./types";

export function renderMetricsPanel(report: MetricReport): HTMLElement {
  const panel = document.createElement("section");
  panel.className = "metrics-panel";

  const heading = document.createElement("h2");
  heading.textContent = report.display_name || report.property_id;
  panel.append(heading);

  const table = document.createElement("table");
  table.className = "metrics";
  table.innerHTML =
    "<thead><tr><th>metric</th><th>value</th><th>verdict</th><th>recommended action</th></tr></thead>";
  for (const [name, entry] of Object.entries(report.metrics)) {
    const tr = document.createElement("tr");
    tr.dataset.metric = name;
    const shown =
      typeof entry.value === "number" ? entry.value.toPrecision(6) : String(entry.value ?? "n/a");
    for (const text of [name, shown, entry.verdict, entry.recommendation]) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.append(td);
    }
    tr.classList.add(`verdict-${entry.verdict}`);
    table.append(tr);
  }
  panel.append(table);

  const explanation = document.createElement("p");
  explanation.className = "explanation";
  explanation.textContent = report.explanation;
  panel.append(explanation);

  panel.append(renderHeatmap(report.grid));
  return panel;
}
