import type { ComparisonReport } from "./types";

/** Comparison matrix: one column per collection, best-per-metric highlighted
 * according to the metric's direction metadata. */
export function renderComparison(report: ComparisonReport): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "comparison";
  const head = document.createElement("tr");
  for (const caption of ["property", "metric", ...report.collections.map((c) => c.slice(0, 8))]) {
    const th = document.createElement("th");
    th.textContent = caption;
    head.append(th);
  }
  table.append(head);
  for (const row of report.rows) {
    const tr = document.createElement("tr");
    tr.dataset.metric = `${row.property_id}.${row.metric}`;
    const property = document.createElement("td");
    property.textContent = row.property_id;
    const metric = document.createElement("td");
    metric.textContent = row.metric;
    metric.title = `direction: ${row.direction}`;
    tr.append(property, metric);
    row.values.forEach((value, index) => {
      const td = document.createElement("td");
      td.textContent =
        typeof value === "number" ? value.toPrecision(6) : String(value ?? "n/a");
      if (value === "not run") td.classList.add("not-run");
      if (row.best === index) td.classList.add("best");
      tr.append(td);
    });
    table.append(tr);
  }
  return table;
}
