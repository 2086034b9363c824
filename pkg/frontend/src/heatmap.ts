import type { Grid } from "./types";

/** Renders any rows x cols grid of intensities in [0, 1]; no property-specific code. */
export function renderHeatmap(grid: Grid): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "heatmap";
  const header = document.createElement("tr");
  header.append(document.createElement("th"));
  for (const col of grid.cols) {
    const th = document.createElement("th");
    th.textContent = col;
    header.append(th);
  }
  table.append(header);
  grid.rows.forEach((rowLabel, r) => {
    const tr = document.createElement("tr");
    const th = document.createElement("th");
    th.textContent = rowLabel;
    tr.append(th);
    grid.cols.forEach((_col, c) => {
      const intensity = Math.min(Math.max(grid.values[r]?.[c] ?? 0, 0), 1);
      const td = document.createElement("td");
      td.className = "cell";
      td.dataset.intensity = intensity.toFixed(3);
      td.style.backgroundColor = `rgba(178, 34, 52, ${intensity})`;
      td.title = `${rowLabel} / ${grid.cols[c]}: ${intensity.toFixed(3)}`;
      tr.append(td);
    });
    table.append(tr);
  });
  return table;
}
