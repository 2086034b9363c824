import type { FailureItem, FailurePage, Sample } from "./types";

function sampleColumns(items: FailureItem[]): string[] {
  const seen: string[] = [];
  for (const item of items) {
    for (const sample of item.case.samples) {
      if (typeof sample === "object" && sample !== null) {
        for (const key of Object.keys(sample)) {
          if (!seen.includes(key)) seen.push(key);
        }
      }
    }
  }
  return seen;
}

function differingKeys(a: Sample, b: Sample): Set<string> {
  if (typeof a === "string" || typeof b === "string") {
    return new Set(a !== b ? ["text"] : []);
  }
  const keys = new Set([...Object.keys(a), ...Object.keys(b)]);
  const out = new Set<string>();
  for (const key of keys) {
    if (JSON.stringify(a[key]) !== JSON.stringify(b[key])) out.add(key);
  }
  return out;
}

export interface FailureTableHandles {
  element: HTMLElement;
  pager: HTMLElement;
}

/**
 * Paged table of failing cases. Pairwise cases render as original/transformed
 * row pairs with every differing cell highlighted; for individual
 * discrimination that is exactly the one changed protected attribute.
 */
export function renderFailurePage(
  page: FailurePage,
  onPage: (offset: number) => void,
): FailureTableHandles {
  const element = document.createElement("section");
  element.className = "failures";

  if (page.total_failures === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "no failing test cases for this run";
    element.append(empty);
    const pager = document.createElement("nav");
    element.append(pager);
    return { element, pager };
  }

  const isText = page.items.some((item) => typeof item.case.samples[0] === "string");
  const columns = isText ? ["text"] : sampleColumns(page.items);

  const table = document.createElement("table");
  const head = document.createElement("tr");
  for (const caption of ["case", "role", ...columns, "predicted"]) {
    const th = document.createElement("th");
    th.textContent = caption;
    head.append(th);
  }
  table.append(head);

  for (const item of page.items) {
    const pairwise =
      item.case.samples.length === 2 && item.case.role_tags[1] === "transformed";
    const diff = pairwise
      ? differingKeys(item.case.samples[0], item.case.samples[1])
      : new Set<string>();
    item.case.samples.forEach((sample, index) => {
      const tr = document.createElement("tr");
      tr.dataset.caseId = item.case.id;
      tr.dataset.role = item.case.role_tags[index];
      const caseCell = document.createElement("td");
      caseCell.textContent = index === 0 ? item.case.id.slice(0, 8) : "";
      const roleCell = document.createElement("td");
      roleCell.textContent = item.case.role_tags[index];
      tr.append(caseCell, roleCell);
      for (const column of columns) {
        const td = document.createElement("td");
        const value =
          typeof sample === "string" ? sample : (sample[column] as unknown);
        td.textContent = value === undefined || value === null ? "" : String(value);
        if (index > 0 && diff.has(column)) {
          td.classList.add("diff");
        }
        tr.append(td);
      }
      const predicted = document.createElement("td");
      const prediction = item.result.predictions[index];
      predicted.textContent = prediction?.label ?? prediction?.error ?? "";
      tr.append(predicted);
      table.append(tr);
    });
  }
  element.append(table);

  const pager = document.createElement("nav");
  pager.className = "pager";
  const pages = Math.ceil(page.total_failures / page.limit);
  for (let i = 0; i < pages; i += 1) {
    const button = document.createElement("button");
    button.textContent = String(i + 1);
    button.disabled = i * page.limit === page.offset;
    button.addEventListener("click", () => onPage(i * page.limit));
    pager.append(button);
  }
  element.append(pager);
  return { element, pager };
}
