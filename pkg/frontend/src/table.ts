/** Read-only data table panel with the column summaries as headers. */

import type { SessionSnapshot } from "./types";

const MAX_ROWS = 100;

export function renderTablePanel(host: HTMLElement, snapshot: SessionSnapshot): void {
  host.textContent = "";

  const caption = document.createElement("p");
  caption.className = "dataset-description";
  caption.textContent = snapshot.summary.dataset_description;
  host.appendChild(caption);

  const table = document.createElement("table");
  table.className = "data-table";

  const head = table.createTHead().insertRow();
  for (const column of snapshot.summary.columns) {
    const cell = document.createElement("th");
    cell.textContent = column.stats.name;
    const type = document.createElement("small");
    type.textContent = column.stats.atomic_type;
    cell.appendChild(document.createElement("br"));
    cell.appendChild(type);
    if (column.semantic_description) {
      cell.title = column.semantic_description;
    }
    head.appendChild(cell);
  }

  const body = table.createTBody();
  for (const row of snapshot.dataset.rows.slice(0, MAX_ROWS)) {
    const tr = body.insertRow();
    for (const value of row) {
      tr.insertCell().textContent = value === null ? "" : String(value);
    }
  }
  host.appendChild(table);

  if (snapshot.dataset.rows.length > MAX_ROWS) {
    const note = document.createElement("p");
    note.className = "table-note";
    note.textContent = `showing ${MAX_ROWS} of ${snapshot.dataset.rows.length} rows`;
    host.appendChild(note);
  }
}
