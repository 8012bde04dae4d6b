/** Report table: rows are students or teams, columns the five analytics.
 * Cell values come straight from the rollup response; the only client-side
 * operation is sorting. */

import { ANALYTIC_KINDS, type AnalyticKind, type Rollup, type RollupAggregate } from "./types.js";

export interface TableRow {
  key: string;
  kind: "student" | "team";
  reportCount: number;
  scores: Partial<Record<AnalyticKind, number>>;
  openAnnotations: number;
  docIds: string[];
}

export function buildRows(rollup: Rollup, kind: "student" | "team"): TableRow[] {
  const source: Record<string, RollupAggregate> =
    kind === "student" ? rollup.students : rollup.teams;
  return Object.keys(source)
    .sort()
    .map((key) => ({
      key,
      kind,
      reportCount: source[key].report_count,
      scores: source[key].mean_scores,
      openAnnotations: source[key].annotation_counts.open,
      docIds: source[key].doc_ids,
    }));
}

export type SortColumn = AnalyticKind | "key" | "reportCount";

export function sortRows(rows: TableRow[], column: SortColumn, descending: boolean): TableRow[] {
  const sorted = [...rows].sort((a, b) => {
    if (column === "key") return a.key.localeCompare(b.key);
    if (column === "reportCount") return a.reportCount - b.reportCount;
    const va = a.scores[column];
    const vb = b.scores[column];
    // Missing scores sort last regardless of direction.
    if (va === undefined && vb === undefined) return a.key.localeCompare(b.key);
    if (va === undefined) return 1;
    if (vb === undefined) return -1;
    return va - vb;
  });
  if (descending) {
    const missing = sorted.filter((r) => column !== "key" && column !== "reportCount" && r.scores[column as AnalyticKind] === undefined);
    const present = sorted.filter((r) => !missing.includes(r));
    return [...present.reverse(), ...missing];
  }
  return sorted;
}

/** Exact string form of a service value; no rounding so the table shows
 * precisely what the service reported. */
export function cellText(value: number | undefined): string {
  return value === undefined ? "–" : String(value);
}

export interface TableCallbacks {
  onDrill?: (row: TableRow) => void;
  onSort?: (column: SortColumn) => void;
}

export function renderTable(
  container: HTMLElement,
  rows: TableRow[],
  callbacks: TableCallbacks = {},
): void {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "report-table";

  const head = table.createTHead().insertRow();
  const columns: { label: string; column: SortColumn }[] = [
    { label: rows[0]?.kind === "team" ? "team" : "student", column: "key" },
    { label: "reports", column: "reportCount" },
    ...ANALYTIC_KINDS.map((k) => ({ label: k.replaceAll("_", " "), column: k as SortColumn })),
  ];
  for (const { label, column } of columns) {
    const th = document.createElement("th");
    th.textContent = label;
    th.dataset.column = column;
    th.addEventListener("click", () => callbacks.onSort?.(column));
    head.appendChild(th);
  }

  const body = table.createTBody();
  if (rows.length === 0) {
    const cell = body.insertRow().insertCell();
    cell.colSpan = columns.length;
    cell.className = "empty-state";
    cell.textContent = "No analyzed work in scope yet.";
  }
  for (const row of rows) {
    const tr = body.insertRow();
    tr.dataset.key = row.key;
    const name = tr.insertCell();
    name.textContent = row.key;
    name.className = "drill";
    name.addEventListener("click", () => callbacks.onDrill?.(row));
    tr.insertCell().textContent = String(row.reportCount);
    for (const kind of ANALYTIC_KINDS) {
      const cell = tr.insertCell();
      cell.dataset.analytic = kind;
      cell.textContent = cellText(row.scores[kind]);
    }
  }
  container.appendChild(table);
}
