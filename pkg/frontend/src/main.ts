/** Dashboard wiring: connects the table, overlay, analytics panel, and
 * timeline to the service. Scores and geometry always come from server
 * responses; submissions re-render from server truth (no optimistic UI for
 * contests or status transitions). */

import { ApiClient, ApiError } from "./api.js";
import { DocumentOverlay } from "./overlay.js";
import {
  activateItem,
  canSubmitContest,
  draftBlockReason,
  initialState,
  startContest,
  updateDraft,
  withReport,
  type ViewState,
} from "./state.js";
import { buildRows, renderTable, sortRows, type SortColumn, type TableRow } from "./table.js";
import {
  buildTimeline,
  renderNotifications,
  renderRecurrentProblems,
  renderTimeline,
} from "./timeline.js";
import type { AnalyticKind, PayloadItem, Report, Rollup } from "./types.js";
import { ANALYTIC_KINDS } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(message: string): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message;
  banner.classList.toggle("hidden", message === "");
}

class Dashboard {
  private api: ApiClient;
  private state: ViewState = initialState();
  private overlay: DocumentOverlay;
  private rollup: Rollup | null = null;
  private rowKind: "student" | "team" = "student";
  private sortColumn: SortColumn = "key";
  private sortDescending = false;

  constructor(baseUrl: string, token?: string) {
    this.api = new ApiClient(baseUrl, token);
    this.overlay = new DocumentOverlay(el("document-view"));
    this.overlay.onRedline = (region) => void this.submitRedline(region);
  }

  async start(): Promise<void> {
    showError("");
    try {
      this.rollup = await this.api.getRollup();
    } catch (err) {
      showError(`service error: ${(err as Error).message}`);
      return;
    }
    this.renderRollup();
    await this.refreshNotifications();
  }

  private renderRollup(): void {
    if (!this.rollup) return;
    const rows = sortRows(buildRows(this.rollup, this.rowKind), this.sortColumn, this.sortDescending);
    renderTable(el("table-panel"), rows, {
      onDrill: (row) => void this.drillInto(row),
      onSort: (column) => {
        this.sortDescending = this.sortColumn === column ? !this.sortDescending : true;
        this.sortColumn = column;
        this.renderRollup();
      },
    });
    renderRecurrentProblems(el("problems-panel"), this.rollup.course);
  }

  switchRowKind(kind: "student" | "team"): void {
    this.rowKind = kind;
    this.renderRollup();
  }

  private async drillInto(row: TableRow): Promise<void> {
    const docId = row.docIds[0];
    if (!docId) return;
    const versions = (await this.api.listDocuments())[docId] ?? [];
    const version = versions[versions.length - 1];
    await this.openDocument(docId, version);
  }

  async openDocument(docId: string, version: number): Promise<void> {
    showError("");
    try {
      const doc = await this.api.getDocument(docId, version);
      const report = await this.api.getReport(docId, version);
      this.state = withReport(this.state, report);
      this.state.scope.docId = docId;
      this.state.scope.version = version;
      this.overlay.render(doc);
      this.renderAnalyticsPanel(report);
      await this.refreshAnnotations();
      await this.renderTimeline(docId);
      el<HTMLDivElement>("doc-title").textContent = `${docId} v${version}`;
    } catch (err) {
      showError(`could not open document: ${(err as Error).message}`);
    }
  }

  private itemsOf(report: Report, kind: AnalyticKind): PayloadItem[] {
    const payload = report.results[kind]?.payload;
    if (!payload) return [];
    return [
      ...(payload.ideas ?? []),
      ...(payload.categories ?? []),
      ...(payload.findings ?? []),
      ...(payload.imbalance_findings ?? []),
      ...(payload.line_box_findings ?? []),
      ...(payload.loud_area_findings ?? []),
    ];
  }

  private itemLabel(kind: AnalyticKind, item: PayloadItem): string {
    if (item.term) return item.term;
    if (item.members) return item.members.join(", ");
    if (item.attribute) return `${item.group_key}: ${item.attribute}`;
    if (item.ratio !== undefined) return `scale imbalance ${item.ratio}`;
    if (item.cells) return `loud area (${(item as { area_fraction?: number }).area_fraction ?? "?"})`;
    return item.ref;
  }

  private renderAnalyticsPanel(report: Report): void {
    const panel = el<HTMLDivElement>("analytics-panel");
    panel.textContent = "";
    for (const kind of ANALYTIC_KINDS) {
      const entry = report.results[kind];
      const section = document.createElement("section");
      section.className = "analytic-section";
      section.dataset.analytic = kind;
      const heading = document.createElement("h3");
      heading.textContent = `${kind.replaceAll("_", " ")}`;
      const score = document.createElement("span");
      score.className = "score";
      score.dataset.analytic = kind;
      score.textContent = entry ? String(entry.score) : "not computed";
      heading.appendChild(score);

      const challenge = document.createElement("button");
      challenge.className = "challenge";
      challenge.textContent = "✕";
      challenge.title = "challenge this analytic";
      challenge.addEventListener("click", () => this.openContestBox(kind, null));
      heading.appendChild(challenge);
      section.appendChild(heading);

      if (entry) {
        const list = document.createElement("ul");
        list.className = "item-list";
        for (const item of this.itemsOf(report, kind)) {
          const li = document.createElement("li");
          li.dataset.ref = item.ref;
          const activate = document.createElement("a");
          activate.textContent = this.itemLabel(kind, item);
          activate.href = "#";
          activate.addEventListener("click", (e) => {
            e.preventDefault();
            void this.activate(kind, item.ref);
          });
          li.appendChild(activate);
          const itemChallenge = document.createElement("button");
          itemChallenge.className = "challenge";
          itemChallenge.textContent = "✕";
          itemChallenge.addEventListener("click", () => this.openContestBox(kind, item.ref));
          li.appendChild(itemChallenge);
          list.appendChild(li);
        }
        section.appendChild(list);
      }
      for (const warning of report.warnings) {
        if (warning.startsWith(kind)) {
          const p = document.createElement("p");
          p.className = "warning";
          p.textContent = warning;
          section.appendChild(p);
        }
      }
      panel.appendChild(section);
    }
  }

  private async activate(kind: AnalyticKind, ref: string): Promise<void> {
    const { docId, version } = this.state.scope;
    const report = this.state.report;
    if (!report || docId === null || version === null) return;
    this.state = activateItem(this.state, kind, ref);
    try {
      const explanation = await this.api.getExplanation(docId, version, kind, ref, report.config_hash);
      this.overlay.showExplanation(explanation);
    } catch (err) {
      if (err instanceof ApiError && err.isStale) {
        // Config changed server-side; re-fetch the report and retry once.
        showError("analysis configuration changed; reloading the report");
        await this.openDocument(docId, version);
        return;
      }
      showError(`explanation failed: ${(err as Error).message}`);
    }
  }

  private openContestBox(kind: AnalyticKind, ref: string | null): void {
    if (!this.state.report) return;
    this.state = startContest(this.state, kind, ref);
    const box = el<HTMLDivElement>("contest-box");
    box.classList.remove("hidden");
    el<HTMLSpanElement>("contest-target").textContent = ref ? `${kind} ${ref}` : kind;
    const rationale = el<HTMLTextAreaElement>("contest-rationale");
    const userValue = el<HTMLInputElement>("contest-user-value");
    const verdict = el<HTMLSelectElement>("contest-verdict");
    rationale.value = "";
    userValue.value = "";
    verdict.value = "invalid";
    this.syncContestControls();
  }

  syncContestControls(): void {
    const rationale = el<HTMLTextAreaElement>("contest-rationale").value;
    const userValue = el<HTMLInputElement>("contest-user-value").value;
    const verdict = el<HTMLSelectElement>("contest-verdict").value as "valid" | "invalid";
    this.state = updateDraft(this.state, { rationale, userValue, verdict });
    const submit = el<HTMLButtonElement>("contest-submit");
    submit.disabled = !canSubmitContest(this.state.contestDraft);
    el<HTMLSpanElement>("contest-block-reason").textContent = submit.disabled
      ? (draftBlockReason(this.state.contestDraft) ?? "")
      : "";
  }

  async submitContest(): Promise<void> {
    const draft = this.state.contestDraft;
    if (!draft || !canSubmitContest(draft) || !this.state.scope.docId) return;
    try {
      await this.api.postContest({
        doc_id: this.state.scope.docId,
        version: this.state.scope.version!,
        analytic: draft.analytic,
        verdict: draft.verdict,
        rationale: draft.rationale,
        user_value: draft.userValue.trim() === "" ? undefined : draft.userValue,
      });
      el<HTMLDivElement>("contest-box").classList.add("hidden");
      this.state = updateDraft(this.state, {});
      showError("");
    } catch (err) {
      showError(`contest rejected: ${(err as Error).message}`);
    }
  }

  armRedline(): void {
    this.overlay.armRedline(true);
  }

  private async submitRedline(region: { x: number; y: number; w: number; h: number }): Promise<void> {
    if (!this.state.scope.docId) return;
    try {
      await this.api.postAnnotation({
        doc_id: this.state.scope.docId,
        created_version: this.state.scope.version!,
        kind: "redline",
        body: el<HTMLInputElement>("redline-note").value || "redline",
        target_region: region,
      });
      await this.refreshAnnotations();
    } catch (err) {
      showError(`annotation failed: ${(err as Error).message}`);
    }
  }

  private async refreshAnnotations(): Promise<void> {
    if (!this.state.scope.docId) return;
    const annotations = await this.api.getAnnotations(this.state.scope.docId);
    if (this.state.overlays.annotations) this.overlay.showAnnotations(annotations);
  }

  private async renderTimeline(docId: string): Promise<void> {
    const versions = (await this.api.listDocuments())[docId] ?? [];
    const diffs = [];
    for (let i = 0; i + 1 < versions.length; i++) {
      diffs.push(await this.api.getDiff(docId, versions[i], versions[i + 1]));
    }
    const annotations = await this.api.getAnnotations(docId);
    renderTimeline(el("timeline-panel"), buildTimeline(versions, diffs, annotations));
  }

  private async refreshNotifications(): Promise<void> {
    renderNotifications(el("notification-panel"), await this.api.getNotifications(0));
  }
}

declare global {
  interface Window {
    dashboard?: Dashboard;
  }
}

export function boot(): void {
  const connect = el<HTMLButtonElement>("connect");
  connect.addEventListener("click", () => {
    const base = el<HTMLInputElement>("server-url").value.replace(/\/$/, "");
    const token = el<HTMLInputElement>("server-token").value || undefined;
    const dashboard = new Dashboard(base, token);
    window.dashboard = dashboard;
    void dashboard.start();
    el<HTMLSelectElement>("row-kind").addEventListener("change", (e) => {
      dashboard.switchRowKind((e.target as HTMLSelectElement).value as "student" | "team");
    });
    el<HTMLTextAreaElement>("contest-rationale").addEventListener("input", () =>
      dashboard.syncContestControls());
    el<HTMLInputElement>("contest-user-value").addEventListener("input", () =>
      dashboard.syncContestControls());
    el<HTMLSelectElement>("contest-verdict").addEventListener("change", () =>
      dashboard.syncContestControls());
    el<HTMLButtonElement>("contest-submit").addEventListener("click", () =>
      void dashboard.submitContest());
    el<HTMLButtonElement>("redline-arm").addEventListener("click", () => dashboard.armRedline());
  });
}

if (typeof document !== "undefined" && document.getElementById("connect")) {
  boot();
}
