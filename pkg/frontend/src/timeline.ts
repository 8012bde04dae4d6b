/** Feedback timeline: one entry per version with diff badges and the
 * annotation status chips that attach to it, plus the notification feed
 * and the recurrent-problem panel. */

import type { Annotation, NotificationEvent, RollupAggregate, VersionDiff } from "./types.js";

export interface TimelineEntry {
  version: number;
  diffBadge: string | null; // summary of changes arriving at this version
  chips: { annotationId: string; status: string; label: string }[];
}

export function buildTimeline(
  versions: number[],
  diffs: VersionDiff[],
  annotations: Annotation[],
): TimelineEntry[] {
  const byTarget = new Map<number, VersionDiff>();
  for (const diff of diffs) byTarget.set(diff.to_version, diff);
  return versions.map((version) => {
    const diff = byTarget.get(version);
    const badge = diff
      ? `+${diff.added.length} −${diff.removed.length} ~${diff.modified.length}`
      : null;
    const chips: TimelineEntry["chips"] = [];
    for (const annotation of annotations) {
      if (annotation.created_version === version) {
        chips.push({
          annotationId: annotation.id,
          status: "open",
          label: `${annotation.id} opened`,
        });
      }
      if (annotation.touched_version === version) {
        chips.push({
          annotationId: annotation.id,
          status: "touched",
          label: `${annotation.id} touched`,
        });
      }
      if (
        annotation.resolved_version === version &&
        (annotation.status === "addressed" || annotation.status === "validated")
      ) {
        chips.push({
          annotationId: annotation.id,
          status: annotation.status,
          label: `${annotation.id} ${annotation.status}`,
        });
      }
    }
    return { version, diffBadge: badge, chips };
  });
}

export function renderTimeline(container: HTMLElement, entries: TimelineEntry[]): void {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "timeline";
  for (const entry of entries) {
    const item = document.createElement("li");
    item.dataset.version = String(entry.version);
    const head = document.createElement("span");
    head.className = "timeline-version";
    head.textContent = `v${entry.version}`;
    item.appendChild(head);
    if (entry.diffBadge) {
      const badge = document.createElement("span");
      badge.className = "diff-badge";
      badge.textContent = entry.diffBadge;
      item.appendChild(badge);
    }
    for (const chip of entry.chips) {
      const span = document.createElement("span");
      span.className = `status-chip status-${chip.status}`;
      span.dataset.annotationId = chip.annotationId;
      span.textContent = chip.label;
      item.appendChild(span);
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderNotifications(container: HTMLElement, events: NotificationEvent[]): void {
  container.textContent = "";
  const list = document.createElement("ul");
  list.className = "notification-feed";
  for (const event of [...events].sort((a, b) => b.seq - a.seq)) {
    const item = document.createElement("li");
    item.textContent = `#${event.seq} ${event.annotation_id}: ${event.transition} (v${event.version})`;
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderRecurrentProblems(container: HTMLElement, aggregate: RollupAggregate): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = "Recurrent problems";
  container.appendChild(heading);
  if (aggregate.recurrent_problems.length === 0) {
    const p = document.createElement("p");
    p.className = "empty-state";
    p.textContent = "None detected.";
    container.appendChild(p);
    return;
  }
  const list = document.createElement("ul");
  for (const problem of aggregate.recurrent_problems) {
    const item = document.createElement("li");
    item.dataset.category = problem.category;
    item.textContent = `${problem.category} in ${problem.count} deliverables (${problem.doc_ids.join(", ")})`;
    list.appendChild(item);
  }
  container.appendChild(list);
}
