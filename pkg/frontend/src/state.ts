/** Dashboard view state and the contest-draft rules.
 *
 * Pure data + transition functions so the invariants are unit-testable:
 * an active item ref requires a loaded report, and an "invalid" verdict
 * cannot be submitted without a rationale (mirrors the server-side rule).
 */

import type { AnalyticKind, Report } from "./types.js";

export interface OverlayToggles {
  clusters: boolean;
  inconsistencies: boolean;
  contrastRegions: boolean;
  annotations: boolean;
}

export interface ContestDraft {
  analytic: AnalyticKind;
  itemRef: string | null;
  verdict: "valid" | "invalid";
  rationale: string;
  userValue: string;
}

export interface ViewState {
  scope: {
    docId: string | null;
    version: number | null;
    team: string | null;
    student: string | null;
  };
  report: Report | null;
  activeAnalytic: AnalyticKind | null;
  activeItemRef: string | null;
  overlays: OverlayToggles;
  contestDraft: ContestDraft | null;
}

export function initialState(): ViewState {
  return {
    scope: { docId: null, version: null, team: null, student: null },
    report: null,
    activeAnalytic: null,
    activeItemRef: null,
    overlays: {
      clusters: false,
      inconsistencies: true,
      contrastRegions: true,
      annotations: true,
    },
    contestDraft: null,
  };
}

export function withReport(state: ViewState, report: Report | null): ViewState {
  return {
    ...state,
    report,
    // A stale item ref must never survive a report swap.
    activeAnalytic: null,
    activeItemRef: null,
    contestDraft: null,
  };
}

export function activateItem(
  state: ViewState,
  analytic: AnalyticKind,
  itemRef: string,
): ViewState {
  if (state.report === null) {
    throw new Error("cannot activate an item without a loaded report");
  }
  if (!(analytic in state.report.results)) {
    throw new Error(`analytic ${analytic} not present in the loaded report`);
  }
  return { ...state, activeAnalytic: analytic, activeItemRef: itemRef };
}

export function startContest(
  state: ViewState,
  analytic: AnalyticKind,
  itemRef: string | null,
): ViewState {
  if (state.report === null) {
    throw new Error("cannot challenge without a loaded report");
  }
  return {
    ...state,
    contestDraft: {
      analytic,
      itemRef,
      verdict: "invalid",
      rationale: "",
      userValue: "",
    },
  };
}

export function updateDraft(state: ViewState, changes: Partial<ContestDraft>): ViewState {
  if (state.contestDraft === null) return state;
  return { ...state, contestDraft: { ...state.contestDraft, ...changes } };
}

/** Submit is enabled only when the draft satisfies the contest invariants. */
export function canSubmitContest(draft: ContestDraft | null): boolean {
  if (draft === null) return false;
  if (draft.verdict === "invalid" && draft.rationale.trim() === "") return false;
  if (draft.verdict === "valid" && draft.userValue.trim() !== "") return false;
  return true;
}

export function draftBlockReason(draft: ContestDraft | null): string | null {
  if (draft === null) return "no challenge in progress";
  if (draft.verdict === "invalid" && draft.rationale.trim() === "") {
    return "an invalid verdict requires a rationale";
  }
  if (draft.verdict === "valid" && draft.userValue.trim() !== "") {
    return "an alternative value only accompanies an invalid verdict";
  }
  return null;
}
