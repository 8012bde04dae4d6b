import { describe, expect, it } from "vitest";

import {
  activateItem,
  canSubmitContest,
  draftBlockReason,
  initialState,
  startContest,
  updateDraft,
  withReport,
} from "../src/state.js";
import type { Report } from "../src/types.js";

const report: Report = {
  schema_version: 1,
  doc_id: "d",
  version: 1,
  team_id: null,
  author_ids: [],
  config_hash: "abc",
  results: {
    fluency: { score: 3, payload: {}, element_refs: [], config: {} },
  },
  member_breakdown: {},
  warnings: [],
};

describe("view state", () => {
  it("rejects activating an item without a loaded report", () => {
    expect(() => activateItem(initialState(), "fluency", "fluency/idea/x")).toThrow();
  });

  it("rejects activating an analytic missing from the report", () => {
    const state = withReport(initialState(), report);
    expect(() => activateItem(state, "flexibility", "flexibility/category/0")).toThrow();
  });

  it("activates items for loaded analytics", () => {
    const state = activateItem(withReport(initialState(), report), "fluency", "fluency/idea/x");
    expect(state.activeItemRef).toBe("fluency/idea/x");
    expect(state.activeAnalytic).toBe("fluency");
  });

  it("clears the active item when the report is swapped", () => {
    let state = activateItem(withReport(initialState(), report), "fluency", "fluency/idea/x");
    state = withReport(state, { ...report, version: 2 });
    expect(state.activeItemRef).toBeNull();
    expect(state.contestDraft).toBeNull();
  });
});

describe("contest draft", () => {
  function draft(changes: { verdict?: "valid" | "invalid"; rationale?: string; userValue?: string }) {
    let state = startContest(withReport(initialState(), report), "fluency", "fluency/idea/x");
    state = updateDraft(state, changes);
    return state.contestDraft;
  }

  it("blocks an invalid verdict with an empty rationale", () => {
    expect(canSubmitContest(draft({ verdict: "invalid", rationale: "" }))).toBe(false);
    expect(canSubmitContest(draft({ verdict: "invalid", rationale: "   " }))).toBe(false);
    expect(draftBlockReason(draft({ verdict: "invalid", rationale: "" }))).toMatch(/rationale/);
  });

  it("allows an invalid verdict once a rationale exists", () => {
    expect(canSubmitContest(draft({ verdict: "invalid", rationale: "counts noise" }))).toBe(true);
  });

  it("allows a bare valid verdict", () => {
    expect(canSubmitContest(draft({ verdict: "valid", rationale: "" }))).toBe(true);
  });

  it("blocks a valid verdict carrying an alternative value", () => {
    expect(canSubmitContest(draft({ verdict: "valid", userValue: "9" }))).toBe(false);
  });

  it("requires a loaded report to start a challenge", () => {
    expect(() => startContest(initialState(), "fluency", null)).toThrow();
  });
});
