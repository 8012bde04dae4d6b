// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { buildRows, cellText, renderTable, sortRows } from "../src/table.js";
import type { Rollup, RollupAggregate } from "../src/types.js";

function aggregate(overrides: Partial<RollupAggregate> = {}): RollupAggregate {
  return {
    doc_ids: ["d1"],
    report_count: 1,
    mean_scores: {},
    annotation_counts: { open: 0, touched: 0, addressed: 0, validated: 0 },
    recurrent_problems: [],
    ...overrides,
  };
}

const rollup: Rollup = {
  schema_version: 1,
  course: aggregate({ doc_ids: ["d1", "d2"], report_count: 2 }),
  teams: {
    alpha: aggregate({ mean_scores: { visual_consistency: 0.8333333333333334, fluency: 31 } }),
  },
  students: {
    amy: aggregate({ mean_scores: { visual_consistency: 0.5, fluency: 10 } }),
    ben: aggregate({ mean_scores: { visual_consistency: 0.9, fluency: 4 } }),
    cal: aggregate({ mean_scores: { fluency: 7 } }),
  },
};

describe("table rows", () => {
  it("builds student rows sorted by key", () => {
    const rows = buildRows(rollup, "student");
    expect(rows.map((r) => r.key)).toEqual(["amy", "ben", "cal"]);
  });

  it("sorts numerically by analytic column", () => {
    const rows = buildRows(rollup, "student");
    const sorted = sortRows(rows, "visual_consistency", false);
    expect(sorted.map((r) => r.key)).toEqual(["amy", "ben", "cal"]);
    const descending = sortRows(rows, "visual_consistency", true);
    expect(descending.map((r) => r.key)).toEqual(["ben", "amy", "cal"]);
  });

  it("keeps missing scores last in both directions", () => {
    const rows = buildRows(rollup, "student");
    expect(sortRows(rows, "visual_consistency", true).at(-1)?.key).toBe("cal");
    expect(sortRows(rows, "visual_consistency", false).at(-1)?.key).toBe("cal");
  });

  it("shows service values verbatim, no rounding", () => {
    expect(cellText(0.8333333333333334)).toBe("0.8333333333333334");
    expect(cellText(31)).toBe("31");
    expect(cellText(undefined)).toBe("–");
  });
});

describe("table rendering", () => {
  it("renders one row per entry with exact cell text", () => {
    const container = document.createElement("div");
    renderTable(container, buildRows(rollup, "team"));
    const cells = container.querySelectorAll("td[data-analytic=visual_consistency]");
    expect(cells).toHaveLength(1);
    expect(cells[0].textContent).toBe("0.8333333333333334");
  });

  it("renders an empty state", () => {
    const container = document.createElement("div");
    renderTable(container, []);
    expect(container.querySelector(".empty-state")).not.toBeNull();
  });

  it("drill callback receives the clicked row", () => {
    const container = document.createElement("div");
    let drilled: string | null = null;
    renderTable(container, buildRows(rollup, "student"), {
      onDrill: (row) => {
        drilled = row.key;
      },
    });
    (container.querySelector("td.drill") as HTMLTableCellElement).click();
    expect(drilled).toBe("amy");
  });
});
