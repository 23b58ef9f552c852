import { describe, expect, it } from "vitest";

import { lineChart, metricSeries, polylineSegments } from "../src/charts.js";
import { buildResult, formatNumber, formatVector, statusLabel } from "../src/format.js";

describe("polylineSegments", () => {
  it("maps a monotone series to monotone pixel coordinates", () => {
    const segments = polylineSegments([0, 1, 2, 3], 100, 50, 10);
    expect(segments).toHaveLength(1);
    const points = segments[0].split(" ").map((pair) => pair.split(",").map(Number));
    const xs = points.map((p) => p[0]);
    const ys = points.map((p) => p[1]);
    for (let i = 1; i < points.length; i++) {
      expect(xs[i]).toBeGreaterThan(xs[i - 1]);
      expect(ys[i]).toBeLessThan(ys[i - 1]); // SVG y axis points down
    }
    expect(Math.min(...xs)).toBeCloseTo(10);
    expect(Math.max(...xs)).toBeCloseTo(90);
  });

  it("splits the polyline at nulls instead of bridging gaps", () => {
    const segments = polylineSegments([1, 2, null, 3, 4], 100, 50, 5);
    expect(segments).toHaveLength(2);
  });

  it("handles a constant series without dividing by zero", () => {
    const segments = polylineSegments([2, 2, 2], 100, 50, 5);
    expect(segments).toHaveLength(1);
    expect(segments[0]).not.toContain("NaN");
  });

  it("returns nothing for all-null input", () => {
    expect(polylineSegments([null, null], 100, 50, 5)).toHaveLength(0);
  });
});

describe("lineChart", () => {
  it("emits an svg with one polyline per segment", () => {
    const svg = lineChart([0, 1, null, 2], { label: "demo" });
    expect(svg).toContain("<svg");
    expect(svg.match(/<polyline/g)).toHaveLength(2);
    expect(svg).toContain("demo");
  });

  it("renders a placeholder when there is no data", () => {
    expect(lineChart([])).toContain("no data");
  });
});

describe("metricSeries", () => {
  it("extracts numbers and masks everything else", () => {
    const rows = [
      { best_feasible: 1.5 },
      { best_feasible: null },
      { best_feasible: NaN },
      { best_feasible: 2.0 },
    ];
    expect(metricSeries(rows, "best_feasible")).toEqual([1.5, null, null, 2.0]);
  });
});

describe("format helpers", () => {
  it("formats numbers with an em-dash fallback", () => {
    expect(formatNumber(1.23456)).toBe("1.2346");
    expect(formatNumber(null)).toBe("—");
    expect(formatNumber(Number.NaN)).toBe("—");
  });

  it("truncates long vectors", () => {
    expect(formatVector([1, 2, 3])).toBe("[1.000, 2.000, 3.000]");
    expect(formatVector(Array(20).fill(0))).toContain("… 14 more");
  });

  it("labels statuses for operators", () => {
    expect(statusLabel("awaiting_observation")).toContain("awaiting");
    expect(statusLabel("mystery")).toBe("mystery");
  });

  it("builds numeric and rating results", () => {
    expect(buildResult(0.5, { kind: "numeric", value: -0.1 })).toEqual({
      y_f: 0.5,
      y_g: -0.1,
    });
    expect(buildResult(0.5, { kind: "rating", value: "safe" })).toEqual({
      y_f: 0.5,
      rating: "safe",
    });
  });
});
