import { describe, expect, it } from "vitest";

import { Viewport, type ScenarioView } from "../src/geo.js";
import { cellColor, heatmapModel, paintHeatmap, type Canvas2DLike } from "../src/heatmap.js";
import type { MapMsg } from "../src/protocol.js";

const VIEW: ScenarioView = {
  zone: 32,
  hemisphere: "N",
  easting: 1000,
  northing: 5000,
  widthM: 100,
  heightM: 100,
};
const vp = new Viewport(VIEW, 100, 100); // scale 1 px/m

function mapOf(cells: MapMsg["cells"]): MapMsg {
  return { type: "map", nodeId: 1, cellSizeM: 10, zone: 32, hemisphere: "N", cells };
}

describe("cellColor", () => {
  it("is linear in count and capped at the maximum", () => {
    expect(cellColor(0, 10)).toBe("hsl(120, 85%, 50%)");
    expect(cellColor(5, 10)).toBe("hsl(60, 85%, 50%)");
    expect(cellColor(10, 10)).toBe("hsl(0, 85%, 50%)");
    expect(cellColor(999, 10)).toBe(cellColor(10, 10));
  });
});

describe("heatmapModel", () => {
  it("places cells by their grid indices", () => {
    // cellX 101 spans easting [1010, 1020); cellY 500 spans northing [5000, 5010)
    const rects = heatmapModel(mapOf([{ cellX: 101, cellY: 500, count: 1, ageMs: 0 }]), 0, 0, vp);
    expect(rects).toHaveLength(1);
    expect(rects[0]!.x).toBeCloseTo(10, 9);
    expect(rects[0]!.y).toBeCloseTo(90, 9);
    expect(rects[0]!.sizePx).toBeCloseTo(10, 9);
  });

  it("passes counts through exactly", () => {
    const counts = [1, 2.640625, 61, 0.1];
    const rects = heatmapModel(
      mapOf(counts.map((c, i) => ({ cellX: 100 + i, cellY: 500, count: c, ageMs: 0 }))),
      0,
      0,
      vp,
    );
    expect(rects.map((r) => r.count)).toEqual(counts);
  });

  it("fades cells whose age has outgrown the ttl", () => {
    const m = mapOf([
      { cellX: 100, cellY: 500, count: 1, ageMs: 9000 },
      { cellX: 101, cellY: 500, count: 1, ageMs: 100 },
    ]);
    // received 2 s ago: 9000 + 2000 > 10000 ttl, 100 + 2000 is fine
    const rects = heatmapModel(m, 10_000, 12_000, vp, { maxCount: 10, mapTtlMs: 10_000 });
    expect(rects[0]!.stale).toBe(true);
    expect(rects[0]!.alpha).toBeLessThan(rects[1]!.alpha);
    expect(rects[1]!.stale).toBe(false);
    expect(rects[0]!.ageMs).toBe(11_000);
  });

  it("never uses a negative elapsed time", () => {
    const rects = heatmapModel(mapOf([{ cellX: 100, cellY: 500, count: 1, ageMs: 50 }]), 2000, 1000, vp);
    expect(rects[0]!.ageMs).toBe(50);
  });
});

describe("paintHeatmap", () => {
  it("replays the model onto a context in order", () => {
    const calls: { style: string; alpha: number; args: number[] }[] = [];
    const ctx: Canvas2DLike = {
      fillStyle: "",
      globalAlpha: 1,
      fillRect(...args: number[]) {
        calls.push({ style: String(this.fillStyle), alpha: this.globalAlpha, args });
      },
    };
    const rects = heatmapModel(
      mapOf([
        { cellX: 100, cellY: 500, count: 2, ageMs: 0 },
        { cellX: 101, cellY: 501, count: 8, ageMs: 0 },
      ]),
      0,
      0,
      vp,
    );
    paintHeatmap(ctx, rects);
    expect(calls).toHaveLength(2);
    expect(calls[0]!.style).toBe(cellColor(2, 10));
    expect(calls[1]!.style).toBe(cellColor(8, 10));
    expect(calls[0]!.args).toEqual([rects[0]!.x, rects[0]!.y, 10, 10]);
    expect(ctx.globalAlpha).toBe(1);
  });
});
