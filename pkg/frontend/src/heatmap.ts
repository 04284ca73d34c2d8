// Density rendering split in two: a pure model (tested) and a trivial
// painter that replays it onto a canvas context. Counts pass through
// untouched; only the color is derived from them.

import type { MapMsg } from "./protocol.js";
import type { Viewport } from "./geo.js";

export interface HeatmapOptions {
  /** Count mapped to the hottest color; everything above is capped. */
  maxCount: number;
  /** Cells older than this are faded, not hidden. */
  mapTtlMs: number;
}

export const DEFAULT_HEATMAP: HeatmapOptions = { maxCount: 10, mapTtlMs: 10000 };

export interface CellRect {
  x: number;
  y: number;
  sizePx: number;
  count: number; // exactly the received value
  ageMs: number; // message age plus time since receipt
  stale: boolean;
  fillStyle: string;
  alpha: number;
}

/** Linear count-to-color ramp, green through yellow to red. */
export function cellColor(count: number, maxCount: number): string {
  const t = Math.min(Math.max(count / maxCount, 0), 1);
  const hue = Math.round(120 * (1 - t));
  return `hsl(${hue}, 85%, 50%)`;
}

export function heatmapModel(
  map: MapMsg,
  receivedAtMs: number,
  nowMs: number,
  view: Viewport,
  opts: HeatmapOptions = DEFAULT_HEATMAP,
): CellRect[] {
  const elapsed = Math.max(0, nowMs - receivedAtMs);
  const sizePx = map.cellSizeM * view.scale;
  const out: CellRect[] = [];
  for (const c of map.cells) {
    // cells are keyed by floor(coordinate / cell size), so the cell
    // spans [cellX*s, (cellX+1)*s) in easting and likewise in northing
    const { x, y } = view.toScreen(c.cellX * map.cellSizeM, (c.cellY + 1) * map.cellSizeM);
    const ageMs = c.ageMs + elapsed;
    const stale = ageMs > opts.mapTtlMs;
    out.push({
      x,
      y,
      sizePx,
      count: c.count,
      ageMs,
      stale,
      fillStyle: cellColor(c.count, opts.maxCount),
      alpha: stale ? 0.25 : 0.85,
    });
  }
  return out;
}

/** The subset of CanvasRenderingContext2D the painter needs. */
export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
}

export function paintHeatmap(ctx: Canvas2DLike, rects: CellRect[]): void {
  for (const r of rects) {
    ctx.globalAlpha = r.alpha;
    ctx.fillStyle = r.fillStyle;
    ctx.fillRect(r.x, r.y, r.sizePx, r.sizePx);
  }
  ctx.globalAlpha = 1;
}
