// JSON messages exchanged with the gateway. Field names and units match
// what the server emits; values are kept exactly as received.

export type Hemisphere = "N" | "S";

export interface MapCell {
  cellX: number;
  cellY: number;
  count: number;
  ageMs: number;
}

export interface BeaconMsg {
  type: "beacon";
  nodeId: number;
  zone: number;
  hemisphere: Hemisphere;
  easting: number;
  northing: number;
  timestampMs: number;
}

export interface MapMsg {
  type: "map";
  nodeId: number;
  cellSizeM: number;
  zone: number;
  hemisphere: Hemisphere;
  cells: MapCell[];
}

export interface NodeLocationMsg {
  type: "nodeLocation";
  nodeId: number;
  lat: number;
  lon: number;
  simTimeUs: number;
}

export interface LagMsg {
  type: "lag";
  tRealS: number;
  tSimS: number;
  offsetS: number;
}

export type ServerMessage = BeaconMsg | MapMsg | NodeLocationMsg | LagMsg;

function num(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function hemi(v: unknown): v is Hemisphere {
  return v === "N" || v === "S";
}

function isCell(v: unknown): v is MapCell {
  if (typeof v !== "object" || v === null) return false;
  const c = v as Record<string, unknown>;
  return num(c.cellX) && num(c.cellY) && num(c.count) && num(c.ageMs);
}

/** Parse one gateway message. Anything malformed or unknown yields null;
 * the stream must survive garbage without throwing. */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) return null;
  const m = raw as Record<string, unknown>;
  switch (m.type) {
    case "beacon":
      if (num(m.nodeId) && num(m.zone) && hemi(m.hemisphere) &&
          num(m.easting) && num(m.northing) && num(m.timestampMs)) {
        return m as unknown as BeaconMsg;
      }
      return null;
    case "map":
      if (num(m.nodeId) && num(m.cellSizeM) && m.cellSizeM > 0 &&
          num(m.zone) && hemi(m.hemisphere) &&
          Array.isArray(m.cells) && m.cells.every(isCell)) {
        return m as unknown as MapMsg;
      }
      return null;
    case "nodeLocation":
      if (num(m.nodeId) && num(m.lat) && num(m.lon) && num(m.simTimeUs)) {
        return m as unknown as NodeLocationMsg;
      }
      return null;
    case "lag":
      if (num(m.tRealS) && num(m.tSimS) && num(m.offsetS)) {
        return m as unknown as LagMsg;
      }
      return null;
    default:
      return null;
  }
}

/** The one message this client ever sends. */
export function setPositionJson(lat: number, lon: number): string {
  return JSON.stringify({ type: "setPosition", lat, lon });
}
