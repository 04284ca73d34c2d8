// Latest-state snapshot the renderer reads. Message handling only ever
// replaces fields; nothing is accumulated, so a render is always a pure
// function of this object and the clock.

import type { BeaconMsg, LagMsg, MapMsg, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "reconnecting" | "closed";

export type UiMode = "inbound" | "export";

export interface UiState {
  status: ConnectionStatus;
  mode: UiMode;
  /** Avatar position. Dragged locally in inbound mode; follows the
   * exported location stream in export mode. */
  own: { lat: number; lon: number } | null;
  dragging: boolean;
  /** Only the most recent density map is ever rendered. */
  map: MapMsg | null;
  mapReceivedAtMs: number;
  /** Latest beacon per node, for the neighbor dots. */
  nodes: Map<number, BeaconMsg>;
  lag: LagMsg | null;
  warning: string | null;
}

export function initialState(mode: UiMode): UiState {
  return {
    status: "connecting",
    mode,
    own: null,
    dragging: false,
    map: null,
    mapReceivedAtMs: 0,
    nodes: new Map(),
    lag: null,
    warning: null,
  };
}

/** Fold one gateway message into the snapshot. Returns true when
 * something visible changed. */
export function applyMessage(st: UiState, msg: ServerMessage, nowMs: number): boolean {
  switch (msg.type) {
    case "beacon":
      st.nodes.set(msg.nodeId, msg);
      return true;
    case "map":
      st.map = msg;
      st.mapReceivedAtMs = nowMs;
      return true;
    case "nodeLocation":
      // While a drag is in flight the local position wins; the stream
      // catches up once the user lets go.
      if (st.mode === "export" && !st.dragging) {
        st.own = { lat: msg.lat, lon: msg.lon };
        return true;
      }
      return false;
    case "lag":
      st.lag = msg;
      return true;
  }
}
