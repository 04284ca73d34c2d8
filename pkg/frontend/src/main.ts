// Page wiring: URL config, DOM, pointer handling, render loop. All the
// logic that deserves tests lives in the imported modules; this file
// only connects them to a browser.

import { GatewayClient } from "./client.js";
import { DragThrottle } from "./drag.js";
import {
  FALSE_NORTHING_SOUTH,
  Viewport,
  utmToWgs84,
  wgs84ToUtmInZone,
  type Hemisphere,
  type ScenarioView,
} from "./geo.js";
import { DEFAULT_HEATMAP, heatmapModel, paintHeatmap, type HeatmapOptions } from "./heatmap.js";
import { setPositionJson } from "./protocol.js";
import { applyMessage, initialState, type UiMode } from "./state.js";

function param(name: string, fallback: string): string {
  const v = new URLSearchParams(window.location.search).get(name);
  return v === null || v === "" ? fallback : v;
}

const mode = (param("mode", "inbound") === "export" ? "export" : "inbound") as UiMode;
const view: ScenarioView = {
  zone: Number(param("zone", "32")),
  hemisphere: (param("hemi", "N") === "S" ? "S" : "N") as Hemisphere,
  easting: Number(param("easting", "691000")),
  northing: Number(param("northing", "5336000")),
  widthM: Number(param("width", "415")),
  heightM: Number(param("height", "394")),
};
const heatOpts: HeatmapOptions = {
  maxCount: Number(param("maxCount", String(DEFAULT_HEATMAP.maxCount))),
  mapTtlMs: Number(param("ttlMs", String(DEFAULT_HEATMAP.mapTtlMs))),
};
const wsUrl = param("ws", "ws://127.0.0.1:8080");

/** Absolute northing in the view's hemisphere convention. */
function toViewUtm(lat: number, lon: number): { easting: number; northing: number } {
  const p = wgs84ToUtmInZone(lat, lon, view.zone);
  const northing = p.northingSigned + (view.hemisphere === "S" ? FALSE_NORTHING_SOUTH : 0);
  return { easting: p.easting, northing };
}

const banner = document.getElementById("banner") as HTMLDivElement;
const lagChip = document.getElementById("lag") as HTMLSpanElement;
const hint = document.getElementById("hint") as HTMLSpanElement;
const warnBox = document.getElementById("warning") as HTMLSpanElement;
const canvas = document.getElementById("map") as HTMLCanvasElement;

const maxW = Math.min(window.innerWidth - 48, 900);
canvas.width = maxW;
canvas.height = Math.round((maxW * view.heightM) / view.widthM);
const viewport = new Viewport(view, canvas.width, canvas.height);

const st = initialState(mode);
hint.textContent =
  mode === "inbound" ? "drag on the map to move your node" : "export mode: the avatar follows the simulation";

let dirty = false;
function schedule(): void {
  if (dirty) return;
  dirty = true;
  requestAnimationFrame(() => {
    dirty = false;
    draw();
  });
}

const client = new GatewayClient(wsUrl, {
  onMessage(msg) {
    if (applyMessage(st, msg, Date.now())) schedule();
    if (msg.type === "lag") updateLagChip();
  },
  onStatus(status) {
    st.status = status;
    banner.dataset.status = status;
    banner.textContent =
      status === "connected" ? `connected to ${wsUrl}` :
      status === "connecting" ? `connecting to ${wsUrl}...` :
      status === "reconnecting" ? `connection lost, reconnecting to ${wsUrl}...` :
      "closed";
    schedule();
  },
});

function updateLagChip(): void {
  if (st.lag === null) return;
  const off = st.lag.offsetS;
  lagChip.textContent = `lag ${off >= 0 ? "+" : ""}${off.toFixed(3)} s`;
  lagChip.dataset.level = Math.abs(off) < 0.5 ? "ok" : Math.abs(off) < 5 ? "warn" : "bad";
}

// -- drawing ---------------------------------------------------------------

function draw(): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  if (st.map !== null) {
    paintHeatmap(ctx, heatmapModel(st.map, st.mapReceivedAtMs, Date.now(), viewport, heatOpts));
  }

  // fleet beacons as dots
  ctx.globalAlpha = 1;
  for (const b of st.nodes.values()) {
    if (b.zone !== view.zone) continue;
    const { x, y } = viewport.toScreen(b.easting, b.northing);
    ctx.fillStyle = "#9ecbff";
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  // own avatar
  if (st.own !== null) {
    const u = toViewUtm(st.own.lat, st.own.lon);
    const { x, y } = viewport.toScreen(u.easting, u.northing);
    ctx.strokeStyle = st.dragging ? "#ffd966" : "#ffffff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = "#ff5544";
    ctx.beginPath();
    ctx.arc(x, y, 3.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

// -- dragging (inbound only) -------------------------------------------------

const throttle = new DragThrottle((lat, lon) => {
  client.send(setPositionJson(lat, lon));
});

function pointerLatLon(ev: PointerEvent): { lat: number; lon: number } {
  const r = canvas.getBoundingClientRect();
  const utm = viewport.toUtm(ev.clientX - r.left, ev.clientY - r.top);
  const c = viewport.clamp(utm.easting, utm.northing);
  if (c.clamped) {
    st.warning = "outside the area, clamped to the edge";
  } else {
    st.warning = null;
  }
  warnBox.textContent = st.warning ?? "";
  return utmToWgs84({ zone: view.zone, hemisphere: view.hemisphere, easting: c.easting, northing: c.northing });
}

if (mode === "inbound") {
  canvas.style.cursor = "crosshair";
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    st.dragging = true;
    const p = pointerLatLon(ev);
    st.own = p;
    throttle.start(p.lat, p.lon);
    schedule();
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!st.dragging) return;
    const p = pointerLatLon(ev);
    st.own = p;
    throttle.move(p.lat, p.lon);
    schedule();
  });
  const finish = () => {
    if (!st.dragging) return;
    st.dragging = false;
    throttle.end(); // final position persists
    schedule();
  };
  canvas.addEventListener("pointerup", finish);
  canvas.addEventListener("pointercancel", finish);
}

// stale fading progresses even when no messages arrive
setInterval(schedule, 1000);

client.connect();
schedule();
