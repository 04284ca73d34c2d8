// WGS84 <-> UTM, scalar transverse Mercator with 6th-order series in the
// third flattening. The avatar arrives as lat/lon while density cells are
// indexed in UTM meters, so the client has to speak both. Accuracy is
// sub-millimeter inside a zone, verified against an independent
// implementation in the test suite.

export type Hemisphere = "N" | "S";

export interface UtmCoord {
  zone: number;
  hemisphere: Hemisphere;
  easting: number;
  northing: number;
}

const A = 6378137.0;
const F = 1 / 298.257223563;
const N = F / (2 - F); // third flattening
const E2 = F * (2 - F);
const E = Math.sqrt(E2);

export const K0 = 0.9996;
export const FALSE_EASTING = 500000.0;
export const FALSE_NORTHING_SOUTH = 10000000.0;

const RECT_RADIUS = (A / (1 + N)) * (1 + (N * N) / 4 + N ** 4 / 64 + N ** 6 / 256);

const ALPHA = [
  N * (1 / 2 + N * (-2 / 3 + N * (5 / 16 + N * (41 / 180 + N * (-127 / 288 + N * (7891 / 37800)))))),
  N ** 2 * (13 / 48 + N * (-3 / 5 + N * (557 / 1440 + N * (281 / 630 + N * (-1983433 / 1935360))))),
  N ** 3 * (61 / 240 + N * (-103 / 140 + N * (15061 / 26880 + N * (167603 / 181440)))),
  N ** 4 * (49561 / 161280 + N * (-179 / 168 + N * (6601661 / 7257600))),
  N ** 5 * (34729 / 80640 + N * (-3418889 / 1995840)),
  N ** 6 * (212378941 / 319334400),
];
const BETA = [
  N * (1 / 2 + N * (-2 / 3 + N * (37 / 96 + N * (-1 / 360 + N * (-81 / 512 + N * (96199 / 604800)))))),
  N ** 2 * (1 / 48 + N * (1 / 15 + N * (-437 / 1440 + N * (46 / 105 + N * (-1118711 / 3870720))))),
  N ** 3 * (17 / 480 + N * (-37 / 840 + N * (-209 / 4480 + N * (5569 / 90720)))),
  N ** 4 * (4397 / 161280 + N * (-11 / 504 + N * (-830251 / 7257600))),
  N ** 5 * (4583 / 161280 + N * (-108847 / 3991680)),
  N ** 6 * (20648693 / 638668800),
];

export function utmZone(lon: number): number {
  return Math.floor((lon + 180) / 6) + 1;
}

export function zoneCentralMeridian(zone: number): number {
  return zone * 6 - 183;
}

function tmForward(latRad: number, lonOffRad: number): [number, number] {
  const tau = Math.tan(latRad);
  const sigma = Math.sinh(E * Math.atanh((E * tau) / Math.hypot(1, tau)));
  const taup = tau * Math.hypot(1, sigma) - sigma * Math.hypot(1, tau);
  const xi = Math.atan2(taup, Math.cos(lonOffRad));
  const eta = Math.asinh(Math.sin(lonOffRad) / Math.hypot(taup, Math.cos(lonOffRad)));
  let xiS = xi;
  let etaS = eta;
  for (let j = 1; j <= 6; j++) {
    const a = ALPHA[j - 1]!;
    xiS += a * Math.sin(2 * j * xi) * Math.cosh(2 * j * eta);
    etaS += a * Math.cos(2 * j * xi) * Math.sinh(2 * j * eta);
  }
  return [RECT_RADIUS * etaS, RECT_RADIUS * xiS];
}

function tmInverse(x: number, y: number): [number, number] {
  const eta = x / RECT_RADIUS;
  const xi = y / RECT_RADIUS;
  let xiP = xi;
  let etaP = eta;
  for (let j = 1; j <= 6; j++) {
    const b = BETA[j - 1]!;
    xiP -= b * Math.sin(2 * j * xi) * Math.cosh(2 * j * eta);
    etaP -= b * Math.cos(2 * j * xi) * Math.sinh(2 * j * eta);
  }
  const taup = Math.sin(xiP) / Math.hypot(Math.sinh(etaP), Math.cos(xiP));
  const lonOff = Math.atan2(Math.sinh(etaP), Math.cos(xiP));
  // Newton-solve tan(lat) from the conformal tangent.
  let tau = taup / (1 - E2);
  for (let i = 0; i < 6; i++) {
    const sigma = Math.sinh(E * Math.atanh((E * tau) / Math.hypot(1, tau)));
    const taupI = tau * Math.hypot(1, sigma) - sigma * Math.hypot(1, tau);
    const dtau =
      ((taup - taupI) * (1 + (1 - E2) * tau * tau)) /
      ((1 - E2) * Math.hypot(1, taupI) * Math.hypot(1, tau));
    tau += dtau;
    if (Math.abs(dtau) < 1e-16) break;
  }
  return [Math.atan(tau), lonOff];
}

const DEG = Math.PI / 180;

/** Forward projection into a fixed zone; northing is signed (no false
 * northing), negative south of the equator. */
export function wgs84ToUtmInZone(lat: number, lon: number, zone: number): { easting: number; northingSigned: number } {
  const [x, y] = tmForward(lat * DEG, (lon - zoneCentralMeridian(zone)) * DEG);
  return { easting: FALSE_EASTING + K0 * x, northingSigned: K0 * y };
}

export function wgs84ToUtm(lat: number, lon: number): UtmCoord {
  const zone = utmZone(lon);
  const { easting, northingSigned } = wgs84ToUtmInZone(lat, lon, zone);
  if (lat >= 0) return { zone, hemisphere: "N", easting, northing: northingSigned };
  return { zone, hemisphere: "S", easting, northing: northingSigned + FALSE_NORTHING_SOUTH };
}

export function utmToWgs84(u: UtmCoord): { lat: number; lon: number } {
  const n = u.northing - (u.hemisphere === "S" ? FALSE_NORTHING_SOUTH : 0);
  const [latRad, lonOff] = tmInverse((u.easting - FALSE_EASTING) / K0, n / K0);
  return { lat: latRad / DEG, lon: lonOff / DEG + zoneCentralMeridian(u.zone) };
}

// -- scenario viewport ---------------------------------------------------

/** The rectangle of world the canvas shows: a UTM anchor for the lower
 * left corner plus extent in meters. Matches the run's geo section. */
export interface ScenarioView {
  zone: number;
  hemisphere: Hemisphere;
  easting: number;
  northing: number;
  widthM: number;
  heightM: number;
}

export class Viewport {
  readonly scale: number; // px per meter

  constructor(readonly view: ScenarioView, readonly pxWidth: number, readonly pxHeight: number) {
    this.scale = Math.min(pxWidth / view.widthM, pxHeight / view.heightM);
  }

  /** Screen y grows down, northing grows up. */
  toScreen(easting: number, northing: number): { x: number; y: number } {
    return {
      x: (easting - this.view.easting) * this.scale,
      y: (this.view.northing + this.view.heightM - northing) * this.scale,
    };
  }

  toUtm(x: number, y: number): { easting: number; northing: number } {
    return {
      easting: this.view.easting + x / this.scale,
      northing: this.view.northing + this.view.heightM - y / this.scale,
    };
  }

  /** Keep a point inside the scenario rectangle; reports whether it moved. */
  clamp(easting: number, northing: number): { easting: number; northing: number; clamped: boolean } {
    const e = Math.min(Math.max(easting, this.view.easting), this.view.easting + this.view.widthM);
    const n = Math.min(Math.max(northing, this.view.northing), this.view.northing + this.view.heightM);
    return { easting: e, northing: n, clamped: e !== easting || n !== northing };
  }
}
