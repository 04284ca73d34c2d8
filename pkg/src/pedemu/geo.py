"""Coordinate transforms: WGS84 <-> UTM <-> local simulation frame.

The projection is a transverse Mercator evaluated with 6th-order
Krueger series in the third flattening, giving sub-millimeter accuracy
anywhere inside a UTM zone. The local simulation frame is a pure
translation of the zone's easting/northing, carried out on an integer
micrometer lattice so that sim -> UTM -> sim round trips are exact for
micrometer-resolution coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# WGS84 ellipsoid
_A = 6378137.0
_F = 1.0 / 298.257223563
_N = _F / (2.0 - _F)                     # third flattening
_E2 = _F * (2.0 - _F)                    # eccentricity squared
_E = math.sqrt(_E2)

K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

# Rectifying radius: A = a/(1+n) (1 + n^2/4 + n^4/64 + n^6/256)
_RECT_RADIUS = _A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)

# Krueger series coefficients to n^6 (forward: alpha, inverse: beta).
_ALPHA = (
    _N * (1/2 + _N * (-2/3 + _N * (5/16 + _N * (41/180 + _N * (-127/288 + _N * (7891/37800)))))),
    _N**2 * (13/48 + _N * (-3/5 + _N * (557/1440 + _N * (281/630 + _N * (-1983433/1935360))))),
    _N**3 * (61/240 + _N * (-103/140 + _N * (15061/26880 + _N * (167603/181440)))),
    _N**4 * (49561/161280 + _N * (-179/168 + _N * (6601661/7257600))),
    _N**5 * (34729/80640 + _N * (-3418889/1995840)),
    _N**6 * (212378941/319334400),
)
_BETA = (
    _N * (1/2 + _N * (-2/3 + _N * (37/96 + _N * (-1/360 + _N * (-81/512 + _N * (96199/604800)))))),
    _N**2 * (1/48 + _N * (1/15 + _N * (-437/1440 + _N * (46/105 + _N * (-1118711/3870720))))),
    _N**3 * (17/480 + _N * (-37/840 + _N * (-209/4480 + _N * (5569/90720)))),
    _N**4 * (4397/161280 + _N * (-11/504 + _N * (-830251/7257600))),
    _N**5 * (4583/161280 + _N * (-108847/3991680)),
    _N**6 * (20648693/638668800),
)

# Latitude band where the UTM projection is defined.
UTM_LAT_MIN = -80.0
UTM_LAT_MAX = 84.0

_UM = 1_000_000  # micrometers per meter


class GeoError(ValueError):
    """Invalid coordinate or an operation outside its validity region."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 geographic coordinates in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise GeoError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon < 180.0):
            raise GeoError(f"longitude {self.lon} outside [-180, 180)")


@dataclass(frozen=True)
class UtmPoint:
    """UTM grid coordinates: zone 1..60, hemisphere 'N'/'S', meters."""

    zone: int
    hemisphere: str
    easting: float
    northing: float

    def __post_init__(self):
        if not (1 <= self.zone <= 60):
            raise GeoError(f"UTM zone {self.zone} outside 1..60")
        if self.hemisphere not in ("N", "S"):
            raise GeoError(f"hemisphere must be 'N' or 'S', got {self.hemisphere!r}")
        if not (100000.0 < self.easting < 900000.0):
            raise GeoError(f"easting {self.easting} outside (100000, 900000)")
        if not (0.0 <= self.northing < 10000000.0):
            raise GeoError(f"northing {self.northing} outside [0, 10000000)")


@dataclass(frozen=True)
class SimPoint:
    """Local scenario coordinates in meters, y increasing north."""

    x: float
    y: float


def utm_zone(lon: float) -> int:
    return int(math.floor((lon + 180.0) / 6.0)) + 1


def zone_central_meridian(zone: int) -> float:
    return zone * 6.0 - 183.0


def _tm_forward(lat_rad, lon_off_rad):
    """Transverse Mercator core, array-friendly. Returns (x, y) in meters
    before scale/false offsets, relative to the given central meridian."""
    tau = np.tan(lat_rad)
    sigma = np.sinh(_E * np.arctanh(_E * tau / np.hypot(1.0, tau)))
    taup = tau * np.hypot(1.0, sigma) - sigma * np.hypot(1.0, tau)
    xi = np.arctan2(taup, np.cos(lon_off_rad))
    eta = np.arcsinh(np.sin(lon_off_rad) / np.hypot(taup, np.cos(lon_off_rad)))
    xi_s, eta_s = xi, eta
    for j, a in enumerate(_ALPHA, start=1):
        xi_s = xi_s + a * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_s = eta_s + a * np.cos(2 * j * xi) * np.sinh(2 * j * eta)
    return _RECT_RADIUS * eta_s, _RECT_RADIUS * xi_s


def _tm_inverse(x, y):
    """Inverse of :func:`_tm_forward`. Returns (lat_rad, lon_off_rad)."""
    eta = np.asarray(x, dtype=float) / _RECT_RADIUS
    xi = np.asarray(y, dtype=float) / _RECT_RADIUS
    xi_p, eta_p = xi, eta
    for j, b in enumerate(_BETA, start=1):
        xi_p = xi_p - b * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_p = eta_p - b * np.cos(2 * j * xi) * np.sinh(2 * j * eta)
    taup = np.sin(xi_p) / np.hypot(np.sinh(eta_p), np.cos(xi_p))
    lon_off = np.arctan2(np.sinh(eta_p), np.cos(xi_p))
    # Newton-solve tan(lat) from the conformal tangent.
    tau = taup / (1.0 - _E2)
    for _ in range(6):
        sigma = np.sinh(_E * np.arctanh(_E * tau / np.hypot(1.0, tau)))
        taup_i = tau * np.hypot(1.0, sigma) - sigma * np.hypot(1.0, tau)
        dtau = (
            (taup - taup_i)
            * (1.0 + (1.0 - _E2) * tau * tau)
            / ((1.0 - _E2) * np.hypot(1.0, taup_i) * np.hypot(1.0, tau))
        )
        tau = tau + dtau
        if np.all(np.abs(dtau) < 1e-16):
            break
    return np.arctan(tau), lon_off


def wgs84_to_utm_arrays(lat_deg, lon_deg, zone: int):
    """Vectorized forward projection into a fixed zone.

    Returns (easting, northing_signed) where northing is negative south of
    the equator (no false northing applied).
    """
    lat = np.radians(np.asarray(lat_deg, dtype=float))
    lon_off = np.radians(np.asarray(lon_deg, dtype=float) - zone_central_meridian(zone))
    x, y = _tm_forward(lat, lon_off)
    return FALSE_EASTING + K0 * x, K0 * y


def utm_to_wgs84_arrays(easting, northing_signed, zone: int):
    """Vectorized inverse projection. Northing is signed (no false northing)."""
    x = (np.asarray(easting, dtype=float) - FALSE_EASTING) / K0
    y = np.asarray(northing_signed, dtype=float) / K0
    lat, lon_off = _tm_inverse(x, y)
    return np.degrees(lat), np.degrees(lon_off) + zone_central_meridian(zone)


def wgs84_to_utm(p: GeoPoint) -> UtmPoint:
    """Project a WGS84 point to UTM in the zone containing its longitude."""
    if not (UTM_LAT_MIN < p.lat < UTM_LAT_MAX):
        raise GeoError(f"latitude {p.lat} outside UTM band ({UTM_LAT_MIN}, {UTM_LAT_MAX})")
    zone = utm_zone(p.lon)
    e, n = wgs84_to_utm_arrays(p.lat, p.lon, zone)
    e = float(e)
    n = float(n)
    if p.lat >= 0.0:
        return UtmPoint(zone, "N", e, n)
    return UtmPoint(zone, "S", e, n + FALSE_NORTHING_SOUTH)


def utm_to_wgs84(p: UtmPoint) -> GeoPoint:
    """Inverse projection of a UTM point back to WGS84 degrees."""
    n = p.northing - (FALSE_NORTHING_SOUTH if p.hemisphere == "S" else 0.0)
    lat, lon = utm_to_wgs84_arrays(p.easting, n, p.zone)
    return GeoPoint(float(lat), float(lon))


def _to_um(meters: float) -> int:
    return round(meters * _UM)


def quantize(p: SimPoint) -> SimPoint:
    """Snap a position to the micrometer lattice the UTM translation runs
    on. Positions created on the lattice round-trip sim<->UTM bitwise."""
    return SimPoint(_to_um(p.x) / _UM, _to_um(p.y) / _UM)


class OffsetTransform:
    """Translation between the local simulation frame and UTM.

    ``origin`` is the UTM point mapped to SimPoint(0, 0). The translation
    is evaluated on an integer micrometer lattice, so utm_to_sim is the
    exact inverse of sim_to_utm for micrometer-resolution inputs.
    """

    def __init__(self, origin: UtmPoint):
        self.origin = origin
        self._oe_um = _to_um(origin.easting)
        self._on_um = _to_um(origin.northing)

    def sim_to_utm(self, p: SimPoint) -> UtmPoint:
        e = (self._oe_um + _to_um(p.x)) / _UM
        n = (self._on_um + _to_um(p.y)) / _UM
        try:
            return UtmPoint(self.origin.zone, self.origin.hemisphere, e, n)
        except GeoError as exc:
            raise GeoError(f"point {p} leaves the scenario UTM zone: {exc}") from exc

    def utm_to_sim(self, p: UtmPoint) -> SimPoint:
        if p.zone != self.origin.zone or p.hemisphere != self.origin.hemisphere:
            raise GeoError(
                f"zone crossing: point in {p.zone}{p.hemisphere}, "
                f"scenario uses {self.origin.zone}{self.origin.hemisphere}"
            )
        x = (_to_um(p.easting) - self._oe_um) / _UM
        y = (_to_um(p.northing) - self._on_um) / _UM
        return SimPoint(x, y)

    def sim_to_wgs84(self, p: SimPoint) -> GeoPoint:
        return utm_to_wgs84(self.sim_to_utm(p))

    def wgs84_to_sim(self, p: GeoPoint) -> SimPoint:
        return self.utm_to_sim(wgs84_to_utm(p))
