"""Run configuration: defaults, INI files, and command-line overrides.

Precedence, lowest to highest: built-in defaults, config file keys,
command-line flags. Every flag maps to exactly one ``section.key`` and
wins over the file. Sections mirror the module config dataclasses, so
the INI keys are the dataclass field names.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .apps import AppConfig
from .density import DpdConfig
from .geo import GeoError, UtmPoint
from .mobility import OsmParams
from .radio import RadioConfig

Address = tuple[str, int]

DEFAULT_ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)


class ConfigError(Exception):
    """Bad or unknown configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, resolved and validated."""

    scenario: Optional[str] = None  # path; None means the built-in walking ground
    mode: str = "virtual"
    nodes: int = 6
    duration_s: float = 120.0
    seed: int = 1
    lag_out: Optional[str] = None
    map_out: Optional[str] = None
    report_out: Optional[str] = None
    snapshot_period_s: Optional[float] = None
    inter_arrival_s: float = 60.0
    origin: UtmPoint = field(default_factory=lambda: DEFAULT_ORIGIN)
    radio: RadioConfig = field(default_factory=RadioConfig)
    dpd: DpdConfig = field(default_factory=DpdConfig)
    apps: AppConfig = field(default_factory=AppConfig)
    osm: OsmParams = field(default_factory=OsmParams)
    # the device bridge and browser gateway start only when their
    # endpoints are configured
    bridge_listen: Optional[Address] = None
    bridge_device: Optional[Address] = None
    bridge_mode: str = "export"
    ws_listen: Optional[Address] = None

    def __post_init__(self):
        if self.mode not in ("virtual", "realtime"):
            raise ConfigError(f"run.mode must be virtual or realtime, got {self.mode!r}")
        if self.nodes < 1:
            raise ConfigError(f"run.nodes must be at least 1, got {self.nodes}")
        if not self.duration_s > 0:
            raise ConfigError(f"run.duration_s must be positive, got {self.duration_s}")
        if self.snapshot_period_s is not None and not self.snapshot_period_s > 0:
            raise ConfigError(
                f"run.snapshot_period_s must be positive, got {self.snapshot_period_s}"
            )
        if not self.inter_arrival_s > 0:
            raise ConfigError(
                f"mobility.inter_arrival_s must be positive, got {self.inter_arrival_s}"
            )
        if self.bridge_mode not in ("export", "inbound"):
            raise ConfigError(
                f"bridge.mode must be export or inbound, got {self.bridge_mode!r}"
            )


# -- typed key coercion ------------------------------------------------------------

def _int(raw: str) -> int:
    return int(raw, 10)


def _float(raw: str) -> float:
    value = float(raw)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("not finite")
    return value


def _str(raw: str) -> str:
    return raw


def _address(raw: str) -> Address:
    host, sep, port = raw.rpartition(":")
    if not sep or not host:
        raise ValueError("expected host:port")
    return host, int(port, 10)


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        if raw not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return raw

    return parse


def _fields(cls) -> dict[str, Callable[[str], object]]:
    """INI coercers for a config dataclass, keyed by field name."""
    out: dict[str, Callable[[str], object]] = {}
    for f in dataclasses.fields(cls):
        if f.type in ("int", int):
            out[f.name] = _int
        elif f.type in ("float", float):
            out[f.name] = _float
        else:
            out[f.name] = _str
    return out


# file key -> (RunConfig attribute, coercer); sections mirror the dataclasses
_SCHEMA: dict[str, dict[str, Callable[[str], object]]] = {
    "run": {
        "scenario": _str,
        "mode": _choice("virtual", "realtime"),
        "nodes": _int,
        "duration_s": _float,
        "seed": _int,
        "lag_out": _str,
        "map_out": _str,
        "report_out": _str,
        "snapshot_period_s": _float,
    },
    "geo": {
        "zone": _int,
        "hemisphere": _choice("N", "S"),
        "easting": _float,
        "northing": _float,
    },
    "radio": _fields(RadioConfig),
    "dpd": _fields(DpdConfig),
    "apps": _fields(AppConfig),
    "mobility": {"inter_arrival_s": _float, **_fields(OsmParams)},
    "bridge": {
        "listen": _address,
        "device": _address,
        "mode": _choice("export", "inbound"),
        "ws_listen": _address,
    },
}


def _parse_file(path: str) -> dict[tuple[str, str], str]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    raw: dict[tuple[str, str], str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            raw[(section, key)] = value
    return raw


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Resolve a RunConfig from defaults, an optional INI file, and overrides.

    Overrides are dotted ``section.key`` strings (the CLI's view) and take
    precedence over file keys. Unknown keys and badly typed values raise
    ConfigError naming the key.
    """
    raw = _parse_file(path) if path is not None else {}
    for dotted, value in (overrides or {}).items():
        section, sep, key = dotted.partition(".")
        if not sep:
            raise ConfigError(f"override {dotted!r} is not of the form section.key")
        raw[(section, key)] = value

    values: dict[tuple[str, str], object] = {}
    for (section, key), text in raw.items():
        spec = _SCHEMA.get(section)
        if spec is None:
            raise ConfigError(f"unknown config section [{section}]")
        coerce = spec.get(key)
        if coerce is None:
            raise ConfigError(f"unknown config key {section}.{key}")
        try:
            values[(section, key)] = coerce(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {text!r} ({exc})") from exc

    def section_kwargs(section: str) -> dict[str, object]:
        return {key: v for (s, key), v in values.items() if s == section}

    def build(section: str, cls, **extra):
        try:
            return cls(**section_kwargs(section), **extra)
        except (ValueError, GeoError) as exc:
            raise ConfigError(f"[{section}] {exc}") from exc

    geo = section_kwargs("geo")
    if geo:
        base = {
            "zone": DEFAULT_ORIGIN.zone,
            "hemisphere": DEFAULT_ORIGIN.hemisphere,
            "easting": DEFAULT_ORIGIN.easting,
            "northing": DEFAULT_ORIGIN.northing,
        }
        base.update(geo)
        try:
            origin = UtmPoint(**base)
        except GeoError as exc:
            raise ConfigError(f"[geo] {exc}") from exc
    else:
        origin = DEFAULT_ORIGIN

    mobility = section_kwargs("mobility")
    inter_arrival_s = mobility.pop("inter_arrival_s", 60.0)
    try:
        osm = OsmParams(**mobility)
    except ValueError as exc:
        raise ConfigError(f"[mobility] {exc}") from exc

    bridge = section_kwargs("bridge")
    run = section_kwargs("run")
    return RunConfig(
        origin=origin,
        radio=build("radio", RadioConfig),
        dpd=build("dpd", DpdConfig),
        apps=build("apps", AppConfig),
        osm=osm,
        inter_arrival_s=inter_arrival_s,
        bridge_listen=bridge.get("listen"),
        bridge_device=bridge.get("device"),
        bridge_mode=bridge.get("mode", "export"),
        ws_listen=bridge.get("ws_listen"),
        **run,
    )
