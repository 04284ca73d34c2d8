"""Pedestrian-communication emulation testbed.

A discrete-event simulator (virtual or wall-clock paced) in which walking
pedestrians broadcast position beacons over a threshold radio, aggregate
them into decentralized density maps, and optionally exchange frames with
one real device over UDP plus any number of browser clients over
WebSocket JSON.
"""

from . import wire
from .apps import AppConfig, AppCounters, Node
from .bridge import (
    Bridge,
    BridgeConfig,
    BridgeMode,
    BridgeStats,
    DeviceSession,
    frame_to_json,
    lag_to_json,
    parse_ui_message,
)
from .config import ConfigError, RunConfig, load_config
from .core import (
    CausalityError,
    ClockMode,
    HandlerError,
    LagSample,
    RngStreams,
    RunStats,
    Simulator,
    seconds,
    us,
    write_lag_csv,
)
from .density import (
    Beacon,
    CellEntry,
    CellKey,
    DensityMap,
    DpdConfig,
    NeighborTable,
    cell_key,
    decode_map,
    encode_map,
    local_map,
    merge,
    select_cells,
    write_map_snapshot,
)
from .gateway import UiGateway
from .geo import (
    GeoError,
    GeoPoint,
    OffsetTransform,
    SimPoint,
    UtmPoint,
    quantize,
    utm_to_wgs84,
    utm_zone,
    wgs84_to_utm,
)
from .mobility import (
    NavigationField,
    OsmParams,
    Pedestrian,
    SpawnProcess,
    build_navigation_field,
    draw_free_speed,
    next_step,
)
from .radio import RadioChannel, RadioConfig, max_range_m, pathloss_db
from .scenario import Scenario, ScenarioError, default_scenario, load_scenario, parse_scenario
from .world import EXTERNAL_NODE_ID, PlaceholderNode, RunReport, World

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "AppCounters",
    "Beacon",
    "Bridge",
    "BridgeConfig",
    "BridgeMode",
    "BridgeStats",
    "CausalityError",
    "CellEntry",
    "CellKey",
    "ClockMode",
    "ConfigError",
    "DensityMap",
    "DeviceSession",
    "DpdConfig",
    "EXTERNAL_NODE_ID",
    "GeoError",
    "GeoPoint",
    "HandlerError",
    "LagSample",
    "NavigationField",
    "NeighborTable",
    "Node",
    "OffsetTransform",
    "OsmParams",
    "Pedestrian",
    "PlaceholderNode",
    "RadioChannel",
    "RadioConfig",
    "RngStreams",
    "RunConfig",
    "RunReport",
    "RunStats",
    "Scenario",
    "ScenarioError",
    "SimPoint",
    "Simulator",
    "SpawnProcess",
    "UiGateway",
    "UtmPoint",
    "World",
    "build_navigation_field",
    "cell_key",
    "decode_map",
    "default_scenario",
    "draw_free_speed",
    "encode_map",
    "frame_to_json",
    "lag_to_json",
    "load_config",
    "load_scenario",
    "local_map",
    "max_range_m",
    "merge",
    "next_step",
    "parse_scenario",
    "parse_ui_message",
    "pathloss_db",
    "quantize",
    "seconds",
    "select_cells",
    "us",
    "utm_to_wgs84",
    "utm_zone",
    "wgs84_to_utm",
    "wire",
    "write_lag_csv",
    "write_map_snapshot",
]
