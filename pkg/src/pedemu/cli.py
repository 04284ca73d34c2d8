"""Command line entry points: scenario runs and lag trace summaries.

``pedemu run`` wires the full stack (world, radio, apps, optional device
bridge and browser gateway), executes in virtual or real-time mode, and
writes the requested CSVs plus a JSON run report. ``pedemu lag-report``
summarises a lag CSV produced by a real-time run.

Flag precedence: every flag overrides the matching config-file key
(--nodes beats run.nodes, --listen-udp beats bridge.listen, and so on);
file keys override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import signal
import statistics
import sys
from typing import Optional

from .bridge import Bridge, BridgeConfig, BridgeMode, lag_to_json, parse_ui_message
from .config import ConfigError, RunConfig, load_config
from .core import ClockMode, RngStreams, Simulator, us, write_lag_csv
from .gateway import UiGateway
from .geo import OffsetTransform
from .mobility import SpawnProcess
from .scenario import ScenarioError, default_scenario, load_scenario
from .world import World

LAG_THRESHOLDS_S = (0.5, 5.0)


def run(cfg: RunConfig, out=None) -> int:
    """Execute one configured run; returns the process exit code."""
    out = out if out is not None else sys.stdout
    scenario = load_scenario(cfg.scenario) if cfg.scenario else default_scenario()
    sim = Simulator()
    map_file = open(cfg.map_out, "w") if cfg.map_out is not None else None
    world = World(
        sim,
        scenario,
        OffsetTransform(cfg.origin),
        RngStreams(cfg.seed),
        radio_cfg=cfg.radio,
        app_cfg=cfg.apps,
        dpd_cfg=cfg.dpd,
        osm_params=cfg.osm,
        spawn=SpawnProcess(max_peds=cfg.nodes, inter_arrival_s=cfg.inter_arrival_s),
        map_out=map_file,
        snapshot_period_s=cfg.snapshot_period_s,
    )
    world.install()

    gateway: Optional[UiGateway] = None
    bridge: Optional[Bridge] = None
    if cfg.bridge_listen is not None:
        bridge = Bridge(
            sim,
            world,
            BridgeConfig(
                listen=cfg.bridge_listen,
                device=cfg.bridge_device,
                mode=BridgeMode(cfg.bridge_mode),
            ),
        )
    if cfg.ws_listen is not None:
        def on_ui_message(text: str) -> None:
            point = parse_ui_message(text)
            if point is not None and bridge is not None:
                bridge.set_position(*point)

        gateway = UiGateway(*cfg.ws_listen, on_message=on_ui_message)
        if bridge is not None:
            bridge.json_sink = gateway.broadcast

    mode = ClockMode.REAL_TIME if cfg.mode == "realtime" else ClockMode.VIRTUAL
    on_lag = None
    if gateway is not None and mode is ClockMode.REAL_TIME:
        on_lag = lambda sample: gateway.broadcast(lag_to_json(sample))

    def on_signal(signum, frame):
        sim.request_stop()

    previous = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            previous[sig] = signal.signal(sig, on_signal)
        except ValueError:
            pass  # not on the main thread; tests drive run() directly

    try:
        if bridge is not None:
            bridge.start()
        if gateway is not None:
            gateway.start()
            print(f"browser gateway on ws://{gateway.address[0]}:{gateway.address[1]}",
                  file=out)
        if bridge is not None:
            host, port = bridge.listen_address
            print(f"device bridge ({cfg.bridge_mode}) on udp://{host}:{port}", file=out)
        print(world.radio_range_note(), file=out)

        stats = sim.run_until(us(cfg.duration_s), mode=mode, on_lag_sample=on_lag)
    finally:
        if gateway is not None:
            gateway.stop()
        if bridge is not None:
            bridge.stop()
        if map_file is not None:
            map_file.close()
        for sig, handler in previous.items():
            signal.signal(sig, handler)

    if cfg.lag_out is not None and mode is ClockMode.REAL_TIME:
        write_lag_csv(cfg.lag_out, stats.lag)
        print(f"lag trace: {cfg.lag_out} ({len(stats.lag)} samples)", file=out)
    if cfg.map_out is not None:
        print(f"map snapshots: {cfg.map_out}", file=out)

    report = world.finish(stats)
    doc = report.to_dict()
    if bridge is not None:
        doc["bridge"] = bridge.stats.as_dict()
    if cfg.report_out is not None:
        with open(cfg.report_out, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
        print(f"run report: {cfg.report_out}", file=out)
    else:
        json.dump(doc, out, indent=2, sort_keys=True)
        out.write("\n")
    print(f"done: {stats.events_executed} events, t_end {stats.t_end / 1e6:.3f} s, "
          f"wall {stats.wall_seconds:.3f} s", file=out)
    return 0


def lag_report(path: str, out=None, err=None) -> int:
    """Summarise a lag CSV: max, median, fraction of samples over thresholds."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    offsets: list[float] = []
    bad = 0
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=err)
        return 2
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1 and line.startswith("t_real"):
            continue  # header
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            if len(parts) != 3:
                raise ValueError(f"expected 3 columns, got {len(parts)}")
            offsets.append(float(parts[2]))
        except ValueError as exc:
            bad += 1
            print(f"{path}:{lineno}: malformed row: {exc}", file=err)
    if not offsets:
        print(f"{path}: no lag samples", file=err)
        return 2

    magnitudes = sorted(abs(o) for o in offsets)
    print(f"samples {len(offsets)}", file=out)
    if bad:
        print(f"malformed_rows {bad}", file=out)
    print(f"max_offset_s {max(magnitudes):.6f}", file=out)
    print(f"median_offset_s {statistics.median(magnitudes):.6f}", file=out)
    for threshold in LAG_THRESHOLDS_S:
        over = sum(1 for m in magnitudes if m > threshold)
        print(f"frac_over_{threshold:g}s {over / len(offsets):.6f}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedemu",
        description="Pedestrian communication testbed runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute a scenario")
    runp.add_argument("--config", help="INI config file")
    runp.add_argument("--mode", choices=("virtual", "realtime"),
                      help="clock mode (overrides run.mode)")
    runp.add_argument("--nodes", type=int, help="pedestrian count (run.nodes)")
    runp.add_argument("--duration", type=float, help="run length in seconds (run.duration_s)")
    runp.add_argument("--seed", type=int, help="master RNG seed (run.seed)")
    runp.add_argument("--scenario", help="scenario file (run.scenario)")
    runp.add_argument("--lag-out", help="lag CSV path, real-time mode (run.lag_out)")
    runp.add_argument("--map-out", help="density map snapshot CSV (run.map_out)")
    runp.add_argument("--report-out", help="run report JSON (run.report_out)")
    runp.add_argument("--listen-udp", metavar="HOST:PORT",
                      help="enable the device bridge on this UDP endpoint (bridge.listen)")
    runp.add_argument("--device", metavar="HOST:PORT",
                      help="device address for outbound frames (bridge.device)")
    runp.add_argument("--bridge-mode", choices=("export", "inbound"),
                      help="bridge direction (bridge.mode)")
    runp.add_argument("--ws", metavar="HOST:PORT",
                      help="enable the browser gateway on this endpoint (bridge.ws_listen)")

    lagp = sub.add_parser("lag-report", help="summarise a lag CSV")
    lagp.add_argument("csv", help="lag trace written by a real-time run")
    return parser


# (flag, config key) pairs; flags win over file keys
_RUN_FLAG_KEYS = (
    ("mode", "run.mode"),
    ("nodes", "run.nodes"),
    ("duration", "run.duration_s"),
    ("seed", "run.seed"),
    ("scenario", "run.scenario"),
    ("lag_out", "run.lag_out"),
    ("map_out", "run.map_out"),
    ("report_out", "run.report_out"),
    ("listen_udp", "bridge.listen"),
    ("device", "bridge.device"),
    ("bridge_mode", "bridge.mode"),
    ("ws", "bridge.ws_listen"),
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for attr, dotted in _RUN_FLAG_KEYS:
        value = getattr(args, attr)
        if value is not None:
            overrides[dotted] = str(value)
    return load_config(args.config, overrides)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "lag-report":
        return lag_report(args.csv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
