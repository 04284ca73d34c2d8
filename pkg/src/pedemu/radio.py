"""Broadcast radio with threshold reception and per-sender serialization.

Urban-microcell line-of-sight pathloss decides reachability: a frame is
received iff tx power minus pathloss clears the receiver sensitivity.
There is no interference or collision model; transmissions from
different senders may overlap freely. Per sender, frames serialize:
payload_bits / phy_rate of airtime each, drop-tail once the bytes
waiting for the medium exceed the MAC queue.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import SimTime, Simulator, us
from .geo import SimPoint

D_MIN_M = 1.0


@dataclass(frozen=True)
class RadioConfig:
    carrier_ghz: float = 2.6
    n_rb: int = 20
    tx_power_dbm: float = 20.0
    h_ue_m: float = 1.5
    h_enb_m: float = 25.0
    rx_sensitivity_dbm: float = -90.0
    phy_rate_bps: float = 1_000_000.0
    mac_queue_bytes: int = 10_000
    rlc_queue_bytes: int = 5_000_000
    rlc_mode: str = "UM"

    def __post_init__(self):
        for name in ("carrier_ghz", "n_rb", "h_ue_m", "h_enb_m", "phy_rate_bps",
                     "mac_queue_bytes", "rlc_queue_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.rx_sensitivity_dbm >= self.tx_power_dbm:
            raise ValueError(
                f"rx sensitivity {self.rx_sensitivity_dbm} dBm must lie below "
                f"tx power {self.tx_power_dbm} dBm"
            )
        if self.rlc_mode != "UM":
            raise ValueError(f"only UM rlc_mode is modeled, got {self.rlc_mode!r}")


def pathloss_db(d_m: float, fc_ghz: float, d_min: float = D_MIN_M) -> float:
    """Line-of-sight urban-microcell pathloss; distance clamped to d_min."""
    d = max(d_m, d_min)
    return 22.0 * math.log10(d) + 28.0 + 20.0 * math.log10(fc_ghz)


def max_range_m(cfg: RadioConfig) -> float:
    """Distance at which the link budget exactly meets sensitivity."""
    budget = cfg.tx_power_dbm - cfg.rx_sensitivity_dbm
    return 10.0 ** ((budget - 28.0 - 20.0 * math.log10(cfg.carrier_ghz)) / 22.0)


def can_receive(cfg: RadioConfig, tx_pos: SimPoint, rx_pos: SimPoint) -> bool:
    d = math.hypot(rx_pos.x - tx_pos.x, rx_pos.y - tx_pos.y)
    return cfg.tx_power_dbm - pathloss_db(d, cfg.carrier_ghz) >= cfg.rx_sensitivity_dbm


@dataclass(frozen=True)
class Transmission:
    src: int
    src_pos: SimPoint
    payload: bytes
    t_start: SimTime
    airtime: SimTime


@dataclass
class SenderStats:
    frames_sent: int = 0
    bytes_sent: int = 0
    mac_dropped_frames: int = 0
    mac_dropped_bytes: int = 0
    rlc_dropped_frames: int = 0
    rlc_dropped_bytes: int = 0


@dataclass
class LinkStats:
    delivered_frames: int = 0
    delivered_bytes: int = 0
    out_of_range_bytes: int = 0


ReceiveHandler = Callable[[int, bytes, SimTime], None]


class RadioChannel:
    """Shared medium. Nodes attach a receive handler; broadcast() fans a
    frame out to every attached in-range node except the sender."""

    def __init__(
        self,
        sim: Simulator,
        cfg: RadioConfig,
        position_of: Callable[[int], Optional[SimPoint]],
    ):
        self.sim = sim
        self.cfg = cfg
        self.position_of = position_of
        self._handlers: dict[int, ReceiveHandler] = {}
        self._pending: dict[int, deque[bytes]] = {}
        self._waiting_bytes: dict[int, int] = {}
        self._busy: dict[int, bool] = {}
        self.sender_stats: dict[int, SenderStats] = {}
        self.link_stats: dict[tuple[int, int], LinkStats] = {}

    def attach(self, node_id: int, handler: ReceiveHandler) -> None:
        self._handlers[node_id] = handler

    def detach(self, node_id: int) -> None:
        self._handlers.pop(node_id, None)

    def _sender(self, src: int) -> SenderStats:
        if src not in self.sender_stats:
            self.sender_stats[src] = SenderStats()
        return self.sender_stats[src]

    def _link(self, src: int, dst: int) -> LinkStats:
        key = (src, dst)
        if key not in self.link_stats:
            self.link_stats[key] = LinkStats()
        return self.link_stats[key]

    def waiting_bytes(self, src: int) -> int:
        return self._waiting_bytes.get(src, 0)

    def broadcast(self, src: int, payload: bytes) -> bool:
        """Queue a frame for transmission at the current sim time.
        Returns False when a queue bound rejected it."""
        stats = self._sender(src)
        if len(payload) > self.cfg.rlc_queue_bytes:
            stats.rlc_dropped_frames += 1
            stats.rlc_dropped_bytes += len(payload)
            return False
        waiting = self._waiting_bytes.get(src, 0)
        if waiting + len(payload) > self.cfg.mac_queue_bytes:
            stats.mac_dropped_frames += 1
            stats.mac_dropped_bytes += len(payload)
            return False
        self._pending.setdefault(src, deque()).append(payload)
        self._waiting_bytes[src] = waiting + len(payload)
        if not self._busy.get(src, False):
            self._start_next(src)
        return True

    def _start_next(self, src: int) -> None:
        queue = self._pending.get(src)
        if not queue:
            self._busy[src] = False
            return
        payload = queue.popleft()
        self._waiting_bytes[src] -= len(payload)
        self._busy[src] = True
        src_pos = self.position_of(src)
        if src_pos is None:
            # sender left the scenario with frames queued; drain silently
            self._start_next(src)
            return
        airtime = us(len(payload) * 8 / self.cfg.phy_rate_bps)
        tx = Transmission(src, src_pos, payload, self.sim.now, airtime)
        stats = self._sender(src)
        stats.frames_sent += 1
        stats.bytes_sent += len(payload)
        receivers = []
        for node_id in self._handlers:
            if node_id == src:
                continue
            rx_pos = self.position_of(node_id)
            if rx_pos is not None and can_receive(self.cfg, src_pos, rx_pos):
                receivers.append(node_id)
            else:
                self._link(src, node_id).out_of_range_bytes += len(payload)
        self.sim.schedule(
            self.sim.now + airtime,
            lambda: self._complete(tx, receivers),
            target=f"radio:{src}",
        )

    def _complete(self, tx: Transmission, receivers: list[int]) -> None:
        for node_id in receivers:
            handler = self._handlers.get(node_id)
            link = self._link(tx.src, node_id)
            if handler is None:
                link.out_of_range_bytes += len(tx.payload)
                continue
            link.delivered_frames += 1
            link.delivered_bytes += len(tx.payload)
            handler(tx.src, tx.payload, self.sim.now)
        self._start_next(tx.src)
