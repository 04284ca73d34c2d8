"""WebSocket JSON gateway for browser clients.

Browsers cannot speak the UDP device protocol, so this gateway mirrors it
as JSON text frames: outbound beacon/map/nodeLocation/lag events are
pushed to every connected client, and inbound setPosition messages are
handed to a callback (the bridge). Clients may come and go at any time;
the simulation never depends on one being present.

Fan-out sends are blocking but tiny next to kernel socket buffers; a
client that stops reading altogether is reaped by the protocol-level
keepalive ping, at which point broadcast() drops it from the set.
"""

from __future__ import annotations

import json
import logging
import threading
from typing import Callable, Optional

from websockets.sync.server import serve

log = logging.getLogger(__name__)


class UiGateway:
    """Thread-based WebSocket server wrapping one JSON fan-out."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        on_message: Optional[Callable[[str], None]] = None,
    ):
        self.on_message = on_message
        self._clients: set = set()
        self._lock = threading.Lock()
        self._server = serve(self._handle, host, port)
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="ws-gateway", daemon=True
        )

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._thread.join(timeout=2.0)

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.socket.getsockname()[:2]
        return host, port

    @property
    def url(self) -> str:
        host, port = self.address
        return f"ws://{host}:{port}"

    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def _handle(self, conn) -> None:
        with self._lock:
            self._clients.add(conn)
        try:
            for message in conn:
                cb = self.on_message
                if cb is not None and isinstance(message, str):
                    try:
                        cb(message)
                    except Exception:
                        log.exception("UI message handler failed")
        finally:
            with self._lock:
                self._clients.discard(conn)

    def broadcast(self, obj: dict) -> None:
        """Push one JSON event to every connected client. Safe from any
        thread; a dying client is dropped, never propagated."""
        text = json.dumps(obj, separators=(",", ":"))
        with self._lock:
            clients = list(self._clients)
        for conn in clients:
            try:
                conn.send(text)
            except Exception:
                with self._lock:
                    self._clients.discard(conn)
