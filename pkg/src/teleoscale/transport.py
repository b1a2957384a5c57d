"""Duplex stream transport carrying wire-format messages.

Length-prefixed frames (u32 little endian) over a reliable TCP stream, so
ordering and loss-freedom come from the transport and hold-back is trivially
true.  An optional artificial-delay stage withholds received messages until
`receive time + delay`, which layers a fixed one-way latency onto a real
link.  Wall-clock ticks use TELEOP_TICK_HZ (default 1000).
"""

from __future__ import annotations

import os
import socket
import struct
import threading
import time
from collections import deque

from .errors import ChannelClosedError, FramingError
from .wire import MESSAGE_SIZE, deserialize, serialize

_MAX_FRAME = 4096


def _tick_hz() -> int:
    env = os.environ.get("TELEOP_TICK_HZ")
    if env:
        return int(env)
    return 1000


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {address!r}")
    return host, int(port)


class TransportEndpoint:
    """One side of a connected duplex link; send() and poll() are safe to
    drive from two different threads (send side and receive side)."""

    def __init__(self, sock: socket.socket, artificial_delay_s: float = 0.0):
        self._sock = sock
        self._delay = float(artificial_delay_s)
        self._tick_hz = _tick_hz()
        self._inbox: deque = deque()
        self._lock = threading.Lock()
        self._recv_error: Exception | None = None
        self._closed = False
        self._eof = False
        self._send_lock = threading.Lock()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        buf = b""
        try:
            while True:
                chunk = self._sock.recv(65536)
                if not chunk:
                    if buf:
                        raise FramingError(
                            f"stream truncated mid-frame with {len(buf)} buffered bytes"
                        )
                    with self._lock:
                        self._eof = True
                    return
                buf += chunk
                while len(buf) >= 4:
                    (length,) = struct.unpack_from("<I", buf, 0)
                    if length == 0 or length > _MAX_FRAME:
                        raise FramingError(f"invalid frame length {length}")
                    if len(buf) < 4 + length:
                        break
                    payload = buf[4 : 4 + length]
                    buf = buf[4 + length :]
                    msg = deserialize(payload)
                    due = time.monotonic() + self._delay
                    with self._lock:
                        self._inbox.append((due, msg))
        except (OSError, FramingError, Exception) as exc:  # surfaced on poll
            with self._lock:
                if not self._closed:
                    self._recv_error = exc
                self._eof = True

    def send(self, msg) -> None:
        if self._closed:
            raise ChannelClosedError("transport endpoint is closed")
        payload = serialize(msg)
        assert len(payload) == MESSAGE_SIZE
        frame = struct.pack("<I", len(payload)) + payload
        try:
            with self._send_lock:
                self._sock.sendall(frame)
        except OSError as exc:
            raise ChannelClosedError(f"send failed: {exc}") from exc

    def poll(self, now: float | None = None) -> list:
        """Messages whose artificial-delay due time has passed, in order."""
        if now is None:
            now = time.monotonic()
        out = []
        with self._lock:
            if self._recv_error is not None:
                exc = self._recv_error
                self._recv_error = None
                raise exc
            while self._inbox and self._inbox[0][0] <= now:
                out.append(self._inbox.popleft()[1])
        return out

    def wait_message(self, timeout: float = 5.0) -> object:
        """Block until one message is deliverable; convenience for tests."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            msgs = self.poll()
            if msgs:
                first, rest = msgs[0], msgs[1:]
                with self._lock:
                    for m in reversed(rest):
                        self._inbox.appendleft((0.0, m))
                return first
            time.sleep(0.0005)
        raise TimeoutError("no message within timeout")

    @property
    def current_tick(self) -> int:
        return int(time.monotonic() * self._tick_hz)

    @property
    def eof(self) -> bool:
        with self._lock:
            return self._eof and not self._inbox

    def close(self) -> None:
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_transport(
    role: str,
    address: str,
    timeout: float = 5.0,
    artificial_delay_s: float = 0.0,
) -> TransportEndpoint:
    """Connect one endpoint of a duplex link.

    role 'listener' binds and waits for exactly one peer; role 'dialer'
    connects.  Failures carry the address for context.
    """
    host, port = parse_address(address)
    if role == "listener":
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            srv.bind((host, port))
            srv.listen(1)
            srv.settimeout(timeout)
            conn, _peer = srv.accept()
        except OSError as exc:
            srv.close()
            raise ConnectionError(f"listen on {address} failed: {exc}") from exc
        finally:
            srv.close()
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return TransportEndpoint(conn, artificial_delay_s)
    if role == "dialer":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectionError(f"dial {address} failed: {exc}") from exc
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return TransportEndpoint(sock, artificial_delay_s)
    raise ValueError(f"role must be 'listener' or 'dialer', got {role!r}")
