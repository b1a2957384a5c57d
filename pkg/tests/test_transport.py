import socket
import struct
import threading
import time

import pytest

from teleoscale.channel import FeedbackMsg
from teleoscale.errors import ChannelClosedError, FramingError
from teleoscale.scaling import Telecommand
from teleoscale.transport import open_transport, parse_address
from teleoscale.wire import serialize


def free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def pair(artificial_delay_s=0.0, listener_delay_s=0.0):
    port = free_port()
    addr = f"127.0.0.1:{port}"
    result = {}

    def listen():
        result["listener"] = open_transport(
            "listener", addr, timeout=5.0, artificial_delay_s=listener_delay_s
        )

    th = threading.Thread(target=listen)
    th.start()
    time.sleep(0.05)
    dialer = open_transport("dialer", addr, timeout=5.0, artificial_delay_s=artificial_delay_s)
    th.join(timeout=5.0)
    return result["listener"], dialer


def drain(endpoint, n, timeout=5.0):
    out = []
    deadline = time.monotonic() + timeout
    while len(out) < n and time.monotonic() < deadline:
        out.extend(endpoint.poll())
        time.sleep(0.001)
    return out


def tc(seq):
    return Telecommand(seq, seq * 2, (0.001 * seq, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))


class TestLoopback:
    def test_hundred_telecommands_in_order_payload_identical(self):
        listener, dialer = pair()
        try:
            sent = [tc(i) for i in range(100)]
            for m in sent:
                dialer.send(m)
            got = drain(listener, 100)
            assert got == sent
        finally:
            listener.close()
            dialer.close()

    def test_duplex_both_directions(self):
        listener, dialer = pair()
        try:
            dialer.send(tc(1))
            listener.send(FeedbackMsg(9, 8, (1, 2, 3), (1, 0, 0, 0), 7))
            assert drain(listener, 1)[0].seq == 1
            assert drain(dialer, 1)[0].seq == 9
        finally:
            listener.close()
            dialer.close()

    def test_artificial_delay_floor(self):
        delay = 0.25
        listener, dialer = pair(listener_delay_s=delay)
        try:
            stamps = []
            for i in range(5):
                stamps.append(time.monotonic())
                dialer.send(tc(i))
            got = []
            deadline = time.monotonic() + 5.0
            while len(got) < 5 and time.monotonic() < deadline:
                for m in listener.poll():
                    got.append((m.seq, time.monotonic()))
                time.sleep(0.001)
            assert len(got) == 5
            for (seq, t_recv), t_send in zip(got, stamps):
                assert t_recv - t_send >= delay
        finally:
            listener.close()
            dialer.close()


class TestFailures:
    def test_listener_absent_dialer_times_out_with_context(self):
        port = free_port()
        with pytest.raises(ConnectionError, match=str(port)):
            open_transport("dialer", f"127.0.0.1:{port}", timeout=0.5)

    def test_mid_stream_truncation_is_framing_error(self):
        port = free_port()
        addr = f"127.0.0.1:{port}"
        result = {}
        th = threading.Thread(
            target=lambda: result.update(ep=open_transport("listener", addr, timeout=5.0))
        )
        th.start()
        time.sleep(0.05)
        raw = socket.create_connection(("127.0.0.1", port))
        th.join(timeout=5.0)
        ep = result["ep"]
        try:
            payload = serialize(tc(0))
            raw.sendall(struct.pack("<I", len(payload)) + payload[: len(payload) // 2])
            raw.close()  # half a frame then EOF
            deadline = time.monotonic() + 2.0
            with pytest.raises(FramingError):
                while time.monotonic() < deadline:
                    ep.poll()
                    time.sleep(0.005)
                raise TimeoutError("framing error never surfaced")
        finally:
            ep.close()

    def test_bad_frame_length_rejected(self):
        port = free_port()
        addr = f"127.0.0.1:{port}"
        result = {}
        th = threading.Thread(
            target=lambda: result.update(ep=open_transport("listener", addr, timeout=5.0))
        )
        th.start()
        time.sleep(0.05)
        raw = socket.create_connection(("127.0.0.1", port))
        th.join(timeout=5.0)
        ep = result["ep"]
        try:
            raw.sendall(struct.pack("<I", 999999))
            deadline = time.monotonic() + 2.0
            with pytest.raises(FramingError, match="length"):
                while time.monotonic() < deadline:
                    ep.poll()
                    time.sleep(0.005)
                raise TimeoutError("framing error never surfaced")
        finally:
            raw.close()
            ep.close()

    def test_send_after_close_refused(self):
        listener, dialer = pair()
        dialer.close()
        listener.close()
        with pytest.raises(ChannelClosedError):
            dialer.send(tc(0))

    def test_address_parsing(self):
        assert parse_address("127.0.0.1:80") == ("127.0.0.1", 80)
        with pytest.raises(ValueError):
            parse_address("no-port")
        with pytest.raises(ValueError):
            parse_address(":123")

    def test_bad_role_rejected(self):
        with pytest.raises(ValueError, match="role"):
            open_transport("broker", "127.0.0.1:1")
