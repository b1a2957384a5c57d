"""Deterministic simulated delay/jitter channel.

Messages sent at tick t become deliverable at t + delay + jitter.  With
hold_back the channel withholds early arrivals so delivery order always
equals send order; without it, jitter may reorder messages and consumers
must drop stale sequence numbers themselves.  A given (seed, config, send
schedule) always produces the identical delivery schedule.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

from .errors import ChannelClosedError


@dataclass(frozen=True)
class JitterSpec:
    """Per-message delay perturbation: none, uniform +-k, or seeded discrete."""

    kind: str = "none"
    k: int = 0
    offsets: tuple[int, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "discrete"):
            raise ValueError(f"unknown jitter kind {self.kind!r}")
        if self.kind == "uniform" and self.k < 0:
            raise ValueError("uniform jitter bound must be >= 0")
        if self.kind == "discrete":
            if not self.offsets:
                raise ValueError("discrete jitter needs at least one offset")
            weights = self.weights or tuple(1.0 for _ in self.offsets)
            if len(weights) != len(self.offsets):
                raise ValueError("offsets and weights must have equal length")
            if any(w < 0 or not math.isfinite(w) for w in weights):
                raise ValueError("weights must be finite and >= 0")
            object.__setattr__(self, "offsets", tuple(int(o) for o in self.offsets))
            object.__setattr__(self, "weights", tuple(float(w) for w in weights))

    @property
    def max_negative(self) -> int:
        if self.kind == "uniform":
            return self.k
        if self.kind == "discrete":
            return max(0, -min(self.offsets))
        return 0

    def draw(self, rng: random.Random) -> int:
        if self.kind == "none":
            return 0
        if self.kind == "uniform":
            return rng.randint(-self.k, self.k)
        return rng.choices(self.offsets, weights=self.weights, k=1)[0]


@dataclass(frozen=True)
class ChannelConfig:
    """One-way delay in ticks plus jitter model and FIFO policy."""

    one_way_delay_ticks: int = 0
    jitter: JitterSpec = field(default_factory=JitterSpec)
    hold_back: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.one_way_delay_ticks < 0:
            raise ValueError("delay must be >= 0 ticks")
        if self.one_way_delay_ticks - self.jitter.max_negative < 0:
            raise ValueError("delay plus worst-case negative jitter must be >= 0")


@dataclass(frozen=True)
class FeedbackMsg:
    """Follower state sample sent back to the operator.

    frame_id is an opaque 64-bit stand-in for the camera frame that would
    accompany the sample on a real system.
    """

    seq: int
    send_tick: int
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    frame_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", tuple(float(v) for v in self.orientation))

    @property
    def pose(self):
        from .kinematics import Pose

        return Pose(self.position, self.orientation)


class SimChannel:
    """Single-owner discrete-tick channel; drive with send()/poll()."""

    def __init__(self, config: ChannelConfig):
        self.config = config
        self._rng = random.Random(config.seed)
        self._heap: list = []
        self._count = 0
        self._last_send_tick: int | None = None
        self._last_poll_tick: int | None = None
        self._last_due = -1
        self._closed = False

    def close(self):
        self._closed = True

    @property
    def closed(self) -> bool:
        return self._closed

    def pending(self) -> int:
        return len(self._heap)

    def send(self, msg, now_tick: int):
        """Schedule msg for delivery at now_tick + delay + jitter."""
        if self._closed:
            raise ChannelClosedError("channel is closed; delivery refused")
        if self._last_send_tick is not None and now_tick < self._last_send_tick:
            raise ValueError("send ticks must be monotone non-decreasing")
        self._last_send_tick = now_tick
        due = now_tick + self.config.one_way_delay_ticks + self.config.jitter.draw(self._rng)
        if self.config.hold_back and due < self._last_due:
            due = self._last_due
        self._last_due = max(self._last_due, due)
        heapq.heappush(self._heap, (due, self._count, msg))
        self._count += 1

    def poll(self, now_tick: int) -> list:
        """All messages due at or before now_tick, in delivery order, once."""
        if self._last_poll_tick is not None and now_tick < self._last_poll_tick:
            raise ValueError("poll ticks must be monotone non-decreasing")
        self._last_poll_tick = now_tick
        out = []
        heap = self._heap
        while heap and heap[0][0] <= now_tick:
            out.append(heapq.heappop(heap)[2])
        return out
