"""Follower-side emulation: telecommand integration, servo, reach tasks.

The follower keeps a target pose that telecommand deltas integrate into and
an actual pose that a rate-clamped servo drives toward the target.  Frame
alignment for orientation is applied here, so telecommands carry the raw
master orientation.

Task fixtures are JSON documents::

    {"fixture_id": "reach-3wp", "version": 1,
     "start": [0.0, 0.0, 0.0],
     "waypoints": [[0.02, 0.0, 0.0], [0.02, 0.015, 0.0]],
     "tolerance_m": 0.002, "dwell_ticks": 50}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ._backend import kernels
from .errors import FaultError
from .kinematics import Pose
from .scaling import FrameAlignment, Telecommand


@dataclass(frozen=True)
class ReachTask:
    """Sequence of follower-frame waypoints with a dwell requirement."""

    waypoints: tuple[tuple[float, float, float], ...]
    tolerance: float = 0.002
    dwell_ticks: int = 50
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    fixture_id: str = "unnamed"
    version: int = 1

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("a task needs at least one waypoint")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")
        if self.dwell_ticks < 1:
            raise ValueError("dwell_ticks must be >= 1")
        wps = tuple(tuple(float(v) for v in w) for w in self.waypoints)
        if any(len(w) != 3 or not all(math.isfinite(v) for v in w) for w in wps):
            raise ValueError("waypoints must be finite 3-vectors")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))

    def to_json(self) -> str:
        return json.dumps(
            {
                "fixture_id": self.fixture_id,
                "version": self.version,
                "start": list(self.start),
                "waypoints": [list(w) for w in self.waypoints],
                "tolerance_m": self.tolerance,
                "dwell_ticks": self.dwell_ticks,
            },
            indent=2,
        )


def task_from_dict(doc: dict) -> ReachTask:
    try:
        return ReachTask(
            waypoints=tuple(tuple(w) for w in doc["waypoints"]),
            tolerance=float(doc.get("tolerance_m", 0.002)),
            dwell_ticks=int(doc.get("dwell_ticks", 50)),
            start=tuple(doc.get("start", (0.0, 0.0, 0.0))),
            fixture_id=str(doc.get("fixture_id", "unnamed")),
            version=int(doc.get("version", 1)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed task fixture: {exc}") from exc


def load_task(path: str | Path) -> ReachTask:
    return task_from_dict(json.loads(Path(path).read_text()))


class TaskTracker:
    """Waypoint progression: a waypoint counts as reached after the position
    stays within tolerance for dwell_ticks consecutive ticks."""

    def __init__(self, task: ReachTask):
        self.task = task
        self._index = 0
        self._dwell = 0
        self._completed_tick: int | None = None

    @property
    def active_index(self) -> int:
        return self._index

    @property
    def completed_tick(self) -> int | None:
        return self._completed_tick

    @property
    def done(self) -> bool:
        return self._completed_tick is not None

    def update(self, position, tick: int) -> None:
        if self.done:
            return
        wx, wy, wz = self.task.waypoints[self._index]
        dx = position[0] - wx
        dy = position[1] - wy
        dz = position[2] - wz
        if math.sqrt(dx * dx + dy * dy + dz * dz) <= self.task.tolerance:
            self._dwell += 1
        else:
            self._dwell = 0
        if self._dwell >= self.task.dwell_ticks:
            self._index += 1
            self._dwell = 0
            if self._index == len(self.task.waypoints):
                self._completed_tick = tick


class FollowerStation:
    """Single-owner follower state machine.

    apply_telecommand() integrates deltas into the target pose (stale
    sequence numbers are dropped and counted); regulate() moves the actual
    pose toward the target along the straight line / geodesic with per-tick
    steps clamped by the configured rates.
    """

    def __init__(
        self,
        initial_pose: Pose | None = None,
        alignment: FrameAlignment | None = None,
        max_linear_rate: float = 0.5,
        max_angular_rate: float = 2.0 * math.pi,
        dt: float = 1e-3,
    ):
        if max_linear_rate <= 0 or max_angular_rate <= 0 or dt <= 0:
            raise ValueError("rates and dt must be > 0")
        pose = initial_pose or Pose.identity()
        self.alignment = alignment or FrameAlignment.identity()
        self.max_linear_rate = max_linear_rate
        self.max_angular_rate = max_angular_rate
        self.dt = dt
        self._target_p = pose.position
        self._target_q = pose.orientation
        self._actual_p = pose.position
        self._actual_q = pose.orientation
        self.last_seq_applied = -1
        self.dropped = 0
        self.fault: str | None = None

    @property
    def target_pose(self) -> Pose:
        return Pose(self._target_p, self._target_q)

    @property
    def actual_pose(self) -> Pose:
        return Pose(self._actual_p, self._actual_q)

    @property
    def target_position(self) -> tuple[float, float, float]:
        return self._target_p

    @property
    def actual_position(self) -> tuple[float, float, float]:
        return self._actual_p

    def apply_telecommand(self, cmd: Telecommand) -> bool:
        """Integrate one command into the target pose.

        Returns False (and counts a drop) for stale sequence numbers.
        Clutched commands update orientation only.
        """
        if cmd.seq <= self.last_seq_applied:
            self.dropped += 1
            return False
        dx, dy, dz = cmd.delta_p_scaled
        if not (math.isfinite(dx) and math.isfinite(dy) and math.isfinite(dz)):
            self.fault = f"non-finite delta in telecommand seq {cmd.seq}"
            raise FaultError(self.fault)
        self.last_seq_applied = cmd.seq
        if not cmd.clutched:
            tp = self._target_p
            self._target_p = (tp[0] + dx, tp[1] + dy, tp[2] + dz)
        self._target_q = kernels.quat_normalize(
            kernels.quat_mul(self.alignment.rotation, cmd.orientation)
        )
        return True

    def regulate(self, dt: float | None = None) -> None:
        """One servo step toward the target; error is non-increasing and a
        constant target is reached exactly in finitely many ticks."""
        step_dt = self.dt if dt is None else dt
        if step_dt <= 0:
            raise ValueError("dt must be > 0")
        self._actual_p, self._actual_q = kernels.servo_step(
            self._actual_p,
            self._actual_q,
            self._target_p,
            self._target_q,
            self.max_linear_rate,
            self.max_angular_rate,
            step_dt,
        )
