"""Master-side telecommand generation.

Per tick the controller turns the master pose into a telecommand carrying

* a relative position delta, scaled by the effective gamma and rotated into
  the follower base frame, and
* the absolute master orientation (always one-to-one, never scaled).

Clutching suppresses position deltas so the operator can reposition the
master without moving the follower; on release the reference resets to the
current master pose, so the first post-release delta is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._backend import kernels
from .errors import FaultError
from .kinematics import (
    JointState,
    KinematicChain,
    Pose,
    forward_kinematics,
    linear_velocity,
)

_ZERO3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ScalingConfig:
    """Constant scaling gamma_c (unitless) and velocity gain gamma_v (s/m)."""

    gamma_c: float = 1.0
    gamma_v: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma_c) and math.isfinite(self.gamma_v)):
            raise ValueError("scaling factors must be finite")
        if self.gamma_c < 0.0 or self.gamma_v < 0.0:
            raise ValueError("scaling factors must be >= 0")


def effective_gamma(config: ScalingConfig, master_speed: float) -> float:
    """Speed-dependent scaling factor: gamma_c + gamma_v * speed."""
    if not math.isfinite(master_speed) or master_speed < 0.0:
        raise ValueError(f"master speed must be finite and >= 0, got {master_speed}")
    return config.gamma_c + config.gamma_v * master_speed


@dataclass(frozen=True)
class FrameAlignment:
    """Fixed rotation mapping master base frame into follower base frame."""

    rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        q = tuple(float(v) for v in self.rotation)
        if len(q) != 4 or not all(math.isfinite(v) for v in q):
            raise ValueError("alignment rotation must be a finite quaternion")
        norm = math.sqrt(sum(v * v for v in q))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"alignment quaternion norm {norm} too far from 1")
        if abs(norm - 1.0) > 1e-12:
            q = tuple(v / norm for v in q)
        object.__setattr__(self, "rotation", q)

    @staticmethod
    def identity() -> "FrameAlignment":
        return FrameAlignment()

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "FrameAlignment":
        return FrameAlignment(
            kernels.quat_from_axis_angle(float(axis[0]), float(axis[1]), float(axis[2]), float(angle))
        )

    def apply(self, v):
        return kernels.quat_rotate(self.rotation, v)


@dataclass(frozen=True)
class Telecommand:
    """One per-tick command message, already scaled and frame-aligned."""

    seq: int
    send_tick: int
    delta_p_scaled: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    gripper: float = 0.0
    clutched: bool = False

    def __post_init__(self):
        delta = tuple(float(v) for v in self.delta_p_scaled)
        quat = tuple(float(v) for v in self.orientation)
        if len(delta) != 3 or len(quat) != 4:
            raise ValueError("telecommand needs a 3-vector delta and 4-tuple quaternion")
        if self.clutched and delta != _ZERO3:
            raise ValueError("clutched telecommands must carry a zero delta")
        norm = math.sqrt(sum(v * v for v in quat))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"telecommand quaternion norm {norm} too far from 1")
        object.__setattr__(self, "delta_p_scaled", delta)
        object.__setattr__(self, "orientation", quat)


@dataclass(frozen=True)
class MasterState:
    """Snapshot of the controller between steps."""

    prev_pose: Pose | None
    velocity_estimate: tuple[float, float, float]
    clutch_engaged: bool


class SpeedEstimator:
    """Master speed from first-differenced positions, exponentially smoothed.

    s_k = alpha * |p_k - p_{k-1}| / dt + (1 - alpha) * s_{k-1}, s_0 = 0.
    Fewer than two samples estimate zero.
    """

    def __init__(self, dt: float, alpha: float = 0.2):
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        if not (0.0 < alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        self.dt = dt
        self.alpha = alpha
        self._prev: tuple[float, float, float] | None = None
        self._speed = 0.0
        self._velocity = _ZERO3

    @property
    def speed(self) -> float:
        return self._speed

    @property
    def velocity(self) -> tuple[float, float, float]:
        return self._velocity

    def update(self, position) -> float:
        p = (float(position[0]), float(position[1]), float(position[2]))
        if self._prev is not None:
            dx = (p[0] - self._prev[0]) / self.dt
            dy = (p[1] - self._prev[1]) / self.dt
            dz = (p[2] - self._prev[2]) / self.dt
            raw = math.sqrt(dx * dx + dy * dy + dz * dz)
            a = self.alpha
            self._speed = self._speed + a * (raw - self._speed)
            self._velocity = (
                self._velocity[0] + a * (dx - self._velocity[0]),
                self._velocity[1] + a * (dy - self._velocity[1]),
                self._velocity[2] + a * (dz - self._velocity[2]),
            )
        self._prev = p
        return self._speed

    def reset(self):
        self._prev = None
        self._speed = 0.0
        self._velocity = _ZERO3


class MotionScalingController:
    """Single-owner state machine producing the telecommand stream.

    Speed for the velocity-scaling term comes from joint rates through the
    Jacobian when the caller supplies them, otherwise from the smoothed
    first-difference estimator.
    """

    def __init__(
        self,
        config: ScalingConfig,
        alignment: FrameAlignment | None = None,
        dt: float = 1e-3,
        stream_orientation_during_clutch: bool = True,
        speed_alpha: float = 0.2,
    ):
        self.config = config
        self.alignment = alignment or FrameAlignment.identity()
        self.dt = dt
        self.stream_orientation_during_clutch = stream_orientation_during_clutch
        self.estimator = SpeedEstimator(dt, speed_alpha)
        self._prev_pose: Pose | None = None
        self._clutched = False
        self._reset_pending = False
        self._seq = 0
        self._last_orientation = (1.0, 0.0, 0.0, 0.0)
        self._last_gamma = config.gamma_c
        self.fault: str | None = None

    @property
    def state(self) -> MasterState:
        return MasterState(self._prev_pose, self.estimator.velocity, self._clutched)

    @property
    def clutch_engaged(self) -> bool:
        return self._clutched

    @property
    def last_gamma(self) -> float:
        return self._last_gamma

    @property
    def next_seq(self) -> int:
        return self._seq

    def engage_clutch(self):
        """Idempotent; position deltas are suppressed until release."""
        self._clutched = True

    def release_clutch(self):
        """Idempotent; the next step re-references and emits a zero delta."""
        if self._clutched:
            self._reset_pending = True
        self._clutched = False

    def step_pose(self, pose: Pose, tick: int, clutch: bool | None = None,
                  gripper: float = 0.0, speed_override: float | None = None) -> Telecommand:
        """Advance one tick from a measured master pose; emit its telecommand."""
        if self.fault is not None:
            raise FaultError(f"controller is faulted: {self.fault}")
        if not isinstance(pose, Pose):
            try:
                pose = Pose(tuple(pose[0]), tuple(pose[1]))
            except (ValueError, TypeError, IndexError) as exc:
                self.fault = f"non-finite or malformed master pose at tick {tick}: {exc}"
                raise FaultError(self.fault) from exc

        if clutch is not None:
            if clutch and not self._clutched:
                self.engage_clutch()
            elif not clutch and self._clutched:
                self.release_clutch()

        if speed_override is not None:
            if not math.isfinite(speed_override) or speed_override < 0.0:
                raise ValueError("speed override must be finite and >= 0")
            self.estimator.update(pose.position)
            speed = speed_override
        else:
            speed = self.estimator.update(pose.position)
        gamma = effective_gamma(self.config, speed)
        self._last_gamma = gamma

        if self._prev_pose is None or self._clutched or self._reset_pending:
            delta = _ZERO3
            self._reset_pending = False
        else:
            prev = self._prev_pose.position
            cur = pose.position
            scaled = (
                gamma * (cur[0] - prev[0]),
                gamma * (cur[1] - prev[1]),
                gamma * (cur[2] - prev[2]),
            )
            delta = self.alignment.apply(scaled)
        self._prev_pose = pose

        if self._clutched and not self.stream_orientation_during_clutch:
            orientation = self._last_orientation
        else:
            orientation = pose.orientation
        self._last_orientation = orientation

        cmd = Telecommand(
            seq=self._seq,
            send_tick=tick,
            delta_p_scaled=delta,
            orientation=orientation,
            gripper=float(gripper),
            clutched=self._clutched,
        )
        self._seq += 1
        return cmd

    def step_joints(self, chain: KinematicChain, joints: JointState, tick: int,
                    clutch: bool | None = None, gripper: float = 0.0) -> Telecommand:
        """Advance one tick from joint readings (pose via forward kinematics).

        When joint rates are present the speed for the velocity-scaling term
        is |J(q) qdot| instead of the filtered estimate.
        """
        pose = forward_kinematics(chain, joints)
        speed = None
        if joints.velocities is not None:
            v = linear_velocity(chain, joints)
            speed = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        return self.step_pose(pose, tick, clutch=clutch, gripper=gripper,
                              speed_override=speed)
