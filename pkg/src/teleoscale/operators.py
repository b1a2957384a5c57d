"""Deterministic synthetic operators that drive the master side.

Two strategies:

* scripted -- walks a precomputed master-frame waypoint path at constant
  speed.  It is scaling-aware (master goals are the follower waypoints
  divided by gamma_c and rotated back through the alignment), which gives
  closed-form completion times.
* move_and_wait -- scaling-blind.  It bursts a fixed master-frame distance
  toward the goal, then holds until the delayed feedback shows the follower
  settled at the endpoint implied by its own emitted telecommands, then
  bursts again.  It only ever consumes delayed feedback, never the true
  follower state.

Both can add seeded band-limited tremor (8-12 Hz sinusoid mixture) to the
commanded position.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ._backend import kernels
from .follower import ReachTask
from .scaling import FrameAlignment, Telecommand

SCRIPTED = "scripted"
MOVE_AND_WAIT = "move_and_wait"

_TREMOR_HZ = (8.0, 10.0, 12.0)


@dataclass(frozen=True)
class OperatorSpec:
    kind: str = SCRIPTED
    speed: float = 0.05
    burst_length: float = 0.01
    wait_tolerance: float = 1e-6
    tremor_amplitude: float = 0.0
    seed: int = 0
    feedback_timeout_ticks: int = 50_000
    # move_and_wait: feedback error below which the next waypoint is taken;
    # None means the task tolerance
    advance_tolerance: float | None = None

    def __post_init__(self):
        if self.kind not in (SCRIPTED, MOVE_AND_WAIT):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.speed <= 0.0:
            raise ValueError("operator speed must be > 0")
        if self.burst_length <= 0.0:
            raise ValueError("burst_length must be > 0")
        if self.wait_tolerance <= 0.0:
            raise ValueError("wait_tolerance must be > 0")
        if self.tremor_amplitude < 0.0:
            raise ValueError("tremor_amplitude must be >= 0")
        if self.advance_tolerance is not None and self.advance_tolerance <= 0.0:
            raise ValueError("advance_tolerance must be > 0")


class TremorModel:
    """Seeded sinusoid mixture; per-axis phases drawn once from the seed."""

    def __init__(self, spec: OperatorSpec, dt: float):
        self.amplitude = spec.tremor_amplitude
        self.dt = dt
        rng = random.Random(spec.seed ^ 0x7472656D)
        self._phases = [
            [rng.uniform(0.0, 2.0 * math.pi) for _ in _TREMOR_HZ] for _ in range(3)
        ]

    def offset(self, tick: int) -> tuple[float, float, float]:
        if self.amplitude == 0.0:
            return (0.0, 0.0, 0.0)
        t = tick * self.dt
        out = []
        for axis in range(3):
            s = 0.0
            for hz, phase in zip(_TREMOR_HZ, self._phases[axis]):
                s += math.sin(2.0 * math.pi * hz * t + phase)
            out.append(self.amplitude * s)
        return (out[0], out[1], out[2])

    def apply(self, position, tick: int) -> tuple[float, float, float]:
        ox, oy, oz = self.offset(tick)
        return (position[0] + ox, position[1] + oy, position[2] + oz)


def add_tremor(position, spec: OperatorSpec, tick: int, dt: float = 1e-3):
    """Position with seeded tremor added; identity when amplitude is zero."""
    return TremorModel(spec, dt).apply(position, tick)


def leg_tick_count(distance: float, speed: float, dt: float) -> int:
    """Ticks to cover a straight leg at constant speed, landing exactly.

    Robust to float wobble: a ratio within 1e-6 of an integer is taken as
    that integer (0.2 m at 0.05 m/s and 1 kHz is exactly 4000 ticks).
    """
    if distance <= 0.0:
        return 0
    ratio = distance / (speed * dt)
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) < 1e-6:
        return int(nearest)
    return int(math.ceil(ratio))


class _LegWalker:
    """Integer-parameterized straight-line walk: p_j = start + (j/n) * delta."""

    def __init__(self, start, goal, speed: float, dt: float):
        self.start = tuple(start)
        self.delta = (goal[0] - start[0], goal[1] - start[1], goal[2] - start[2])
        d = math.sqrt(sum(v * v for v in self.delta))
        self.n = leg_tick_count(d, speed, dt)
        self.j = 0

    @property
    def done(self) -> bool:
        return self.j >= self.n

    def advance(self) -> tuple[float, float, float]:
        if self.j < self.n:
            self.j += 1
        f = self.j / self.n if self.n else 1.0
        return (
            self.start[0] + f * self.delta[0],
            self.start[1] + f * self.delta[1],
            self.start[2] + f * self.delta[2],
        )

    def position(self) -> tuple[float, float, float]:
        f = self.j / self.n if self.n else 1.0
        return (
            self.start[0] + f * self.delta[0],
            self.start[1] + f * self.delta[1],
            self.start[2] + f * self.delta[2],
        )


class ScriptedOperator:
    """Constant-speed waypoint follower in master space.

    Master goals are derived from the follower waypoints by undoing the
    constant scaling and alignment, so leg lengths (and completion times)
    have closed forms.  The final goal is held forever.
    """

    def __init__(
        self,
        spec: OperatorSpec,
        task: ReachTask,
        gamma_c: float,
        alignment: FrameAlignment,
        master_start=(0.0, 0.0, 0.0),
        dt: float = 1e-3,
    ):
        if spec.kind != SCRIPTED:
            raise ValueError("spec.kind must be 'scripted'")
        if gamma_c <= 0.0:
            raise ValueError("scripted operator needs gamma_c > 0")
        self.spec = spec
        self.dt = dt
        self.tremor = TremorModel(spec, dt)
        inv_align = kernels.quat_conj(alignment.rotation)
        goals = []
        prev = tuple(float(v) for v in master_start)
        f_prev = task.start
        for w in task.waypoints:
            dw = (w[0] - f_prev[0], w[1] - f_prev[1], w[2] - f_prev[2])
            dm = kernels.quat_rotate(inv_align, dw)
            goal = (
                prev[0] + dm[0] / gamma_c,
                prev[1] + dm[1] / gamma_c,
                prev[2] + dm[2] / gamma_c,
            )
            goals.append(goal)
            prev = goal
            f_prev = w
        self.goals = goals
        self._pos = tuple(float(v) for v in master_start)
        self._leg = _LegWalker(self._pos, goals[0], spec.speed, dt)
        self._leg_index = 0
        self._emitted_initial = False
        self.stalled = False
        total = 0
        prev = self._pos
        for g in goals:
            total += leg_tick_count(math.dist(prev, g), spec.speed, dt)
            prev = g
        self.travel_ticks = total  # exact motion-tick count over all legs

    @property
    def done(self) -> bool:
        return self._leg_index >= len(self.goals)

    def observe_feedback(self, msg, tick: int) -> None:
        pass  # open loop: the plan already accounts for scaling

    def observe_command(self, cmd: Telecommand) -> None:
        pass

    def step(self, tick: int):
        """Next master position (tremor included), clutch flag, gripper.

        The first call emits the start position unchanged so the controller
        references the true start; motion begins on the second call.
        """
        if not self._emitted_initial:
            self._emitted_initial = True
        elif not self.done:
            self._pos = self._leg.advance()
            if self._leg.done:
                self._leg_index += 1
                if self._leg_index < len(self.goals):
                    self._leg = _LegWalker(
                        self._pos, self.goals[self._leg_index], self.spec.speed, self.dt
                    )
        return self.tremor.apply(self._pos, tick), False, 0.0


class MoveAndWaitOperator:
    """Burst-then-wait strategy closing the loop through delayed feedback.

    Scaling-blind: burst direction and length come from the feedback error
    treated one-to-one in master space.  After a burst it waits until the
    feedback position matches the endpoint implied by its own emitted
    telecommands (within wait_tolerance) before moving again.
    """

    _AWAIT = 0
    _BURST = 1
    _WAIT = 2
    _DONE = 3

    def __init__(
        self,
        spec: OperatorSpec,
        task: ReachTask,
        alignment: FrameAlignment,
        master_start=(0.0, 0.0, 0.0),
        dt: float = 1e-3,
    ):
        if spec.kind != MOVE_AND_WAIT:
            raise ValueError("spec.kind must be 'move_and_wait'")
        self.spec = spec
        self.task = task
        self.dt = dt
        self.tremor = TremorModel(spec, dt)
        self._inv_align = kernels.quat_conj(alignment.rotation)
        self.advance_tolerance = (
            task.tolerance if spec.advance_tolerance is None else spec.advance_tolerance
        )
        self._pos = tuple(float(v) for v in master_start)
        self._phase = self._AWAIT
        self._leg: _LegWalker | None = None
        self._wp_index = 0
        self._fb_pos: tuple[float, float, float] | None = None
        self._last_fb_tick: int | None = None
        self._predicted: tuple[float, float, float] | None = None
        self.bursts = 0
        self.stalled = False

    @property
    def done(self) -> bool:
        return self._phase == self._DONE

    def observe_feedback(self, msg, tick: int) -> None:
        self._fb_pos = msg.position
        self._last_fb_tick = tick
        if self._predicted is None:
            # first sight of the follower anchors the command integral
            self._predicted = msg.position

    def observe_command(self, cmd: Telecommand) -> None:
        if self._predicted is not None:
            dx, dy, dz = cmd.delta_p_scaled
            p = self._predicted
            self._predicted = (p[0] + dx, p[1] + dy, p[2] + dz)

    def _feedback_error(self) -> tuple[float, float, float]:
        w = self.task.waypoints[self._wp_index]
        f = self._fb_pos
        return (w[0] - f[0], w[1] - f[1], w[2] - f[2])

    def _settled(self) -> bool:
        if self._fb_pos is None or self._predicted is None:
            return False
        return math.dist(self._fb_pos, self._predicted) <= self.spec.wait_tolerance

    def _start_burst_or_advance(self) -> None:
        err = self._feedback_error()
        dist = math.sqrt(err[0] ** 2 + err[1] ** 2 + err[2] ** 2)
        if dist <= self.advance_tolerance:
            self._wp_index += 1
            if self._wp_index >= len(self.task.waypoints):
                self._phase = self._DONE
                return
            err = self._feedback_error()
            dist = math.sqrt(err[0] ** 2 + err[1] ** 2 + err[2] ** 2)
            if dist <= self.advance_tolerance:
                # next waypoint already satisfied; re-evaluate next tick
                return
        burst = min(self.spec.burst_length, dist)
        dm = kernels.quat_rotate(self._inv_align, err)
        dn = math.sqrt(dm[0] ** 2 + dm[1] ** 2 + dm[2] ** 2)
        goal = (
            self._pos[0] + dm[0] / dn * burst,
            self._pos[1] + dm[1] / dn * burst,
            self._pos[2] + dm[2] / dn * burst,
        )
        self._leg = _LegWalker(self._pos, goal, self.spec.speed, self.dt)
        self._phase = self._BURST
        self.bursts += 1

    def step(self, tick: int):
        if self._last_fb_tick is not None:
            starved = tick - self._last_fb_tick > self.spec.feedback_timeout_ticks
        else:
            starved = tick > self.spec.feedback_timeout_ticks
        if starved and self._phase in (self._AWAIT, self._WAIT):
            self.stalled = True

        if self._phase == self._AWAIT:
            if self._fb_pos is not None:
                self._start_burst_or_advance()
        elif self._phase == self._WAIT:
            if self._settled():
                self._start_burst_or_advance()
        if self._phase == self._BURST:
            self._pos = self._leg.advance()
            if self._leg.done:
                self._phase = self._WAIT
        return self.tremor.apply(self._pos, tick), False, 0.0


def make_operator(
    spec: OperatorSpec,
    task: ReachTask,
    gamma_c: float,
    alignment: FrameAlignment,
    master_start=(0.0, 0.0, 0.0),
    dt: float = 1e-3,
):
    if spec.kind == SCRIPTED:
        return ScriptedOperator(spec, task, gamma_c, alignment, master_start, dt)
    return MoveAndWaitOperator(spec, task, alignment, master_start, dt)
