"""Deterministic testbed for motion-scaled teleoperation over delayed links.

A master-side controller turns operator motion into scaled relative position
telecommands, a channel delivers them (simulated ticks or a real socket) with
configurable one-way delay, and a follower integrates and servos to the
commanded pose while task fixtures time completion and measure path length.
"""

from ._backend import BACKEND, available_backends
from .kinematics import (
    Joint,
    JointState,
    KinematicChain,
    Pose,
    forward_kinematics,
    linear_velocity,
    load_chain,
    parse_chain,
    position_jacobian,
)
from .scaling import (
    FrameAlignment,
    MasterState,
    MotionScalingController,
    ScalingConfig,
    SpeedEstimator,
    Telecommand,
    effective_gamma,
)
from .channel import ChannelConfig, FeedbackMsg, JitterSpec, SimChannel
from .wire import serialize, deserialize
from .follower import FollowerStation, ReachTask, TaskTracker, load_task
from .telemetry import (
    TaskMetrics,
    TrajectoryLog,
    TrajectoryRecord,
    aggregate_relative,
    emit_table,
    path_length,
    read_log,
    read_metrics_csv,
    write_metrics_csv,
)
from .experiment import ExperimentConfig, replay_log, run_experiment, run_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "Joint",
    "JointState",
    "KinematicChain",
    "Pose",
    "forward_kinematics",
    "linear_velocity",
    "load_chain",
    "parse_chain",
    "position_jacobian",
    "FrameAlignment",
    "MasterState",
    "MotionScalingController",
    "ScalingConfig",
    "SpeedEstimator",
    "Telecommand",
    "effective_gamma",
    "ChannelConfig",
    "FeedbackMsg",
    "JitterSpec",
    "SimChannel",
    "serialize",
    "deserialize",
    "FollowerStation",
    "ReachTask",
    "TaskTracker",
    "load_task",
    "TaskMetrics",
    "TrajectoryLog",
    "TrajectoryRecord",
    "aggregate_relative",
    "emit_table",
    "path_length",
    "read_log",
    "read_metrics_csv",
    "write_metrics_csv",
    "ExperimentConfig",
    "replay_log",
    "run_experiment",
    "run_suite",
    "__version__",
]
