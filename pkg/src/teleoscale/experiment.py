"""Experiment configuration, the deterministic tick loop, and suites.

Per-tick module order is fixed so determinism is well-defined:
operator -> controller -> command channel -> follower apply + regulate ->
task tracker -> feedback channel -> operator feedback buffer -> telemetry.

Configs are JSON documents (schema 1); suites are lists of config overlays
sharing one task set so runs stay comparable.  TELEOP_TICK_HZ, when set,
overrides the tick rate.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .channel import ChannelConfig, FeedbackMsg, JitterSpec, SimChannel
from .errors import ConfigError, FaultError
from .follower import FollowerStation, ReachTask, TaskTracker, load_task, task_from_dict
from .kinematics import Pose
from .operators import OperatorSpec, make_operator
from .scaling import FrameAlignment, MotionScalingController, ScalingConfig
from .telemetry import TaskMetrics, TrajectoryLog, TrajectoryRecord, path_length, read_log

SCHEMA_VERSION = 1
_IDENTITY_Q = (1.0, 0.0, 0.0, 0.0)


def data_path(relative: str) -> Path:
    """Path of a bundled data file (chains, tasks, tables, suites)."""
    p = resources.files("teleoscale").joinpath("data", relative)
    return Path(str(p))


def resolve_ref(ref: str, base_dir: Path | None = None) -> Path:
    """Resolve a file reference: 'builtin:x' names bundled data."""
    if ref.startswith("builtin:"):
        return data_path(ref[len("builtin:"):])
    path = Path(ref)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


def effective_tick_hz(configured: int | None) -> int:
    env = os.environ.get("TELEOP_TICK_HZ")
    if env:
        try:
            hz = int(env)
        except ValueError as exc:
            raise ConfigError(f"TELEOP_TICK_HZ must be an integer, got {env!r}") from exc
        if hz <= 0:
            raise ConfigError("TELEOP_TICK_HZ must be > 0")
        return hz
    return configured if configured is not None else 1000


@dataclass(frozen=True)
class ExperimentConfig:
    label: str
    task: ReachTask
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    alignment: FrameAlignment = field(default_factory=FrameAlignment.identity)
    command_channel: ChannelConfig = field(default_factory=ChannelConfig)
    feedback_channel: ChannelConfig | None = None
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    tick_hz: int = 1000
    seed: int = 0
    tick_budget: int = 10_000_000
    master_start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    max_linear_rate: float = 0.5
    max_angular_rate: float = 2.0 * math.pi
    stream_orientation_during_clutch: bool = True
    chain_ref: str | None = None

    def __post_init__(self):
        if self.tick_hz <= 0:
            raise ConfigError("tick_hz must be > 0")
        if self.tick_budget <= 0:
            raise ConfigError("tick_budget must be > 0")
        if not self.label:
            raise ConfigError("label must be non-empty")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    def fb_channel(self) -> ChannelConfig:
        if self.feedback_channel is not None:
            return self.feedback_channel
        return replace(self.command_channel, seed=self.command_channel.seed ^ 0x5EED)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "label": self.label,
            "tick_hz": self.tick_hz,
            "seed": self.seed,
            "tick_budget": self.tick_budget,
            "scaling": {"gamma_c": self.scaling.gamma_c, "gamma_v": self.scaling.gamma_v},
            "alignment": list(self.alignment.rotation),
            "channel": _channel_to_dict(self.command_channel),
            "feedback_channel": _channel_to_dict(self.fb_channel()),
            "operator": _operator_to_dict(self.operator),
            "task": json.loads(self.task.to_json()),
            "master_start": list(self.master_start),
            "max_linear_rate": self.max_linear_rate,
            "max_angular_rate": self.max_angular_rate,
            "stream_orientation_during_clutch": self.stream_orientation_during_clutch,
            "chain": self.chain_ref,
        }


def _channel_to_dict(c: ChannelConfig) -> dict:
    jit: dict = {"kind": c.jitter.kind}
    if c.jitter.kind == "uniform":
        jit["k"] = c.jitter.k
    elif c.jitter.kind == "discrete":
        jit["offsets"] = list(c.jitter.offsets)
        jit["weights"] = list(c.jitter.weights)
    return {
        "one_way_delay_ticks": c.one_way_delay_ticks,
        "jitter": jit,
        "hold_back": c.hold_back,
        "seed": c.seed,
    }


def _channel_from_dict(doc: dict) -> ChannelConfig:
    jit_doc = doc.get("jitter", {"kind": "none"})
    jitter = JitterSpec(
        kind=jit_doc.get("kind", "none"),
        k=int(jit_doc.get("k", 0)),
        offsets=tuple(jit_doc.get("offsets", ())),
        weights=tuple(jit_doc.get("weights", ())),
    )
    return ChannelConfig(
        one_way_delay_ticks=int(doc.get("one_way_delay_ticks", 0)),
        jitter=jitter,
        hold_back=bool(doc.get("hold_back", True)),
        seed=int(doc.get("seed", 0)),
    )


def _operator_to_dict(o: OperatorSpec) -> dict:
    return {
        "kind": o.kind,
        "speed": o.speed,
        "burst_length": o.burst_length,
        "wait_tolerance": o.wait_tolerance,
        "tremor_amplitude": o.tremor_amplitude,
        "seed": o.seed,
        "feedback_timeout_ticks": o.feedback_timeout_ticks,
        "advance_tolerance": o.advance_tolerance,
    }


def _operator_from_dict(doc: dict) -> OperatorSpec:
    adv = doc.get("advance_tolerance")
    return OperatorSpec(
        kind=doc.get("kind", "scripted"),
        speed=float(doc.get("speed", 0.05)),
        burst_length=float(doc.get("burst_length", 0.01)),
        wait_tolerance=float(doc.get("wait_tolerance", 1e-6)),
        tremor_amplitude=float(doc.get("tremor_amplitude", 0.0)),
        seed=int(doc.get("seed", 0)),
        feedback_timeout_ticks=int(doc.get("feedback_timeout_ticks", 50_000)),
        advance_tolerance=None if adv is None else float(adv),
    )


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build a validated config from a parsed JSON document."""
    try:
        schema = int(doc.get("schema", SCHEMA_VERSION))
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {schema}")
        task_doc = doc.get("task")
        if isinstance(task_doc, str):
            task = load_task(resolve_ref(task_doc, base_dir))
        elif isinstance(task_doc, dict):
            task = task_from_dict(task_doc)
        else:
            raise ConfigError("config needs a 'task' (fixture path or inline object)")
        align_doc = doc.get("alignment", list(_IDENTITY_Q))
        if isinstance(align_doc, dict):
            alignment = FrameAlignment.from_axis_angle(
                align_doc["axis"], float(align_doc["angle_rad"])
            )
        else:
            alignment = FrameAlignment(tuple(align_doc))
        scaling_doc = doc.get("scaling", {})
        cfg = ExperimentConfig(
            label=str(doc.get("label", "unnamed")),
            task=task,
            scaling=ScalingConfig(
                gamma_c=float(scaling_doc.get("gamma_c", 1.0)),
                gamma_v=float(scaling_doc.get("gamma_v", 0.0)),
            ),
            alignment=alignment,
            command_channel=_channel_from_dict(doc.get("channel", {})),
            feedback_channel=(
                _channel_from_dict(doc["feedback_channel"])
                if "feedback_channel" in doc
                else None
            ),
            operator=_operator_from_dict(doc.get("operator", {})),
            tick_hz=effective_tick_hz(doc.get("tick_hz")),
            seed=int(doc.get("seed", 0)),
            tick_budget=int(doc.get("tick_budget", 10_000_000)),
            master_start=tuple(doc.get("master_start", (0.0, 0.0, 0.0))),
            max_linear_rate=float(doc.get("max_linear_rate", 0.5)),
            max_angular_rate=float(doc.get("max_angular_rate", 2.0 * math.pi)),
            stream_orientation_during_clutch=bool(
                doc.get("stream_orientation_during_clutch", True)
            ),
            chain_ref=doc.get("chain"),
        )
    except (ValueError, TypeError, KeyError, OSError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc, base_dir=path.parent)


@dataclass
class RunResult:
    metrics: TaskMetrics
    records: list[TrajectoryRecord]
    completed_tick: int | None
    log_path: Path | None
    meta: dict


def metrics_from_records(records, task: ReachTask, tick_hz: int, label: str) -> TaskMetrics:
    """TaskMetrics recomputed purely from a record stream (replay-safe).

    Timing starts at the first record (first telecommand after task arm) and
    stops at the completion tick; distance is over follower actual positions
    up to completion (whole run when incomplete, reported with time None).
    """
    if not records:
        raise ValueError("no records")
    tracker = TaskTracker(task)
    completed_index = None
    for i, rec in enumerate(records):
        tracker.update(rec.actual_p, rec.tick)
        if tracker.done:
            completed_index = i
            break
    if completed_index is None:
        span = records
        time_s = None
    else:
        span = records[: completed_index + 1]
        time_s = (records[completed_index].tick - records[0].tick) / tick_hz
    dist = path_length([r.actual_p for r in span])
    return TaskMetrics(
        task_name=task.fixture_id,
        config_label=label,
        completion_time_s=time_s,
        path_length_left_m=dist,
    )


def commanded_path_length(records) -> float:
    """Path length of the follower target (commanded) trajectory."""
    return path_length([r.target_p for r in records])


def master_path_length(records) -> float:
    return path_length([r.master_p for r in records])


def run_experiment(config: ExperimentConfig, log_path: str | Path | None = None) -> RunResult:
    """Run one experiment to completion (or budget); deterministic per seed."""
    dt = config.dt
    controller = MotionScalingController(
        config.scaling,
        config.alignment,
        dt,
        stream_orientation_during_clutch=config.stream_orientation_during_clutch,
    )
    follower = FollowerStation(
        initial_pose=Pose(config.task.start),
        alignment=config.alignment,
        max_linear_rate=config.max_linear_rate,
        max_angular_rate=config.max_angular_rate,
        dt=dt,
    )
    cmd_channel = SimChannel(config.command_channel)
    fb_channel = SimChannel(config.fb_channel())
    operator = make_operator(
        config.operator,
        config.task,
        config.scaling.gamma_c,
        config.alignment,
        config.master_start,
        dt,
    )
    tracker = TaskTracker(config.task)
    meta = {"config": config.to_dict(), "writer": "teleoscale", "log_schema": 1}
    log = TrajectoryLog(log_path, meta) if log_path is not None else None

    records: list[TrajectoryRecord] = []
    completed_tick = None
    try:
        for tick in range(config.tick_budget):
            pos, clutch, gripper = operator.step(tick)
            cmd = controller.step_pose(Pose(pos), tick, clutch=clutch, gripper=gripper)
            operator.observe_command(cmd)
            cmd_channel.send(cmd, tick)
            for delivered in cmd_channel.poll(tick):
                follower.apply_telecommand(delivered)
            follower.regulate()
            tracker.update(follower.actual_position, tick)
            fb = FeedbackMsg(
                seq=tick,
                send_tick=tick,
                position=follower.actual_position,
                orientation=follower.actual_pose.orientation,
                frame_id=tick,
            )
            fb_channel.send(fb, tick)
            for delivered in fb_channel.poll(tick):
                operator.observe_feedback(delivered, tick)
            record = TrajectoryRecord(
                tick=tick,
                master_p=pos,
                master_q=_IDENTITY_Q,
                target_p=follower.target_position,
                target_q=follower.target_pose.orientation,
                actual_p=follower.actual_position,
                actual_q=follower.actual_pose.orientation,
                seq=cmd.seq,
                clutched=cmd.clutched,
                gamma=controller.last_gamma,
            )
            records.append(record)
            if log is not None:
                log.append(record)
            if tracker.done:
                completed_tick = tracker.completed_tick
                break
            if getattr(operator, "stalled", False):
                raise FaultError("operator stalled: feedback starvation")
    finally:
        if log is not None:
            log.close()

    metrics = metrics_from_records(records, config.task, config.tick_hz, config.label)
    return RunResult(
        metrics=metrics,
        records=records,
        completed_tick=completed_tick,
        log_path=Path(log_path) if log_path is not None else None,
        meta=meta,
    )


def replay_log(path: str | Path) -> TaskMetrics:
    """Recompute TaskMetrics from a log file; equals the live-run metrics."""
    meta, records = read_log(path)
    cfg_doc = meta.get("config", {})
    task = task_from_dict(cfg_doc["task"])
    tick_hz = int(cfg_doc.get("tick_hz", 1000))
    label = str(cfg_doc.get("label", "unnamed"))
    return metrics_from_records(records, task, tick_hz, label)


def load_suite(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read suite {path}: {exc}") from exc
    doc["_base_dir"] = str(path.parent)
    return doc


def run_suite(suite: dict, out_dir: str | Path | None = None):
    """Run every config over the shared task set; returns (metrics, results).

    Refuses suites whose configs carry their own task fixtures: comparisons
    are only meaningful when every config runs the identical task set.
    """
    base_dir = Path(suite.get("_base_dir", "."))
    configs = suite.get("configs", [])
    if len(configs) < 2:
        raise ConfigError("nothing to compare: a suite needs at least two configs")
    task_refs = suite.get("tasks", [])
    if not task_refs:
        raise ConfigError("suite needs a non-empty 'tasks' list")
    for overlay in configs:
        if "task" in overlay or "tasks" in overlay:
            raise ConfigError(
                "mixed fixtures refused: configs must share the suite task list"
            )
    base_doc = suite.get("base", {})
    labels = [overlay.get("label") for overlay in configs]
    if len(set(labels)) != len(labels) or None in labels:
        raise ConfigError("every suite config needs a unique label")

    all_metrics: list[TaskMetrics] = []
    results: list[RunResult] = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for overlay in configs:
        for task_ref in task_refs:
            doc = copy.deepcopy(base_doc)
            doc.update(copy.deepcopy(overlay))
            doc["task"] = task_ref
            cfg = config_from_dict(doc, base_dir=base_dir)
            log_path = None
            if out is not None:
                safe_task = cfg.task.fixture_id.replace("/", "_")
                log_path = out / f"{cfg.label}__{safe_task}.tlog"
            result = run_experiment(cfg, log_path=log_path)
            all_metrics.append(result.metrics)
            results.append(result)
    return all_metrics, results
