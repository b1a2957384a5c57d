"""Serial-chain kinematics: poses, chains, forward kinematics, Jacobian.

Chains are described one joint per line in a plain-text file::

    dh-convention: modified
    # type  a  alpha  d  theta_offset   (SI units, radians)
    revolute 0.28 0.0 0.0 0.0

The per-joint transform, applied left to right from the base pose, is
Rz(theta) Tz(d) Tx(a) Rx(alpha), with the joint variable added to
theta_offset for revolute joints and to d for prismatic ones.  The header
line pins this convention so chain files are unambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

_IDENTITY_Q = (1.0, 0.0, 0.0, 0.0)

CHAIN_HEADER = "dh-convention: modified"


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class Pose:
    """Position (meters) and orientation (unit quaternion, w x y z)."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = _IDENTITY_Q

    def __post_init__(self):
        p = tuple(float(v) for v in self.position)
        q = tuple(float(v) for v in self.orientation)
        if len(p) != 3 or len(q) != 4:
            raise ValueError("pose needs a 3-vector position and 4-tuple quaternion")
        if not _finite(*p, *q):
            raise ValueError("pose components must be finite")
        norm = math.sqrt(sum(v * v for v in q))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {norm} too far from 1")
        if abs(norm - 1.0) > 1e-12:
            q = tuple(v / norm for v in q)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def rotation_matrix(self) -> np.ndarray:
        return kernels.quat_to_matrix(self.orientation)

    def transform_point(self, point) -> tuple[float, float, float]:
        r = kernels.quat_rotate(self.orientation, tuple(point))
        return (r[0] + self.position[0], r[1] + self.position[1], r[2] + self.position[2])


def quat_from_axis_angle(axis, angle: float) -> tuple[float, float, float, float]:
    return kernels.quat_from_axis_angle(float(axis[0]), float(axis[1]), float(axis[2]), float(angle))


def quat_mul(a, b):
    return kernels.quat_mul(a, b)


def quat_rotate(q, v):
    return kernels.quat_rotate(q, v)


def quat_angle_between(a, b) -> float:
    return kernels.quat_angle_between(a, b)


@dataclass(frozen=True)
class Joint:
    kind: str
    a: float
    alpha: float
    d: float
    theta_offset: float

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        if not _finite(self.a, self.alpha, self.d, self.theta_offset):
            raise ValueError("joint parameters must be finite")


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple[Joint, ...]
    base_frame: Pose = field(default_factory=Pose.identity)

    # packed copies handed to the kernels
    _types: bytes = field(init=False, repr=False, compare=False)
    _params: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        joints = tuple(self.joints)
        if len(joints) < 1:
            raise ValueError("a chain needs at least one joint")
        object.__setattr__(self, "joints", joints)
        types = bytes(0 if j.kind == REVOLUTE else 1 for j in joints)
        params = np.array(
            [[j.a, j.alpha, j.d, j.theta_offset] for j in joints], dtype=float
        )
        object.__setattr__(self, "_types", types)
        object.__setattr__(self, "_params", params)

    @property
    def n(self) -> int:
        return len(self.joints)


@dataclass(frozen=True)
class JointState:
    """Joint values (rad or m) and optional rates, at a simulation tick."""

    angles: tuple[float, ...]
    velocities: tuple[float, ...] | None = None
    tick: int = 0

    def __post_init__(self):
        angles = tuple(float(v) for v in self.angles)
        if not _finite(*angles):
            raise ValueError("joint angles must be finite")
        object.__setattr__(self, "angles", angles)
        if self.velocities is not None:
            vel = tuple(float(v) for v in self.velocities)
            if len(vel) != len(angles):
                raise ValueError("velocities length must match angles length")
            if not _finite(*vel):
                raise ValueError("joint velocities must be finite")
            object.__setattr__(self, "velocities", vel)


def _check_dim(chain: KinematicChain, values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (chain.n,):
        raise ValueError(f"{what} has length {arr.shape}, chain expects ({chain.n},)")
    return np.ascontiguousarray(arr)


def forward_kinematics(chain: KinematicChain, joints: JointState) -> Pose:
    """End-effector pose in the chain's base frame. Pure and deterministic."""
    q = _check_dim(chain, joints.angles, "joint angles")
    p, quat = kernels.fk(
        chain._types, chain._params, q, chain.base_frame.position, chain.base_frame.orientation
    )
    return Pose(p, quat)


def position_jacobian(chain: KinematicChain, joints: JointState) -> np.ndarray:
    """3xn matrix; column i is d(position)/d(joint_i), built geometrically."""
    q = _check_dim(chain, joints.angles, "joint angles")
    return kernels.jacobian(
        chain._types, chain._params, q, chain.base_frame.position, chain.base_frame.orientation
    )


def linear_velocity(chain: KinematicChain, joints: JointState) -> tuple[float, float, float]:
    """End-effector linear velocity J(q) @ qdot, meters/second."""
    if joints.velocities is None:
        raise ValueError("joint velocities required for linear_velocity")
    qd = _check_dim(chain, joints.velocities, "joint velocities")
    jac = position_jacobian(chain, joints)
    v = jac @ qd
    return (float(v[0]), float(v[1]), float(v[2]))


def parse_chain(text: str, base_frame: Pose | None = None) -> KinematicChain:
    """Parse the line-oriented chain format (see module docstring)."""
    joints: list[Joint] = []
    saw_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("dh-convention:"):
            convention = line.split(":", 1)[1].strip().lower()
            if convention != "modified":
                raise ValueError(f"line {lineno}: unsupported dh-convention {convention!r}")
            saw_header = True
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 'type a alpha d theta_offset'")
        kind = parts[0].lower()
        try:
            a, alpha, d, theta = (float(v) for v in parts[1:])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric joint parameter") from exc
        joints.append(Joint(kind, a, alpha, d, theta))
    if not saw_header:
        raise ValueError("chain file is missing the 'dh-convention: modified' header")
    if not joints:
        raise ValueError("chain file defines no joints")
    return KinematicChain(tuple(joints), base_frame or Pose.identity())


def load_chain(path: str | Path, base_frame: Pose | None = None) -> KinematicChain:
    return parse_chain(Path(path).read_text(), base_frame)


def dump_chain(chain: KinematicChain) -> str:
    lines = [CHAIN_HEADER]
    for j in chain.joints:
        lines.append(f"{j.kind} {j.a!r} {j.alpha!r} {j.d!r} {j.theta_offset!r}")
    return "\n".join(lines) + "\n"
