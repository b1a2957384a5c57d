import math

import numpy as np
import pytest

from teleoscale.experiment import data_path
from teleoscale.kinematics import Joint, KinematicChain, load_chain


@pytest.fixture(scope="session")
def arm7():
    return load_chain(data_path("chains/arm7.chain"))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240917)


def planar_chain(*link_lengths):
    """All-revolute planar arm: each row carries its distal link length."""
    return KinematicChain(tuple(Joint("revolute", a, 0.0, 0.0, 0.0) for a in link_lengths))


def random_chain(rng, n=None):
    n = n or int(rng.integers(1, 7))
    joints = []
    for _ in range(n):
        kind = "revolute" if rng.random() < 0.7 else "prismatic"
        a, alpha, d, off = rng.uniform(-0.5, 0.5, size=4)
        joints.append(Joint(kind, float(a), float(alpha), float(d), float(off)))
    return KinematicChain(tuple(joints))


def random_unit_quat(rng):
    v = rng.normal(size=4)
    v = v / np.linalg.norm(v)
    return (float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def quat_to_matrix_oracle(q):
    """Rotation matrix from a unit quaternion, written out independently."""
    w, x, y, z = q
    return np.array(
        [
            [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )


def rotate_by_matrix_oracle(q, v):
    return quat_to_matrix_oracle(q) @ np.asarray(v, dtype=float)


def assert_vec_close(actual, expected, tol=1e-12):
    a = np.asarray(actual, dtype=float)
    e = np.asarray(expected, dtype=float)
    assert a.shape == e.shape
    err = float(np.max(np.abs(a - e)))
    assert err <= tol, f"max component error {err} > {tol}: {a} vs {e}"


def angle_wrap(q):
    """Canonical sign for quaternion comparison up to double cover."""
    return tuple(-c for c in q) if q[0] < 0 else tuple(q)
