"""Pure-Python reference kernels.

Hot-path math used by the tick loop: quaternion algebra, serial-chain
forward kinematics, the position Jacobian, the rate-clamped servo step and
trajectory path length.  teleoscale._kernels is the compiled twin with the
same signatures and the same floating-point operation order; parity between
the two is covered by tests.  Quaternions are (w, x, y, z), Hamilton product.
"""

import math

import numpy as np

BACKEND = "python"

REVOLUTE = 0
PRISMATIC = 1


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conj(q):
    return (q[0], -q[1], -q[2], -q[3])


def quat_normalize(q):
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (w / n, x / n, y / n, z / n)


def quat_rotate(q, v):
    # v' = v + 2*w*(u x v) + 2*(u x (u x v)), u = vector part
    w, x, y, z = q
    vx, vy, vz = v
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(ax, ay, az, angle):
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    h = 0.5 * angle
    s = math.sin(h) / n
    return (math.cos(h), ax * s, ay * s, az * s)


def quat_angle_between(a, b):
    """Geodesic angle (radians) between two unit quaternions."""
    r = quat_mul(quat_conj(a), b)
    w = r[0]
    if w < 0.0:
        r = (-r[0], -r[1], -r[2], -r[3])
        w = r[0]
    vn = math.sqrt(r[1] * r[1] + r[2] * r[2] + r[3] * r[3])
    return 2.0 * math.atan2(vn, w)


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=float,
    )


def _fk_accumulate(types, params, q, base_p, base_q, record):
    px, py, pz = base_p
    qw, qx, qy, qz = base_q
    origins = []
    axes = []
    n = len(q)
    for i in range(n):
        a = params[i, 0]
        alpha = params[i, 1]
        d = params[i, 2]
        theta = params[i, 3]
        if types[i] == REVOLUTE:
            theta = theta + q[i]
        else:
            d = d + q[i]
        if record:
            origins.append((px, py, pz))
            # joint axis: local z of the frame the joint acts in
            axes.append(
                (
                    2.0 * (qx * qz + qw * qy),
                    2.0 * (qy * qz - qw * qx),
                    1.0 - 2.0 * (qx * qx + qy * qy),
                )
            )
        # rotate about z
        h = 0.5 * theta
        c, s = math.cos(h), math.sin(h)
        qw, qx, qy, qz = (
            qw * c - qz * s,
            qx * c + qy * s,
            qy * c - qx * s,
            qz * c + qw * s,
        )
        # translate (a, 0, d) in the rotated frame
        tx, ty, tz = quat_rotate((qw, qx, qy, qz), (a, 0.0, d))
        px, py, pz = px + tx, py + ty, pz + tz
        # rotate about x
        h = 0.5 * alpha
        c, s = math.cos(h), math.sin(h)
        qw, qx, qy, qz = (
            qw * c - qx * s,
            qx * c + qw * s,
            qy * c + qz * s,
            qz * c - qy * s,
        )
    return (px, py, pz), (qw, qx, qy, qz), origins, axes


def fk(types, params, q, base_p, base_q):
    """End-effector pose of a serial chain.

    types: uint8 per joint (0 revolute, 1 prismatic); params: (n, 4) float64
    rows (a, alpha, d, theta_offset); q: joint values.  Per-joint transform is
    Rz(theta) Tz(d) Tx(a) Rx(alpha) applied left to right from the base.
    """
    p, quat, _, _ = _fk_accumulate(types, params, q, base_p, base_q, False)
    return p, quat_normalize(quat)


def jacobian(types, params, q, base_p, base_q):
    """3xn position Jacobian (geometric construction, not finite differences)."""
    n = len(q)
    p_e, _, origins, axes = _fk_accumulate(types, params, q, base_p, base_q, True)
    out = np.empty((3, n), dtype=float)
    ex, ey, ez = p_e
    for i in range(n):
        zx, zy, zz = axes[i]
        if types[i] == REVOLUTE:
            ox, oy, oz = origins[i]
            rx, ry, rz = ex - ox, ey - oy, ez - oz
            out[0, i] = zy * rz - zz * ry
            out[1, i] = zz * rx - zx * rz
            out[2, i] = zx * ry - zy * rx
        else:
            out[0, i] = zx
            out[1, i] = zy
            out[2, i] = zz
    return out


def servo_step(actual_p, actual_q, target_p, target_q, max_lin, max_ang, dt):
    """One rate-clamped step of the follower servo toward the target pose."""
    ax, ay, az = actual_p
    tx, ty, tz = target_p
    ex, ey, ez = tx - ax, ty - ay, tz - az
    dist = math.sqrt(ex * ex + ey * ey + ez * ez)
    step = max_lin * dt
    if dist <= step:
        new_p = (tx, ty, tz)
    else:
        f = step / dist
        new_p = (ax + ex * f, ay + ey * f, az + ez * f)

    r = quat_mul(quat_conj(actual_q), target_q)
    if r[0] < 0.0:
        r = (-r[0], -r[1], -r[2], -r[3])
    vn = math.sqrt(r[1] * r[1] + r[2] * r[2] + r[3] * r[3])
    ang = 2.0 * math.atan2(vn, r[0])
    astep = max_ang * dt
    if ang <= astep or vn == 0.0:
        new_q = target_q
    else:
        h = 0.5 * astep
        s = math.sin(h) / vn
        dq = (math.cos(h), r[1] * s, r[2] * s, r[3] * s)
        new_q = quat_normalize(quat_mul(actual_q, dq))
    return new_p, new_q


def path_length(points):
    """Sum of Euclidean segment lengths over an (n, 3) array of positions."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be an (n, 3) array")
    total = 0.0
    for i in range(1, pts.shape[0]):
        dx = pts[i, 0] - pts[i - 1, 0]
        dy = pts[i, 1] - pts[i - 1, 1]
        dz = pts[i, 2] - pts[i - 1, 2]
        total += math.sqrt(dx * dx + dy * dy + dz * dz)
    return total
