# cython: language_level=3
"""Compiled kernels: same signatures and float op order as _kernels_py."""

from libc.math cimport sqrt, sin, cos, atan2

import numpy as np

BACKEND = "compiled"

REVOLUTE = 0
PRISMATIC = 1

cdef unsigned char _REVOLUTE = 0


def quat_mul(a, b):
    cdef double aw = a[0], ax = a[1], ay = a[2], az = a[3]
    cdef double bw = b[0], bx = b[1], by = b[2], bz = b[3]
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conj(q):
    return (q[0], -q[1], -q[2], -q[3])


def quat_normalize(q):
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double n = sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (w / n, x / n, y / n, z / n)


def quat_rotate(q, v):
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double vx = v[0], vy = v[1], vz = v[2]
    cdef double tx = 2.0 * (y * vz - z * vy)
    cdef double ty = 2.0 * (z * vx - x * vz)
    cdef double tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(double ax, double ay, double az, double angle):
    cdef double n = sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    cdef double h = 0.5 * angle
    cdef double s = sin(h) / n
    return (cos(h), ax * s, ay * s, az * s)


def quat_angle_between(a, b):
    cdef double aw = a[0], ax = a[1], ay = a[2], az = a[3]
    cdef double bw = b[0], bx = b[1], by = b[2], bz = b[3]
    # conj(a) * b
    cdef double rw = aw * bw + ax * bx + ay * by + az * bz
    cdef double rx = aw * bx - ax * bw - ay * bz + az * by
    cdef double ry = aw * by + ax * bz - ay * bw - az * bx
    cdef double rz = aw * bz - ax * by + ay * bx - az * bw
    if rw < 0.0:
        rw = -rw
        rx = -rx
        ry = -ry
        rz = -rz
    cdef double vn = sqrt(rx * rx + ry * ry + rz * rz)
    return 2.0 * atan2(vn, rw)


def quat_to_matrix(q):
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=float,
    )


cdef void _fk_core(const unsigned char[::1] types, const double[:, ::1] params,
                   const double[::1] q, double* pose, double[:, ::1] origins,
                   double[:, ::1] axes, bint record) noexcept:
    cdef double px = pose[0], py = pose[1], pz = pose[2]
    cdef double qw = pose[3], qx = pose[4], qy = pose[5], qz = pose[6]
    cdef double a, alpha, d, theta, h, c, s
    cdef double nw, nx, ny, nz, tx, ty, tz, rx, ry, rz
    cdef Py_ssize_t i, n = q.shape[0]
    for i in range(n):
        a = params[i, 0]
        alpha = params[i, 1]
        d = params[i, 2]
        theta = params[i, 3]
        if types[i] == _REVOLUTE:
            theta = theta + q[i]
        else:
            d = d + q[i]
        if record:
            origins[i, 0] = px
            origins[i, 1] = py
            origins[i, 2] = pz
            axes[i, 0] = 2.0 * (qx * qz + qw * qy)
            axes[i, 1] = 2.0 * (qy * qz - qw * qx)
            axes[i, 2] = 1.0 - 2.0 * (qx * qx + qy * qy)
        h = 0.5 * theta
        c = cos(h)
        s = sin(h)
        nw = qw * c - qz * s
        nx = qx * c + qy * s
        ny = qy * c - qx * s
        nz = qz * c + qw * s
        qw, qx, qy, qz = nw, nx, ny, nz
        # translate (a, 0, d) in the rotated frame: quat_rotate inlined
        rx = 2.0 * (qy * d)          # 2*(y*vz - z*vy) with v=(a,0,d)
        ry = 2.0 * (qz * a - qx * d)
        rz = 2.0 * (-qy * a)
        tx = a + qw * rx + (qy * rz - qz * ry)
        ty = qw * ry + (qz * rx - qx * rz)
        tz = d + qw * rz + (qx * ry - qy * rx)
        px += tx
        py += ty
        pz += tz
        h = 0.5 * alpha
        c = cos(h)
        s = sin(h)
        nw = qw * c - qx * s
        nx = qx * c + qw * s
        ny = qy * c + qz * s
        nz = qz * c - qy * s
        qw, qx, qy, qz = nw, nx, ny, nz
    pose[0] = px
    pose[1] = py
    pose[2] = pz
    pose[3] = qw
    pose[4] = qx
    pose[5] = qy
    pose[6] = qz


def fk(const unsigned char[::1] types, const double[:, ::1] params,
       const double[::1] q, base_p, base_q):
    """End-effector pose; see _kernels_py.fk for the parameter contract."""
    cdef double pose[7]
    pose[0] = base_p[0]
    pose[1] = base_p[1]
    pose[2] = base_p[2]
    pose[3] = base_q[0]
    pose[4] = base_q[1]
    pose[5] = base_q[2]
    pose[6] = base_q[3]
    _fk_core(types, params, q, pose, None, None, False)
    cdef double n = sqrt(pose[3] * pose[3] + pose[4] * pose[4]
                         + pose[5] * pose[5] + pose[6] * pose[6])
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (pose[0], pose[1], pose[2]), (pose[3] / n, pose[4] / n,
                                         pose[5] / n, pose[6] / n)


def jacobian(const unsigned char[::1] types, const double[:, ::1] params,
             const double[::1] q, base_p, base_q):
    """3xn position Jacobian, geometric construction."""
    cdef Py_ssize_t n = q.shape[0], i
    cdef double pose[7]
    pose[0] = base_p[0]
    pose[1] = base_p[1]
    pose[2] = base_p[2]
    pose[3] = base_q[0]
    pose[4] = base_q[1]
    pose[5] = base_q[2]
    pose[6] = base_q[3]
    origins_arr = np.empty((n, 3), dtype=float)
    axes_arr = np.empty((n, 3), dtype=float)
    cdef double[:, ::1] origins = origins_arr
    cdef double[:, ::1] axes = axes_arr
    _fk_core(types, params, q, pose, origins, axes, True)
    out_arr = np.empty((3, n), dtype=float)
    cdef double[:, ::1] out = out_arr
    cdef double ex = pose[0], ey = pose[1], ez = pose[2]
    cdef double zx, zy, zz, rx, ry, rz
    for i in range(n):
        zx = axes[i, 0]
        zy = axes[i, 1]
        zz = axes[i, 2]
        if types[i] == _REVOLUTE:
            rx = ex - origins[i, 0]
            ry = ey - origins[i, 1]
            rz = ez - origins[i, 2]
            out[0, i] = zy * rz - zz * ry
            out[1, i] = zz * rx - zx * rz
            out[2, i] = zx * ry - zy * rx
        else:
            out[0, i] = zx
            out[1, i] = zy
            out[2, i] = zz
    return out_arr


def servo_step(actual_p, actual_q, target_p, target_q,
               double max_lin, double max_ang, double dt):
    """One rate-clamped step of the follower servo toward the target pose."""
    cdef double ax = actual_p[0], ay = actual_p[1], az = actual_p[2]
    cdef double tx = target_p[0], ty = target_p[1], tz = target_p[2]
    cdef double ex = tx - ax, ey = ty - ay, ez = tz - az
    cdef double dist = sqrt(ex * ex + ey * ey + ez * ez)
    cdef double step = max_lin * dt
    cdef double f, h, s, vn, ang, astep
    if dist <= step:
        new_p = (tx, ty, tz)
    else:
        f = step / dist
        new_p = (ax + ex * f, ay + ey * f, az + ez * f)

    cdef double aw = actual_q[0], ax2 = actual_q[1], ay2 = actual_q[2], az2 = actual_q[3]
    cdef double bw = target_q[0], bx = target_q[1], by = target_q[2], bz = target_q[3]
    cdef double rw = aw * bw + ax2 * bx + ay2 * by + az2 * bz
    cdef double rx = aw * bx - ax2 * bw - ay2 * bz + az2 * by
    cdef double ry = aw * by + ax2 * bz - ay2 * bw - az2 * bx
    cdef double rz = aw * bz - ax2 * by + ay2 * bx - az2 * bw
    if rw < 0.0:
        rw = -rw
        rx = -rx
        ry = -ry
        rz = -rz
    vn = sqrt(rx * rx + ry * ry + rz * rz)
    ang = 2.0 * atan2(vn, rw)
    astep = max_ang * dt
    if ang <= astep or vn == 0.0:
        new_q = (target_q[0], target_q[1], target_q[2], target_q[3])
    else:
        h = 0.5 * astep
        s = sin(h) / vn
        dq = (cos(h), rx * s, ry * s, rz * s)
        new_q = quat_normalize(quat_mul(actual_q, dq))
    return new_p, new_q


def path_length(points):
    """Sum of Euclidean segment lengths over an (n, 3) array of positions."""
    pts = np.ascontiguousarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be an (n, 3) array")
    cdef const double[:, ::1] p = pts
    cdef double total = 0.0
    cdef double dx, dy, dz
    cdef Py_ssize_t i
    for i in range(1, p.shape[0]):
        dx = p[i, 0] - p[i - 1, 0]
        dy = p[i, 1] - p[i - 1, 1]
        dz = p[i, 2] - p[i - 1, 2]
        total += sqrt(dx * dx + dy * dy + dz * dz)
    return total
