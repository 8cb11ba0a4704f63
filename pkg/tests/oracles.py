"""Independent reference implementations used only as test oracles.

These deliberately avoid the library's vectorized kernels and quaternion
chain: the detector oracle is a naive pure-Python double loop, and the
kinematics oracle composes explicit 4x4 homogeneous matrices built with
the Rodrigues rotation formula.
"""

import math

import numpy as np


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _norm(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def _dist(a, b):
    return _norm(_sub(a, b))


def brute_force_key_poses(points, gripper, window_length, sharp_threshold, dense_threshold):
    """Naive re-implementation of the detector: returns the four index lists."""
    n = len(points)
    h = window_length // 2
    sharp, dense = [], []
    for i in range(n):
        if i - h < 0 or i + h >= n:
            continue
        u = _sub(points[i - h], points[i])
        v = _sub(points[i + h], points[i])
        nu, nv = _norm(u), _norm(v)
        if nu == 0.0 or nv == 0.0:
            theta = 0.0
        else:
            c = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (nu * nv)
            c = max(-1.0, min(1.0, c))
            theta = math.pi - math.acos(c)
        if theta > sharp_threshold:
            sharp.append(i)
        total = 0.0
        pairs = 0
        for a in range(i - h, i + h + 1):
            for b in range(a + 1, i + h + 1):
                total += _dist(points[a], points[b])
                pairs += 1
        if total / pairs < dense_threshold:
            dense.append(i)
    grip = [i for i in range(1, n) if gripper[i] != gripper[i - 1]]
    keys = sorted(set(sharp) & set(dense) | set(grip))
    return sharp, dense, grip, keys


def _rodrigues(axis, angle):
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def homogeneous_fk(arm, joints):
    """End-effector position/rotation via explicit 4x4 matrix products."""
    base = np.eye(4)
    base[:3, 3] = arm.base_position
    bw, bx, by, bz = arm.base_orientation
    angle = 2.0 * math.atan2(math.sqrt(bx * bx + by * by + bz * bz), bw)
    if angle > 1e-15:
        axis_n = np.array([bx, by, bz]) / math.sqrt(bx * bx + by * by + bz * bz)
        base[:3, :3] = _rodrigues(axis_n, angle)
    m = base
    for axis, offset, q in zip(arm.axes, arm.offsets, joints):
        rot = np.eye(4)
        rot[:3, :3] = _rodrigues(axis, q)
        trans = np.eye(4)
        trans[:3, 3] = offset
        m = m @ rot @ trans
    return m[:3, 3], m[:3, :3]
