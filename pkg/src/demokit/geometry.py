"""Quaternion and small-vector helpers.

Quaternions are scalar-first (w, x, y, z) everywhere in this package,
matching the on-disk demonstration format. Rotation helpers assume unit
quaternions and unit axes; callers are responsible for normalization.
"""

from __future__ import annotations

import math

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


def vec3(v) -> Vec3:
    a, b, c = v
    return (float(a), float(b), float(c))


def quat(q) -> Quat:
    w, x, y, z = q
    return (float(w), float(x), float(y), float(z))


def quat_norm(q) -> float:
    w, x, y, z = q
    return math.sqrt(w * w + x * x + y * y + z * z)


def quat_normalize(q) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize a zero quaternion")
    w, x, y, z = q
    return (w / n, x / n, y / n, z / n)


def quat_mul(a, b) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q) -> Quat:
    w, x, y, z = q
    return (w, -x, -y, -z)


def quat_rotate(q, v) -> Vec3:
    # q v q* expanded via the cross-product form: v + 2w(u x v) + 2 u x (u x v)
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


def quat_from_axis_angle(axis, angle: float) -> Quat:
    """Unit quaternion for a rotation of `angle` radians about a unit axis."""
    ax, ay, az = axis
    half = 0.5 * angle
    s = math.sin(half)
    return (math.cos(half), ax * s, ay * s, az * s)


def quat_equivalent(a, b, tol: float = 1e-9) -> bool:
    """True if two unit quaternions encode the same rotation (q == -q)."""
    d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    return abs(abs(d) - 1.0) <= tol
