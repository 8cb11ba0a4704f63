"""Serial-chain arm model and forward kinematics.

An arm is a chain of revolute joints. Joint i rotates the remainder of the
chain about its axis (expressed in the parent frame), then the link offset
is applied in the rotated frame:

    pose = base * Rot(axis_0, q_0) * Trans(offset_0) * ... * Trans(offset_{J-1})

With all joints at zero the end effector sits at the sum of the link
offsets from the base. The default arm is a generic 7-DOF chain at desk
scale (see docs/arm.md for the published geometry); no specific commercial
robot is modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from demokit.errors import JointLimitError, ValidationError
from demokit.geometry import (
    IDENTITY_QUAT,
    Quat,
    Vec3,
    quat,
    quat_from_axis_angle,
    quat_mul,
    quat_rotate,
    vec3,
)


@dataclass(frozen=True)
class ArmModel:
    """Kinematic description of a serial revolute chain."""

    name: str
    axes: tuple[Vec3, ...]  # unit joint axes, each in its parent frame
    offsets: tuple[Vec3, ...]  # link offset applied after each joint, meters
    limits: tuple[tuple[float, float], ...]  # per-joint [min, max], radians
    base_position: Vec3 = (0.0, 0.0, 0.0)
    base_orientation: Quat = IDENTITY_QUAT

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(vec3(a) for a in self.axes))
        object.__setattr__(self, "offsets", tuple(vec3(o) for o in self.offsets))
        object.__setattr__(
            self, "limits", tuple((float(lo), float(hi)) for lo, hi in self.limits)
        )
        object.__setattr__(self, "base_position", vec3(self.base_position))
        object.__setattr__(self, "base_orientation", quat(self.base_orientation))
        if not (len(self.axes) == len(self.offsets) == len(self.limits)):
            raise ValidationError("axes, offsets and limits must have equal length")
        for i, (ax, ay, az) in enumerate(self.axes):
            if abs(math.sqrt(ax * ax + ay * ay + az * az) - 1.0) > 1e-9:
                raise ValidationError(f"joint axis {i} is not unit norm")
        for i, (lo, hi) in enumerate(self.limits):
            if not lo < hi:
                raise ValidationError(f"joint {i} limits must satisfy min < max")

    @property
    def joint_count(self) -> int:
        return len(self.axes)


def limit_violations(arm: ArmModel, joints) -> list[int]:
    """Indexes of joints outside their limits (empty when all legal)."""
    out = []
    for i, q in enumerate(joints):
        lo, hi = arm.limits[i]
        if not (lo <= q <= hi):
            out.append(i)
    return out


def _check(arm: ArmModel, joints) -> None:
    if len(joints) != arm.joint_count:
        raise ValidationError(
            f"joint vector has {len(joints)} entries, arm has {arm.joint_count}"
        )
    bad = limit_violations(arm, joints)
    if bad:
        raise JointLimitError(bad)


def fk_frames(arm: ArmModel, joints, check_limits: bool = True):
    """Full chain sweep.

    Returns (origins, axes_world, ee_position, ee_orientation) where
    origins[i] is joint i's origin (origins has J+1 rows, the last being
    the end effector) and axes_world[i] is joint i's axis in world frame.
    """
    if check_limits:
        _check(arm, joints)
    elif len(joints) != arm.joint_count:
        raise ValidationError(
            f"joint vector has {len(joints)} entries, arm has {arm.joint_count}"
        )
    p = arm.base_position
    r = arm.base_orientation
    origins = [p]
    axes_world = []
    for axis, offset, q in zip(arm.axes, arm.offsets, joints):
        r = quat_mul(r, quat_from_axis_angle(axis, float(q)))
        axes_world.append(quat_rotate(r, axis))
        dx, dy, dz = quat_rotate(r, offset)
        p = (p[0] + dx, p[1] + dy, p[2] + dz)
        origins.append(p)
    return (
        np.array(origins, dtype=np.float64),
        np.array(axes_world, dtype=np.float64),
        np.array(p, dtype=np.float64),
        np.array(r, dtype=np.float64),
    )


def forward_kinematics(arm: ArmModel, joints, check_limits: bool = True):
    """End-effector pose for a joint vector: (position[3], quaternion[4])."""
    _, _, pos, ori = fk_frames(arm, joints, check_limits=check_limits)
    return pos, ori


def position_jacobian(arm: ArmModel, joints, check_limits: bool = False) -> np.ndarray:
    """(3, J) positional Jacobian: column i = axis_i x (ee - origin_i)."""
    origins, axes_world, ee, _ = fk_frames(arm, joints, check_limits=check_limits)
    return np.cross(axes_world, ee - origins[:-1]).T


def default_arm() -> ArmModel:
    """Generic 7-DOF desk-scale chain (reach ~0.83 m); geometry in docs/arm.md."""
    return ArmModel(
        name="generic-7dof",
        axes=(
            (0.0, 0.0, 1.0),
            (0.0, 1.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 0.0, 0.0),
        ),
        offsets=(
            (0.0, 0.0, 0.30),
            (0.25, 0.0, 0.0),
            (0.25, 0.0, 0.0),
            (0.25, 0.0, 0.0),
            (0.15, 0.0, 0.0),
            (0.10, 0.0, 0.0),
            (0.08, 0.0, 0.0),
        ),
        limits=(
            (-2.9, 2.9),
            (-2.0, 2.0),
            (-2.9, 2.9),
            (-2.6, 2.6),
            (-2.9, 2.9),
            (-2.2, 2.2),
            (-2.9, 2.9),
        ),
    )
