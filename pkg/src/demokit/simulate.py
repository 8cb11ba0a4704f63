"""Delta-joint replay on a kinematic simulator with task success checks.

The simulator applies per-step joint deltas to an arm model and tracks a
single manipulable object with deliberately simple interaction rules:

* pick-and-place: the object rigidly attaches to the end effector when
  the gripper transitions to closed within grasp_radius of it, and
  detaches when the gripper opens;
* push: while the end effector is within contact_radius of the object
  and below the task's pushing height, the object translates with the
  end effector's horizontal displacement (no friction or dynamics);
* the object never moves otherwise.

There is no physics on the arm itself: joints accumulate deltas exactly,
so replaying a demonstration's delta actions reproduces its recorded
joint trajectory to float precision.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from demokit.errors import ParseError, ValidationError
from demokit.kinematics import ArmModel, forward_kinematics, limit_violations
from demokit.model import GRIPPER_CLOSED, GRIPPER_OPEN, Demonstration

REACH = "reach"
PUSH = "push"
PICK_AND_PLACE = "pick_and_place"
TASK_KINDS = (REACH, PUSH, PICK_AND_PLACE)

DEFAULT_PUSH_HEIGHT_MARGIN = 0.03


@dataclass(frozen=True)
class TaskSpec:
    """Geometric definition of one task plus its success tolerances.

    reach uses `waypoints` (exactly 3, visited in order); push and
    pick_and_place use `object_start` and `goal`. push_height defaults to
    object_start.z + 0.03 m when unset.
    """

    kind: str
    success_radius: float = 0.02
    waypoints: tuple = ()
    object_start: tuple | None = None
    goal: tuple | None = None
    grasp_radius: float = 0.03
    contact_radius: float = 0.03
    push_height: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "waypoints", tuple(tuple(float(c) for c in w) for w in self.waypoints)
        )
        for name in ("object_start", "goal"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(c) for c in v))

    def validate(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValidationError(f"unknown task kind {self.kind!r}, expected {TASK_KINDS}")
        if not self.success_radius > 0.0:
            raise ValidationError("success_radius must be > 0")
        if self.kind == REACH:
            if len(self.waypoints) != 3:
                raise ValidationError(
                    f"reach requires exactly 3 waypoints, got {len(self.waypoints)}"
                )
        else:
            if self.object_start is None or self.goal is None:
                raise ValidationError(f"{self.kind} requires object_start and goal")
            if self.kind == PUSH and abs(self.goal[2] - self.object_start[2]) > 1e-6:
                raise ValidationError(
                    "push goal must lie in the object's desk plane (equal z); "
                    "a pushed object cannot change height"
                )
        if not self.grasp_radius > 0.0 or not self.contact_radius > 0.0:
            raise ValidationError("grasp_radius and contact_radius must be > 0")

    def resolved_push_height(self) -> float:
        if self.push_height is not None:
            return self.push_height
        return self.object_start[2] + DEFAULT_PUSH_HEIGHT_MARGIN

    def semantic_points(self) -> tuple:
        """The task's Cartesian anchor points, in visit order."""
        if self.kind == REACH:
            return self.waypoints
        return (self.object_start, self.goal)

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "success_radius": self.success_radius,
            "waypoints": [list(w) for w in self.waypoints],
            "object_start": list(self.object_start) if self.object_start else None,
            "goal": list(self.goal) if self.goal else None,
            "grasp_radius": self.grasp_radius,
            "contact_radius": self.contact_radius,
            "push_height": self.push_height,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TaskSpec":
        spec = cls(
            kind=obj["kind"],
            success_radius=obj.get("success_radius", 0.02),
            waypoints=tuple(tuple(w) for w in obj.get("waypoints") or ()),
            object_start=obj.get("object_start"),
            goal=obj.get("goal"),
            grasp_radius=obj.get("grasp_radius", 0.03),
            contact_radius=obj.get("contact_radius", 0.03),
            push_height=obj.get("push_height"),
        )
        spec.validate()
        return spec


def save_task(task: TaskSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(task.to_obj(), fh, indent=2)
        fh.write("\n")


def load_task(path) -> TaskSpec:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return TaskSpec.from_obj(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad task file: {exc}", path) from exc


@dataclass(frozen=True)
class ActionSequence:
    """Delta-joint actions extracted from a demonstration: N-1 deltas."""

    initial_joints: tuple[float, ...]
    deltas: tuple[tuple[float, ...], ...]

    def __len__(self) -> int:
        return len(self.deltas)


def to_actions(d: Demonstration) -> ActionSequence:
    """Per-step joint differences j[i+1] - j[i] plus the starting vector."""
    if len(d) < 2:
        raise ValidationError(f"need at least 2 frames to form actions, got {len(d)}")
    joints = d.joint_matrix()
    deltas = np.diff(joints, axis=0)
    return ActionSequence(
        initial_joints=tuple(float(v) for v in joints[0]),
        deltas=tuple(tuple(float(v) for v in row) for row in deltas),
    )


@dataclass(frozen=True)
class SimState:
    """Simulator state after `step` deltas have been applied."""

    step: int
    joints: tuple[float, ...]
    ee_position: tuple[float, float, float]
    ee_orientation: tuple[float, float, float, float]
    gripper: int
    object_position: tuple[float, float, float] | None
    attached: bool
    waypoints_hit: tuple[int, ...]  # steps at which waypoints 0..k were first entered


@dataclass(frozen=True)
class SimResult:
    success: bool
    failure_reason: str | None
    trace: tuple[SimState, ...]
    task: TaskSpec


def _dist(a, b) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


def replay(
    arm: ArmModel,
    actions: ActionSequence,
    gripper_timeline,
    task: TaskSpec,
) -> SimResult:
    """Execute a delta-joint action list and judge task success.

    gripper_timeline must have one entry per demonstration frame (one more
    than the number of deltas). A joint-limit violation aborts the replay
    as a failure; the trace up to that point is retained.
    """
    task.validate()
    gripper_timeline = [int(g) for g in gripper_timeline]
    if len(gripper_timeline) != len(actions) + 1:
        raise ValidationError(
            f"gripper timeline has {len(gripper_timeline)} entries, "
            f"expected {len(actions) + 1}"
        )
    if len(actions.initial_joints) != arm.joint_count:
        raise ValidationError(
            f"actions expect {len(actions.initial_joints)} joints, arm has {arm.joint_count}"
        )

    q = list(actions.initial_joints)
    obj = list(task.object_start) if task.kind in (PUSH, PICK_AND_PLACE) else None
    push_height = task.resolved_push_height() if task.kind == PUSH else None
    attached = False
    grasped_once = False
    hits: list[int] = []
    trace: list[SimState] = []
    failure: str | None = None

    def record(step, ee, ori, grip):
        trace.append(
            SimState(
                step=step,
                joints=tuple(q),
                ee_position=tuple(float(v) for v in ee),
                ee_orientation=tuple(float(v) for v in ori),
                gripper=grip,
                object_position=tuple(obj) if obj is not None else None,
                attached=attached,
                waypoints_hit=tuple(hits),
            )
        )

    def check_reach(step, ee):
        if task.kind == REACH and len(hits) < len(task.waypoints):
            if _dist(ee, task.waypoints[len(hits)]) <= task.success_radius:
                hits.append(step)

    bad = limit_violations(arm, q)
    if bad:
        return SimResult(False, f"joint-limit at step 0, joints {bad}", (), task)
    ee, ori = forward_kinematics(arm, q, check_limits=False)
    check_reach(0, ee)
    record(0, ee, ori, gripper_timeline[0])

    for step, delta in enumerate(actions.deltas, start=1):
        prev_ee = ee
        q = [a + b for a, b in zip(q, delta)]
        bad = limit_violations(arm, q)
        if bad:
            failure = f"joint-limit at step {step}, joints {bad}"
            break
        ee, ori = forward_kinematics(arm, q, check_limits=False)
        g_prev = gripper_timeline[step - 1]
        g = gripper_timeline[step]

        if task.kind == PUSH:
            # contact is judged where the step began: an overlapping start
            # keeps the object tracking regardless of step size
            if (
                _dist(prev_ee, obj) <= task.contact_radius
                and prev_ee[2] <= push_height
            ):
                obj[0] += float(ee[0] - prev_ee[0])
                obj[1] += float(ee[1] - prev_ee[1])
        elif task.kind == PICK_AND_PLACE:
            if attached:
                obj = [float(v) for v in ee]
            if (
                not attached
                and g_prev == GRIPPER_OPEN
                and g == GRIPPER_CLOSED
                and _dist(ee, obj) <= task.grasp_radius
            ):
                attached = True
                grasped_once = True
                obj = [float(v) for v in ee]
            elif attached and g_prev == GRIPPER_CLOSED and g == GRIPPER_OPEN:
                attached = False

        check_reach(step, ee)
        record(step, ee, ori, g)

    if failure is None:
        failure = _judge(task, hits, obj, attached, grasped_once, gripper_timeline[-1])
    return SimResult(failure is None, failure, tuple(trace), task)


def _judge(task, hits, obj, attached, grasped_once, final_gripper) -> str | None:
    """None on success, otherwise the failure reason."""
    if task.kind == REACH:
        if len(hits) < len(task.waypoints):
            return f"waypoints-missed: first unreached waypoint {len(hits)}"
        return None
    if task.kind == PUSH:
        d = _dist(obj, task.goal)
        if d > task.success_radius:
            return f"object-not-at-goal: {d:.4f} m away"
        return None
    # pick and place
    if not grasped_once:
        return "never-grasped"
    if attached or final_gripper != GRIPPER_OPEN:
        return "still-attached"
    d = _dist(obj, task.goal)
    if d > task.success_radius:
        return f"object-not-at-goal: {d:.4f} m away"
    return None


def replay_demonstration(arm: ArmModel, d: Demonstration, task: TaskSpec) -> SimResult:
    """Convenience wrapper: extract actions and gripper timeline from d."""
    return replay(arm, to_actions(d), d.gripper_states(), task)


def trace_to_csv(result: SimResult, path, timestamps=None) -> None:
    """Write the replay trace: t, joints, ee xyz, object xyz, gripper.

    Tasks without an object leave the object columns empty. `timestamps`
    (one per trace row) defaults to the step index.
    """
    joint_count = len(result.trace[0].joints) if result.trace else 0
    header = (
        ["t"]
        + [f"j{i}" for i in range(joint_count)]
        + ["ee_x", "ee_y", "ee_z", "obj_x", "obj_y", "obj_z", "gripper"]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, s in enumerate(result.trace):
            t = timestamps[i] if timestamps is not None else s.step
            obj = s.object_position if s.object_position is not None else ("", "", "")
            writer.writerow(
                [repr(float(t))]
                + [repr(v) for v in s.joints]
                + [repr(v) for v in s.ee_position]
                + [repr(v) if v != "" else "" for v in obj]
                + [s.gripper]
            )
