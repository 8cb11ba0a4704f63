"""Demonstration data model and on-disk format.

A demonstration is an ordered sequence of timestamped frames, each holding
the end-effector pose, the arm joint vector, and a binary gripper state.

Files are line-delimited JSON: one header object followed by one object per
frame. A live recording session can append frame lines as they arrive, and
the result stays diffable with ordinary text tools. Floats are written with
Python's shortest round-trip representation, so read(write(d)) reproduces
every field bit for bit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from demokit.errors import ParseError, ValidationError
from demokit.geometry import Quat, Vec3, quat, quat_norm, vec3

GRIPPER_OPEN = 0
GRIPPER_CLOSED = 1

QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class PoseFrame:
    """One recorded timestep: end-effector pose, joints, gripper state.

    `joints` may be empty when a session recorded raw hand motion only;
    such frames belong to a demonstration declaring joint_count 0.
    """

    t: float
    position: Vec3
    orientation: Quat  # (w, x, y, z)
    joints: tuple[float, ...]
    gripper: int

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "orientation", quat(self.orientation))
        object.__setattr__(self, "joints", tuple(float(j) for j in self.joints))
        object.__setattr__(self, "gripper", int(self.gripper))


@dataclass(frozen=True)
class RawHandFrame:
    """One raw hand-tracking sample before gripper-state derivation."""

    t: float
    hand_position: Vec3
    hand_orientation: Quat
    pinch_distance: float  # pointer-finger-to-thumb distance, meters

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "hand_position", vec3(self.hand_position))
        object.__setattr__(self, "hand_orientation", quat(self.hand_orientation))
        object.__setattr__(self, "pinch_distance", float(self.pinch_distance))


@dataclass(frozen=True)
class Demonstration:
    """An ordered sequence of PoseFrames plus recording metadata."""

    id: str
    joint_count: int
    frequency_hz: float
    frames: tuple[PoseFrame, ...]
    task_tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "joint_count", int(self.joint_count))
        object.__setattr__(self, "frequency_hz", float(self.frequency_hz))
        object.__setattr__(self, "frames", tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    def positions(self) -> np.ndarray:
        """(N, 3) float64 array of end-effector positions."""
        return np.array([f.position for f in self.frames], dtype=np.float64)

    def joint_matrix(self) -> np.ndarray:
        """(N, J) float64 array of joint vectors."""
        return np.array([f.joints for f in self.frames], dtype=np.float64).reshape(
            len(self.frames), self.joint_count
        )

    def gripper_states(self) -> np.ndarray:
        return np.array([f.gripper for f in self.frames], dtype=np.int64)

    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames], dtype=np.float64)

    def with_frames(self, frames) -> "Demonstration":
        """Copy of this demonstration with a different frame sequence."""
        return replace(self, frames=tuple(frames))


def derive_gripper_state(
    pinch_distance: float,
    prev_state: int,
    close_threshold: float = 0.02,
    open_threshold: float = 0.04,
    inverted: bool = False,
) -> int:
    """Map a pinch distance to a binary gripper state with hysteresis.

    The gripper closes when the pinch distance drops below close_threshold
    and opens when it rises above open_threshold; inside the band the
    previous state is kept, so tremor noise near a single threshold cannot
    chatter the state. `inverted` flips the comparison direction (large
    distance means closed), for data recorded under that convention.
    """
    if not (0.0 < close_threshold < open_threshold):
        raise ValidationError(
            f"need 0 < close_threshold < open_threshold, "
            f"got {close_threshold} / {open_threshold}"
        )
    if pinch_distance < 0.0:
        raise ValidationError(f"pinch_distance must be >= 0, got {pinch_distance}")
    if math.isnan(pinch_distance):
        raise ValidationError("pinch_distance is NaN")
    if pinch_distance < close_threshold:
        return GRIPPER_OPEN if inverted else GRIPPER_CLOSED
    if pinch_distance > open_threshold:
        return GRIPPER_CLOSED if inverted else GRIPPER_OPEN
    return int(prev_state)


@dataclass(frozen=True)
class Violation:
    """One broken invariant; `frame` is None for demonstration-level rules."""

    rule: str
    frame: int | None = None
    detail: str = ""


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


def validate_demonstration(d: Demonstration) -> list[Violation]:
    """Check every frame and demonstration invariant.

    Returns an empty list iff the demonstration is well formed. Violations
    are data, not exceptions: callers decide whether to reject.
    """
    out: list[Violation] = []
    if not math.isfinite(d.frequency_hz) or d.frequency_hz <= 0.0:
        out.append(Violation("frequency-positive", detail=f"frequency_hz={d.frequency_hz}"))
    if d.joint_count < 0:
        out.append(Violation("joint-count", detail=f"declared joint_count={d.joint_count}"))
    if len(d.frames) < 2:
        out.append(Violation("frame-count", detail=f"N={len(d.frames)} < 2"))
    prev_t = None
    for i, f in enumerate(d.frames):
        if not _finite(f.t, *f.position, *f.orientation, *f.joints):
            out.append(Violation("finite", i))
        else:
            if abs(quat_norm(f.orientation) - 1.0) > QUAT_NORM_TOL:
                out.append(
                    Violation("unit-quaternion", i, f"norm={quat_norm(f.orientation):.9g}")
                )
            if prev_t is not None and f.t < prev_t:
                out.append(Violation("monotone-time", i, f"t={f.t} < {prev_t}"))
            prev_t = f.t
        if len(f.joints) != d.joint_count:
            out.append(
                Violation("joint-count", i, f"{len(f.joints)} joints, expected {d.joint_count}")
            )
        if f.gripper not in (GRIPPER_OPEN, GRIPPER_CLOSED):
            out.append(Violation("gripper-binary", i, f"gripper={f.gripper}"))
    return out


# --- file format -----------------------------------------------------------

def _frame_to_obj(f: PoseFrame) -> dict:
    return {
        "t": f.t,
        "position": list(f.position),
        "orientation": list(f.orientation),
        "joints": list(f.joints),
        "gripper": f.gripper,
    }


def _frame_from_obj(obj, path, line) -> PoseFrame:
    try:
        pos = obj["position"]
        ori = obj["orientation"]
        joints = obj["joints"]
        if len(pos) != 3 or len(ori) != 4:
            raise ValueError("bad vector arity")
        return PoseFrame(
            t=obj["t"],
            position=pos,
            orientation=ori,
            joints=joints,
            gripper=obj["gripper"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad frame record: {exc}", path, line) from exc


class DemoFileWriter:
    """Streaming writer: header first, then one frame line per append.

    Built for live recording; every append lands on disk before the next
    frame arrives, so an interrupted session leaves a readable prefix.
    """

    def __init__(self, path, demo_id, joint_count, frequency_hz, task_tag=None):
        self.path = os.fspath(path)
        self.joint_count = int(joint_count)
        self._fh = open(self.path, "w", encoding="utf-8")
        self.frames_written = 0
        header = {
            "id": demo_id,
            "joint_count": self.joint_count,
            "frequency_hz": float(frequency_hz),
            "task_tag": task_tag,
        }
        self._fh.write(json.dumps(header, allow_nan=False) + "\n")
        self._fh.flush()

    def append(self, frame: PoseFrame) -> None:
        if len(frame.joints) != self.joint_count:
            raise ValidationError(
                f"frame has {len(frame.joints)} joints, file declares {self.joint_count}"
            )
        self._fh.write(json.dumps(_frame_to_obj(frame), allow_nan=False) + "\n")
        self._fh.flush()
        self.frames_written += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_demo_file(d: Demonstration, path) -> None:
    """Write a validated demonstration; refuses malformed data."""
    violations = validate_demonstration(d)
    if violations:
        raise ValidationError(
            f"refusing to write invalid demonstration: {violations[:3]}"
            + (" ..." if len(violations) > 3 else "")
        )
    with DemoFileWriter(path, d.id, d.joint_count, d.frequency_hz, d.task_tag) as w:
        for f in d.frames:
            w.append(f)


def read_demo_file(path) -> Demonstration:
    """Parse a demonstration file; raises ParseError with the bad line."""
    path = os.fspath(path)
    header = None
    frames: list[PoseFrame] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                raise ParseError("blank line", path, lineno)
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", path, lineno) from exc
            if lineno == 1:
                try:
                    header = {
                        "id": str(obj["id"]),
                        "joint_count": int(obj["joint_count"]),
                        "frequency_hz": float(obj["frequency_hz"]),
                        "task_tag": obj.get("task_tag"),
                    }
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad header: {exc}", path, lineno) from exc
            else:
                frame = _frame_from_obj(obj, path, lineno)
                if len(frame.joints) != header["joint_count"]:
                    raise ParseError(
                        f"frame has {len(frame.joints)} joints,"
                        f" header declares {header['joint_count']}",
                        path,
                        lineno,
                    )
                frames.append(frame)
    if header is None:
        raise ParseError("empty file (missing header)", path, 1)
    if len(frames) < 2:
        raise ParseError(f"demonstration needs at least 2 frames, found {len(frames)}", path)
    return Demonstration(
        id=header["id"],
        joint_count=header["joint_count"],
        frequency_hz=header["frequency_hz"],
        frames=tuple(frames),
        task_tag=header["task_tag"],
    )
