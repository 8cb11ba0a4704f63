"""Key data point detection on demonstration trajectories.

A key data point is a frame worth protecting from downsampling: a sharp
turn taken at low speed, or a gripper transition. Sharp turns are scored
by the turning angle over a centered window (pi minus the interior angle
at the current point between rays to the window's first and last points);
low speed is scored by the average pairwise distance of positions in the
same window, which shrinks as motion approaches zero velocity. A frame is
a geometric key point when its turning angle exceeds sharp_turn_threshold
AND its window density falls below dense_region_threshold; gripper
transitions are key points unconditionally.

Two conventions here deliberately differ from a literal reading of the
source heuristic and are configurable:

* "angle" is the turning angle, not the interior angle - a straight path
  has interior angle ~pi, so comparing the interior angle against a
  lower bound would fire on straight lines. Set interior_angle_mode=True
  to compare the raw interior angle instead.
* "dense" means average pairwise distance BELOW the threshold - slow
  motion packs window points together. Set dense_above_mode=True for the
  opposite comparison.

Windows are centered; indexes too close to either end of the trajectory
to own a full window are excluded rather than padded, so no fabricated
geometry influences detection.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from demokit import kernels
from demokit.errors import ParseError, ValidationError
from demokit.model import Demonstration


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning knobs for the detector.

    dense_region_threshold None means "derive from the trajectory":
    density_spacing_factor * mean consecutive spacing * window_length.
    The factor default was calibrated on the synthetic corpus so that
    cruise-speed motion never counts as dense (uniform motion has an
    average pairwise window distance of about (w+1)/3 spacings).
    """

    window_length: int = 9
    sharp_turn_threshold: float = math.pi / 6
    dense_region_threshold: float | None = None
    density_spacing_factor: float = 0.18
    interior_angle_mode: bool = False
    dense_above_mode: bool = False

    def validate(self) -> None:
        kernels.check_window_length(self.window_length)
        if not self.sharp_turn_threshold > 0.0:
            raise ValidationError(
                f"sharp_turn_threshold must be > 0, got {self.sharp_turn_threshold}"
            )
        if self.dense_region_threshold is not None and not self.dense_region_threshold > 0.0:
            raise ValidationError(
                f"dense_region_threshold must be > 0, got {self.dense_region_threshold}"
            )
        if not self.density_spacing_factor > 0.0:
            raise ValidationError(
                f"density_spacing_factor must be > 0, got {self.density_spacing_factor}"
            )


@dataclass(frozen=True)
class KeyPoseReport:
    """Detector output: the three index sets and their union/intersection.

    key_indexes = (sharp_turn & dense_region) | gripper_event, all sorted.
    window_length and density_threshold record what the detector actually
    used, so downstream tooling can reason about match tolerance.
    """

    sharp_turn_indexes: tuple[int, ...]
    dense_region_indexes: tuple[int, ...]
    gripper_event_indexes: tuple[int, ...]
    key_indexes: tuple[int, ...]
    window_length: int
    density_threshold: float

    def to_obj(self) -> dict:
        return {
            "sharp_turn_indexes": list(self.sharp_turn_indexes),
            "dense_region_indexes": list(self.dense_region_indexes),
            "gripper_event_indexes": list(self.gripper_event_indexes),
            "key_indexes": list(self.key_indexes),
            "window_length": self.window_length,
            "density_threshold": self.density_threshold,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "KeyPoseReport":
        return cls(
            sharp_turn_indexes=tuple(int(i) for i in obj["sharp_turn_indexes"]),
            dense_region_indexes=tuple(int(i) for i in obj["dense_region_indexes"]),
            gripper_event_indexes=tuple(int(i) for i in obj["gripper_event_indexes"]),
            key_indexes=tuple(int(i) for i in obj["key_indexes"]),
            window_length=int(obj["window_length"]),
            density_threshold=float(obj["density_threshold"]),
        )


def save_report(report: KeyPoseReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_obj(), fh, indent=2)
        fh.write("\n")


def load_report(path) -> KeyPoseReport:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return KeyPoseReport.from_obj(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad key pose report: {exc}", path) from exc


def _window_slice(points: np.ndarray, idx: int, window_length: int) -> np.ndarray:
    n = points.shape[0]
    h = window_length // 2
    if idx - h < 0 or idx + h >= n:
        raise ValidationError(
            f"window of length {window_length} at index {idx} exceeds sequence of {n}"
        )
    return points[idx - h : idx + h + 1]


def compute_angle(points, idx: int, window_length: int) -> float:
    """Turning angle at points[idx], radians in [0, pi].

    0 for collinear forward motion, pi for a full reversal. Degenerate
    windows (a ray to a window endpoint has zero length) return 0:
    stationary segments are the density score's job, not the angle's.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    window = _window_slice(pts, idx, kernels.check_window_length(window_length))
    theta, _ = kernels.turning_angles(window, window_length)
    return float(theta[window_length // 2])


def compute_density(points, idx: int, window_length: int) -> float:
    """Mean pairwise Euclidean distance over the window centered at idx."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    window = _window_slice(pts, idx, kernels.check_window_length(window_length))
    scores = kernels.density_scores(window, window_length)
    return float(scores[window_length // 2])


def resolve_density_threshold(positions: np.ndarray, cfg: DetectorConfig) -> float:
    """The dense-region threshold actually applied for this trajectory."""
    if cfg.dense_region_threshold is not None:
        return float(cfg.dense_region_threshold)
    steps = np.diff(np.asarray(positions, dtype=np.float64), axis=0)
    mean_spacing = float(np.sqrt((steps * steps).sum(axis=1)).mean()) if len(steps) else 0.0
    return cfg.density_spacing_factor * mean_spacing * cfg.window_length


def gripper_event_indexes(gripper_states) -> tuple[int, ...]:
    """Indexes i > 0 where the gripper state differs from frame i-1."""
    g = np.asarray(gripper_states, dtype=np.int64)
    return tuple(int(i) for i in np.nonzero(np.diff(g) != 0)[0] + 1)


def detect_key_poses(d: Demonstration, cfg: DetectorConfig | None = None) -> KeyPoseReport:
    """Run the full detector over one demonstration."""
    cfg = cfg or DetectorConfig()
    cfg.validate()
    n = len(d)
    if n < cfg.window_length:
        raise ValidationError(
            f"demonstration has {n} frames, need at least window_length={cfg.window_length}"
        )
    positions = d.positions()
    theta, degen = kernels.turning_angles(positions, cfg.window_length)
    density = kernels.density_scores(positions, cfg.window_length)
    density_threshold = resolve_density_threshold(positions, cfg)

    valid = degen == 0
    if cfg.interior_angle_mode:
        sharp = valid & ((np.pi - theta) > cfg.sharp_turn_threshold)
    else:
        sharp = valid & (theta > cfg.sharp_turn_threshold)
    if cfg.dense_above_mode:
        dense = density > density_threshold
    else:
        dense = density < density_threshold
    # boundary indexes carry density +inf, so "dense above" must also skip them
    dense &= np.isfinite(density)

    sharp_idx = np.nonzero(sharp)[0]
    dense_idx = np.nonzero(dense)[0]
    grip_idx = gripper_event_indexes(d.gripper_states())
    keys = sorted(set(sharp_idx.tolist()) & set(dense_idx.tolist()) | set(grip_idx))
    return KeyPoseReport(
        sharp_turn_indexes=tuple(int(i) for i in sharp_idx),
        dense_region_indexes=tuple(int(i) for i in dense_idx),
        gripper_event_indexes=grip_idx,
        key_indexes=tuple(keys),
        window_length=cfg.window_length,
        density_threshold=density_threshold,
    )
