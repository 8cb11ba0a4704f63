"""Downsampling with key-frame retention, and smoothness measurement.

Downsampling keeps every Kth frame (stride anchored at index 0) plus every
key index from the detector report, plus both endpoints by default -
dropping the final frame could strand a replay short of its goal. Kept
frames are copied unchanged, timestamps included: this is decimation, not
resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from demokit import kernels
from demokit.errors import ValidationError
from demokit.keypose import KeyPoseReport
from demokit.model import Demonstration


@dataclass(frozen=True)
class FilterConfig:
    k: int = 5
    always_keep_endpoints: bool = True

    def validate(self) -> None:
        if self.k < 1:
            raise ValidationError(f"stride k must be >= 1, got {self.k}")


def kept_indexes(n: int, report: KeyPoseReport, cfg: FilterConfig) -> list[int]:
    """Sorted union of stride frames, key frames, and (optionally) endpoints."""
    cfg.validate()
    if any(i < 0 or i >= n for i in report.key_indexes):
        raise ValidationError("report key indexes out of range for this demonstration")
    kept = set(range(0, n, cfg.k))
    kept.update(report.key_indexes)
    if cfg.always_keep_endpoints and n > 0:
        kept.add(0)
        kept.add(n - 1)
    return sorted(kept)


def downsample(d: Demonstration, report: KeyPoseReport, cfg: FilterConfig) -> Demonstration:
    """Decimate a demonstration while force-retaining its key frames."""
    idx = kept_indexes(len(d), report, cfg)
    return d.with_frames(d.frames[i] for i in idx)


@dataclass(frozen=True)
class SmoothnessStats:
    """Per-demonstration smoothness summary.

    mean_abs_turning_angle uses the minimal (window 3) turning angle at
    every interior frame; positions carry no calibrated velocities, so the
    turning angle stands in for jerk-style metrics.
    """

    mean_abs_turning_angle: float
    path_length: float
    frame_count: int


@dataclass(frozen=True)
class SmoothnessReport:
    """Before/after comparison produced by the eval pipeline."""

    before: SmoothnessStats
    after: SmoothnessStats

    @property
    def frame_reduction(self) -> float:
        return 1.0 - self.after.frame_count / self.before.frame_count

    @property
    def angle_improved(self) -> bool:
        return self.after.mean_abs_turning_angle < self.before.mean_abs_turning_angle


def smoothness(d: Demonstration) -> SmoothnessStats:
    """Measure one demonstration; needs at least 3 frames."""
    n = len(d)
    if n < 3:
        raise ValidationError(f"smoothness needs at least 3 frames, got {n}")
    positions = d.positions()
    theta, _ = kernels.turning_angles(positions, 3)
    steps = np.diff(positions, axis=0)
    return SmoothnessStats(
        mean_abs_turning_angle=float(theta[1 : n - 1].mean()),
        path_length=float(np.sqrt((steps * steps).sum(axis=1)).sum()),
        frame_count=n,
    )


def smoothness_report(before: Demonstration, after: Demonstration) -> SmoothnessReport:
    return SmoothnessReport(before=smoothness(before), after=smoothness(after))
