"""Before/after metrics over a synthetic corpus.

For each corpus entry: detection precision/recall against the ground-truth
event frames (a hit is any key index within floor(window/2) frames),
smoothness and path length before and after filtering, replay success
before and after, and the frame-count reduction.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from demokit.filtering import FilterConfig, downsample, smoothness
from demokit.keypose import DetectorConfig, detect_key_poses
from demokit.kinematics import ArmModel
from demokit.model import read_demo_file
from demokit.simulate import replay_demonstration
from demokit.synth import CorpusManifest


@dataclass(frozen=True)
class DemoEval:
    id: str
    frames_raw: int
    frames_filtered: int
    key_count: int
    precision: float
    recall: float
    angle_raw: float
    angle_filtered: float
    path_raw: float
    path_filtered: float
    success_raw: bool
    success_filtered: bool
    failure_raw: str | None
    failure_filtered: str | None

    @property
    def frame_reduction(self) -> float:
        return 1.0 - self.frames_filtered / self.frames_raw


@dataclass(frozen=True)
class CorpusEvalSummary:
    demos: int
    mean_precision: float
    mean_recall: float
    smoother_fraction: float  # demos whose filtered turning angle decreased
    mean_frame_reduction: float
    success_rate_raw: float
    success_rate_filtered: float


def match_scores(key_indexes, event_frames, tolerance: int) -> tuple[float, float]:
    """(precision, recall) of detected keys vs ground-truth events."""
    keys = np.asarray(sorted(key_indexes), dtype=np.int64)
    events = np.asarray(sorted(event_frames), dtype=np.int64)
    if len(keys) == 0:
        return (1.0 if len(events) == 0 else 0.0), (1.0 if len(events) == 0 else 0.0)
    if len(events) == 0:
        return 0.0, 1.0
    d = np.abs(keys[:, None] - events[None, :])
    precision = float((d.min(axis=1) <= tolerance).mean())
    recall = float((d.min(axis=0) <= tolerance).mean())
    return precision, recall


def missing_files(manifest: CorpusManifest) -> list[str]:
    return [
        manifest.entry_path(e)
        for e in manifest.entries
        if not os.path.exists(manifest.entry_path(e))
    ]


def evaluate_corpus(
    manifest: CorpusManifest,
    arm: ArmModel,
    detector: DetectorConfig | None = None,
    filter_cfg: FilterConfig | None = None,
) -> list[DemoEval]:
    detector = detector or DetectorConfig()
    filter_cfg = filter_cfg or FilterConfig()
    tolerance = detector.window_length // 2
    rows = []
    for entry in manifest.entries:
        demo = read_demo_file(manifest.entry_path(entry))
        report = detect_key_poses(demo, detector)
        filtered = downsample(demo, report, filter_cfg)
        precision, recall = match_scores(
            report.key_indexes, entry.ground_truth.all_event_frames(), tolerance
        )
        res_raw = replay_demonstration(arm, demo, entry.task)
        res_filt = replay_demonstration(arm, filtered, entry.task)
        sm_raw = smoothness(demo)
        sm_filt = smoothness(filtered)
        rows.append(
            DemoEval(
                id=demo.id,
                frames_raw=len(demo),
                frames_filtered=len(filtered),
                key_count=len(report.key_indexes),
                precision=precision,
                recall=recall,
                angle_raw=sm_raw.mean_abs_turning_angle,
                angle_filtered=sm_filt.mean_abs_turning_angle,
                path_raw=sm_raw.path_length,
                path_filtered=sm_filt.path_length,
                success_raw=res_raw.success,
                success_filtered=res_filt.success,
                failure_raw=res_raw.failure_reason,
                failure_filtered=res_filt.failure_reason,
            )
        )
    return rows


def summarize(rows: list[DemoEval]) -> CorpusEvalSummary:
    n = len(rows)
    return CorpusEvalSummary(
        demos=n,
        mean_precision=float(np.mean([r.precision for r in rows])),
        mean_recall=float(np.mean([r.recall for r in rows])),
        smoother_fraction=float(np.mean([r.angle_filtered < r.angle_raw for r in rows])),
        mean_frame_reduction=float(np.mean([r.frame_reduction for r in rows])),
        success_rate_raw=float(np.mean([r.success_raw for r in rows])),
        success_rate_filtered=float(np.mean([r.success_filtered for r in rows])),
    )


_CSV_COLUMNS = [
    "id",
    "frames_raw",
    "frames_filtered",
    "frame_reduction",
    "key_count",
    "precision",
    "recall",
    "angle_raw",
    "angle_filtered",
    "path_raw",
    "path_filtered",
    "success_raw",
    "success_filtered",
    "failure_raw",
    "failure_filtered",
]


def write_eval_csv(rows: list[DemoEval], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.id,
                    r.frames_raw,
                    r.frames_filtered,
                    f"{r.frame_reduction:.4f}",
                    r.key_count,
                    f"{r.precision:.4f}",
                    f"{r.recall:.4f}",
                    f"{r.angle_raw:.6f}",
                    f"{r.angle_filtered:.6f}",
                    f"{r.path_raw:.6f}",
                    f"{r.path_filtered:.6f}",
                    int(r.success_raw),
                    int(r.success_filtered),
                    r.failure_raw or "",
                    r.failure_filtered or "",
                ]
            )


def format_table(rows: list[DemoEval]) -> str:
    summary = summarize(rows)
    lines = [
        f"{'id':24s} {'N':>5s} {'N_f':>5s} {'red':>5s} {'keys':>5s} "
        f"{'prec':>5s} {'rec':>5s} {'ang':>6s} {'ang_f':>6s} {'raw':>4s} {'filt':>4s}"
    ]
    for r in rows:
        lines.append(
            f"{r.id:24s} {r.frames_raw:5d} {r.frames_filtered:5d} "
            f"{r.frame_reduction:5.2f} {r.key_count:5d} {r.precision:5.2f} "
            f"{r.recall:5.2f} {r.angle_raw:6.3f} {r.angle_filtered:6.3f} "
            f"{'ok' if r.success_raw else 'FAIL':>4s} "
            f"{'ok' if r.success_filtered else 'FAIL':>4s}"
        )
    lines.append(
        f"aggregate: demos={summary.demos} precision={summary.mean_precision:.3f} "
        f"recall={summary.mean_recall:.3f} smoother={summary.smoother_fraction:.1%} "
        f"reduction={summary.mean_frame_reduction:.1%} "
        f"success raw={summary.success_rate_raw:.1%} "
        f"filtered={summary.success_rate_filtered:.1%}"
    )
    return "\n".join(lines)
