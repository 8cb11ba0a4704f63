"""Synthetic hand-demonstration generator with ground-truth key points.

Stands in for live hand capture so every pipeline claim is testable at
desk scale. Trajectories are planned joints-first: anchor joint
configurations are found for each task point, the path linearly
interpolates between anchors in joint space, and poses come from forward
kinematics, which keeps position, joints and gripper mutually consistent
without a full inverse-kinematics stack.

Motion model: anchors are grouped into chains traversed as one smooth
move (smoothstep easing over the whole chain, so velocity approaches zero
exactly at chain ends); each chain ends at a semantic event (waypoint
arrival, grasp, release) followed by `dwell_frames` of hold. Tremor is
first-order autocorrelated (AR(1)) Cartesian noise, mapped to joint
perturbations through the positional Jacobian at each step; hand tremor
is band limited, which white noise would misrepresent.

Ground truth records the arrival frame of every semantic event, which is
what the key-pose detector is expected to recover.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from demokit.errors import ParseError, ValidationError, WorkspaceError
from demokit.kinematics import ArmModel, fk_frames, position_jacobian
from demokit.model import (
    GRIPPER_CLOSED,
    GRIPPER_OPEN,
    Demonstration,
    PoseFrame,
    write_demo_file,
)
from demokit.simulate import PUSH, REACH, TASK_KINDS, TaskSpec

# Anchor solving is deterministic per (arm, task): restarts draw from this
# fixed stream so every demonstration of a task shares one clean plan.
_SOLVER_SEED = 20240117

_HOVER_HIGH = 0.12
_HOVER_LOW = 0.04
_PUSH_VIA_SPACING = 0.08
_MIN_CHAIN_FRAMES = 30
_MAX_NOISE_STEP = 0.15  # rad, cap on per-frame joint perturbation

# Desk-scale sampling box for task points, comfortably inside the default
# arm's workspace (both the outer envelope and the folding-limited inner one).
_BOX_LO = np.array([0.33, -0.32, 0.10])
_BOX_HI = np.array([0.62, 0.32, 0.45])
_DESK_Z = 0.15
_MIN_POINT_SEPARATION = 0.20


@dataclass(frozen=True)
class SynthConfig:
    task: TaskSpec
    seed: int = 0
    frequency_hz: float = 60.0
    tremor_amplitude: float = 0.0  # stationary per-axis std of hand noise, meters
    tremor_correlation: float = 0.9  # AR(1) coefficient at the recording rate
    dwell_frames: int = 6
    nominal_speed: float = 0.12  # cruise hand speed, m/s
    ramp_seconds: float = 0.20  # accelerate/decelerate time at chain ends
    demo_id: str | None = None

    def validate(self) -> None:
        self.task.validate()
        if self.tremor_amplitude < 0.0:
            raise ValidationError("tremor_amplitude must be >= 0")
        if not 0.0 <= self.tremor_correlation < 1.0:
            raise ValidationError("tremor_correlation must be in [0, 1)")
        if self.dwell_frames < 0:
            raise ValidationError("dwell_frames must be >= 0")
        if not self.frequency_hz > 0.0:
            raise ValidationError("frequency_hz must be > 0")
        if not self.nominal_speed > 0.0:
            raise ValidationError("nominal_speed must be > 0")
        if not self.ramp_seconds > 0.0:
            raise ValidationError("ramp_seconds must be > 0")

    def to_obj(self) -> dict:
        return {
            "task": self.task.to_obj(),
            "seed": self.seed,
            "frequency_hz": self.frequency_hz,
            "tremor_amplitude": self.tremor_amplitude,
            "tremor_correlation": self.tremor_correlation,
            "dwell_frames": self.dwell_frames,
            "nominal_speed": self.nominal_speed,
            "ramp_seconds": self.ramp_seconds,
            "demo_id": self.demo_id,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SynthConfig":
        return cls(
            task=TaskSpec.from_obj(obj["task"]),
            seed=int(obj.get("seed", 0)),
            frequency_hz=float(obj.get("frequency_hz", 60.0)),
            tremor_amplitude=float(obj.get("tremor_amplitude", 0.0)),
            tremor_correlation=float(obj.get("tremor_correlation", 0.9)),
            dwell_frames=int(obj.get("dwell_frames", 6)),
            nominal_speed=float(obj.get("nominal_speed", 0.12)),
            ramp_seconds=float(obj.get("ramp_seconds", 0.20)),
            demo_id=obj.get("demo_id"),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Frame indexes of the semantic events baked into a synthetic demo."""

    corner_frames: tuple[int, ...]
    grasp_frames: tuple[int, ...]
    release_frames: tuple[int, ...]

    def all_event_frames(self) -> tuple[int, ...]:
        return tuple(
            sorted(set(self.corner_frames) | set(self.grasp_frames) | set(self.release_frames))
        )

    def to_obj(self) -> dict:
        return {
            "corner_frames": list(self.corner_frames),
            "grasp_frames": list(self.grasp_frames),
            "release_frames": list(self.release_frames),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "GroundTruth":
        return cls(
            corner_frames=tuple(int(i) for i in obj["corner_frames"]),
            grasp_frames=tuple(int(i) for i in obj["grasp_frames"]),
            release_frames=tuple(int(i) for i in obj["release_frames"]),
        )


# --- anchor solving ---------------------------------------------------------

def solve_reach_point(
    arm: ArmModel,
    target,
    seed_config=None,
    tol: float = 1e-9,
    max_restarts: int = 24,
    max_iters: int = 150,
):
    """Find a joint configuration whose end effector sits at `target`.

    Damped Gauss-Newton on the position residual with multistart sampling
    inside the joint limits. This is a planning utility for synthetic data
    only; recorded demonstrations never need it.
    """
    target = np.asarray(target, dtype=np.float64)
    lo = np.array([l for l, _ in arm.limits])
    hi = np.array([h for _, h in arm.limits])
    inner = 0.02 * (hi - lo)
    rng = np.random.default_rng(_SOLVER_SEED)

    starts = []
    if seed_config is not None:
        starts.append(np.asarray(seed_config, dtype=np.float64))
    # a slight bend breaks the straight-arm singularity of the midpoint
    starts.append((lo + hi) / 2.0 + 0.2)
    starts.extend(rng.uniform(lo + inner, hi - inner) for _ in range(max_restarts))

    def residual(qv):
        _, _, ee, _ = fk_frames(arm, qv, check_limits=False)
        return target - ee

    best_err = math.inf
    for q0 in starts:
        q = np.clip(q0, lo + inner, hi - inner)
        r = residual(q)
        err = float(np.linalg.norm(r))
        for _ in range(max_iters):
            if err < tol:
                return q
            jac = position_jacobian(arm, q)
            step = np.linalg.lstsq(jac, r, rcond=None)[0]
            norm = float(np.linalg.norm(step))
            if norm > 0.5:
                step *= 0.5 / norm
            # backtrack until the residual actually shrinks
            scale = 1.0
            for _ in range(12):
                q_try = np.clip(q + scale * step, lo + inner, hi - inner)
                r_try = residual(q_try)
                err_try = float(np.linalg.norm(r_try))
                if err_try < err:
                    break
                scale *= 0.5
            else:
                break  # stalled; try the next start
            q, r, err = q_try, r_try, err_try
        best_err = min(best_err, err)
        if best_err < tol:
            return q
    raise WorkspaceError(
        f"waypoint ({target[0]:.3f}, {target[1]:.3f}, {target[2]:.3f}) is outside the "
        f"arm's reachable workspace (best residual {best_err:.2e} m)"
    )


def _above(point, dz):
    return (point[0], point[1], point[2] + dz)


def _line_points(a, b, spacing):
    """Intermediate points splitting segment a->b into hops <= spacing."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    hops = max(int(math.ceil(np.linalg.norm(b - a) / spacing)), 1)
    return [tuple(a + (b - a) * (k / hops)) for k in range(1, hops)]


@dataclass(frozen=True)
class _Plan:
    joint_path: tuple  # (N, J) nested tuples, clean trajectory
    gripper: tuple  # (N,) ints
    truth: GroundTruth


def _task_chains(task: TaskSpec) -> tuple[list, list, list]:
    """Cartesian targets per chain, plus per-chain gripper action and
    whether the chain ends on a semantic corner (dwell + ground truth).

    Each chain is a list of via targets ending on a task point; the action
    is None, "close" or "open", applied at the chain-end dwell. The first
    chain starts from the staging point prepended by _plan.
    """
    if task.kind == REACH:
        w1, w2, w3 = task.waypoints
        return [[w1], [w2], [w3]], [None, None, None], [True, True, True]
    start, goal = task.object_start, task.goal
    if task.kind == PUSH:
        # descend onto the object vertically so contact begins aligned with
        # it, then push along the desk plane through closely spaced vias so
        # the joint-interpolated path cannot bow out of contact
        approach = [_above(start, _HOVER_HIGH), _above(start, _HOVER_LOW), start]
        push = _line_points(start, goal, _PUSH_VIA_SPACING) + [goal]
        retreat = [_above(goal, _HOVER_HIGH)]
        return [approach, push, retreat], [None, None, None], [True, True, False]
    # pick and place
    approach = [_above(start, _HOVER_HIGH), start]
    carry = [_above(start, _HOVER_HIGH), _above(goal, _HOVER_HIGH), goal]
    retreat = [_above(goal, _HOVER_HIGH)]
    return [approach, carry, retreat], ["close", "open", None], [True, True, False]


def _staging_point(task: TaskSpec):
    # hover above the task's centroid, clamped into the comfortable
    # workspace box so the start never hugs the inner reachability boundary
    pts = np.array(task.semantic_points(), dtype=np.float64)
    center = np.clip(pts.mean(axis=0), _BOX_LO, _BOX_HI)
    return tuple(center + np.array([0.0, 0.0, 0.15]))


def _chain_arc_lengths(arm: ArmModel, anchors, samples_per_leg: int = 16):
    """Cartesian length of each leg of a joint-space polyline, by FK sampling."""
    lengths = []
    for qa, qb in zip(anchors[:-1], anchors[1:]):
        prev = None
        total = 0.0
        for k in range(samples_per_leg + 1):
            q = qa + (qb - qa) * (k / samples_per_leg)
            _, _, ee, _ = fk_frames(arm, q, check_limits=False)
            if prev is not None:
                total += float(np.linalg.norm(ee - prev))
            prev = ee
        lengths.append(total)
    return lengths


def _smoothstep(tau: float) -> float:
    return tau * tau * (3.0 - 2.0 * tau)


def _arc_at(t: float, total: float, speed: float, ramp: float) -> float:
    """Distance traveled by time t under a smooth trapezoidal speed profile.

    Ramps take fixed time, not a fixed fraction of the move, so the
    near-zero-velocity tail around each chain end has constant duration
    regardless of path length.
    """
    ramp_dist = speed * ramp / 2.0
    duration = total / speed + ramp
    if t >= duration:
        return total
    if t < ramp:
        tau = t / ramp
        return speed * ramp * (tau**3 - tau**4 / 2.0)
    if t <= duration - ramp:
        return ramp_dist + speed * (t - ramp)
    tau = (duration - t) / ramp
    return total - speed * ramp * (tau**3 - tau**4 / 2.0)


def _sample_chain(arm: ArmModel, anchors, frequency_hz: float, speed: float, ramp: float):
    """Joint path for one chain, excluding its starting configuration."""
    lengths = _chain_arc_lengths(arm, anchors)
    total = sum(lengths)
    if total < speed * ramp:
        # short hop: pure smoothstep, peak speed capped at the cruise speed
        duration = max(2.0 * ramp, 1.5 * total / speed)
    else:
        duration = total / speed + ramp
    frames = max(int(round(duration * frequency_hz)), _MIN_CHAIN_FRAMES)
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    path = []
    for k in range(1, frames + 1):
        t = (k / frames) * duration
        if total < speed * ramp:
            arc = _smoothstep(k / frames) * total
        else:
            arc = _arc_at(t, total, speed, ramp)
        leg = min(int(np.searchsorted(cumulative, arc, side="right")) - 1, len(lengths) - 1)
        leg = max(leg, 0)
        span = lengths[leg]
        u = (arc - cumulative[leg]) / span if span > 0.0 else 1.0
        u = min(u, 1.0)
        path.append(anchors[leg] + (anchors[leg + 1] - anchors[leg]) * u)
    return path


@lru_cache(maxsize=256)
def _plan(
    arm: ArmModel,
    task: TaskSpec,
    dwell_frames: int,
    frequency_hz: float,
    nominal_speed: float,
    ramp_seconds: float,
) -> _Plan:
    """Clean (noise-free) joint trajectory shared by every seed of a task."""
    chains_xyz, actions, corner_flags = _task_chains(task)
    staging = _staging_point(task)

    q = solve_reach_point(arm, staging)
    solved_chains = []
    for chain in chains_xyz:
        anchors = [q]
        for target in chain:
            q = solve_reach_point(arm, target, seed_config=q)
            anchors.append(q)
        solved_chains.append(anchors)

    path = [solved_chains[0][0]]
    gripper = [GRIPPER_OPEN]
    grip_state = GRIPPER_OPEN
    corners, grasps, releases = [], [], []
    for anchors, action, is_corner in zip(solved_chains, actions, corner_flags):
        chain_path = _sample_chain(arm, anchors, frequency_hz, nominal_speed, ramp_seconds)
        path.extend(chain_path)
        gripper.extend([grip_state] * len(chain_path))
        arrival = len(path) - 1
        if is_corner:
            corners.append(arrival)
            path.extend([path[-1]] * dwell_frames)
            gripper.extend([grip_state] * dwell_frames)
            if action is not None:
                event = arrival + dwell_frames // 2
                if action == "close":
                    grip_state = GRIPPER_CLOSED
                    grasps.append(event)
                else:
                    grip_state = GRIPPER_OPEN
                    releases.append(event)
                for i in range(event, len(gripper)):
                    gripper[i] = grip_state

    joint_path = tuple(tuple(float(v) for v in row) for row in path)
    return _Plan(
        joint_path=joint_path,
        gripper=tuple(gripper),
        truth=GroundTruth(tuple(corners), tuple(grasps), tuple(releases)),
    )


def _tremor_noise(rng: np.random.Generator, n: int, amplitude: float, rho: float):
    """AR(1) per-axis Cartesian noise with stationary std = amplitude."""
    innovation = amplitude * math.sqrt(1.0 - rho * rho)
    noise = np.empty((n, 3))
    noise[0] = amplitude * rng.standard_normal(3)
    for i in range(1, n):
        noise[i] = rho * noise[i - 1] + innovation * rng.standard_normal(3)
    return noise


def generate(cfg: SynthConfig, arm: ArmModel) -> tuple[Demonstration, GroundTruth]:
    """Produce one demonstration plus its ground-truth event frames."""
    cfg.validate()
    plan = _plan(
        arm, cfg.task, cfg.dwell_frames, cfg.frequency_hz, cfg.nominal_speed, cfg.ramp_seconds
    )
    clean = np.array(plan.joint_path, dtype=np.float64)
    n = clean.shape[0]
    joints = clean
    if cfg.tremor_amplitude > 0.0:
        rng = np.random.default_rng(cfg.seed)
        noise = _tremor_noise(rng, n, cfg.tremor_amplitude, cfg.tremor_correlation)
        lo = np.array([l for l, _ in arm.limits])
        hi = np.array([h for _, h in arm.limits])
        joints = clean.copy()
        for i in range(n):
            jac = position_jacobian(arm, clean[i])
            dq = np.linalg.lstsq(jac, noise[i], rcond=None)[0]
            np.clip(dq, -_MAX_NOISE_STEP, _MAX_NOISE_STEP, out=dq)
            joints[i] = np.clip(clean[i] + dq, lo, hi)

    frames = []
    for i in range(n):
        pos, ori = fk_frames(arm, joints[i], check_limits=False)[2:]
        frames.append(
            PoseFrame(
                t=i / cfg.frequency_hz,
                position=tuple(pos),
                orientation=tuple(ori),
                joints=tuple(joints[i]),
                gripper=plan.gripper[i],
            )
        )
    demo = Demonstration(
        id=cfg.demo_id or f"{cfg.task.kind}-{cfg.seed:05d}",
        joint_count=arm.joint_count,
        frequency_hz=cfg.frequency_hz,
        frames=tuple(frames),
        task_tag=cfg.task.kind,
    )
    return demo, plan.truth


# --- task sampling and corpora ----------------------------------------------

def sample_task(
    kind: str,
    seed: int = 0,
    success_radius: float = 0.02,
    grasp_radius: float = 0.03,
    contact_radius: float = 0.03,
) -> TaskSpec:
    """Seeded task with points drawn from the desk-scale workspace box."""
    if kind not in TASK_KINDS:
        raise ValidationError(f"unknown task kind {kind!r}, expected {TASK_KINDS}")
    rng = np.random.default_rng(seed)

    def draw(z=None, away_from=()):
        for _ in range(1000):
            p = rng.uniform(_BOX_LO, _BOX_HI)
            if z is not None:
                p[2] = z
            if all(np.linalg.norm(p - np.asarray(q)) >= _MIN_POINT_SEPARATION for q in away_from):
                return tuple(p)
        raise ValidationError("could not sample task points with required separation")

    if kind == REACH:
        w1 = draw()
        w2 = draw(away_from=[w1])
        w3 = draw(away_from=[w1, w2])
        return TaskSpec(kind=kind, success_radius=success_radius, waypoints=(w1, w2, w3))
    start = draw(z=_DESK_Z)
    goal = draw(z=_DESK_Z, away_from=[start])
    return TaskSpec(
        kind=kind,
        success_radius=success_radius,
        object_start=start,
        goal=goal,
        grasp_radius=grasp_radius,
        contact_radius=contact_radius,
    )


@dataclass(frozen=True)
class CorpusEntry:
    file: str
    id: str
    seed: int
    frame_count: int
    task: TaskSpec
    ground_truth: GroundTruth


@dataclass(frozen=True)
class CorpusManifest:
    config: SynthConfig  # base config; entry k used seed config.seed + k
    entries: tuple[CorpusEntry, ...]
    directory: str = "."

    def entry_path(self, entry: CorpusEntry) -> str:
        return os.path.join(self.directory, entry.file)

    def to_obj(self) -> dict:
        return {
            "config": self.config.to_obj(),
            "entries": [
                {
                    "file": e.file,
                    "id": e.id,
                    "seed": e.seed,
                    "frame_count": e.frame_count,
                    "task": e.task.to_obj(),
                    "ground_truth": e.ground_truth.to_obj(),
                }
                for e in self.entries
            ],
        }


def save_manifest(manifest: CorpusManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_obj(), fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> CorpusManifest:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
            entries = tuple(
                CorpusEntry(
                    file=e["file"],
                    id=e["id"],
                    seed=int(e["seed"]),
                    frame_count=int(e["frame_count"]),
                    task=TaskSpec.from_obj(e["task"]),
                    ground_truth=GroundTruth.from_obj(e["ground_truth"]),
                )
                for e in obj["entries"]
            )
            return CorpusManifest(
                config=SynthConfig.from_obj(obj["config"]),
                entries=entries,
                directory=os.path.dirname(path) or ".",
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad corpus manifest: {exc}", path) from exc


def generate_corpus(
    base_cfg: SynthConfig,
    count: int,
    output_dir,
    arm: ArmModel,
    vary_tasks: bool = True,
) -> CorpusManifest:
    """Write `count` demonstrations (seeds base..base+count-1) plus manifest.json.

    With vary_tasks (default) each entry gets its own task sampled from the
    entry seed, keeping the base task's kind and tolerances; otherwise all
    entries share base_cfg.task and differ only in tremor noise.
    """
    if count < 1:
        raise ValidationError(f"corpus count must be >= 1, got {count}")
    os.makedirs(output_dir, exist_ok=True)
    entries = []
    for k in range(count):
        seed = base_cfg.seed + k
        task = base_cfg.task
        if vary_tasks:
            task = sample_task(
                base_cfg.task.kind,
                seed=seed,
                success_radius=base_cfg.task.success_radius,
                grasp_radius=base_cfg.task.grasp_radius,
                contact_radius=base_cfg.task.contact_radius,
            )
        cfg = replace(base_cfg, seed=seed, task=task, demo_id=None)
        demo, truth = generate(cfg, arm)
        filename = f"{demo.id}.demo"
        write_demo_file(demo, os.path.join(output_dir, filename))
        entries.append(
            CorpusEntry(
                file=filename,
                id=demo.id,
                seed=seed,
                frame_count=len(demo),
                task=task,
                ground_truth=truth,
            )
        )
    manifest = CorpusManifest(
        config=base_cfg, entries=tuple(entries), directory=os.fspath(output_dir)
    )
    save_manifest(manifest, os.path.join(output_dir, "manifest.json"))
    return manifest
