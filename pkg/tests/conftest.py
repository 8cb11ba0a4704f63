import numpy as np
import pytest
from hypothesis import settings

from demokit.kinematics import default_arm

# corpus-backed property tests can be slow on cold caches; wall-clock
# deadlines only add flakiness here
settings.register_profile("demokit", deadline=None)
settings.load_profile("demokit")
from demokit.model import Demonstration, PoseFrame
from demokit.synth import SynthConfig, generate_corpus, sample_task

TASK_KINDS = ("reach", "push", "pick_and_place")
TREMOR = 0.002


@pytest.fixture(scope="session")
def arm():
    return default_arm()


def make_demo(positions, gripper=None, joints=None, hz=60.0, demo_id="test"):
    """Build a well-formed demonstration from bare positions."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    gripper = gripper if gripper is not None else [0] * n
    frames = []
    for i in range(n):
        j = joints[i] if joints is not None else (0.0,)
        frames.append(
            PoseFrame(
                t=i / hz,
                position=tuple(positions[i]),
                orientation=(1.0, 0.0, 0.0, 0.0),
                joints=tuple(j),
                gripper=gripper[i],
            )
        )
    joint_count = len(frames[0].joints) if n else 0
    return Demonstration(
        id=demo_id, joint_count=joint_count, frequency_hz=hz, frames=tuple(frames)
    )


def random_trajectory(rng, n, segments=3):
    """Seeded wandering path with smooth legs, jitter, and an occasional dwell."""
    anchors = rng.uniform(-1.0, 1.0, size=(segments + 1, 3))
    counts = rng.integers(3, max(4, n // segments + 1), size=segments)
    pts = []
    for k in range(segments):
        steps = counts[k]
        for s in range(steps):
            u = s / steps
            pts.append(anchors[k] + u * (anchors[k + 1] - anchors[k]))
            if len(pts) >= n:
                break
        if len(pts) >= n:
            break
    while len(pts) < n:
        pts.append(anchors[-1])
    pts = np.array(pts[:n])
    pts += rng.normal(scale=0.01, size=pts.shape)
    return pts


@pytest.fixture(scope="session")
def tremor_corpora(tmp_path_factory, arm):
    """Small per-task tremor corpora shared by the module tests."""
    out = {}
    root = tmp_path_factory.mktemp("tremor_corpora")
    for kind in TASK_KINDS:
        cfg = SynthConfig(task=sample_task(kind, seed=0), seed=0, tremor_amplitude=TREMOR)
        out[kind] = generate_corpus(cfg, 4, root / kind, arm)
    return out
