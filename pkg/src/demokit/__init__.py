"""demokit: capture, key-pose detection, downsampling and kinematic replay
for robot demonstrations recorded from hand motion.

The hot detector kernels live in a compiled extension with a pure-Python
fallback; `demokit.kernels.BACKEND` names the one in use.
"""

from demokit.errors import DemoKitError
from demokit.filtering import FilterConfig, downsample, smoothness
from demokit.keypose import DetectorConfig, KeyPoseReport, detect_key_poses
from demokit.kinematics import ArmModel, default_arm, forward_kinematics
from demokit.model import (
    Demonstration,
    PoseFrame,
    RawHandFrame,
    derive_gripper_state,
    read_demo_file,
    validate_demonstration,
    write_demo_file,
)
from demokit.simulate import TaskSpec, replay, replay_demonstration, to_actions
from demokit.synth import SynthConfig, generate, generate_corpus, sample_task

__version__ = "0.1.0"

__all__ = [
    "ArmModel",
    "Demonstration",
    "DemoKitError",
    "DetectorConfig",
    "FilterConfig",
    "KeyPoseReport",
    "PoseFrame",
    "RawHandFrame",
    "SynthConfig",
    "TaskSpec",
    "default_arm",
    "derive_gripper_state",
    "detect_key_poses",
    "downsample",
    "forward_kinematics",
    "generate",
    "generate_corpus",
    "read_demo_file",
    "replay",
    "replay_demonstration",
    "sample_task",
    "smoothness",
    "to_actions",
    "validate_demonstration",
    "write_demo_file",
    "__version__",
]
