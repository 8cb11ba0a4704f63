import numpy as np
import pytest

from demokit.errors import ValidationError, WorkspaceError
from demokit.filtering import smoothness
from demokit.kinematics import forward_kinematics
from demokit.model import GRIPPER_CLOSED, GRIPPER_OPEN, read_demo_file, validate_demonstration
from demokit.simulate import REACH, TaskSpec, replay_demonstration
from demokit.synth import (
    SynthConfig,
    generate,
    generate_corpus,
    load_manifest,
    sample_task,
    solve_reach_point,
)


class TestGenerate:
    def test_zero_noise_reach_replays_and_is_smooth_off_corners(self, arm):
        task = sample_task(REACH, seed=0)
        demo, truth = generate(SynthConfig(task=task, seed=0), arm)
        assert validate_demonstration(demo) == []
        assert replay_demonstration(arm, demo, task).success
        stats = smoothness(demo)
        assert stats.mean_abs_turning_angle < 0.15  # near zero away from corners

    def test_zero_noise_path_passes_through_waypoints(self, arm):
        task = sample_task(REACH, seed=1)
        demo, _ = generate(SynthConfig(task=task, seed=1), arm)
        pos = demo.positions()
        for wp in task.waypoints:
            assert np.linalg.norm(pos - np.array(wp), axis=1).min() < 1e-6

    def test_fixed_seed_is_bitwise_deterministic(self, arm, tmp_path):
        task = sample_task("push", seed=2)
        cfg = SynthConfig(task=task, seed=2, tremor_amplitude=0.002)
        a, _ = generate(cfg, arm)
        b, _ = generate(cfg, arm)
        assert a == b

    def test_noise_statistics_match_amplitude(self, arm):
        # pooled over enough frames, per-axis std within 20% of the target
        amp = 0.002
        deviations = []
        for seed in range(20):
            task = sample_task(REACH, seed=seed)
            clean, _ = generate(SynthConfig(task=task, seed=seed), arm)
            noisy, _ = generate(
                SynthConfig(task=task, seed=seed, tremor_amplitude=amp), arm
            )
            deviations.append(noisy.positions() - clean.positions())
        pooled = np.concatenate(deviations, axis=0)
        assert pooled.shape[0] >= 10_000
        for axis in range(3):
            assert abs(pooled[:, axis].std() - amp) / amp < 0.20

    def test_gripper_flips_exactly_at_ground_truth(self, arm):
        task = sample_task("pick_and_place", seed=3)
        demo, truth = generate(SynthConfig(task=task, seed=3, tremor_amplitude=0.002), arm)
        g = demo.gripper_states()
        changes = (np.nonzero(np.diff(g) != 0)[0] + 1).tolist()
        assert changes == sorted(truth.grasp_frames + truth.release_frames)
        for f in truth.grasp_frames:
            assert g[f] == GRIPPER_CLOSED and g[f - 1] == GRIPPER_OPEN
        for f in truth.release_frames:
            assert g[f] == GRIPPER_OPEN and g[f - 1] == GRIPPER_CLOSED
        assert all(
            gr < re for gr, re in zip(truth.grasp_frames, truth.release_frames)
        )

    def test_unreachable_waypoint_raises_workspace_error(self, arm):
        task = TaskSpec(kind=REACH, waypoints=((5.0, 0.0, 0.0), (0.4, 0, 0.3), (0.5, 0, 0.3)))
        with pytest.raises(WorkspaceError, match="5.0"):
            generate(SynthConfig(task=task, seed=0), arm)

    def test_bad_config_rejected(self, arm):
        task = sample_task(REACH, seed=0)
        with pytest.raises(ValidationError):
            SynthConfig(task=task, tremor_amplitude=-1.0).validate()
        with pytest.raises(ValidationError):
            SynthConfig(task=task, tremor_correlation=1.0).validate()
        with pytest.raises(ValidationError):
            SynthConfig(task=task, dwell_frames=-1).validate()

    def test_noisy_joints_stay_within_limits(self, arm):
        task = sample_task("push", seed=4)
        demo, _ = generate(SynthConfig(task=task, seed=4, tremor_amplitude=0.004), arm)
        joints = demo.joint_matrix()
        lo = np.array([l for l, _ in arm.limits])
        hi = np.array([h for _, h in arm.limits])
        assert np.all(joints >= lo - 1e-12) and np.all(joints <= hi + 1e-12)


class TestSolver:
    def test_solves_fk_images_exactly(self, arm):
        rng = np.random.default_rng(0)
        for _ in range(5):
            q = rng.uniform(-0.8, 0.8, arm.joint_count)
            target, _ = forward_kinematics(arm, q, check_limits=False)
            sol = solve_reach_point(arm, target)
            pos, _ = forward_kinematics(arm, sol, check_limits=False)
            assert np.linalg.norm(pos - target) < 1e-9

    def test_far_target_fails(self, arm):
        with pytest.raises(WorkspaceError):
            solve_reach_point(arm, (3.0, 3.0, 3.0), max_restarts=4, max_iters=40)


class TestCorpus:
    def test_corpus_files_and_manifest(self, arm, tmp_path):
        task = sample_task(REACH, seed=0)
        cfg = SynthConfig(task=task, seed=100, tremor_amplitude=0.002)
        manifest = generate_corpus(cfg, 3, tmp_path / "c", arm)
        assert len(manifest.entries) == 3
        assert (tmp_path / "c" / "manifest.json").exists()
        for entry in manifest.entries:
            demo = read_demo_file(manifest.entry_path(entry))
            assert len(demo) == entry.frame_count
            for f in entry.ground_truth.all_event_frames():
                assert 0 <= f < entry.frame_count

    def test_corpus_rerun_is_identical(self, arm, tmp_path):
        task = sample_task("push", seed=0)
        cfg = SynthConfig(task=task, seed=5, tremor_amplitude=0.002)
        m1 = generate_corpus(cfg, 2, tmp_path / "a", arm)
        m2 = generate_corpus(cfg, 2, tmp_path / "b", arm)
        for e1, e2 in zip(m1.entries, m2.entries):
            assert (tmp_path / "a" / e1.file).read_bytes() == (
                tmp_path / "b" / e2.file
            ).read_bytes()
        a = (tmp_path / "a" / "manifest.json").read_text()
        b = (tmp_path / "b" / "manifest.json").read_text()
        assert a == b

    def test_manifest_round_trip(self, arm, tmp_path):
        task = sample_task("pick_and_place", seed=0)
        cfg = SynthConfig(task=task, seed=7, tremor_amplitude=0.001)
        manifest = generate_corpus(cfg, 2, tmp_path / "m", arm)
        loaded = load_manifest(tmp_path / "m" / "manifest.json")
        assert loaded.entries == manifest.entries
        assert loaded.config == cfg

    def test_zero_count_rejected(self, arm, tmp_path):
        task = sample_task(REACH, seed=0)
        with pytest.raises(ValidationError):
            generate_corpus(SynthConfig(task=task), 0, tmp_path / "z", arm)

    def test_vary_tasks_produces_distinct_tasks(self, arm, tmp_path):
        task = sample_task(REACH, seed=0)
        manifest = generate_corpus(
            SynthConfig(task=task, seed=0), 3, tmp_path / "v", arm, vary_tasks=True
        )
        assert len({e.task for e in manifest.entries}) == 3

    def test_fixed_task_reuses_one_task(self, arm, tmp_path):
        task = sample_task(REACH, seed=0)
        manifest = generate_corpus(
            SynthConfig(task=task, seed=0, tremor_amplitude=0.002),
            2,
            tmp_path / "f",
            arm,
            vary_tasks=False,
        )
        assert {e.task for e in manifest.entries} == {task}
