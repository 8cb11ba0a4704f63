import json
import socket

import pytest

from demokit.cli import build_parser, main
from demokit.model import read_demo_file


class TestHelpDocumentsEveryFlag:
    def test_every_subcommand_flag_appears_in_help(self):
        parser = build_parser()
        subparsers = parser._subparsers._group_actions[0].choices
        for name, sp in subparsers.items():
            text = sp.format_help()
            for action in sp._actions:
                for opt in action.option_strings:
                    assert opt in text, f"{name}: {opt} missing from --help"
                if action.help is not None:
                    assert action.help != ""

    def test_root_help_exits_zero(self):
        assert main(["--help"]) == 0

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag_is_usage_error(self):
        assert main(["detect"]) == 1


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_corpus")
    code = main(
        [
            "synth",
            "--task",
            "pick_and_place",
            "--out",
            str(out),
            "--count",
            "2",
            "--seed",
            "0",
            "--tremor",
            "0.002",
            "--task-out",
            str(out / "task.json"),
        ]
    )
    assert code == 0
    return out


class TestPipelineCommands:
    def test_synth_wrote_corpus(self, corpus):
        assert (corpus / "manifest.json").exists()
        assert (corpus / "pick_and_place-00000.demo").exists()
        assert (corpus / "task.json").exists()

    def test_synth_is_deterministic_across_runs(self, corpus, tmp_path):
        code = main(
            [
                "synth", "--task", "pick_and_place", "--out", str(tmp_path),
                "--count", "2", "--seed", "0", "--tremor", "0.002",
            ]
        )
        assert code == 0
        a = (corpus / "pick_and_place-00000.demo").read_bytes()
        b = (tmp_path / "pick_and_place-00000.demo").read_bytes()
        assert a == b

    def test_detect_filter_replay_export(self, corpus, tmp_path):
        demo = corpus / "pick_and_place-00000.demo"
        report = tmp_path / "rep.json"
        assert main(["detect", "--demo", str(demo), "--out", str(report)]) == 0
        filtered = tmp_path / "filtered.demo"
        assert (
            main(
                ["filter", "--demo", str(demo), "--out", str(filtered),
                 "--report", str(report), "--k", "5"]
            )
            == 0
        )
        assert len(read_demo_file(filtered)) < len(read_demo_file(demo))

        # per-entry task: entry 0 of a vary-task corpus uses the base seed task
        task_file = corpus / "task.json"
        trace = tmp_path / "trace.csv"
        assert (
            main(
                ["replay", "--demo", str(filtered), "--task-file", str(task_file),
                 "--trace-csv", str(trace)]
            )
            == 0
        )
        assert trace.exists()

        out_csv = tmp_path / "export.csv"
        assert (
            main(
                ["export", "--demo", str(demo), "--report", str(report),
                 "--out", str(out_csv)]
            )
            == 0
        )
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0] == "t,x,y,z,gripper,is_key"
        assert len(lines) == len(read_demo_file(demo)) + 1
        keys = json.loads(report.read_text())["key_indexes"]
        flagged = [i for i, line in enumerate(lines[1:]) if line.endswith(",1")]
        assert flagged == keys

    def test_eval_runs_and_writes_csv(self, corpus, tmp_path):
        out_csv = tmp_path / "eval.csv"
        code = main(
            ["eval", "--manifest", str(corpus / "manifest.json"),
             "--out-csv", str(out_csv), "--k", "5"]
        )
        assert code == 0
        assert out_csv.exists()

    def test_eval_missing_files_exit_3(self, corpus, tmp_path):
        manifest = json.loads((corpus / "manifest.json").read_text())
        manifest["entries"][0]["file"] = "not-there.demo"
        broken = tmp_path / "manifest.json"
        broken.write_text(json.dumps(manifest))
        assert main(["eval", "--manifest", str(broken)]) == 3

    def test_config_file_provides_defaults_and_flags_override(self, corpus, tmp_path):
        cfg = {"filter": {"k": 2}, "detector": {"window_length": 11}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        demo = corpus / "pick_and_place-00000.demo"
        out1 = tmp_path / "f1.demo"
        out2 = tmp_path / "f2.demo"
        assert (
            main(["--config", str(cfg_path), "filter", "--demo", str(demo),
                  "--out", str(out1)]) == 0
        )
        assert (
            main(["--config", str(cfg_path), "filter", "--demo", str(demo),
                  "--out", str(out2), "--k", "50"]) == 0
        )
        assert len(read_demo_file(out1)) > len(read_demo_file(out2))

    def test_bad_config_file_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main(["--config", str(bad), "detect", "--demo", "x.demo"]) == 1

    def test_detect_on_missing_file_exits_3(self):
        assert main(["detect", "--demo", "/nonexistent/x.demo"]) == 3

    def test_detect_on_corrupt_file_exits_2(self, tmp_path):
        bad = tmp_path / "bad.demo"
        bad.write_text("this is not a demo\n")
        assert main(["detect", "--demo", str(bad)]) == 2

    def test_synth_invalid_tremor_exits_2(self, tmp_path):
        code = main(
            ["synth", "--task", "reach", "--out", str(tmp_path),
             "--count", "1", "--tremor", "-1"]
        )
        assert code == 2


class TestNetworkCommands:
    def test_send_against_live_server_and_busy_port(self, corpus, tmp_path):
        from demokit.ingest import RecordServer

        out = tmp_path / "rec"
        out.mkdir()
        with RecordServer(port=0, output_dir=out) as srv:
            demo = corpus / "pick_and_place-00000.demo"
            code = main(
                ["send", "--demo", str(demo), "--host", srv.host,
                 "--port", str(srv.port), "--rate", "1000000"]
            )
            assert code == 0
            files = list(out.glob("*.demo"))
            assert len(files) == 1

    def test_send_to_closed_port_exits_4(self, corpus):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        demo = corpus / "pick_and_place-00000.demo"
        code = main(["send", "--demo", str(demo), "--host", "127.0.0.1",
                     "--port", str(port), "--rate", "1000000"])
        assert code == 4

    def test_send_zero_rate_exits_1(self, corpus):
        demo = corpus / "pick_and_place-00000.demo"
        assert main(["send", "--demo", str(demo), "--rate", "0"]) == 1

    def test_record_busy_port_exits_3(self, tmp_path):
        blocker = socket.socket()
        blocker.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            code = main(
                ["record", "--host", "127.0.0.1", "--port", str(port),
                 "--out-dir", str(tmp_path)]
            )
            assert code == 3
        finally:
            blocker.close()

    def test_record_unwritable_dir_exits_3(self, tmp_path):
        code = main(
            ["record", "--host", "127.0.0.1", "--port", "0",
             "--out-dir", str(tmp_path / "missing")]
        )
        assert code == 3
