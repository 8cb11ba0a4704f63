"""Command-line pipeline: record, send, synth, detect, filter, replay, eval, export.

Values resolve in order: built-in defaults, then the --config JSON file,
then explicit flags. Exit codes: 0 success, 1 usage or bad configuration,
2 data/validation problem, 3 I/O problem, 4 protocol/transport problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from demokit.errors import (
    ConfigError,
    DemoKitError,
    FramingError,
    JointLimitError,
    ParseError,
    ProtocolError,
    TransportError,
    ValidationError,
    WorkspaceError,
)
from demokit.evaluate import (
    evaluate_corpus,
    format_table,
    missing_files,
    summarize,
    write_eval_csv,
)
from demokit.filtering import FilterConfig, downsample
from demokit.ingest import DEFAULT_PORT, ServerConfig, replay_client, serve
from demokit.keypose import DetectorConfig, detect_key_poses, load_report, save_report
from demokit.kinematics import default_arm
from demokit.model import read_demo_file, write_demo_file
from demokit.simulate import (
    TASK_KINDS,
    load_task,
    replay_demonstration,
    save_task,
    trace_to_csv,
)
from demokit.synth import (
    SynthConfig,
    generate_corpus,
    load_manifest,
    sample_task,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    task_file = obj.get("task_file")
    if task_file is not None and not os.path.exists(task_file):
        raise ConfigError(f"config {path}: task_file {task_file!r} does not exist")
    return obj


def _cfg_section(args, name: str) -> dict:
    cfg = getattr(args, "_config", None) or {}
    section = cfg.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return section


def _pick(flag_value, section: dict, key: str, default):
    """Flag wins over config file wins over default."""
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def _detector_config(args) -> DetectorConfig:
    s = _cfg_section(args, "detector")
    base = DetectorConfig()
    cfg = DetectorConfig(
        window_length=int(_pick(args.window, s, "window_length", base.window_length)),
        sharp_turn_threshold=float(
            _pick(args.sharp_threshold, s, "sharp_turn_threshold", base.sharp_turn_threshold)
        ),
        dense_region_threshold=_pick(
            args.density_threshold, s, "dense_region_threshold", base.dense_region_threshold
        ),
        density_spacing_factor=float(
            _pick(args.density_factor, s, "density_spacing_factor", base.density_spacing_factor)
        ),
        interior_angle_mode=bool(
            _pick(args.interior_angle_mode or None, s, "interior_angle_mode", False)
        ),
        dense_above_mode=bool(
            _pick(args.dense_above_mode or None, s, "dense_above_mode", False)
        ),
    )
    cfg.validate()
    return cfg


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector")
    g.add_argument("--window", type=int, help="detector window length (odd, >= 3)")
    g.add_argument("--sharp-threshold", type=float, help="turning-angle threshold, radians")
    g.add_argument(
        "--density-threshold", type=float, help="absolute dense-region threshold, meters"
    )
    g.add_argument(
        "--density-factor",
        type=float,
        help="auto threshold = factor * mean frame spacing * window length",
    )
    g.add_argument(
        "--interior-angle-mode",
        action="store_true",
        help="compare the raw interior angle instead of the turning angle",
    )
    g.add_argument(
        "--dense-above-mode",
        action="store_true",
        help="treat density above the threshold as dense (literal-heuristic mode)",
    )


def _filter_config(args) -> FilterConfig:
    s = _cfg_section(args, "filter")
    cfg = FilterConfig(
        k=int(_pick(args.k, s, "k", FilterConfig().k)),
        always_keep_endpoints=bool(
            _pick(args.keep_endpoints, s, "always_keep_endpoints", True)
        ),
    )
    cfg.validate()
    return cfg


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("filter")
    g.add_argument("--k", type=int, help="downsampling stride (keep every Kth frame)")
    g.add_argument(
        "--keep-endpoints",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="always keep the first and last frame (default: yes)",
    )


def _resolve_task(args):
    s = _cfg_section(args, "synth")
    task_file = getattr(args, "task_file", None) or (getattr(args, "_config", None) or {}).get(
        "task_file"
    )
    if task_file:
        return load_task(task_file)
    kind = _pick(getattr(args, "task", None), s, "task_kind", None)
    if kind is None:
        raise ConfigError("need --task KIND or --task-file FILE")
    seed = int(_pick(getattr(args, "seed", None), s, "seed", 0))
    return sample_task(kind, seed=seed)


def _synth_config(args, task) -> SynthConfig:
    s = _cfg_section(args, "synth")
    base = SynthConfig(task=task)
    return SynthConfig(
        task=task,
        seed=int(_pick(args.seed, s, "seed", 0)),
        frequency_hz=float(_pick(args.hz, s, "frequency_hz", base.frequency_hz)),
        tremor_amplitude=float(_pick(args.tremor, s, "tremor_amplitude", base.tremor_amplitude)),
        tremor_correlation=float(
            _pick(args.correlation, s, "tremor_correlation", base.tremor_correlation)
        ),
        dwell_frames=int(_pick(args.dwell, s, "dwell_frames", base.dwell_frames)),
        nominal_speed=float(_pick(args.speed, s, "nominal_speed", base.nominal_speed)),
        ramp_seconds=float(_pick(args.ramp, s, "ramp_seconds", base.ramp_seconds)),
    )


# --- commands ----------------------------------------------------------------

def cmd_record(args) -> int:
    s = _cfg_section(args, "server")
    host = _pick(args.host, s, "host", "127.0.0.1")
    port = int(_pick(args.port, s, "port", DEFAULT_PORT))
    out_dir = _pick(args.out_dir, s, "output_dir", ".")
    config = ServerConfig(
        close_threshold=float(_pick(args.close_threshold, s, "close_threshold", 0.02)),
        open_threshold=float(_pick(args.open_threshold, s, "open_threshold", 0.04)),
        pinch_inverted=bool(_pick(args.pinch_inverted or None, s, "pinch_inverted", False)),
        max_frame_bytes=int(_pick(args.max_frame_bytes, s, "max_frame_bytes", 1 << 20)),
    )
    try:
        serve((host, port), out_dir, config)
    except OSError as exc:
        raise OSError(f"cannot serve on {host}:{port}: {exc}") from exc
    return EXIT_OK


def cmd_send(args) -> int:
    result = replay_client(args.demo, (args.host, args.port), rate_multiplier=args.rate)
    print(
        f"{'ACK' if result.ok else 'ERROR'}: {result.message}"
        + (f" -> {result.remote_file}" if result.remote_file else "")
    )
    if not result.ok:
        raise ProtocolError(f"server rejected the session: {result.message}")
    return EXIT_OK


def cmd_synth(args) -> int:
    task = _resolve_task(args)
    cfg = _synth_config(args, task)
    arm = default_arm()
    manifest = generate_corpus(
        cfg, args.count, args.out, arm, vary_tasks=not args.fixed_task
    )
    for entry in manifest.entries:
        print(f"wrote {manifest.entry_path(entry)} ({entry.frame_count} frames)")
    print(f"wrote {os.path.join(manifest.directory, 'manifest.json')}")
    if args.task_out:
        save_task(task, args.task_out)
        print(f"wrote {args.task_out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    demo = read_demo_file(args.demo)
    report = detect_key_poses(demo, _detector_config(args))
    print(
        f"{demo.id}: {len(report.key_indexes)} key frames "
        f"({len(report.sharp_turn_indexes)} sharp, {len(report.dense_region_indexes)} dense, "
        f"{len(report.gripper_event_indexes)} gripper) of {len(demo)}"
    )
    if args.out:
        save_report(report, args.out)
        print(f"wrote {args.out}")
    else:
        print("key indexes:", " ".join(str(i) for i in report.key_indexes))
    return EXIT_OK


def cmd_filter(args) -> int:
    demo = read_demo_file(args.demo)
    if args.report:
        report = load_report(args.report)
    else:
        report = detect_key_poses(demo, _detector_config(args))
    filtered = downsample(demo, report, _filter_config(args))
    write_demo_file(filtered, args.out)
    print(f"wrote {args.out}: {len(demo)} -> {len(filtered)} frames")
    return EXIT_OK


def cmd_replay(args) -> int:
    demo = read_demo_file(args.demo)
    task = load_task(args.task_file)
    result = replay_demonstration(default_arm(), demo, task)
    if result.success:
        print(f"{demo.id}: success ({len(result.trace)} states)")
    else:
        print(f"{demo.id}: failure: {result.failure_reason}")
    if args.trace_csv:
        trace_to_csv(result, args.trace_csv, timestamps=demo.times()[: len(result.trace)])
        print(f"wrote {args.trace_csv}")
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    missing = missing_files(manifest)
    if missing:
        raise OSError(
            "missing corpus files: " + ", ".join(missing[:10])
            + (" ..." if len(missing) > 10 else "")
        )
    rows = evaluate_corpus(
        manifest, default_arm(), _detector_config(args), _filter_config(args)
    )
    print(format_table(rows))
    if args.out_csv:
        write_eval_csv(rows, args.out_csv)
        print(f"wrote {args.out_csv}")
    summary = summarize(rows)
    if args.summary_json:
        with open(args.summary_json, "w", encoding="utf-8") as fh:
            json.dump(summary.__dict__, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.summary_json}")
    return EXIT_OK


def cmd_export(args) -> int:
    demo = read_demo_file(args.demo)
    if args.report:
        report = load_report(args.report)
    else:
        report = detect_key_poses(demo, _detector_config(args))
    keys = set(report.key_indexes)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "z", "gripper", "is_key"])
        for i, frame in enumerate(demo.frames):
            writer.writerow(
                [repr(frame.t)]
                + [repr(c) for c in frame.position]
                + [frame.gripper, int(i in keys)]
            )
    print(f"wrote {args.out} ({len(demo)} rows)")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demokit",
        description="Record, synthesize, analyze, downsample and replay "
        "robot demonstrations.",
    )
    parser.add_argument("--config", help="JSON config file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("record", help="run the TCP recording endpoint until Ctrl-C")
    p.add_argument("--host", help="bind address (default 127.0.0.1)")
    p.add_argument("--port", type=int, help=f"bind port (default {DEFAULT_PORT})")
    p.add_argument("--out-dir", help="directory for .demo files (default .)")
    p.add_argument("--close-threshold", type=float, help="pinch close threshold, meters")
    p.add_argument("--open-threshold", type=float, help="pinch open threshold, meters")
    p.add_argument(
        "--pinch-inverted",
        action="store_true",
        help="large pinch distance means closed (inverted convention)",
    )
    p.add_argument("--max-frame-bytes", type=int, help="wire frame size limit")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("send", help="stream a demonstration file to an endpoint")
    p.add_argument("--demo", required=True, help="demonstration file to stream")
    p.add_argument("--host", default="127.0.0.1", help="endpoint address")
    p.add_argument("--port", type=int, default=DEFAULT_PORT, help="endpoint port")
    p.add_argument(
        "--rate", type=float, default=1.0, help="rate multiplier over frequency_hz"
    )
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("synth", help="generate synthetic demonstrations + manifest")
    p.add_argument("--task", choices=TASK_KINDS, help="task kind to sample")
    p.add_argument("--task-file", help="explicit task spec JSON instead of sampling")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--count", type=int, default=1, help="number of demonstrations")
    p.add_argument("--seed", type=int, help="base seed (entry k uses seed+k)")
    p.add_argument("--tremor", type=float, help="tremor amplitude, meters")
    p.add_argument("--correlation", type=float, help="tremor AR(1) coefficient [0,1)")
    p.add_argument("--dwell", type=int, help="dwell frames at semantic events")
    p.add_argument("--hz", type=float, help="recording frequency")
    p.add_argument("--speed", type=float, help="cruise hand speed, m/s")
    p.add_argument("--ramp", type=float, help="speed ramp duration, seconds")
    p.add_argument(
        "--fixed-task",
        action="store_true",
        help="reuse one task for every entry instead of sampling per entry",
    )
    p.add_argument("--task-out", help="also write the sampled task spec JSON here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="detect key poses in a demonstration")
    p.add_argument("--demo", required=True, help="demonstration file")
    p.add_argument("--out", help="write the key-pose report JSON here")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("filter", help="downsample a demonstration, keeping key frames")
    p.add_argument("--demo", required=True, help="demonstration file")
    p.add_argument("--out", required=True, help="output demonstration file")
    p.add_argument("--report", help="precomputed key-pose report (else detect now)")
    _add_detector_flags(p)
    _add_filter_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("replay", help="replay delta-joint actions in the simulator")
    p.add_argument("--demo", required=True, help="demonstration file")
    p.add_argument("--task-file", required=True, help="task spec JSON")
    p.add_argument("--trace-csv", help="write the replay trace CSV here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("eval", help="before/after metrics over a corpus manifest")
    p.add_argument("--manifest", required=True, help="corpus manifest.json")
    p.add_argument("--out-csv", help="write per-demo metrics CSV here")
    p.add_argument("--summary-json", help="write the aggregate summary JSON here")
    _add_detector_flags(p)
    _add_filter_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export (t, x, y, z, gripper, is_key) CSV")
    p.add_argument("--demo", required=True, help="demonstration file")
    p.add_argument("--report", help="precomputed key-pose report (else detect now)")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.config:
        try:
            args._config = load_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        args._config = {}
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ParseError, WorkspaceError, JointLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FramingError, ProtocolError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except DemoKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
