"""TCP recording endpoint and reference streaming client.

One session per connection: HELLO, then FRAME messages, then END with the
frame count. A clean session is renamed from `<id>.demo.partial` to
`<id>.demo` and acknowledged; a session that disconnects early, breaks
protocol, or declares a mismatched count keeps the `.partial` suffix.
Sessions share nothing but the output directory, and the listener keeps
accepting while sessions stream.

Raw-hand sessions (HELLO mode 1) carry pinch distances instead of joints;
the server derives the binary gripper state with hysteresis and writes a
joints-absent demonstration (joint_count 0) that downstream tooling can
detect and filter but not replay.
"""

from __future__ import annotations

import math
import os
import re
import socket
import threading
import time
from dataclasses import dataclass

from demokit.errors import ConfigError, TransportError
from demokit.model import (
    GRIPPER_OPEN,
    DemoFileWriter,
    PoseFrame,
    derive_gripper_state,
    read_demo_file,
)
from demokit.wire import (
    DEFAULT_MAX_FRAME_BYTES,
    MODE_POSE,
    MODE_RAW_HAND,
    Ack,
    End,
    Error,
    FramePose,
    FrameRaw,
    Hello,
    StreamDecoder,
    encode_message,
)

DEFAULT_PORT = 10000


@dataclass(frozen=True)
class ServerConfig:
    close_threshold: float = 0.02  # pinch hysteresis, meters
    open_threshold: float = 0.04
    pinch_inverted: bool = False
    max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES


def _safe_stem(demo_id: str) -> str:
    stem = re.sub(r"[^A-Za-z0-9._-]+", "_", demo_id).strip("._") or "session"
    return stem


class _Session:
    """State machine for one connection; see module docstring for rules."""

    def __init__(self, conn: socket.socket, output_dir: str, config: ServerConfig):
        self.conn = conn
        self.output_dir = output_dir
        self.config = config
        self.decoder = StreamDecoder(config.max_frame_bytes)
        self.writer: DemoFileWriter | None = None
        self.mode = MODE_POSE
        self.frames_received = 0
        self.prev_gripper = GRIPPER_OPEN
        self.prev_t: float | None = None
        self.partial_path = ""
        self.final_path = ""

    def run(self) -> None:
        try:
            while True:
                try:
                    data = self.conn.recv(65536)
                except OSError:
                    break
                if not data:
                    break
                try:
                    messages = self.decoder.feed(data)
                except Exception as exc:
                    self._reply_error(f"framing: {exc}")
                    return
                for msg in messages:
                    if not self._handle(msg):
                        return
        finally:
            self._close()

    # returns False when the session is over
    def _handle(self, msg) -> bool:
        if isinstance(msg, Hello):
            return self._on_hello(msg)
        if isinstance(msg, (FramePose, FrameRaw)):
            return self._on_frame(msg)
        if isinstance(msg, End):
            return self._on_end(msg)
        self._reply_error(f"unexpected {type(msg).__name__} message")
        return False

    def _on_hello(self, msg: Hello) -> bool:
        if self.writer is not None:
            self._reply_error("duplicate HELLO")
            return False
        if msg.mode == MODE_RAW_HAND:
            joint_count = 0
        else:
            joint_count = msg.joint_count
        if not (msg.frequency_hz > 0) or not math.isfinite(msg.frequency_hz):
            self._reply_error(f"bad frequency_hz {msg.frequency_hz}")
            return False
        stem = _safe_stem(msg.id)
        final = os.path.join(self.output_dir, f"{stem}.demo")
        suffix = 0
        while os.path.exists(final) or os.path.exists(final + ".partial"):
            suffix += 1
            stem_n = f"{stem}_{suffix}"
            final = os.path.join(self.output_dir, f"{stem_n}.demo")
        if suffix:
            stem = f"{stem}_{suffix}"
        self.final_path = final
        self.partial_path = final + ".partial"
        self.mode = msg.mode
        self.writer = DemoFileWriter(
            self.partial_path,
            demo_id=stem,
            joint_count=joint_count,
            frequency_hz=msg.frequency_hz,
            task_tag=msg.task_tag or None,
        )
        return True

    def _on_frame(self, msg) -> bool:
        if self.writer is None:
            self._reply_error("FRAME before HELLO")
            return False
        if isinstance(msg, FramePose):
            if self.mode != MODE_POSE:
                self._reply_error("pose FRAME in a raw-hand session")
                return False
            frame = msg.frame
        else:
            if self.mode != MODE_RAW_HAND:
                self._reply_error("raw-hand FRAME in a pose session")
                return False
            raw = msg.frame
            if raw.pinch_distance < 0:
                self._reply_error(f"negative pinch distance {raw.pinch_distance}")
                return False
            gripper = _derive(raw.pinch_distance, self.prev_gripper, self.config)
            self.prev_gripper = gripper
            frame = PoseFrame(
                t=raw.t,
                position=raw.hand_position,
                orientation=raw.hand_orientation,
                joints=(),
                gripper=gripper,
            )
        problem = self._frame_problem(frame)
        if problem:
            self._reply_error(problem)
            return False
        self.writer.append(frame)
        self.prev_t = frame.t
        self.frames_received += 1
        return True

    def _frame_problem(self, frame: PoseFrame) -> str | None:
        values = (frame.t, *frame.position, *frame.orientation, *frame.joints)
        if not all(math.isfinite(v) for v in values):
            return f"non-finite value in frame {self.frames_received}"
        norm = math.sqrt(sum(c * c for c in frame.orientation))
        if abs(norm - 1.0) > 1e-6:
            return f"non-unit quaternion in frame {self.frames_received}"
        if self.writer is not None and len(frame.joints) != self.writer.joint_count:
            return (
                f"frame {self.frames_received} has {len(frame.joints)} joints, "
                f"session declared {self.writer.joint_count}"
            )
        if self.prev_t is not None and frame.t < self.prev_t:
            return f"timestamp decreased at frame {self.frames_received}"
        return None

    def _on_end(self, msg: End) -> bool:
        if self.writer is None:
            self._reply_error("END before HELLO")
            return False
        if msg.count != self.frames_received:
            self._reply_error(
                f"frame count mismatch: END declared {msg.count}, "
                f"received {self.frames_received}"
            )
            return False
        if self.frames_received < 2:
            self._reply_error(
                f"demonstration needs at least 2 frames, got {self.frames_received}"
            )
            return False
        self.writer.close()
        os.replace(self.partial_path, self.final_path)
        self.writer = None
        self._reply(Ack(self.frames_received, os.path.basename(self.final_path)))
        return False

    def _reply(self, msg) -> None:
        try:
            self.conn.sendall(encode_message(msg))
        except OSError:
            pass

    def _reply_error(self, message: str) -> None:
        self._reply(Error(message))

    def _close(self) -> None:
        if self.writer is not None:
            # incomplete session: keep whatever streamed in as .partial
            self.writer.close()
            self.writer = None
        try:
            self.conn.close()
        except OSError:
            pass


class RecordServer:
    """Threaded TCP endpoint writing one demonstration file per session."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        output_dir: str = ".",
        config: ServerConfig | None = None,
    ):
        self.host = host
        self.port = port
        self.output_dir = os.fspath(output_dir)
        self.config = config or ServerConfig()
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._sessions: set[socket.socket] = set()
        self._threads: list[threading.Thread] = []
        self._lock = threading.Lock()
        self._stopping = threading.Event()

    def start(self) -> None:
        if not os.path.isdir(self.output_dir) or not os.access(self.output_dir, os.W_OK):
            raise OSError(f"output directory {self.output_dir!r} is not writable")
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(16)
        self._listener = listener
        self.port = listener.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return (self.host, self.port)

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            with self._lock:
                self._sessions.add(conn)
            t = threading.Thread(target=self._run_session, args=(conn,), daemon=True)
            t.start()
            with self._lock:
                self._threads.append(t)

    def _run_session(self, conn: socket.socket) -> None:
        try:
            _Session(conn, self.output_dir, self.config).run()
        finally:
            with self._lock:
                self._sessions.discard(conn)

    def stop(self) -> None:
        """Close the listener and abort live sessions (their files stay .partial)."""
        self._stopping.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            sessions = list(self._sessions)
            threads = list(self._threads)
        for conn in sessions:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass
        for t in threads:
            t.join(timeout=5.0)
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5.0)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(
    bind_address: tuple[str, int],
    output_directory,
    config: ServerConfig | None = None,
) -> None:
    """Run a recording endpoint until interrupted (Ctrl-C)."""
    server = RecordServer(bind_address[0], bind_address[1], output_directory, config)
    server.start()
    print(f"recording endpoint listening on {server.host}:{server.port}", flush=True)
    try:
        while True:
            time.sleep(0.2)
    except KeyboardInterrupt:
        print("shutting down; open sessions become .partial files", flush=True)
    finally:
        server.stop()


@dataclass(frozen=True)
class SessionResult:
    ok: bool
    frames_sent: int
    message: str
    remote_file: str = ""


def _derive(pinch: float, prev: int, config: ServerConfig) -> int:
    return derive_gripper_state(
        pinch,
        prev,
        close_threshold=config.close_threshold,
        open_threshold=config.open_threshold,
        inverted=config.pinch_inverted,
    )


def replay_client(
    demo_file,
    target_address: tuple[str, int],
    rate_multiplier: float = 1.0,
    timeout: float = 30.0,
) -> SessionResult:
    """Stream a demonstration file to a recording endpoint.

    Frames are paced at frequency_hz * rate_multiplier; use a large
    multiplier for as-fast-as-possible transfer. Returns the server's
    ACK or ERROR outcome. Doubles as the reference client implementation.
    """
    if not rate_multiplier > 0:
        raise ConfigError(f"rate_multiplier must be > 0, got {rate_multiplier}")
    demo = read_demo_file(demo_file)
    interval = 1.0 / (demo.frequency_hz * rate_multiplier)
    messages = [
        encode_message(
            Hello(
                mode=MODE_POSE,
                joint_count=demo.joint_count,
                frequency_hz=demo.frequency_hz,
                id=demo.id,
                task_tag=demo.task_tag or "",
            )
        )
    ]
    try:
        conn = socket.create_connection(target_address, timeout=timeout)
    except OSError as exc:
        raise TransportError(f"cannot connect to {target_address}: {exc}") from exc
    sent = 0
    try:
        conn.sendall(messages[0])
        next_at = time.monotonic()
        for frame in demo.frames:
            if interval >= 1e-4:
                next_at += interval
                delay = next_at - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            conn.sendall(encode_message(FramePose(frame)))
            sent += 1
        conn.sendall(encode_message(End(sent)))
        conn.shutdown(socket.SHUT_WR)
        decoder = StreamDecoder()
        reply = None
        while reply is None:
            data = conn.recv(65536)
            if not data:
                raise TransportError("connection closed before the server replied")
            got = decoder.feed(data)
            if got:
                reply = got[0]
    except OSError as exc:
        raise TransportError(f"stream to {target_address} failed: {exc}") from exc
    finally:
        conn.close()
    if isinstance(reply, Ack):
        return SessionResult(True, sent, f"acknowledged {reply.count} frames", reply.path)
    if isinstance(reply, Error):
        return SessionResult(False, sent, reply.message)
    return SessionResult(False, sent, f"unexpected reply {type(reply).__name__}")
