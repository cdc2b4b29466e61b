"""One tier of the live testbed: a TCP daemon that runs synthetic compute."""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import FrameError, HarnessError
from ..graph.io import read_graph
from ..graph.subjects import get_profile
from ..sim.env import load_env
from ..sim.model import compute_time
from .shaping import TokenBucket
from .wire import MsgType, WireMessage, pack_body, read_frame, unpack_body, write_frame

ROLES = ("M", "E", "C")
PARTS = ("full", "head", "tail")


@dataclass
class TierDaemonConfig:
    role: str
    listen_addr: str = "127.0.0.1:0"
    upstream_addr: str | None = None
    model_path: str | None = None       # None: the tier only relays
    part: str | None = None             # "full", "head" or "tail" when a model is present
    strategy: str = ""                  # requests for any other strategy are refused
    subject: str = "RESNET"
    env_path: str | None = None
    scale: float = 100.0                # compute and overheads are divided by this
    egress_rate_mbps: dict = field(default_factory=dict)    # "upstream"/"downstream" -> Mbps
    overhead_s: dict = field(default_factory=dict)          # per-hop framing delay, unscaled
    burst_bytes: int = 0

    def __post_init__(self):
        if self.role not in ROLES:
            raise HarnessError(f"unknown role {self.role!r}")
        if self.role == "C" and self.upstream_addr:
            raise HarnessError("the cloud tier has no upstream")
        if any(r <= 0 for r in self.egress_rate_mbps.values()):
            raise HarnessError("egress rates must be positive")
        if self.scale <= 0:
            raise HarnessError("scale must be positive")
        if (self.model_path is None) != (self.part is None):
            raise HarnessError("model_path and part go together")
        if self.part is not None and self.part not in PARTS:
            raise HarnessError(f"unknown model part {self.part!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "TierDaemonConfig":
        return cls(**json.loads(Path(path).read_text()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


def busy_wait(seconds: float) -> None:
    end = time.perf_counter() + seconds
    while time.perf_counter() < end:
        pass


class TierDaemon:
    def __init__(self, cfg: TierDaemonConfig):
        self.cfg = cfg
        self.model = read_graph(cfg.model_path) if cfg.model_path else None
        if self.model is not None:
            env = load_env(cfg.env_path)
            scale = float(get_profile(cfg.subject).tier_cost_scale.get(cfg.role, 1.0))
            self.compute_s = compute_time(self.model, env.tier(cfg.role), scale) / cfg.scale
        else:
            self.compute_s = 0.0
        rates = cfg.egress_rate_mbps
        self._up_shaper = TokenBucket(rates["upstream"], cfg.burst_bytes) if "upstream" in rates else None
        self._down_shaper = TokenBucket(rates["downstream"], cfg.burst_bytes) if "downstream" in rates else None
        self._work = threading.Lock()
        self._count = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.served = 0
        self._upstream: socket.socket | None = None
        self._stop = threading.Event()
        self.sock: socket.socket | None = None

    # -- network plumbing

    def bind(self) -> str:
        host, port = parse_addr(self.cfg.listen_addr)
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind((host, port))
        s.listen(8)
        s.settimeout(0.2)
        self.sock = s
        h, p = s.getsockname()
        return f"{h}:{p}"

    def _send(self, sock, msg: WireMessage, direction: str) -> None:
        delay = float(self.cfg.overhead_s.get(direction, 0.0)) / self.cfg.scale
        if delay > 0:
            busy_wait(delay)
        shaper = self._up_shaper if direction == "upstream" else self._down_shaper
        write_frame(sock, msg, shaper)

    def _ask_upstream(self, msg: WireMessage) -> WireMessage:
        if not self.cfg.upstream_addr:
            raise HarnessError(f"tier {self.cfg.role} has no upstream to forward to")
        if self._upstream is None:
            s = socket.create_connection(parse_addr(self.cfg.upstream_addr))
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._upstream = s
        self._send(self._upstream, msg, "upstream")
        reply = read_frame(self._upstream)
        if reply is None:
            raise HarnessError("upstream closed the connection")
        return reply

    # -- request handling

    def _result(self, rid: int, meta: dict, filler: int = 0) -> WireMessage:
        return WireMessage(MsgType.RESULT, rid, pack_body(meta, filler))

    def _compute(self, meta: dict) -> None:
        busy_wait(self.compute_s)
        comp = meta.setdefault("compute", {})
        comp[self.cfg.role] = comp.get(self.cfg.role, 0.0) + self.compute_s

    def handle(self, msg: WireMessage) -> WireMessage:
        meta, _ = unpack_body(msg.payload)
        rid = msg.request_id
        if meta.get("strategy") != self.cfg.strategy:
            return self._result(rid, {"error": f"tier {self.cfg.role} serves {self.cfg.strategy!r}, "
                                               f"not {meta.get('strategy')!r}"})
        sizes = meta["sizes"]
        part = self.cfg.part
        kind = "input" if msg.msg_type == MsgType.INFER_REQ else "intermediate"
        if part is None:
            return self._ask_upstream(msg)
        if (kind == "input") != (part in ("full", "head")):
            return self._result(rid, {"error": f"{part} model on {self.cfg.role} cannot take {kind} data"})
        self._compute(meta)
        if part == "head":
            fwd = WireMessage(MsgType.INTERMEDIATE, rid, pack_body(meta, int(sizes["intermediate"])))
            return self._ask_upstream(fwd)
        out = {k: v for k, v in meta.items() if k != "sizes"}
        return self._result(rid, out, int(sizes["output"]))

    def _serve_conn(self, conn: socket.socket) -> None:
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        with conn:
            while not self._stop.is_set():
                try:
                    msg = read_frame(conn)
                except (FrameError, OSError):
                    return
                if msg is None:
                    return
                if msg.msg_type == MsgType.PING:
                    info = {"role": self.cfg.role, "in_flight": self.in_flight,
                            "max_in_flight": self.max_in_flight, "served": self.served}
                    write_frame(conn, self._result(msg.request_id, info))
                    continue
                if msg.msg_type == MsgType.SHUTDOWN:
                    write_frame(conn, self._result(msg.request_id, {"role": self.cfg.role, "bye": True}))
                    self._stop.set()
                    return
                if msg.msg_type == MsgType.RESULT:
                    return
                with self._count:
                    self.in_flight += 1
                    self.max_in_flight = max(self.max_in_flight, self.in_flight)
                try:
                    with self._work:
                        try:
                            reply = self.handle(msg)
                        except (HarnessError, FrameError, KeyError, OSError) as e:
                            reply = self._result(msg.request_id, {"error": str(e)})
                        self.served += 1        # before replying, so a follow-up PING sees it
                        self._send(conn, reply, "downstream")
                finally:
                    with self._count:
                        self.in_flight -= 1

    def serve_forever(self) -> None:
        if self.sock is None:
            self.bind()
        threads = []
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self.sock.accept()
                except socket.timeout:
                    continue
                conn.settimeout(None)
                t = threading.Thread(target=self._serve_conn, args=(conn,), daemon=True)
                t.start()
                threads.append(t)
        finally:
            self.sock.close()
            if self._upstream is not None:
                self._upstream.close()


def _announce(line: str) -> None:
    print(line, flush=True)


def serve_tier(cfg: TierDaemonConfig, announce=_announce) -> int:
    """Run a daemon until SHUTDOWN; announces ``LISTENING host:port`` once bound."""
    d = TierDaemon(cfg)
    addr = d.bind()
    announce(f"LISTENING {addr}")
    d.serve_forever()
    return 0
