"""Sequential driver that plays the mobile device's user."""

from __future__ import annotations

import socket
import time

from ..errors import HarnessError, RunTimeout
from ..graph.subjects import SubjectProfile
from ..sim.env import EnvironmentSpec
from ..sim.model import (DeploymentStrategy, InputSample, LatencyBreakdown, intermediate_mbits,
                         simulate_run)
from .daemon import busy_wait, parse_addr
from .wire import MsgType, WireMessage, pack_body, read_frame, unpack_body, write_frame


def payload_bytes(mbits: float, env: EnvironmentSpec, scale: float) -> int:
    """Wire bytes for a payload after base64 inflation and harness down-scaling."""
    return int(round(mbits * env.base64_factor * 1e6 / 8.0 / scale))


def predicted_total(strategy, models, env, sample, profile, scale: float) -> float:
    return simulate_run(strategy, models, env, sample, profile).total_s / scale


def ping(addr: str, request_id: int = 0, timeout: float = 5.0) -> dict:
    with socket.create_connection(parse_addr(addr), timeout=timeout) as s:
        write_frame(s, WireMessage(MsgType.PING, request_id))
        reply = read_frame(s)
    if reply is None or reply.request_id != request_id:
        raise HarnessError(f"bad PING reply from {addr}")
    return unpack_body(reply.payload)[0]


def shutdown(addr: str, timeout: float = 5.0) -> None:
    with socket.create_connection(parse_addr(addr), timeout=timeout) as s:
        write_frame(s, WireMessage(MsgType.SHUTDOWN, 0))
        read_frame(s)


def run_client(strategy: DeploymentStrategy, samples: list[InputSample], env: EnvironmentSpec,
               profile: SubjectProfile, models: dict, addr: str, scale: float = 100.0,
               timeout_factor: float = 10.0, first_run_index: int = 0, rep_index: int = 0,
               warmup: bool = False, clock_origin: float | None = None,
               out: list | None = None) -> list:
    """One sequential pass over ``samples`` against the mobile daemon at ``addr``.

    Totals are wall-clock seconds in the scaled-down world. Compute seconds
    come back from the daemons; transmission is what remains. Records are
    appended to ``out`` as they complete, so a timeout keeps earlier runs.
    """
    from ..experiment import LatencyRecord

    out = [] if out is None else out
    if not samples:
        return out
    origin = time.perf_counter() if clock_origin is None else clock_origin
    pre, post = profile.pre_s / scale, profile.post_s / scale
    with socket.create_connection(parse_addr(addr)) as sock:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        for k, s in enumerate(samples):
            run_index = first_run_index + k
            limit = timeout_factor * predicted_total(strategy, models, env, s, profile, scale)
            sock.settimeout(max(limit, 0.05))
            sizes = {"input": payload_bytes(s.payload_mbits, env, scale),
                     "intermediate": payload_bytes(intermediate_mbits(profile, s), env, scale),
                     "output": payload_bytes(profile.output_size_mbits, env, scale)}
            meta = {"strategy": str(strategy), "sample_id": s.id, "sizes": sizes}
            t0 = time.perf_counter()
            busy_wait(pre)
            try:
                write_frame(sock, WireMessage(MsgType.INFER_REQ, run_index,
                                              pack_body(meta, sizes["input"])))
                reply = read_frame(sock)
            except socket.timeout:
                raise RunTimeout(f"run {run_index} exceeded {limit:.3f}s") from None
            if reply is None or reply.msg_type != MsgType.RESULT or reply.request_id != run_index:
                raise HarnessError(f"run {run_index}: bad reply")
            rmeta, _ = unpack_body(reply.payload)
            if "error" in rmeta:
                raise HarnessError(f"run {run_index}: {rmeta['error']}")
            busy_wait(post)
            t1 = time.perf_counter()
            total = t1 - t0
            comp = {t: float(v) for t, v in sorted(rmeta.get("compute", {}).items())}
            tx = max(total - pre - post - sum(comp.values()), 0.0)
            b = LatencyBreakdown(pre, post, comp, {"measured": tx}, total)
            out.append(LatencyRecord(run_index, rep_index, s.id, b, t1 - origin, warmup))
    return out
