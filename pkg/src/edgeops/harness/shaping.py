"""Sender-side token bucket standing in for kernel traffic control."""

from __future__ import annotations

import time

CHUNK = 16384
IDLE_SLACK_S = 0.002


class TokenBucket:
    """Token bucket in virtual-schedule form.

    ``_tat`` is when the link finishes everything sent so far at the nominal
    rate. A chunk may leave once it would finish within ``burst`` bytes of
    schedule, so a payload no larger than the burst goes out at once. Sleep
    overshoot is not lost: the schedule only resets to the wall clock after
    the link has been idle for longer than a small slack.
    """

    def __init__(self, rate_mbps: float, burst_bytes: int = 0, clock=time.perf_counter,
                 sleep=time.sleep):
        if rate_mbps <= 0:
            raise ValueError("rate must be positive")
        if burst_bytes < 0:
            raise ValueError("burst must be nonnegative")
        self.rate_bps = rate_mbps * 1e6 / 8.0       # bytes per second
        self.burst = int(burst_bytes)
        self._clock = clock
        self._sleep = sleep
        self._tat = clock()

    def wait_time(self, n: int) -> float:
        """Seconds to wait before ``n`` more bytes may leave; books them on the schedule."""
        now = self._clock()
        if self._tat < now - IDLE_SLACK_S:
            self._tat = now
        self._tat += n / self.rate_bps
        return max(0.0, self._tat - self.burst / self.rate_bps - now)

    def send(self, sock, data: bytes) -> None:
        view = memoryview(data)
        for i in range(0, len(view), CHUNK):
            chunk = view[i:i + CHUNK]
            delay = self.wait_time(len(chunk))
            if delay > 0:
                self._sleep(delay)
            sock.sendall(chunk)


def token_bucket_send(stream, data: bytes, rate_mbps: float, burst_bytes: int = 0) -> None:
    TokenBucket(rate_mbps, burst_bytes).send(stream, data)
