"""Start the three tier daemons for one strategy and drive experiments through them."""

from __future__ import annotations

import subprocess
import sys
import tempfile
import time
from pathlib import Path

from ..errors import HarnessError, RunTimeout
from ..graph.io import write_graph
from ..graph.subjects import get_profile
from ..sim.env import EnvironmentSpec, dumps_env
from ..sim.model import DeploymentStrategy, models_for
from ..sim.samples import generate_samples
from .client import ping, run_client, shutdown
from .daemon import TierDaemonConfig

# which model part each tier holds, per deployment tier
PLACEMENT = {
    "M": {"M": "full"},
    "E": {"E": "full"},
    "C": {"C": "full"},
    "ME": {"M": "head", "E": "tail"},
    "EC": {"E": "head", "C": "tail"},
    "MC": {"M": "head", "C": "tail"},
}


class HarnessCluster:
    """Context manager owning one daemon process per tier."""

    def __init__(self, strategy: DeploymentStrategy, subject: str, env: EnvironmentSpec,
                 models: dict, scale: float = 100.0, workdir: str | Path | None = None,
                 burst_bytes: int = 0):
        self.strategy = strategy
        self.subject = subject.upper()
        self.env = env
        self.models = models
        self.scale = scale
        self.burst_bytes = burst_bytes
        self._tmp = None if workdir else tempfile.TemporaryDirectory(prefix="edgeops-harness-")
        self.workdir = Path(workdir or self._tmp.name)
        self.procs: dict[str, subprocess.Popen] = {}
        self.addrs: dict[str, str] = {}

    def _config(self, role: str, upstream: str | None) -> TierDaemonConfig:
        part = PLACEMENT[self.strategy.tier].get(role)
        model_path = None
        if part is not None:
            model_path = str(write_graph(self.models[part], self.workdir / f"{role}.{part}.cg.json"))
        rates, overhead = {}, {}
        up = {"M": "E", "E": "C"}.get(role)
        down = {"E": "M", "C": "E"}.get(role)
        for direction, peer in (("upstream", up), ("downstream", down)):
            if peer is not None:
                link = self.env.link(role, peer)
                rates[direction] = link.bandwidth_mbps
                overhead[direction] = link.per_message_overhead_s
        return TierDaemonConfig(role=role, upstream_addr=upstream, model_path=model_path, part=part,
                                strategy=str(self.strategy), subject=self.subject,
                                env_path=str(self.workdir / "env.json"), scale=self.scale,
                                egress_rate_mbps=rates, overhead_s=overhead,
                                burst_bytes=self.burst_bytes)

    def _spawn(self, role: str, cfg: TierDaemonConfig) -> str:
        path = self.workdir / f"{role}.daemon.json"
        path.write_text(cfg.to_json())
        proc = subprocess.Popen([sys.executable, "-m", "edgeops.cli", "harness", "serve",
                                 "--config", str(path)],
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        self.procs[role] = proc
        line = proc.stdout.readline().strip()
        if not line.startswith("LISTENING "):
            err = proc.stderr.read() if proc.poll() is not None else ""
            raise HarnessError(f"{role} daemon failed to start: {line!r} {err}")
        return line.split(" ", 1)[1]

    def start(self) -> "HarnessCluster":
        (self.workdir / "env.json").write_text(dumps_env(self.env))
        try:
            upstream = None
            for role in ("C", "E", "M"):
                self.addrs[role] = self._spawn(role, self._config(role, upstream))
                upstream = self.addrs[role]
        except Exception:
            self.stop()
            raise
        return self

    def stats(self) -> dict:
        return {role: ping(addr) for role, addr in self.addrs.items()}

    def stop(self) -> dict:
        """Shut every daemon down; returns exit codes by role."""
        codes = {}
        for role in ("M", "E", "C"):
            proc = self.procs.get(role)
            if proc is None:
                continue
            if proc.poll() is None and role in self.addrs:
                try:
                    shutdown(self.addrs[role])
                except OSError:
                    pass
            try:
                codes[role] = proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
                codes[role] = proc.wait()
            proc.stdout.close()
            proc.stderr.close()
        self.procs.clear()
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None
        return codes

    def __enter__(self) -> "HarnessCluster":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def run_harness_experiment(cfg, env: EnvironmentSpec, variants: dict):
    """Warm-up and measured passes through a fresh cluster (restarted per cell).

    A timeout stops the cell; records gathered so far stay in the log.
    """
    from ..experiment import RunLog

    profile = get_profile(cfg.subject)
    samples = generate_samples(profile, cfg.n_samples, cfg.seed)
    models = models_for(cfg.strategy, variants)
    log = RunLog(cfg, [])
    with HarnessCluster(cfg.strategy, cfg.subject, env, models, cfg.scale) as cluster:
        kw = dict(strategy=cfg.strategy, env=env, profile=profile, models=models,
                  addr=cluster.addrs["M"], scale=cfg.scale, timeout_factor=cfg.timeout_factor,
                  clock_origin=time.perf_counter())
        passes = [([samples[i % len(samples)] for i in range(cfg.warmup_runs)], -1, True)]
        passes += [(samples, rep, False) for rep in range(cfg.n_reps)]
        try:
            for batch, rep, warm in passes:
                run_client(samples=batch, first_run_index=len(log.records), rep_index=rep,
                           warmup=warm, out=log.records, **kw)
        except RunTimeout as e:
            log.error = str(e)
        stats = cluster.stats()
        if any(s["max_in_flight"] > 1 for s in stats.values()):
            raise HarnessError(f"sequentiality violated: {stats}")
    return log
