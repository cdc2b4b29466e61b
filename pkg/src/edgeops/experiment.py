"""Measurement protocol: warm-up, repeated runs, CSV logs and medians."""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import EdgeOpsError
from .graph.subjects import get_profile
from .sim.env import EnvironmentSpec, load_env
from .sim.model import DeploymentStrategy, LatencyBreakdown, models_for, run_rng, simulate_run
from .sim.samples import generate_samples
from .sim.variants import build_variants

LOG_COLUMNS = ("run_index", "rep_index", "sample_id", "warmup", "pre_s", "compute_m_s",
               "compute_e_s", "compute_c_s", "tx_total_s", "post_s", "total_s", "timestamp")


class Backend(str, Enum):
    SIM = "SIM"
    HARNESS = "HARNESS"


@dataclass(frozen=True)
class ExperimentConfig:
    subject: str
    strategy: DeploymentStrategy
    seed: int = 1
    n_samples: int = 100
    n_reps: int = 5
    warmup_runs: int = 100
    backend: Backend = Backend.SIM
    env_path: str | None = None
    graph_seed: int = 0
    scale: float = 100.0            # harness only: payload and compute divisor
    timeout_factor: float = 10.0    # harness only: per-run timeout in predicted totals

    def __post_init__(self):
        if isinstance(self.strategy, str):
            object.__setattr__(self, "strategy", DeploymentStrategy.parse(self.strategy))
        object.__setattr__(self, "backend", Backend(self.backend.upper()))
        object.__setattr__(self, "subject", self.subject.upper())
        if self.n_samples < 1 or self.n_reps < 1 or self.warmup_runs < 0:
            raise ValueError("n_samples and n_reps must be positive, warmup_runs nonnegative")

    @property
    def n_measured(self) -> int:
        return self.n_samples * self.n_reps

    @property
    def cell_name(self) -> str:
        return f"{self.subject}.{self.strategy.operator.value}.{self.strategy.tier}"

    def to_dict(self) -> dict:
        return {"subject": self.subject, "strategy": str(self.strategy), "seed": self.seed,
                "n_samples": self.n_samples, "n_reps": self.n_reps,
                "warmup_runs": self.warmup_runs, "backend": self.backend.value,
                "env_path": self.env_path, "graph_seed": self.graph_seed, "scale": self.scale,
                "timeout_factor": self.timeout_factor}


def configs_from_doc(doc: dict, seed: int | None = None) -> list[ExperimentConfig]:
    """Expand an experiment document into cells.

    Either a single ``subject``/``strategy`` pair or ``subjects`` x
    ``strategies`` lists; all other keys are shared settings.
    """
    doc = dict(doc)
    subjects = doc.pop("subjects", None) or [doc.pop("subject")]
    strategies = doc.pop("strategies", None) or [doc.pop("strategy")]
    doc.pop("subject", None)
    doc.pop("strategy", None)
    if seed is not None:
        doc["seed"] = seed
    return [ExperimentConfig(subject=s, strategy=st, **doc)
            for s, st in itertools.product(subjects, strategies)]


@dataclass(frozen=True)
class LatencyRecord:
    run_index: int
    rep_index: int
    sample_id: int
    breakdown: LatencyBreakdown
    timestamp: float
    warmup: bool = False

    def row(self) -> list:
        b = self.breakdown
        c = b.compute_s
        return [self.run_index, self.rep_index, self.sample_id, int(self.warmup), b.preprocess_s,
                c.get("M", 0.0), c.get("E", 0.0), c.get("C", 0.0), b.tx_total_s,
                b.postprocess_s, b.total_s, self.timestamp]


@dataclass
class RunLog:
    config: ExperimentConfig | None
    records: list = field(default_factory=list)
    error: str | None = None

    @property
    def measured(self) -> list[LatencyRecord]:
        return [r for r in self.records if not r.warmup]

    @property
    def totals(self) -> list[float]:
        return [r.breakdown.total_s for r in self.measured]

    def rep_medians(self) -> list[float]:
        reps: dict[int, list[float]] = {}
        for r in self.measured:
            reps.setdefault(r.rep_index, []).append(r.breakdown.total_s)
        return [float(np.median(reps[k])) for k in sorted(reps)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.row()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, config: ExperimentConfig | None = None) -> "RunLog":
        rows = csv.DictReader(io.StringIO(text))
        if tuple(rows.fieldnames or ()) != LOG_COLUMNS:
            raise EdgeOpsError(f"unexpected log columns {rows.fieldnames}")
        recs = []
        for row in rows:
            comp = {t: float(row[f"compute_{t.lower()}_s"]) for t in "MEC"
                    if float(row[f"compute_{t.lower()}_s"])}
            b = LatencyBreakdown(float(row["pre_s"]), float(row["post_s"]), comp,
                                 {"total": float(row["tx_total_s"])}, float(row["total_s"]))
            recs.append(LatencyRecord(int(row["run_index"]), int(row["rep_index"]),
                                      int(row["sample_id"]), b, float(row["timestamp"]),
                                      bool(int(row["warmup"]))))
        return cls(config, recs)


def log_filename(cfg: ExperimentConfig) -> str:
    return f"{cfg.cell_name}.csv"


def parse_log_filename(path: str | Path) -> tuple[str, str, str]:
    """``RESNET.IDENTITY.E.csv`` -> ("RESNET", "IDENTITY", "E")."""
    parts = Path(path).name.split(".")
    if len(parts) != 4 or parts[-1] != "csv":
        raise EdgeOpsError(f"log name {Path(path).name!r} is not SUBJECT.OPERATOR.TIER.csv")
    return parts[0], parts[1], parts[2]


def write_log(log: RunLog, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / log_filename(log.config)
    path.write_text(log.to_csv())
    return path


def read_log(path: str | Path) -> RunLog:
    return RunLog.from_csv(Path(path).read_text())


def _sim_runs(cfg: ExperimentConfig, env: EnvironmentSpec, variants: dict) -> list[LatencyRecord]:
    profile = get_profile(cfg.subject)
    samples = generate_samples(profile, cfg.n_samples, cfg.seed)
    models = models_for(cfg.strategy, variants)
    plan = [(s, -1, True) for s in itertools.islice(itertools.cycle(samples), cfg.warmup_runs)]
    plan += [(s, rep, False) for rep in range(cfg.n_reps) for s in samples]
    clock = 0.0
    out = []
    for run_index, (s, rep, warm) in enumerate(plan):
        b = simulate_run(cfg.strategy, models, env, s, profile, run_rng(cfg.seed, run_index))
        clock += b.total_s
        out.append(LatencyRecord(run_index, rep, s.id, b, clock, warm))
    return out


def run_experiment(cfg: ExperimentConfig, env: EnvironmentSpec | None = None,
                   variants: dict | None = None) -> RunLog:
    """Warm-up over the measurement samples, then ``n_reps`` passes over them.

    Warm-up records carry ``rep_index`` -1 and are excluded from all summaries.
    SIM timestamps are a virtual clock: the running sum of simulated totals.
    """
    env = env or load_env(cfg.env_path)
    variants = variants or build_variants(cfg.subject, cfg.graph_seed)
    if cfg.backend == Backend.SIM:
        return RunLog(cfg, _sim_runs(cfg, env, variants))
    from .harness.launcher import run_harness_experiment
    return run_harness_experiment(cfg, env, variants)


def _run_cell(args) -> tuple[ExperimentConfig, RunLog]:
    cfg, out_dir = args
    log = run_experiment(cfg)
    if out_dir is not None:
        write_log(log, out_dir)
    return cfg, log


def run_cells(cfgs: list[ExperimentConfig], out_dir: str | Path | None = None,
              jobs: int = 1) -> list[RunLog]:
    """Run cells, optionally in a process pool; results keep the input order."""
    work = [(c, str(out_dir) if out_dir is not None else None) for c in cfgs]
    harness = any(c.backend == Backend.HARNESS for c in cfgs)
    if jobs <= 1 or len(cfgs) <= 1 or harness:
        return [_run_cell(w)[1] for w in work]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as ex:
        return [log for _, log in ex.map(_run_cell, work)]


def _totals(log) -> list[float]:
    if isinstance(log, RunLog):
        return log.totals
    return [float(x) for x in log]


def median_latency(log) -> float:
    """Pooled median over measured runs (a RunLog or a plain sequence of totals)."""
    t = _totals(log)
    if not t:
        raise EdgeOpsError("no measured runs")
    return float(np.median(t))


def speedup(log_a, log_b) -> float:
    """median(b) / median(a); above 1 means ``a`` is faster."""
    ma, mb = median_latency(log_a), median_latency(log_b)
    if ma == 0 or mb == 0:
        raise EdgeOpsError("zero median latency")
    return mb / ma


def summary(log: RunLog) -> dict:
    return {"cell": log.config.cell_name if log.config else None,
            "median_s": median_latency(log), "rep_medians_s": log.rep_medians(),
            "n_measured": len(log.measured), "n_warmup": len(log.records) - len(log.measured)}


def load_experiment_doc(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())

