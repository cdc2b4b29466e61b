"""Routing and the additive latency model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import InvalidStrategy, MissingModel
from ..graph.model import ComputeGraph
from ..graph.subjects import SubjectProfile
from .env import EnvironmentSpec, LinkSpec, TierSpec


class Operator(str, Enum):
    IDENTITY = "IDENTITY"
    QUANTIZED = "QUANTIZED"
    EARLY_EXIT = "EARLY_EXIT"
    QE = "QE"
    PARTITION = "PARTITION"
    QEP = "QEP"


SINGLE_TIERS = ("M", "E", "C")
MULTI_TIERS = ("ME", "EC", "MC")
PARTITIONED = (Operator.PARTITION, Operator.QEP)


@dataclass(frozen=True)
class DeploymentStrategy:
    operator: Operator
    tier: str

    def __post_init__(self):
        op = Operator(self.operator)
        object.__setattr__(self, "operator", op)
        if self.tier not in SINGLE_TIERS + MULTI_TIERS:
            raise InvalidStrategy(f"unknown tier {self.tier!r}")
        multi = self.tier in MULTI_TIERS
        if multi != (op in PARTITIONED):
            raise InvalidStrategy(f"operator {op.value} cannot run on tier {self.tier}")

    @classmethod
    def parse(cls, text: str) -> "DeploymentStrategy":
        """``IDENTITY@E`` style."""
        try:
            op, tier = text.split("@")
        except ValueError:
            raise InvalidStrategy(f"strategy must look like OPERATOR@TIER, got {text!r}") from None
        try:
            return cls(Operator(op.upper()), tier.upper())
        except ValueError:
            raise InvalidStrategy(f"unknown operator {op!r}") from None

    def __str__(self) -> str:
        return f"{self.operator.value}@{self.tier}"


@dataclass(frozen=True)
class Stage:
    kind: str                 # "compute" or "tx"
    tier: str = ""            # compute tier
    part: str = ""            # "full", "head" or "tail"
    src: str = ""
    dst: str = ""
    payload: str = ""         # "input", "intermediate" or "output"

    @property
    def label(self) -> str:
        if self.kind == "compute":
            return f"{self.tier}:{self.part}"
        return f"{self.src}>{self.dst}:{self.payload}"


def _tx(src, dst, payload):
    return Stage("tx", src=src, dst=dst, payload=payload)


def _cp(tier, part):
    return Stage("compute", tier=tier, part=part)


def route(strategy: DeploymentStrategy) -> list[Stage]:
    t = strategy.tier
    if t == "M":
        return [_cp("M", "full")]
    if t == "E":
        return [_tx("M", "E", "input"), _cp("E", "full"), _tx("E", "M", "output")]
    if t == "C":
        return [_tx("M", "E", "input"), _tx("E", "C", "input"), _cp("C", "full"),
                _tx("C", "E", "output"), _tx("E", "M", "output")]
    if t == "ME":
        return [_cp("M", "head"), _tx("M", "E", "intermediate"), _cp("E", "tail"),
                _tx("E", "M", "output")]
    if t == "MC":
        return [_cp("M", "head"), _tx("M", "E", "intermediate"), _tx("E", "C", "intermediate"),
                _cp("C", "tail"), _tx("C", "E", "output"), _tx("E", "M", "output")]
    if t == "EC":
        return [_tx("M", "E", "input"), _cp("E", "head"), _tx("E", "C", "intermediate"),
                _cp("C", "tail"), _tx("C", "E", "output"), _tx("E", "M", "output")]
    raise InvalidStrategy(f"unknown tier {t!r}")


@dataclass(frozen=True)
class InputSample:
    id: int
    payload_mbits: float
    dims: tuple[int, int]


@dataclass(frozen=True)
class LatencyBreakdown:
    preprocess_s: float
    postprocess_s: float
    compute_s: dict
    transmission_s: dict
    total_s: float

    @property
    def tx_total_s(self) -> float:
        return math.fsum(self.transmission_s.values())

    def compute_on(self, tier: str) -> float:
        return math.fsum(v for k, v in self.compute_s.items() if k == tier)


def transmission_time(mbits: float, link: LinkSpec, base64_factor: float = 4.0 / 3.0) -> float:
    if mbits < 0:
        raise ValueError("payload size must be nonnegative")
    return mbits * base64_factor / link.bandwidth_mbps + link.per_message_overhead_s


def _tier_code(tier: TierSpec) -> str:
    return {"MOBILE": "M", "EDGE": "E", "CLOUD": "C"}.get(tier.name, tier.name)


def compute_work(g: ComputeGraph, tier: TierSpec) -> tuple[float, float]:
    """(cpu cost units, gpu cost units) including the quantization factor."""
    factor = float(g.metadata.get("quant_cost_factor", {}).get(_tier_code(tier), 1.0))
    gpu = tier.gpu_rate is not None
    cpu_w = math.fsum(n.cost_units for n in g.nodes if not (gpu and n.gpu_compatible))
    gpu_w = math.fsum(n.cost_units for n in g.nodes if gpu and n.gpu_compatible)
    return cpu_w * factor, gpu_w * factor


def compute_time(g: ComputeGraph, tier: TierSpec, scale: float = 1.0) -> float:
    """Seconds on ``tier``. ``scale`` multiplies the work on the tier's main
    processor: the GPU when the tier has one, else the CPU."""
    cpu_w, gpu_w = compute_work(g, tier)
    if tier.gpu_rate is None:
        return cpu_w * scale / tier.cpu_rate
    t = cpu_w / tier.cpu_rate
    if gpu_w:
        t += gpu_w * scale / tier.gpu_rate
    return t


def intermediate_mbits(profile: SubjectProfile, sample: InputSample) -> float:
    inter = profile.intermediate_size_mbits
    if not isinstance(inter, tuple):
        return float(inter)
    lo, hi = inter
    (w0, w1), (h0, h1) = profile.input_dims_range
    px_lo, px_hi = w0 * h0, w1 * h1
    px = sample.dims[0] * sample.dims[1]
    frac = (px - px_lo) / (px_hi - px_lo) if px_hi > px_lo else 0.0
    return lo + min(max(frac, 0.0), 1.0) * (hi - lo)


def stage_payload(stage: Stage, profile: SubjectProfile, sample: InputSample) -> float:
    if stage.payload == "input":
        return sample.payload_mbits
    if stage.payload == "intermediate":
        return intermediate_mbits(profile, sample)
    return profile.output_size_mbits


def stage_compute(stage: Stage, models: dict, env: EnvironmentSpec, profile: SubjectProfile) -> float:
    g = models.get(stage.part)
    if g is None:
        raise MissingModel(f"strategy needs the {stage.part!r} model")
    scale = float(profile.tier_cost_scale.get(stage.tier, 1.0))
    return compute_time(g, env.tier(stage.tier), scale)


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), int(run_index)])


def simulate_run(strategy: DeploymentStrategy, models: dict, env: EnvironmentSpec,
                 sample: InputSample, profile: SubjectProfile,
                 rng: np.random.Generator | None = None) -> LatencyBreakdown:
    """One inference run. ``models`` maps "full" or "head"/"tail" to graphs.

    When the environment has a nonzero ``jitter_cv`` and an rng is supplied,
    each compute stage is scaled by a mean-one lognormal factor.
    """
    compute: dict[str, float] = {}
    tx: dict[str, float] = {}
    cv = env.jitter_cv
    for st in route(strategy):
        if st.kind == "compute":
            t = stage_compute(st, models, env, profile)
            if rng is not None and cv > 0:
                t *= math.exp(cv * rng.standard_normal() - cv * cv / 2)
            compute[st.tier] = compute.get(st.tier, 0.0) + t
        else:
            link = env.link(st.src, st.dst)
            tx[st.label] = transmission_time(stage_payload(st, profile, sample), link, env.base64_factor)
    pre, post = profile.pre_s, profile.post_s
    total = math.fsum([pre, post, *compute.values(), *tx.values()])
    return LatencyBreakdown(pre, post, compute, tx, total)


def models_for(strategy: DeploymentStrategy, variants: dict) -> dict:
    """Pick the model set a strategy needs from a dict of operator variants."""
    v = variants[strategy.operator]
    if strategy.operator in PARTITIONED:
        head, tail = v
        return {"head": head, "tail": tail}
    return {"full": v}
