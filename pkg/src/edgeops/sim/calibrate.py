"""Solve tier rates (or per-profile cost scales) for target medians."""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleTarget
from ..graph.model import ComputeGraph
from ..graph.subjects import SubjectProfile
from .env import EnvironmentSpec
from .model import (DeploymentStrategy, InputSample, Operator, compute_work, simulate_run)
from .samples import generate_samples

CALIBRATION_SAMPLES = 100
CALIBRATION_SEED = 1


def fixed_floor(tier: str, env: EnvironmentSpec, profile: SubjectProfile, g: ComputeGraph,
                samples: list[InputSample]) -> float:
    """Median of everything except compute for the identity model on ``tier``."""
    strat = DeploymentStrategy(Operator.IDENTITY, tier)
    vals = []
    for s in samples:
        b = simulate_run(strat, {"full": g}, env, s, profile)
        vals.append(b.total_s - sum(b.compute_s.values()))
    return float(np.median(vals))


def simulated_medians(env: EnvironmentSpec, profile: SubjectProfile, g: ComputeGraph,
                      samples: list[InputSample] | None = None) -> dict:
    samples = samples or generate_samples(profile, CALIBRATION_SAMPLES, CALIBRATION_SEED)
    out = {}
    for tier in ("M", "E", "C"):
        strat = DeploymentStrategy(Operator.IDENTITY, tier)
        out[tier] = float(np.median([simulate_run(strat, {"full": g}, env, s, profile).total_s
                                     for s in samples]))
    return out


def _needed(env, profile, g, targets, samples):
    need = {}
    for tier in ("M", "E", "C"):
        floor = fixed_floor(tier, env, profile, g, samples)
        target = float(targets[tier])
        if target <= floor:
            raise InfeasibleTarget(tier, target, floor)
        need[tier] = target - floor
    return need


def calibrate(env: EnvironmentSpec, profile: SubjectProfile, targets: dict, g: ComputeGraph,
              samples: list[InputSample] | None = None) -> EnvironmentSpec:
    """Rates so the identity model's simulated medians hit ``targets``.

    Cloud CPU is tied to the edge CPU rate by ``env.cloud_cpu_ratio``; the
    cloud GPU rate absorbs the rest. Compute carries no per-sample variation
    so the median shifts exactly with compute time.
    """
    samples = samples or generate_samples(profile, CALIBRATION_SAMPLES, CALIBRATION_SEED)
    need = _needed(env, profile, g, targets, samples)
    scale = {t: float(profile.tier_cost_scale.get(t, 1.0)) for t in ("M", "E", "C")}
    w_m = sum(compute_work(g, env.tier("M"))) * scale["M"]
    w_e = sum(compute_work(g, env.tier("E"))) * scale["E"]
    rate_m = w_m / need["M"]
    rate_e = w_e / need["E"]
    cpu_c = rate_e * env.cloud_cpu_ratio
    cpu_w, gpu_w = compute_work(g, env.tier("C"))
    gpu_w *= scale["C"]
    gpu_time = need["C"] - cpu_w / cpu_c
    if gpu_w <= 0 or gpu_time <= 0:
        floor = targets["C"] - gpu_time
        raise InfeasibleTarget("C", float(targets["C"]), float(floor))
    gpu_c = gpu_w / gpu_time
    return env.with_rates(M=(rate_m,), E=(rate_e,), C=(cpu_c, gpu_c))


def derive_tier_scale(env: EnvironmentSpec, profile: SubjectProfile, targets: dict,
                      g: ComputeGraph, samples: list[InputSample] | None = None) -> dict:
    """Per-tier multipliers on a profile's main-processor work under fixed rates."""
    samples = samples or generate_samples(profile, CALIBRATION_SAMPLES, CALIBRATION_SEED)
    need = _needed(env, profile, g, targets, samples)
    out = {}
    for tier in ("M", "E", "C"):
        t = env.tier(tier)
        cpu_w, gpu_w = compute_work(g, t)
        if t.gpu_rate is None:
            out[tier] = need[tier] * t.cpu_rate / cpu_w
            continue
        gpu_time = need[tier] - cpu_w / t.cpu_rate
        if gpu_w <= 0 or gpu_time <= 0:
            raise InfeasibleTarget(tier, float(targets[tier]), float(targets[tier] - gpu_time))
        out[tier] = gpu_time * t.gpu_rate / gpu_w
    return out


def shipped_calibration(env: EnvironmentSpec, profiles: dict, anchor: str = "DUC") -> tuple:
    """Rates from the anchor profile's targets, then per-profile scales for the rest.

    Returns (env, {profile name: tier scale}); the anchor keeps unit scales.
    """
    from ..graph.subjects import gen_subject

    base = profiles[anchor]
    env = calibrate(env, base, base.latency_targets, gen_subject(base, 0))
    scales = {}
    for name, p in profiles.items():
        if name == anchor:
            scales[name] = {t: 1.0 for t in ("M", "E", "C")}
        else:
            scales[name] = derive_tier_scale(env, p, p.latency_targets, gen_subject(p, 0))
    return env, scales
