from .calibrate import calibrate, derive_tier_scale, simulated_medians
from .env import EnvironmentSpec, LinkSpec, TierSpec, dumps_env, load_env
from .model import (DeploymentStrategy, InputSample, LatencyBreakdown, Operator, Stage,
                    compute_time, models_for, route, run_rng, simulate_run, transmission_time)
from .samples import generate_samples
from .variants import build_variants

__all__ = [
    "calibrate", "derive_tier_scale", "simulated_medians", "EnvironmentSpec", "LinkSpec",
    "TierSpec", "dumps_env", "load_env", "DeploymentStrategy", "InputSample",
    "LatencyBreakdown", "Operator", "Stage", "compute_time", "models_for", "route", "run_rng",
    "simulate_run", "transmission_time", "generate_samples", "build_variants",
]
