"""Seeded input sample generation."""

from __future__ import annotations

import numpy as np

from ..graph.subjects import SubjectProfile
from .model import InputSample


def generate_samples(profile: SubjectProfile, n: int, seed: int) -> list[InputSample]:
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    lo, hi = profile.input_size_range_mbits
    sizes = rng.uniform(lo, hi, n)
    if profile.dynamic:
        (w0, w1), (h0, h1) = profile.input_dims_range
        ws = rng.integers(w0, w1, n, endpoint=True)
        hs = rng.integers(h0, h1, n, endpoint=True)
        dims = [(int(w), int(h)) for w, h in zip(ws, hs)]
    else:
        dims = [tuple(profile.input_dims)] * n
    return [InputSample(i, float(s), d) for i, (s, d) in enumerate(zip(sizes, dims))]
