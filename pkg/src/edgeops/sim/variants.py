"""Operator variants of a subject model, built once per (profile, seed)."""

from __future__ import annotations

from functools import lru_cache

from ..graph.subjects import gen_subject, get_profile
from ..operators import (apply_partition, compose_qe, early_exit, make_calibration,
                         partition_auto, quantize_static)
from ..operators.hybrid import compose_qep
from .model import Operator


@lru_cache(maxsize=16)
def build_variants(subject: str, graph_seed: int = 0) -> dict:
    profile = get_profile(subject)
    g = gen_subject(profile, graph_seed)
    calib = make_calibration(seed=graph_seed)
    q, _ = quantize_static(g, calib)
    e, _ = early_exit(g)
    qe, _ = compose_qe(g, calib)
    head, tail = apply_partition(g, partition_auto(g))
    qh, qt, _ = compose_qep(g, calib)
    return {
        Operator.IDENTITY: g,
        Operator.QUANTIZED: q,
        Operator.EARLY_EXIT: e,
        Operator.QE: qe,
        Operator.PARTITION: (head, tail),
        Operator.QEP: (qh, qt),
    }
