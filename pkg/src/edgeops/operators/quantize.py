"""Static post-training quantization to per-tensor uint8."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import AlreadyQuantized, EmptyCalibration
from ..graph.model import ComputeGraph, Node, QuantParams, model_size, validate
from ..graph.subjects import gpu_incompatible_set


@dataclass(frozen=True)
class QuantReport:
    params: dict = field(default_factory=dict)       # name -> QuantParams
    size_only: tuple[str, ...] = ()                  # initializers without a stored payload
    activation_ranges: dict = field(default_factory=dict)
    size_before: int = 0
    size_after: int = 0
    param_bytes_before: int = 0
    param_bytes_after: int = 0

    @property
    def param_ratio(self) -> float:
        return self.param_bytes_before / self.param_bytes_after if self.param_bytes_after else 1.0

    def to_dict(self) -> dict:
        return {
            "params": {k: [v.scale, v.zero_point, v.offset] for k, v in sorted(self.params.items())},
            "size_only": list(self.size_only),
            "activation_ranges": self.activation_ranges,
            "size_before": self.size_before,
            "size_after": self.size_after,
            "param_bytes_before": self.param_bytes_before,
            "param_bytes_after": self.param_bytes_after,
            "param_ratio": self.param_ratio,
        }


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def quant_params(w: np.ndarray) -> QuantParams:
    """Per-tensor affine parameters.

    When the range does not straddle zero the values are shifted by a
    stored offset (the range minimum) so the full 8-bit code range is used.
    """
    lo, hi = float(np.min(w)), float(np.max(w))
    offset = 0.0 if lo <= 0.0 <= hi else lo
    lo, hi = lo - offset, hi - offset
    if hi == lo:
        return QuantParams(1.0, 0, offset)
    s = (hi - lo) / 255.0
    z = int(np.clip(round_half_up(np.array(-lo / s)), 0, 255))
    return QuantParams(s, z, offset)


def quantize_array(w: np.ndarray, qp: QuantParams) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64) - qp.offset
    return np.clip(round_half_up(w / qp.scale) + qp.zero_point, 0, 255).astype(np.uint8)


def dequantize_array(q: np.ndarray, qp: QuantParams) -> np.ndarray:
    return (q.astype(np.float64) - qp.zero_point) * qp.scale + qp.offset


def quantize_static(g: ComputeGraph, calib: Sequence[Sequence[float]]) -> tuple[ComputeGraph, QuantReport]:
    if calib is None or len(calib) == 0:
        raise EmptyCalibration("calibration set is empty")
    if any(t.dtype == "U8" for t in g.initializers) or "QUANTIZED" in g.metadata.get("operators", []):
        raise AlreadyQuantized(g.name)

    flat = np.concatenate([np.asarray(c, dtype=np.float64).ravel() for c in calib])
    if flat.size == 0:
        raise EmptyCalibration("calibration samples are empty")
    # without executing the network only the graph inputs have observable ranges
    ranges = {t.name: [float(flat.min()), float(flat.max())] for t in g.inputs}

    params: dict[str, QuantParams] = {}
    size_only = []
    new_inits = []
    for t in g.initializers:
        n = int(np.prod(t.dims))
        if t.payload is not None:
            w = np.frombuffer(t.payload, dtype="<f4").astype(np.float64)
            qp = quant_params(w)
            q = quantize_array(w, qp)
            params[t.name] = qp
            new_inits.append(replace(t, dtype="U8", payload_bytes=n + 8, payload=q.tobytes(), quant=qp))
        else:
            size_only.append(t.name)
            new_inits.append(replace(t, dtype="U8", payload_bytes=n + 8, payload=None, quant=None))
    init_bytes = {t.name: t.payload_bytes for t in new_inits}

    frac = g.metadata.get("gpu_fraction", {}).get("QUANTIZED")
    off_gpu = gpu_incompatible_set([n.id for n in g.nodes], frac) if frac is not None else set()
    nodes = []
    for n in g.nodes:
        pb = sum(init_bytes[x] for x in dict.fromkeys(n.inputs) if x in init_bytes)
        nodes.append(Node(n.id, n.op_type, n.inputs, n.outputs, pb, n.cost_units,
                          n.gpu_compatible and n.id not in off_gpu))

    meta = dict(g.metadata)
    meta["operators"] = list(meta.get("operators", [])) + ["QUANTIZED"]
    meta["quant_cost_factor"] = dict(meta.get("quant_cost_factor_profile", {}))
    meta["activation_ranges"] = ranges
    out = replace(g, nodes=tuple(nodes), initializers=tuple(new_inits), metadata=meta)
    validate(out)
    report = QuantReport(
        params=params,
        size_only=tuple(size_only),
        activation_ranges=ranges,
        size_before=model_size(g),
        size_after=model_size(out),
        param_bytes_before=sum(t.payload_bytes for t in g.initializers),
        param_bytes_after=sum(t.payload_bytes for t in new_inits),
    )
    return out, report


def make_calibration(n: int = 8, size: int = 64, seed: int = 0) -> list[np.ndarray]:
    """Seeded stand-in calibration batch (normalized pixel-like values)."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(0.0, 1.0, size) for _ in range(n)]

