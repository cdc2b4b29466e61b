"""Synthetic stand-ins for the four subject models.

Each profile carries a ``layout`` describing the block chain. Blocks with a
fixed ``mib`` keep that size exactly; the remaining parameter budget is
spread over the other weighted blocks by a geometric ramp that grows
toward the output, with a small seeded jitter.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .model import DYNAMIC, HEADER_BYTES, ComputeGraph, Node, TensorSpec, validate

MIB = 2**20
UNIT_OPS = ("Conv", "Relu", "Conv", "Relu", "Conv", "Add")
UNIT_SPLIT = (0.25, 0.45, 0.30)
RAMP_JITTER = 0.1


@dataclass(frozen=True)
class SubjectProfile:
    name: str
    family: str
    model_size_mb: float
    param_count: int
    node_count: int
    input_dims: tuple | str
    input_size_range_mbits: tuple[float, float]
    intermediate_size_mbits: float | tuple[float, float]
    output_size_mbits: float
    gpu_fraction: dict
    accuracy_table: dict = field(default_factory=dict)
    input_dims_range: tuple | None = None
    layout: dict = field(default_factory=dict)
    pre_s: float = 0.05
    post_s: float = 0.02
    cost_skew: float = 0.0
    quant_cost_factor: dict = field(default_factory=dict)
    tier_cost_scale: dict = field(default_factory=dict)
    latency_targets: dict = field(default_factory=dict)

    @property
    def dynamic(self) -> bool:
        return self.input_dims == DYNAMIC

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectProfile":
        d = dict(d)
        dims = d["input_dims"]
        d["input_dims"] = dims if dims == DYNAMIC else tuple(dims)
        d["input_size_range_mbits"] = tuple(d["input_size_range_mbits"])
        inter = d["intermediate_size_mbits"]
        d["intermediate_size_mbits"] = tuple(inter) if isinstance(inter, list) else float(inter)
        if d.get("input_dims_range") is not None:
            d["input_dims_range"] = tuple(tuple(r) for r in d["input_dims_range"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            out[k] = list(v) if isinstance(v, tuple) else v
        if self.input_dims_range is not None:
            out["input_dims_range"] = [list(r) for r in self.input_dims_range]
        return out


def _data_text(name: str) -> str:
    return resources.files("edgeops.data").joinpath(name).read_text()


@lru_cache(maxsize=None)
def load_profiles() -> dict[str, SubjectProfile]:
    doc = json.loads(_data_text("profiles.json"))
    acc = json.loads(_data_text("accuracy_fixture.json"))
    out = {}
    for d in doc["profiles"]:
        d = dict(d)
        d.setdefault("accuracy_table", acc["subjects"].get(d["name"], {}))
        out[d["name"]] = SubjectProfile.from_dict(d)
    return out


def get_profile(name: str) -> SubjectProfile:
    profiles = load_profiles()
    key = name.upper()
    if key not in profiles:
        raise KeyError(f"unknown subject profile {name!r}; known: {sorted(profiles)}")
    return profiles[key]


class _Builder:
    def __init__(self, dynamic: bool):
        self.nodes: list[Node] = []
        self.inits: list[TensorSpec] = []
        self.values: list[TensorSpec] = []
        self.dynamic = dynamic

    def node(self, op: str, inputs: list[str], dims, param_bytes: int = 0) -> str:
        idx = len(self.nodes)
        out = f"t{idx:04d}"
        ins = list(inputs)
        if param_bytes > 0:
            w = f"w{idx:04d}"
            n_el = param_bytes // 4
            self.inits.append(TensorSpec(w, "F32", (n_el,), 4 * n_el))
            ins.append(w)
            param_bytes = 4 * n_el
        self.nodes.append(Node(f"n{idx:04d}", op, tuple(ins), (out,), param_bytes, 0.0, True))
        self.values.append(TensorSpec(out, "F32", tuple(dims)))
        return out


def _block_plan(layout: dict) -> list[dict]:
    """Flatten the layout into one entry per block of the main chain."""
    plan = []
    for seg in layout["chain"]:
        kind = seg["kind"]
        if kind == "units":
            for _ in range(seg["count"]):
                plan.append({"kind": "unit", "dims": seg["dims"], "mib": seg.get("mib")})
        elif kind == "node":
            plan.append({"kind": "node", "op": seg["op"], "dims": seg["dims"],
                         "weighted": seg.get("weighted", True), "mib": seg.get("mib")})
        elif kind == "branchy":
            mib = sum(x[2] for x in seg["a"]) + sum(x[2] for x in seg["b"])
            plan.append({"kind": "branchy", "seg": seg, "mib": mib, "dims": seg["dims"]})
        else:
            raise ValueError(f"unknown layout segment kind {kind!r}")
    return plan


def _ramp_sizes(plan: list[dict], free_bytes: int, ratio: float, seed: int) -> list[int]:
    free = [i for i, b in enumerate(plan)
            if b["mib"] is None and (b["kind"] != "node" or b["weighted"])]
    rng = np.random.default_rng(seed)
    jitter = np.exp(RAMP_JITTER * rng.standard_normal(len(free)))
    w = np.array([ratio**k for k in range(len(free))]) * jitter
    share = w / w.sum() * free_bytes
    sizes = [0] * len(plan)
    for i, s in zip(free, share):
        sizes[i] = int(s) // 4 * 4
    if free:
        sizes[free[-1]] += free_bytes - sum(sizes)
    return sizes


def _mib_bytes(mib: float) -> int:
    return int(round(mib * MIB)) // 4 * 4


def _fixed_bytes(blk: dict) -> int:
    if blk["kind"] == "branchy":
        seg = blk["seg"]
        return sum(_mib_bytes(x[2]) for x in seg["a"] + seg["b"])
    return _mib_bytes(blk["mib"])


def gpu_incompatible_set(node_ids: list[str], fraction: float) -> set[str]:
    """Nodes leaving the GPU, picked in a fixed hash order so lower fractions nest."""
    n_off = len(node_ids) - int(round(fraction * len(node_ids)))
    ranked = sorted(node_ids, key=lambda i: hashlib.sha256(i.encode()).hexdigest())
    return set(ranked[:max(n_off, 0)])


def gen_subject(profile: SubjectProfile, seed: int = 0) -> ComputeGraph:
    layout = profile.layout
    dynamic = profile.dynamic
    total_params = int(round(profile.model_size_mb * MIB)) - HEADER_BYTES
    plan = _block_plan(layout)
    extra = list(layout.get("decision", [])) + list(layout.get("light", []))
    if layout.get("merge"):
        extra.append(layout["merge"])
    fixed = sum(_fixed_bytes(b) for b in plan if b["mib"] is not None)
    fixed += sum(_mib_bytes(e["mib"]) for e in extra if e.get("mib") is not None)
    free_bytes = total_params - fixed
    if free_bytes < 0:
        raise ValueError(f"profile {profile.name}: fixed block sizes exceed model size")
    ramp = _ramp_sizes(plan, free_bytes, layout.get("ramp_ratio", 1.05), seed)

    if dynamic:
        in_dims = (1, 3, DYNAMIC, DYNAMIC)
    else:
        w, h = profile.input_dims
        in_dims = (1, 3, h, w)
    x = TensorSpec("input", "F32", in_dims)
    b = _Builder(dynamic)
    cur = x.name

    for blk, free in zip(plan, ramp):
        size = _fixed_bytes(blk) if blk["mib"] is not None else free
        if blk["kind"] == "node":
            cur = b.node(blk["op"], [cur], blk["dims"], size if blk["weighted"] else 0)
        elif blk["kind"] == "unit":
            entry = cur
            parts = [int(size * f) // 4 * 4 for f in UNIT_SPLIT]
            parts[-1] += size - sum(parts)
            k = 0
            for op in UNIT_OPS[:-1]:
                pb = parts[k] if op == "Conv" else 0
                k += op == "Conv"
                cur = b.node(op, [cur], blk["dims"], pb)
            cur = b.node("Add", [cur, entry], blk["dims"])
        else:
            seg = blk["seg"]
            entry = cur
            ends = []
            for branch in (seg["a"], seg["b"]):
                t = entry
                for op, dims, mib in branch:
                    t = b.node(op, [t], dims, _mib_bytes(mib))
                ends.append(t)
            cur = b.node(seg.get("merge", "Add"), ends, seg["dims"])

    if layout.get("light"):
        t = x.name
        for spec in layout["light"]:
            t = b.node(spec["op"], [t], spec["dims"], _mib_bytes(spec.get("mib") or 0))
        m = layout["merge"]
        cur = b.node(m["op"], [cur, t], m["dims"], _mib_bytes(m.get("mib") or 0))
    for spec in layout.get("decision", []):
        cur = b.node(spec["op"], [cur], spec["dims"], _mib_bytes(spec.get("mib") or 0))

    nodes = b.nodes
    if len(nodes) != profile.node_count:
        raise ValueError(f"profile {profile.name}: layout gives {len(nodes)} nodes, "
                         f"expected {profile.node_count}")

    # cost ~ parameter MB, tilted along the chain by the profile's skew
    n = len(nodes)
    raw = [nd.param_bytes / 1e6 * math.exp(profile.cost_skew * i / max(n - 1, 1))
           for i, nd in enumerate(nodes)]
    scale = sum(nd.param_bytes for nd in nodes) / 1e6 / sum(raw)
    off_gpu = gpu_incompatible_set([nd.id for nd in nodes], profile.gpu_fraction.get("IDENTITY", 1.0))
    nodes = [Node(nd.id, nd.op_type, nd.inputs, nd.outputs, nd.param_bytes,
                  round(c * scale, 9), nd.id not in off_gpu)
             for nd, c in zip(nodes, raw)]

    out_spec = b.values[-1]
    g = ComputeGraph(
        name=profile.name.lower(),
        inputs=(x,),
        outputs=(out_spec,),
        nodes=tuple(nodes),
        initializers=tuple(b.inits),
        value_info=tuple(b.values[:-1]),
        dynamic_input=dynamic,
        metadata={
            "family": profile.family,
            "profile": profile.name,
            "seed": int(seed),
            "gpu_fraction": dict(profile.gpu_fraction),
            "quant_cost_factor_profile": dict(profile.quant_cost_factor),
        },
    )
    return validate(g, single_io=True)
