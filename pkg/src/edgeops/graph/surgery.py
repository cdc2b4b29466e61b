"""Extract and merge primitives for sub-graph surgery."""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

from ..errors import BoundaryNotClosed, DimMismatch, UnresolvedTensor
from .model import ComputeGraph, Node, TensorSpec, topo_sort, validate


def extract_model(g: ComputeGraph, in_tensors: Sequence[str], out_tensors: Sequence[str],
                  name: str | None = None) -> ComputeGraph:
    """Induced sub-graph between ``in_tensors`` and ``out_tensors``."""
    for t in list(in_tensors) + list(out_tensors):
        if t not in g.tensor_map:
            raise UnresolvedTensor(t)
    ins = set(in_tensors)
    nm = g.node_map
    producer = g.producer
    keep: set[str] = set()
    used_inputs: set[str] = set()
    used_inits: set[str] = set()
    seen: set[str] = set()
    stack = list(out_tensors)
    while stack:
        t = stack.pop()
        if t in seen:
            continue
        seen.add(t)
        if t in ins:
            used_inputs.add(t)
            continue
        if t in g.init_map:
            used_inits.add(t)
            continue
        nid = producer.get(t)
        if nid is None:
            raise BoundaryNotClosed(t)
        if nid not in keep:
            keep.add(nid)
            stack.extend(nm[nid].inputs)
    for t in in_tensors:
        if t not in used_inputs:
            raise BoundaryNotClosed(t, "input is not needed by the requested outputs")

    order = [nid for nid in topo_sort(g) if nid in keep]
    nodes = tuple(nm[i] for i in order)
    boundary = set(in_tensors) | set(out_tensors)
    produced = {o for n in nodes for o in n.outputs}
    value_info = tuple(t for t in g.value_info
                       if t.name in produced and t.name not in boundary)
    # a kept node may produce tensors only consumed outside the slice
    consumed = {x for n in nodes for x in n.inputs}
    stray = [o for n in nodes for o in n.outputs if o not in consumed and o not in boundary]
    if stray:
        raise BoundaryNotClosed(stray[0], "tensor produced inside the slice escapes it")
    sub = ComputeGraph(
        name=name or g.name,
        inputs=tuple(g.tensor(t) for t in in_tensors),
        outputs=tuple(g.tensor(t) for t in out_tensors),
        nodes=nodes,
        initializers=tuple(t for t in g.initializers if t.name in used_inits),
        value_info=value_info,
        dynamic_input=g.dynamic_input,
        metadata=dict(g.metadata),
    )
    return validate(sub)


def _fresh(name: str, taken: set[str]) -> str:
    cand = name + "__m"
    while cand in taken:
        cand += "__m"
    return cand


def merge_models(g1: ComputeGraph, g2: ComputeGraph, binding: Mapping[str, str],
                 name: str | None = None) -> ComputeGraph:
    """Compose ``g2 ∘ g1`` by wiring g1 outputs into g2 inputs."""
    out1 = {t.name: t for t in g1.outputs}
    in2 = {t.name: t for t in g2.inputs}
    for a, b in binding.items():
        if a not in out1:
            raise UnresolvedTensor(a)
        if b not in in2:
            raise UnresolvedTensor(b)
        ta, tb = out1[a], in2[b]
        if tuple(ta.dims) != tuple(tb.dims) or ta.dtype != tb.dtype:
            raise DimMismatch(a, ta.dims, tb.dims)

    taken = set(g1.tensor_map) | {o for n in g1.nodes for o in n.outputs}
    rename: dict[str, str] = {b: a for a, b in binding.items()}
    g2_names = set(g2.tensor_map) | {o for n in g2.nodes for o in n.outputs}
    for t in sorted(g2_names):
        if t in rename:
            continue
        if t in taken:
            rename[t] = _fresh(t, taken | g2_names)
            taken.add(rename[t])
        else:
            taken.add(t)
    ids1 = {n.id for n in g1.nodes}
    id_map = {}
    for n in g2.nodes:
        id_map[n.id] = _fresh(n.id, ids1 | set(id_map.values())) if n.id in ids1 else n.id

    r = lambda t: rename.get(t, t)  # noqa: E731

    def rt(t: TensorSpec) -> TensorSpec:
        return replace(t, name=r(t.name))

    nodes2 = tuple(Node(id_map[n.id], n.op_type, tuple(map(r, n.inputs)), tuple(map(r, n.outputs)),
                        n.param_bytes, n.cost_units, n.gpu_compatible) for n in g2.nodes)
    bound_out = set(binding)
    inputs = tuple(g1.inputs) + tuple(rt(t) for t in g2.inputs if t.name not in rename
                                      or rename[t.name] not in bound_out)
    outputs = tuple(t for t in g1.outputs if t.name not in bound_out) + tuple(rt(t) for t in g2.outputs)
    value_info = (tuple(g1.value_info) + tuple(out1[a] for a in binding)
                  + tuple(rt(t) for t in g2.value_info))
    merged = ComputeGraph(
        name=name or g1.name,
        inputs=inputs,
        outputs=outputs,
        nodes=tuple(g1.nodes) + nodes2,
        initializers=tuple(g1.initializers) + tuple(rt(t) for t in g2.initializers),
        value_info=tuple({t.name: t for t in value_info}.values()),
        dynamic_input=g1.dynamic_input or g2.dynamic_input,
        metadata=dict(g1.metadata),
    )
    return validate(merged)
