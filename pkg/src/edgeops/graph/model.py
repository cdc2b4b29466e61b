"""Neutral computational-graph data model.

Graphs are immutable value objects. Helpers that "modify" a graph return a
new instance. Lookup tables (producers, consumers, tensor specs) are built
lazily and cached on the instance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping

from ..errors import (
    CycleDetected,
    DanglingTensor,
    DuplicateTensor,
    MalformedGraph,
    UnresolvedTensor,
)

DYNAMIC = "DYNAMIC"
DTYPES = ("F32", "U8")
QUANT_OVERHEAD_BYTES = 8
HEADER_BYTES = 4096

Dim = int | str


def n_elements(dims: Iterable[Dim]) -> int | None:
    """Product of dims, or None when any dim is DYNAMIC."""
    total = 1
    for d in dims:
        if d == DYNAMIC:
            return None
        total *= int(d)
    return total


def expected_payload_bytes(dtype: str, dims: Iterable[Dim]) -> int | None:
    n = n_elements(dims)
    if n is None:
        return None
    return 4 * n if dtype == "F32" else n + QUANT_OVERHEAD_BYTES


@dataclass(frozen=True)
class QuantParams:
    scale: float
    zero_point: int
    offset: float = 0.0


@dataclass(frozen=True)
class TensorSpec:
    name: str
    dtype: str = "F32"
    dims: tuple = ()
    payload_bytes: int = 0
    payload: bytes | None = None
    quant: QuantParams | None = None

    @property
    def is_dynamic(self) -> bool:
        return any(d == DYNAMIC for d in self.dims)

    def size_mbits(self, bits_per_element: int | None = None) -> float | None:
        """Activation size in Mbit (2**20 bits); None for dynamic dims."""
        n = n_elements(self.dims)
        if n is None:
            return None
        bits = bits_per_element or (32 if self.dtype == "F32" else 8)
        return n * bits / 2**20


@dataclass(frozen=True)
class Node:
    id: str
    op_type: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    param_bytes: int = 0
    cost_units: float = 0.0
    gpu_compatible: bool = True


@dataclass(frozen=True)
class ComputeGraph:
    """A DAG of nodes.

    ``inputs``/``outputs`` are ordered; full subject models have exactly one
    of each, while sub-models cut by a two-tensor partition may carry two.
    ``value_info`` holds the specs of intermediate activations so that block
    boundary dims are always known.
    """

    name: str
    inputs: tuple[TensorSpec, ...]
    outputs: tuple[TensorSpec, ...]
    nodes: tuple[Node, ...]
    initializers: tuple[TensorSpec, ...] = ()
    value_info: tuple[TensorSpec, ...] = ()
    dynamic_input: bool = False
    metadata: Mapping = field(default_factory=dict)

    @property
    def primary_input(self) -> TensorSpec:
        return self.inputs[0]

    @property
    def primary_output(self) -> TensorSpec:
        return self.outputs[0]

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.inputs)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.outputs)

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def init_map(self) -> dict[str, TensorSpec]:
        return {t.name: t for t in self.initializers}

    @cached_property
    def tensor_map(self) -> dict[str, TensorSpec]:
        out: dict[str, TensorSpec] = {}
        for group in (self.value_info, self.inputs, self.outputs, self.initializers):
            for t in group:
                out[t.name] = t
        return out

    @cached_property
    def producer(self) -> dict[str, str]:
        out = {}
        for n in self.nodes:
            for t in n.outputs:
                out[t] = n.id
        return out

    @cached_property
    def consumers(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for n in self.nodes:
            for t in n.inputs:
                lst = out.setdefault(t, [])
                if not lst or lst[-1] != n.id:
                    lst.append(n.id)
        return out

    def tensor(self, name: str) -> TensorSpec:
        try:
            return self.tensor_map[name]
        except KeyError:
            raise UnresolvedTensor(name) from None

    def is_activation(self, name: str) -> bool:
        return name not in self.init_map

    def with_nodes(self, nodes: Iterable[Node]) -> "ComputeGraph":
        return replace(self, nodes=tuple(nodes))


def param_bytes(g: ComputeGraph, node_ids: Iterable[str] | None = None) -> int:
    if node_ids is None:
        return sum(n.param_bytes for n in g.nodes)
    nm = g.node_map
    return sum(nm[i].param_bytes for i in node_ids)


def model_size(g: ComputeGraph) -> int:
    """Serialized size: parameter payload plus a fixed container header."""
    return sum(t.payload_bytes for t in g.initializers) + HEADER_BYTES


def topo_sort(g: ComputeGraph) -> list[str]:
    """Kahn's algorithm with a min-heap so ties resolve by node id."""
    producer = g.producer
    indeg: dict[str, int] = {}
    succ: dict[str, list[str]] = {n.id: [] for n in g.nodes}
    for n in g.nodes:
        preds = {producer[t] for t in n.inputs if t in producer}
        indeg[n.id] = len(preds)
        for p in preds:
            succ[p].append(n.id)
    heap = [i for i, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        nid = heapq.heappop(heap)
        order.append(nid)
        for s in succ[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, s)
    if len(order) != len(g.nodes):
        raise CycleDetected(_node_on_cycle(g, {i for i, d in indeg.items() if d > 0}))
    return order


def _node_on_cycle(g: ComputeGraph, remaining: set[str]) -> str:
    # every remaining node still has a remaining predecessor, so walking
    # predecessors must eventually revisit a node that lies on a cycle
    producer = g.producer
    nm = g.node_map
    cur = min(remaining)
    seen = set()
    while cur not in seen:
        seen.add(cur)
        preds = sorted(producer[t] for t in nm[cur].inputs
                       if t in producer and producer[t] in remaining)
        cur = preds[0]
    return cur


def validate(g: ComputeGraph, *, single_io: bool = False) -> ComputeGraph:
    """Check structural invariants; returns ``g`` for chaining."""
    if not g.name:
        raise MalformedGraph("graph name is empty")
    if not g.inputs or not g.outputs:
        raise MalformedGraph("graph needs at least one input and one output")
    if single_io and (len(g.inputs) != 1 or len(g.outputs) != 1):
        raise MalformedGraph("expected exactly one primary input and one primary output")

    produced: set[str] = set()

    def produce(name: str) -> None:
        if not name:
            raise MalformedGraph("empty tensor name")
        if name in produced:
            raise DuplicateTensor(name)
        produced.add(name)

    for t in g.inputs:
        produce(t.name)
    for t in g.initializers:
        produce(t.name)
    ids = set()
    for n in g.nodes:
        if not n.id:
            raise MalformedGraph("empty node id")
        if n.id in ids:
            raise MalformedGraph(f"duplicate node id {n.id!r}")
        ids.add(n.id)
        if not n.outputs:
            raise MalformedGraph(f"node {n.id!r} has no outputs")
        if n.param_bytes < 0 or n.cost_units < 0 or not math.isfinite(n.cost_units):
            raise MalformedGraph(f"node {n.id!r} has negative size or cost")
        for t in n.outputs:
            produce(t)

    for n in g.nodes:
        for t in n.inputs:
            if t not in produced:
                raise UnresolvedTensor(t)
    for t in g.outputs:
        if t.name not in g.producer:
            raise UnresolvedTensor(t.name)

    topo_sort(g)

    consumed = {t for n in g.nodes for t in n.inputs}
    outs = set(g.output_names)
    for name in sorted(produced):
        if name not in consumed and name not in outs:
            raise DanglingTensor(name)

    known = {t.name for t in g.value_info} | set(g.input_names) | outs
    for vi in g.value_info:
        if vi.name not in g.producer:
            raise MalformedGraph(f"value_info entry {vi.name!r} is not a node output")
    for n in g.nodes:
        for t in n.outputs:
            if t not in known:
                raise MalformedGraph(f"missing dims for activation {t!r}")

    for t in list(g.inputs) + list(g.outputs) + list(g.value_info) + list(g.initializers):
        if t.dtype not in DTYPES:
            raise MalformedGraph(f"tensor {t.name!r} has unknown dtype {t.dtype!r}")
        for d in t.dims:
            if d == DYNAMIC:
                if not g.dynamic_input:
                    raise MalformedGraph(f"DYNAMIC dim on {t.name!r} in a fixed-input graph")
            elif not isinstance(d, int) or isinstance(d, bool) or d <= 0:
                raise MalformedGraph(f"bad dim {d!r} on {t.name!r}")

    for t in g.initializers:
        exp = expected_payload_bytes(t.dtype, t.dims)
        if exp is None or t.payload_bytes != exp:
            raise MalformedGraph(f"initializer {t.name!r} payload_bytes {t.payload_bytes} != {exp}")
        if t.payload is not None:
            raw = exp if t.dtype == "F32" else exp - QUANT_OVERHEAD_BYTES
            if len(t.payload) != raw:
                raise MalformedGraph(f"initializer {t.name!r} payload length mismatch")
        if t.dtype == "U8" and t.quant is None and t.payload is not None:
            raise MalformedGraph(f"U8 initializer {t.name!r} lacks quantization params")
    for t in list(g.inputs) + list(g.outputs) + list(g.value_info):
        if t.payload_bytes != 0:
            raise MalformedGraph(f"activation {t.name!r} has nonzero payload_bytes")

    init = g.init_map
    for n in g.nodes:
        expect = sum(init[t].payload_bytes for t in dict.fromkeys(n.inputs) if t in init)
        if n.param_bytes != expect:
            raise MalformedGraph(
                f"node {n.id!r} param_bytes {n.param_bytes} != initializer sum {expect}")
    return g
