"""Small graph builders, a seeded random DAG generator and partition search classes."""

from __future__ import annotations

import random
from pathlib import Path

import edgeops.data
from edgeops.errors import NoCutTensor, NotTwoBranch
from edgeops.graph import (ComputeGraph, Node, TensorSpec, cut_tensors, split_two_branch,
                           validate)
from edgeops.operators import (enumerate_valid_cuts, find_partition_branch_interior,
                               find_partition_single, find_partition_two_branch)

DATA = Path(edgeops.data.__file__).parent
MIB = 2**20
OPS = ("Conv", "Relu", "BatchNorm", "Pool", "Gemm", "Sigmoid")


class Builder:
    """Incremental single-input graph construction with F32 size-only weights."""

    def __init__(self, name: str = "toy", in_dims=(1, 8), dynamic: bool = False):
        self.name = name
        self.dynamic = dynamic
        self.input = TensorSpec("x", "F32", tuple(in_dims))
        self.nodes: list[Node] = []
        self.inits: list[TensorSpec] = []
        self.vi: dict[str, TensorSpec] = {}
        self.k = 0

    def node(self, op: str, inputs, dims=(1, 8), weight: int = 0, nid: str | None = None,
             out: str | None = None) -> str:
        nid = nid or f"n{self.k:03d}"
        self.k += 1
        ins = list(inputs)
        pb = 0
        if weight:
            w = TensorSpec(f"{nid}.w", "F32", (int(weight),), 4 * int(weight))
            self.inits.append(w)
            ins.append(w.name)
            pb = w.payload_bytes
        out = out or f"{nid}.y"
        self.vi[out] = TensorSpec(out, "F32", tuple(dims))
        self.nodes.append(Node(nid, op, tuple(ins), (out,), pb, pb / 1e6, True))
        return out

    def chain(self, t: str, ops, dims=(1, 8), weight: int = 0) -> str:
        for op in ops:
            t = self.node(op, [t], dims, weight)
        return t

    def residual(self, t: str, dims=(1, 8), weight: int = 0, ops=("Conv", "Relu")) -> str:
        b = self.chain(t, ops, dims, weight)
        return self.node("Add", [t, b], dims)

    def build(self, out: str, metadata: dict | None = None) -> ComputeGraph:
        vi = tuple(v for k, v in self.vi.items() if k != out)
        g = ComputeGraph(self.name, (self.input,), (self.vi[out],), tuple(self.nodes),
                         tuple(self.inits), vi, self.dynamic, dict(metadata or {}))
        return validate(g)


def block_chain(sizes_mib, name: str = "chain") -> ComputeGraph:
    """One weighted node per block; sizes in MiB."""
    b = Builder(name)
    t = "x"
    for s in sizes_mib:
        t = b.node("Conv", [t], weight=int(s * MIB / 4))
    return b.build(t)


def _segment(b: Builder, t: str, rng: random.Random, budget: int) -> str:
    w = lambda: rng.choice((0, 0, rng.randint(1, 64)))  # noqa: E731
    kind = rng.choice(("op", "res", "diamond")) if budget >= 4 else "op"
    if kind == "op":
        return b.node(rng.choice(OPS), [t], weight=w())
    if kind == "res":
        u = t
        for _ in range(rng.randint(1, min(3, budget - 1))):
            u = b.node(rng.choice(OPS), [u], weight=w())
        return b.node("Add", [t, u])
    left = right = t
    room = budget - 1
    k1 = rng.randint(1, max(1, min(3, room - 1)))
    k2 = rng.randint(1, max(1, min(3, room - k1)))
    for _ in range(k1):
        left = b.node(rng.choice(OPS), [left], weight=w())
    for _ in range(k2):
        right = b.node(rng.choice(OPS), [right], weight=w())
    return b.node("Concat", [left, right])


def random_graph(seed: int, max_nodes: int = 40, two_branch: bool | None = None) -> ComputeGraph:
    """Seeded single-input single-output DAG with at most ``max_nodes`` nodes.

    A chain of single ops, residual units and two-branch diamonds; with
    ``two_branch`` the whole body is a heavy chain and a light chain from
    the input that merge in a final block.
    """
    rng = random.Random(seed)
    b = Builder(f"rand{seed}")
    if two_branch is None:
        two_branch = rng.random() < 0.3
    target = rng.randint(6, max_nodes)
    t = "x"
    if two_branch:
        light = t
        for _ in range(rng.randint(1, 2)):
            light = b.node("Conv", [light], weight=rng.randint(0, 16))
        heavy = _segment(b, t, rng, 1)
        while len(b.nodes) < target - 8:
            heavy = _segment(b, heavy, rng, target - 3 - len(b.nodes))
        t = b.node("Add", [heavy, light])
        t = b.node("Conv", [t], weight=rng.randint(1, 32))
    else:
        while len(b.nodes) < target - 1:
            t = _segment(b, t, rng, target - len(b.nodes))
    return b.build(t)


def heuristic_classes(g):
    """(heuristic plan, plans inside its search class) for each applicable heuristic."""
    plans = enumerate_valid_cuts(g)
    cuts = set(cut_tensors(g))
    singles = [p for p in plans if len(p.cut_tensors) == 1]
    out = []
    try:
        out.append((find_partition_single(g), singles))
        inner = singles + [p for p in plans if len(p.cut_tensors) == 2
                           and not set(p.cut_tensors) & cuts]
        out.append((find_partition_branch_interior(g), inner))
    except NoCutTensor:
        pass
    try:
        tb = split_two_branch(g)
    except NotTwoBranch:
        tb = None
    if tb is not None:
        cls = [p for p in plans if len(p.cut_tensors) == 2 and tb.light_end in p.cut_tensors]
        out.append((find_partition_two_branch(g), cls))
    return plans, out
