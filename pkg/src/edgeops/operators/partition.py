"""Equal-size two-way partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from ..errors import NoCutTensor, NotTwoBranch, StalePlan
from ..graph.algo import ancestors, block_decompose, descendants, split_two_branch, tensor_positions
from ..graph.model import HEADER_BYTES, ComputeGraph
from ..graph.surgery import extract_model, merge_models


class Strategy(str, Enum):
    SINGLE_CUT = "SINGLE_CUT"
    TWO_BRANCH = "TWO_BRANCH"
    BRANCH_INTERIOR = "BRANCH_INTERIOR"


@dataclass(frozen=True)
class PartitionPlan:
    cut_tensors: tuple[str, ...]
    head_node_ids: frozenset
    tail_node_ids: frozenset
    head_size: int
    tail_size: int
    delta: int
    intermediate_payload_mbits: float | None
    strategy: Strategy

    def to_dict(self) -> dict:
        return {
            "cut_tensors": list(self.cut_tensors),
            "head_node_ids": sorted(self.head_node_ids),
            "tail_node_ids": sorted(self.tail_node_ids),
            "head_size": self.head_size,
            "tail_size": self.tail_size,
            "delta": self.delta,
            "intermediate_payload_mbits": self.intermediate_payload_mbits,
            "strategy": self.strategy.value,
        }


def evaluate_cut(g: ComputeGraph, cut: Iterable[str],
                 strategy: Strategy = Strategy.SINGLE_CUT) -> PartitionPlan | None:
    """Plan for cutting at ``cut``, or None when the set is not a valid cut.

    The tail is everything downstream of the cut; the set is valid when the
    tail needs nothing from the head except the cut tensors themselves.
    """
    cut = tuple(sorted(set(cut)))
    if not cut:
        return None
    producer = g.producer
    nm = g.node_map
    inputs = set(g.input_names)
    for t in cut:
        if t not in producer or t in g.output_names:
            return None
    tail = descendants(g, cut)
    if not tail or len(tail) == len(g.nodes):
        return None
    cutset = set(cut)
    for t in cut:
        if producer[t] in tail:
            return None
    for nid in tail:
        for t in nm[nid].inputs:
            if t in cutset or t in g.init_map:
                continue
            if t in inputs or producer.get(t) not in tail:
                return None
    if any(producer[o.name] not in tail for o in g.outputs):
        return None
    head = frozenset(nm) - tail
    # every cut tensor must be consumed somewhere in the tail (minimal cut)
    used = {t for nid in tail for t in nm[nid].inputs}
    if not cutset <= used:
        return None
    head_inits = {t for nid in head for t in nm[nid].inputs if t in g.init_map}
    tail_inits = {t for nid in tail for t in nm[nid].inputs if t in g.init_map}
    hs = sum(g.init_map[t].payload_bytes for t in head_inits) + HEADER_BYTES
    ts = sum(g.init_map[t].payload_bytes for t in tail_inits) + HEADER_BYTES
    mbits = [g.tensor(t).size_mbits(32) for t in cut]
    inter = None if any(m is None for m in mbits) else float(sum(mbits))
    return PartitionPlan(cut, head, frozenset(tail), hs, ts, abs(hs - ts), inter, strategy)


def _best(plans: list[PartitionPlan], g: ComputeGraph) -> PartitionPlan | None:
    """Minimal delta; ties go to the cut nearest the output, then by name."""
    if not plans:
        return None
    pos = tensor_positions(g)
    return min(plans, key=lambda p: (p.delta, -max(pos[t] for t in p.cut_tensors), p.cut_tensors))


def single_cut_candidates(g: ComputeGraph) -> list[tuple[str, ...]]:
    blocks = block_decompose(g)
    return [b.entry_tensors for b in reversed(blocks[1:]) if len(b.entry_tensors) == 1]


def find_partition_single(g: ComputeGraph) -> PartitionPlan:
    """Reverse traversal over block-entry cuts; strict improvement keeps ties near the output."""
    blocks = block_decompose(g)
    if len(blocks) < 2:
        raise NoCutTensor(f"{g.name}: single-block graph has no interior cut tensor")
    total = sum(b.size_bytes for b in blocks)
    best = None
    best_j = None
    tail = 0
    for j in range(len(blocks) - 1, 0, -1):
        tail += blocks[j].size_bytes
        delta = abs((total - tail) - tail)
        if best is None or delta < best:
            best, best_j = delta, j
    plan = evaluate_cut(g, blocks[best_j].entry_tensors, Strategy.SINGLE_CUT)
    if plan is None:
        raise NoCutTensor(f"{g.name}: block entry {blocks[best_j].entry_tensors} is not a valid cut")
    return plan


def two_branch_candidates(g: ComputeGraph) -> list[tuple[str, ...]]:
    tb = split_two_branch(g)
    heavy = extract_model(g, list(g.input_names), [tb.heavy_end], name=f"{g.name}.heavy")
    hb = block_decompose(heavy)
    # the heavy end itself is the entry of the merge block
    entries = [tb.heavy_end] + [b.entry_tensors[0] for b in reversed(hb[1:])]
    return [tuple(sorted((tb.light_end, t))) for t in entries]


def find_partition_two_branch(g: ComputeGraph) -> PartitionPlan:
    cands = two_branch_candidates(g)
    best = None
    for cut in cands:
        plan = evaluate_cut(g, cut, Strategy.TWO_BRANCH)
        if plan is not None and (best is None or plan.delta < best.delta):
            best = plan
    if best is None:
        raise NoCutTensor(f"{g.name}: heavy branch has no block-entry cut")
    return best


def interior_candidates(g: ComputeGraph) -> list[tuple[str, str]]:
    """Pairs with one tensor inside each node-bearing branch of a block."""
    out = []
    nm = g.node_map
    for b in block_decompose(g):
        if len(b.exit_tensors) != 1 or len(b.entry_tensors) != 1:
            continue
        merge = nm[g.producer[b.exit_tensors[0]]]
        acts = [t for t in dict.fromkeys(merge.inputs) if g.is_activation(t)]
        stop = set(b.entry_tensors)
        branches = []
        for t in acts:
            anc = ancestors(g, [t], stop)
            if anc:
                branches.append(sorted(o for nid in anc for o in nm[nid].outputs))
        for i in range(len(branches)):
            for j in range(i + 1, len(branches)):
                for a in branches[i]:
                    for c in branches[j]:
                        if a != c:
                            out.append(tuple(sorted((a, c))))
    return list(dict.fromkeys(out))


def find_partition_branch_interior(g: ComputeGraph) -> PartitionPlan:
    single = find_partition_single(g)
    plans = []
    for cut in interior_candidates(g):
        plan = evaluate_cut(g, cut, Strategy.BRANCH_INTERIOR)
        if plan is not None:
            plans.append(plan)
    best = _best(plans, g)
    if best is not None and best.delta < single.delta:
        return best
    return single


def partition_auto(g: ComputeGraph) -> PartitionPlan:
    family = str(g.metadata.get("family", "")).upper()
    if family in ("RESNET", "RESNEXT"):
        return find_partition_single(g)
    if family == "FCN":
        return find_partition_two_branch(g)
    if family == "DUC":
        return find_partition_branch_interior(g)
    try:
        return find_partition_two_branch(g)
    except NotTwoBranch:
        return find_partition_branch_interior(g)


def apply_partition(g: ComputeGraph, plan: PartitionPlan) -> tuple[ComputeGraph, ComputeGraph]:
    for t in plan.cut_tensors:
        if t not in g.tensor_map:
            raise StalePlan(f"cut tensor {t!r} not in graph {g.name!r}")
    fresh = evaluate_cut(g, plan.cut_tensors, plan.strategy)
    if fresh is None or fresh.tail_node_ids != plan.tail_node_ids \
            or fresh.head_node_ids != plan.head_node_ids:
        raise StalePlan(f"plan does not match graph {g.name!r}")
    cut = list(plan.cut_tensors)
    head = extract_model(g, list(g.input_names), cut, name=f"{g.name}.head")
    tail = extract_model(g, cut, list(g.output_names), name=f"{g.name}.tail")
    return head, tail


def rejoin(head: ComputeGraph, tail: ComputeGraph, name: str | None = None) -> ComputeGraph:
    """Inverse of apply_partition: wire head outputs to same-named tail inputs."""
    binding = {t.name: t.name for t in head.outputs}
    if name is None and head.name.endswith(".head"):
        name = head.name[:-5]
    return merge_models(head, tail, binding, name=name)
