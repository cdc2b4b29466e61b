"""Cut tensors, block decomposition and structural hashing."""

from __future__ import annotations

import bisect
import hashlib
import json
from dataclasses import dataclass

from ..errors import NotTwoBranch
from .model import ComputeGraph, topo_sort


@dataclass(frozen=True)
class Block:
    index: int
    node_ids: tuple[str, ...]
    entry_tensors: tuple[str, ...]
    exit_tensors: tuple[str, ...]
    size_bytes: int
    struct_hash: int

    def __len__(self) -> int:
        return len(self.node_ids)


def tensor_positions(g: ComputeGraph, order: list[str] | None = None) -> dict[str, int]:
    """Topological positions of activation tensors: inputs first, then node outputs."""
    order = order if order is not None else topo_sort(g)
    pos: dict[str, int] = {}
    for t in g.inputs:
        pos[t.name] = len(pos)
    nm = g.node_map
    for nid in order:
        for t in nm[nid].outputs:
            pos[t] = len(pos)
    return pos


def _on_path(g: ComputeGraph, pos: dict[str, int]) -> set[str]:
    """Activation tensors lying on some input-to-output path."""
    nm = g.node_map
    fwd = set(g.input_names)
    for nid in topo_sort(g):
        n = nm[nid]
        if any(t in fwd for t in n.inputs):
            fwd.update(n.outputs)
    bwd = set(g.output_names)
    producer = g.producer
    for name in sorted(pos, key=pos.get, reverse=True):
        if name in bwd and name in producer:
            bwd.update(t for t in nm[producer[name]].inputs if t in pos)
    return fwd & bwd


def cut_tensors(g: ComputeGraph) -> list[str]:
    """Tensors that every input-to-output path passes through, in topo order.

    With a topological numbering in which every vertex lies on a source-sink
    path, a vertex is a cut vertex iff no edge jumps over it. A virtual
    source and sink make multi-input/multi-output sub-models work the same.
    """
    pos = tensor_positions(g)
    live = _on_path(g, pos)
    size = len(pos) + 2
    shift = {name: p + 1 for name, p in pos.items()}
    diff = [0] * (size + 1)

    def cover(u: int, v: int) -> None:
        if v - u > 1:
            diff[u + 1] += 1
            diff[v] -= 1

    for t in g.inputs:
        cover(0, shift[t.name])
    for t in g.outputs:
        if t.name in live:
            cover(shift[t.name], size - 1)
    for n in g.nodes:
        for a in n.inputs:
            if a not in live:
                continue
            for o in n.outputs:
                if o in live:
                    cover(shift[a], shift[o])
    running = 0
    covered = [0] * size
    for i in range(size):
        running += diff[i]
        covered[i] = running
    cuts = [name for name in live if covered[shift[name]] == 0]
    return sorted(cuts, key=pos.get)


def block_decompose(g: ComputeGraph) -> list[Block]:
    order = topo_sort(g)
    pos = tensor_positions(g, order)
    cuts = cut_tensors(g)
    bounds = [-1] + [pos[c] for c in cuts] + [len(pos) + 1]
    nm = g.node_map

    seg_of: dict[str, int] = {}
    live = _on_path(g, pos)
    for nid in order:
        p = pos[nm[nid].outputs[0]]
        seg_of[nid] = bisect.bisect_left(bounds, p) - 1
    # nodes feeding only from constants follow their earliest consumer
    consumers = g.consumers
    for nid in reversed(order):
        n = nm[nid]
        if any(o in live for o in n.outputs):
            continue
        segs = [seg_of[c] for o in n.outputs for c in consumers.get(o, [])]
        if segs:
            seg_of[nid] = min(segs)

    by_seg: dict[int, list[str]] = {}
    for nid in order:
        by_seg.setdefault(seg_of[nid], []).append(nid)

    def boundary(i: int, default: tuple[str, ...]) -> tuple[str, ...]:
        if 1 <= i <= len(cuts):
            return (cuts[i - 1],)
        return default

    blocks = []
    for seg in sorted(by_seg):
        ids = tuple(by_seg[seg])
        entry = boundary(seg, g.input_names)
        exit_ = boundary(seg + 1, g.output_names)
        size = sum(nm[i].param_bytes for i in ids)
        blocks.append((ids, entry, exit_, size))
    out = []
    for idx, (ids, entry, exit_, size) in enumerate(blocks):
        proto = Block(idx, ids, entry, exit_, size, 0)
        out.append(Block(idx, ids, entry, exit_, size, structural_hash(proto, g)))
    return out


def _h(*parts) -> str:
    return hashlib.blake2b(json.dumps(parts, separators=(",", ":")).encode(), digest_size=16).hexdigest()


def structural_hash(b: Block, g: ComputeGraph) -> int:
    """64-bit digest of op topology and boundary dims.

    Each tensor gets a Merkle label built from the op types and input
    positions that produced it, so the digest is independent of node ids
    and of how ties in the topological order were broken.
    """
    nm = g.node_map
    label: dict[str, str] = {}
    for i, e in enumerate(b.entry_tensors):
        label[e] = _h("in", i)
    inside = set(b.node_ids)
    node_labels = []
    for nid in b.node_ids:
        n = nm[nid]
        ins = []
        for t in n.inputs:
            if t in label:
                ins.append(label[t])
            elif t in g.init_map:
                ins.append("w")
            else:
                prod = g.producer.get(t)
                ins.append(_h("ext", list(g.tensor(t).dims)) if prod not in inside else "?")
        nl = _h(n.op_type, ins, len(n.outputs))
        node_labels.append(nl)
        for k, o in enumerate(n.outputs):
            label[o] = _h(nl, k)
    dims_in = [list(g.tensor(t).dims) for t in b.entry_tensors]
    dims_out = [list(g.tensor(t).dims) for t in b.exit_tensors]
    digest = hashlib.blake2b(
        json.dumps([sorted(node_labels), [label.get(t, "") for t in b.exit_tensors],
                    dims_in, dims_out], separators=(",", ":")).encode(),
        digest_size=8).digest()
    return int.from_bytes(digest, "big")


def boundary_dims(b: Block, g: ComputeGraph) -> tuple:
    return (tuple(tuple(g.tensor(t).dims) for t in b.entry_tensors),
            tuple(tuple(g.tensor(t).dims) for t in b.exit_tensors))


def ancestors(g: ComputeGraph, tensors, stop: set[str] | frozenset = frozenset()) -> set[str]:
    """Node ids upstream of ``tensors`` without crossing ``stop`` tensors."""
    nm = g.node_map
    producer = g.producer
    seen: set[str] = set()
    stack = [t for t in tensors if t not in stop]
    while stack:
        t = stack.pop()
        nid = producer.get(t)
        if nid is None or nid in seen:
            continue
        seen.add(nid)
        stack.extend(x for x in nm[nid].inputs if x not in stop)
    return seen


def descendants(g: ComputeGraph, tensors) -> set[str]:
    """Node ids that transitively consume any of ``tensors``."""
    nm = g.node_map
    consumers = g.consumers
    seen: set[str] = set()
    stack = list(tensors)
    while stack:
        t = stack.pop()
        for nid in consumers.get(t, []):
            if nid not in seen:
                seen.add(nid)
                stack.extend(nm[nid].outputs)
    return seen


@dataclass(frozen=True)
class TwoBranch:
    merge_node: str
    heavy_end: str
    light_end: str
    heavy_nodes: frozenset
    light_nodes: frozenset


def split_two_branch(g: ComputeGraph, blocks: list[Block] | None = None) -> TwoBranch:
    """Detect two parallel branches from the primary input to a merge node."""
    blocks = blocks if blocks is not None else block_decompose(g)
    if len(g.inputs) != 1 or not blocks:
        raise NotTwoBranch("graph must have a single input")
    first = blocks[0]
    if first.entry_tensors != (g.primary_input.name,) or len(first.exit_tensors) != 1:
        raise NotTwoBranch("first block does not start at the primary input")
    nm = g.node_map
    merge = nm[g.producer[first.exit_tensors[0]]]
    acts = [t for t in dict.fromkeys(merge.inputs) if g.is_activation(t)]
    if len(acts) != 2:
        raise NotTwoBranch(f"merge node {merge.id!r} does not join exactly two branches")
    stop = {g.primary_input.name}
    a, b = (ancestors(g, [t], stop) for t in acts)
    if not a or not b or a & b:
        raise NotTwoBranch("branches share nodes or one branch is empty")
    if a | b | {merge.id} != set(first.node_ids):
        raise NotTwoBranch("first block has nodes outside the two branches")
    pa, pb = sum(nm[i].param_bytes for i in a), sum(nm[i].param_bytes for i in b)
    if pa > pb or (pa == pb and acts[0] <= acts[1]):
        heavy, light = (acts[0], a), (acts[1], b)
    else:
        heavy, light = (acts[1], b), (acts[0], a)
    return TwoBranch(merge.id, heavy[0], light[0], frozenset(heavy[1]), frozenset(light[1]))
