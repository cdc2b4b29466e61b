"""Early exit by skipping trailing pairs of structurally identical blocks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import NotTwoBranch, TooFewBlocks
from ..graph.algo import Block, block_decompose, boundary_dims, descendants, split_two_branch
from ..graph.model import ComputeGraph, model_size
from ..graph.surgery import extract_model, merge_models


@dataclass(frozen=True)
class ExitReport:
    skipped_block_indices: tuple[int, ...] = ()
    count: int = 0
    size_before: int = 0
    size_after: int = 0
    splice_tensor: str | None = None
    decision_node_ids: tuple[str, ...] = ()
    chain: str = "top"              # "top" or "heavy" (two-branch graphs)

    @property
    def reduction_ratio(self) -> float:
        return self.size_before / self.size_after if self.size_after else 1.0

    def to_dict(self) -> dict:
        return {
            "skipped_block_indices": list(self.skipped_block_indices),
            "count": self.count,
            "size_before": self.size_before,
            "size_after": self.size_after,
            "reduction_ratio": self.reduction_ratio,
            "splice_tensor": self.splice_tensor,
            "decision_node_ids": list(self.decision_node_ids),
            "chain": self.chain,
        }


@dataclass(frozen=True)
class ExitChain:
    """Blocks eligible for skipping, in order; the decision part is excluded."""
    blocks: tuple[Block, ...]
    graph: ComputeGraph          # graph the blocks were decomposed from
    kind: str
    n_blocks_total: int
    extra: dict = field(default_factory=dict)


def exit_chain(g: ComputeGraph) -> ExitChain:
    top = block_decompose(g)
    if len(top) == 2:
        try:
            tb = split_two_branch(g, top)
        except NotTwoBranch:
            tb = None
        if tb is not None:
            heavy = extract_model(g, list(g.input_names), [tb.heavy_end], name=f"{g.name}.heavy")
            chain = block_decompose(heavy)
            return ExitChain(tuple(chain), heavy, "heavy", len(chain) + 1,
                             {"light_end": tb.light_end, "heavy_end": tb.heavy_end})
    return ExitChain(tuple(top[:-1]), g, "top", len(top))


def find_skippable(chain: ExitChain) -> list[int]:
    """Reverse traversal: skip matching pairs until the first mismatch."""
    blocks = chain.blocks
    skipped: list[int] = []
    i = len(blocks) - 1
    while i >= 1:
        cur, prev = blocks[i], blocks[i - 1]
        if cur.struct_hash == prev.struct_hash and \
                boundary_dims(cur, chain.graph) == boundary_dims(prev, chain.graph):
            skipped.extend([i, i - 1])
            i -= 2
        else:
            break
    return sorted(skipped)


def early_exit(g: ComputeGraph) -> tuple[ComputeGraph, ExitReport]:
    chain = exit_chain(g)
    if chain.n_blocks_total < 3:
        raise TooFewBlocks(f"{g.name}: {chain.n_blocks_total} blocks, need at least 3")
    size = model_size(g)
    skipped = find_skippable(chain)
    if not skipped:
        return g, ExitReport((), 0, size, size, chain=chain.kind)

    blocks = chain.blocks
    first = skipped[0]
    surviving = blocks[first].entry_tensors[0]
    removed_exit = blocks[-1].exit_tensors[0]
    gone = {nid for i in skipped for nid in blocks[i].node_ids}
    post = descendants(g, [removed_exit]) - gone
    producer = g.producer
    crossing = []
    for nid in sorted(post):
        for t in g.node_map[nid].inputs:
            if t == removed_exit or not g.is_activation(t):
                continue
            if producer.get(t) in post or producer.get(t) in gone:
                continue
            if t not in crossing and t != surviving:
                crossing.append(t)
    crossing.sort()
    decision_ids = tuple(sorted(g.consumers.get(removed_exit, [])))

    head = extract_model(g, list(g.input_names), [surviving] + crossing, name=f"{g.name}.pre")
    dec = extract_model(g, [removed_exit] + crossing, list(g.output_names), name=f"{g.name}.decision")
    binding = {surviving: removed_exit, **{c: c for c in crossing}}
    merged = merge_models(head, dec, binding, name=g.name)
    meta = dict(g.metadata)
    meta["operators"] = list(meta.get("operators", [])) + ["EARLY_EXIT"]
    meta["early_exit"] = {"splice_tensor": surviving, "decision_node_ids": list(decision_ids),
                          "skipped": len(skipped)}
    merged = replace(merged, metadata=meta)
    report = ExitReport(tuple(skipped), len(skipped), size, model_size(merged),
                        surviving, decision_ids, chain.kind)
    return merged, report
