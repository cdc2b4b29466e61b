"""Exhaustive partition search used as a test oracle."""

from __future__ import annotations

from itertools import combinations

from ..errors import NoCutTensor, NotTwoBranch, TooLarge
from ..graph.model import ComputeGraph
from .partition import (PartitionPlan, Strategy, _best, evaluate_cut, interior_candidates,
                        two_branch_candidates)

MAX_NODES = 40


def candidate_tensors(g: ComputeGraph) -> list[str]:
    outs = set(g.output_names)
    return sorted(t for n in g.nodes for t in n.outputs if t not in outs)


def enumerate_valid_cuts(g: ComputeGraph, max_cut: int = 2) -> list[PartitionPlan]:
    if len(g.nodes) > MAX_NODES:
        raise TooLarge(f"{g.name}: {len(g.nodes)} nodes exceeds the oracle limit {MAX_NODES}")
    tensors = candidate_tensors(g)
    try:
        tb = set(two_branch_candidates(g))
    except (NotTwoBranch, NoCutTensor):
        tb = set()
    inner = set(interior_candidates(g))
    plans = []
    for k in range(1, max_cut + 1):
        for cut in combinations(tensors, k):
            if k == 1:
                strategy = Strategy.SINGLE_CUT
            elif cut in tb and cut not in inner:
                strategy = Strategy.TWO_BRANCH
            else:
                strategy = Strategy.BRANCH_INTERIOR
            plan = evaluate_cut(g, cut, strategy)
            if plan is not None:
                plans.append(plan)
    return plans


def brute_force_partition(g: ComputeGraph, max_cut: int = 2) -> PartitionPlan:
    best = _best(enumerate_valid_cuts(g, max_cut), g)
    if best is None:
        raise NoCutTensor(f"{g.name}: no valid cut of size <= {max_cut}")
    return best
