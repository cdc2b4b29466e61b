"""Operator compositions: QE = E after Q, QEP = P after E after Q."""

from __future__ import annotations

from ..errors import OperatorError
from ..graph.model import ComputeGraph
from .early_exit import ExitReport, early_exit
from .partition import PartitionPlan, apply_partition, partition_auto
from .quantize import quantize_static


def compose_qe(g: ComputeGraph, calib) -> tuple[ComputeGraph, ExitReport]:
    q, _ = quantize_static(g, calib)
    return early_exit(q)


def compose_qep(g: ComputeGraph, calib) -> tuple[ComputeGraph, ComputeGraph, PartitionPlan]:
    qe, report = compose_qe(g, calib)
    plan = partition_auto(qe)
    # the exit splice has to sit in the second half
    stray = [nid for nid in report.decision_node_ids if nid not in plan.tail_node_ids]
    if stray:
        raise OperatorError(f"early-exit splice nodes {stray} ended up in the head")
    head, tail = apply_partition(qe, plan)
    return head, tail, plan
