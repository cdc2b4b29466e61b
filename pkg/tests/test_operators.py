from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgeops.errors import (AlreadyQuantized, EmptyCalibration, NoCutTensor, NotTwoBranch,
                            StalePlan, TooFewBlocks)
from edgeops.graph import (HEADER_BYTES, block_decompose, canonical_equal,
                           model_size, split_two_branch, validate)
from edgeops.graph.algo import boundary_dims
from edgeops.operators import (Strategy, apply_partition, brute_force_partition, compose_qe,
                               compose_qep, early_exit, enumerate_valid_cuts,
                               find_partition_branch_interior, find_partition_single,
                               find_partition_two_branch, make_calibration, partition_auto,
                               quantize_static, rejoin)
from edgeops.operators.early_exit import exit_chain
from edgeops.operators.quantize import dequantize_array, quant_params, quantize_array

from graphs import MIB, Builder, block_chain, heuristic_classes, random_graph

CALIB = make_calibration(seed=0)


def mib(n):
    return int(n * MIB / 4)


# -- quantization

def test_quant_params_symmetric_example():
    w = np.array([-1.0, 0.0, 1.0])
    qp = quant_params(w)
    assert qp.scale == pytest.approx(2 / 255)
    assert qp.zero_point == 128
    q = quantize_array(w, qp)
    assert q.tolist() == [1, 128, 255]
    assert np.max(np.abs(dequantize_array(q, qp) - w)) <= qp.scale / 2 + 1e-12


def test_quant_params_constant_tensor():
    w = np.array([5.0, 5.0])
    qp = quant_params(w)
    assert (qp.scale, qp.zero_point) == (1.0, 0)
    q = quantize_array(w, qp)
    assert q.tolist() == [0, 0]
    assert dequantize_array(q, qp).tolist() == [5.0, 5.0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=64))
def test_quant_round_trip_within_half_step(values):
    w = np.array(values)
    if np.ptp(w) == 0:
        return
    qp = quant_params(w)
    err = np.max(np.abs(dequantize_array(quantize_array(w, qp), qp) - w))
    assert err <= qp.scale / 2 * (1 + 1e-9) + 1e-12


def payload_graph(seed=0):
    """Chain whose initializers carry real F32 payloads."""
    rng = np.random.default_rng(seed)
    b = Builder("payload")
    t = "x"
    for k in range(3):
        t = b.node("Conv", [t], weight=16 + k)
    inits = []
    for w in b.inits:
        data = rng.normal(0, 1, w.dims[0]).astype("<f4")
        inits.append(replace(w, payload=data.tobytes()))
    b.inits = inits
    return b.build(t)


def test_quantize_static_payloads():
    g = payload_graph()
    q, rep = quantize_static(g, CALIB)
    validate(q)
    assert [n.op_type for n in q.nodes] == [n.op_type for n in g.nodes]
    for t0, t1 in zip(sorted(g.initializers, key=lambda t: t.name),
                      sorted(q.initializers, key=lambda t: t.name)):
        assert t1.dtype == "U8"
        assert t1.payload_bytes == -(-t0.payload_bytes // 4) + 8
        w = np.frombuffer(t0.payload, dtype="<f4").astype(np.float64)
        deq = dequantize_array(np.frombuffer(t1.payload, dtype=np.uint8), t1.quant)
        assert np.max(np.abs(deq - w)) <= t1.quant.scale / 2 + 1e-6
    assert rep.activation_ranges == {"x": [pytest.approx(min(map(np.min, CALIB))),
                                           pytest.approx(max(map(np.max, CALIB)))]}


def test_quantize_errors():
    g = payload_graph()
    with pytest.raises(EmptyCalibration):
        quantize_static(g, [])
    q, _ = quantize_static(g, CALIB)
    with pytest.raises(AlreadyQuantized):
        quantize_static(q, CALIB)


# -- early exit

def residual_chain(kinds, w=5):
    """stem, residual units ("A" and "B" differ in ops), head."""
    b = Builder("ee")
    t = b.node("Conv", ["x"], weight=10)
    for k in kinds:
        ops = ("Conv", "Relu") if k == "A" else ("Conv", "Sigmoid")
        t = b.residual(t, weight=w, ops=ops)
    return b.build(b.node("Gemm", [t], weight=3))


def test_early_exit_identical_pair():
    g = residual_chain("AA")
    blocks = block_decompose(g)
    assert len(blocks) == 4
    e, rep = early_exit(g)
    validate(e)
    assert rep.count == 2 and rep.skipped_block_indices == (1, 2)
    assert {n.op_type for n in e.nodes} == {"Conv", "Gemm"}
    assert len(e.nodes) == 2
    assert rep.size_before - rep.size_after == 2 * blocks[1].size_bytes
    assert e.primary_output.dims == g.primary_output.dims


def test_early_exit_mismatch_is_noop():
    g = residual_chain("AB")
    e, rep = early_exit(g)
    assert rep.count == 0 and e is g


def test_early_exit_loops_over_pairs():
    e, rep = early_exit(residual_chain("BAAAA"))
    assert rep.count == 4
    chain = exit_chain(e).blocks
    assert chain[-1].struct_hash != chain[-2].struct_hash or len(chain) < 2


def test_early_exit_too_few_blocks():
    with pytest.raises(TooFewBlocks):
        early_exit(block_chain([1, 2]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_early_exit_properties(seed):
    g = random_graph(seed, two_branch=False)
    if len(block_decompose(g)) < 3:
        return
    e, rep = early_exit(g)
    validate(e)
    assert rep.count % 2 == 0 and rep.count == len(rep.skipped_block_indices)
    assert rep.reduction_ratio >= 1
    assert e.primary_output.dims == g.primary_output.dims
    chain = exit_chain(e)
    if len(chain.blocks) >= 2:
        a, b = chain.blocks[-2], chain.blocks[-1]
        assert not (a.struct_hash == b.struct_hash
                    and boundary_dims(a, chain.graph) == boundary_dims(b, chain.graph))


# -- partition

def test_single_cut_example():
    g = block_chain([10, 40, 30, 20])
    plan = find_partition_single(g)
    assert plan.delta == 0
    assert plan.head_size == plan.tail_size == 50 * MIB + HEADER_BYTES
    assert brute_force_partition(g).delta == 0
    assert len(plan.head_node_ids) == 2


def test_single_cut_two_equal_blocks():
    plan = find_partition_single(block_chain([7, 7]))
    assert plan.delta == 0


def test_single_cut_tie_prefers_output_side():
    g = block_chain([10, 0, 10])
    blocks = block_decompose(g)
    plan = find_partition_single(g)
    assert plan.delta == 0 and plan.cut_tensors == blocks[2].entry_tensors
    assert brute_force_partition(g).cut_tensors == plan.cut_tensors


def test_single_block_raises():
    b = Builder()
    g = b.build(b.residual("x", weight=4))
    with pytest.raises(NoCutTensor):
        find_partition_single(g)
    with pytest.raises(NoCutTensor):
        brute_force_partition(g)


def two_branch_toy(heavy_mib, light_mib, final_mib):
    b = Builder("tb")
    heavy = "x"
    for s in heavy_mib:
        heavy = b.node("Conv", [heavy], weight=mib(s))
    light = b.node("Conv", ["x"], weight=mib(light_mib))
    m = b.node("Add", [heavy, light])
    return b.build(b.node("Conv", [m], weight=mib(final_mib)))


def test_two_branch_symmetric():
    g = two_branch_toy([10, 10], 1, 1)
    assert find_partition_two_branch(g).delta == 0


def test_two_branch_matches_oracle():
    g = two_branch_toy([30, 30, 30], 1, 2)
    plan = find_partition_two_branch(g)
    assert plan.strategy == Strategy.TWO_BRANCH and len(plan.cut_tensors) == 2
    tb = split_two_branch(g)
    assert tb.light_end in plan.cut_tensors
    pairs = [p for p in enumerate_valid_cuts(g) if tb.light_end in p.cut_tensors
             and len(p.cut_tensors) == 2]
    assert plan.delta == min(p.delta for p in pairs)


def test_two_branch_rejects_chain():
    with pytest.raises(NotTwoBranch):
        find_partition_two_branch(block_chain([1, 2, 3]))


def branchy(stem, left, right, final):
    b = Builder("branchy")
    t = b.node("Conv", ["x"], weight=mib(stem))
    lt, rt = t, t
    for s in left:
        lt = b.node("Conv", [lt], weight=mib(s))
    for s in right:
        rt = b.node("Conv", [rt], weight=mib(s))
    c = b.node("Concat", [lt, rt])
    return b.build(b.node("Gemm", [c], weight=mib(final)))


def test_branch_interior_beats_single():
    g = branchy(13, [4, 4], [4, 4], 11)
    single = find_partition_single(g)
    plan = find_partition_branch_interior(g)
    assert single.delta == 14 * MIB
    assert plan.strategy == Strategy.BRANCH_INTERIOR and plan.delta == 2 * MIB
    assert plan.delta == brute_force_partition(g).delta


def test_branch_interior_keeps_exact_single():
    g = branchy(20, [5, 5], [5, 5], 0.0001)
    plan = find_partition_branch_interior(g)
    assert plan.strategy == Strategy.SINGLE_CUT


def test_apply_partition_round_trip_and_stale():
    g = branchy(13, [4, 4], [4, 4], 11)
    plan = find_partition_branch_interior(g)
    head, tail = apply_partition(g, plan)
    assert head.output_names == tail.input_names == plan.cut_tensors
    assert canonical_equal(rejoin(head, tail), g)
    other = block_chain([1, 2, 3])
    with pytest.raises(StalePlan):
        apply_partition(other, plan)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_heuristics_match_oracle_in_class(seed):
    g = random_graph(seed)
    plans, pairs = heuristic_classes(g)
    if not plans:
        return
    best = min(p.delta for p in plans)
    for plan, cls in pairs:
        assert plan.delta == min(p.delta for p in cls)
        assert plan.delta >= best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_partition_round_trip_fuzz(seed):
    g = random_graph(seed)
    try:
        plan = partition_auto(g)
    except NoCutTensor:
        return
    head, tail = apply_partition(g, plan)
    assert canonical_equal(rejoin(head, tail), g)
    assert set(n.id for n in head.nodes) == plan.head_node_ids


# -- hybrids

def test_qe_without_pair_is_quantized_model():
    g = residual_chain("AB")
    qe, rep = compose_qe(g, CALIB)
    q, _ = quantize_static(g, CALIB)
    assert rep.count == 0 and canonical_equal(qe, q)


def test_qep_pipeline_equivalence():
    g = residual_chain("AA")
    head, tail, plan = compose_qep(g, CALIB)
    q, _ = quantize_static(g, CALIB)
    e, rep = early_exit(q)
    h2, t2 = apply_partition(e, partition_auto(e))
    assert canonical_equal(head, h2) and canonical_equal(tail, t2)
    assert model_size(head) + model_size(tail) == model_size(e) + HEADER_BYTES
    assert set(rep.decision_node_ids) <= plan.tail_node_ids
