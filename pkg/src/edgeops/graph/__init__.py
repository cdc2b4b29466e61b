from .algo import Block, block_decompose, cut_tensors, split_two_branch, structural_hash
from .io import canonical_equal, dumps, load_graph, read_graph, write_graph
from .model import (DYNAMIC, HEADER_BYTES, ComputeGraph, Node, QuantParams, TensorSpec, model_size,
                    topo_sort, validate)
from .subjects import SubjectProfile, gen_subject, get_profile, load_profiles
from .surgery import extract_model, merge_models

__all__ = [
    "Block", "block_decompose", "cut_tensors", "split_two_branch", "structural_hash",
    "canonical_equal", "dumps", "load_graph", "read_graph", "write_graph", "DYNAMIC",
    "HEADER_BYTES", "ComputeGraph", "Node", "QuantParams", "TensorSpec", "model_size",
    "topo_sort", "validate", "SubjectProfile", "gen_subject", "get_profile", "load_profiles",
    "extract_model", "merge_models",
]
