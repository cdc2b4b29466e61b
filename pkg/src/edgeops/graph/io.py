"""Canonical JSON serialization (``.cg.json``)."""

from __future__ import annotations

import base64
import json
from pathlib import Path

from ..errors import GraphError, MalformedGraph
from .model import ComputeGraph, Node, QuantParams, TensorSpec, topo_sort, validate

TOP_KEYS = {"name", "dynamic_input", "inputs", "outputs", "initializers", "nodes"}
OPTIONAL_TOP_KEYS = {"value_info", "metadata"}


def tensor_to_dict(t: TensorSpec) -> dict:
    d = {"name": t.name, "dtype": t.dtype, "dims": list(t.dims)}
    if t.payload_bytes:
        d["payload_bytes"] = t.payload_bytes
    if t.payload is not None:
        d["payload_b64"] = base64.b64encode(t.payload).decode("ascii")
    if t.quant is not None:
        d["scale"] = t.quant.scale
        d["zero_point"] = t.quant.zero_point
        d["offset"] = t.quant.offset
    return d


def tensor_from_dict(d: dict) -> TensorSpec:
    try:
        name = d["name"]
        dtype = d["dtype"]
        dims = tuple(d["dims"])
    except (KeyError, TypeError) as e:
        raise MalformedGraph(f"tensor entry missing field: {e}") from None
    if not isinstance(name, str):
        raise MalformedGraph(f"tensor name must be a string: {name!r}")
    payload = None
    if "payload_b64" in d:
        try:
            payload = base64.b64decode(d["payload_b64"], validate=True)
        except (ValueError, TypeError):
            raise MalformedGraph(f"bad base64 payload on {name!r}") from None
    quant = None
    if "scale" in d:
        quant = QuantParams(float(d["scale"]), int(d["zero_point"]), float(d.get("offset", 0.0)))
    return TensorSpec(name, dtype, dims, int(d.get("payload_bytes", 0)), payload, quant)


def node_to_dict(n: Node) -> dict:
    return {
        "id": n.id,
        "op_type": n.op_type,
        "inputs": list(n.inputs),
        "outputs": list(n.outputs),
        "param_bytes": n.param_bytes,
        "cost_units": n.cost_units,
        "gpu_compatible": n.gpu_compatible,
    }


def node_from_dict(d: dict) -> Node:
    try:
        return Node(
            id=d["id"],
            op_type=d["op_type"],
            inputs=tuple(d["inputs"]),
            outputs=tuple(d["outputs"]),
            param_bytes=int(d["param_bytes"]),
            cost_units=float(d["cost_units"]),
            gpu_compatible=bool(d["gpu_compatible"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedGraph(f"node entry malformed: {e!r}") from None


def to_dict(g: ComputeGraph) -> dict:
    """Canonical dict: nodes in topo order, side tables sorted by name."""
    order = topo_sort(g)
    nm = g.node_map
    d = {
        "name": g.name,
        "dynamic_input": g.dynamic_input,
        "inputs": [tensor_to_dict(t) for t in g.inputs],
        "outputs": [tensor_to_dict(t) for t in g.outputs],
        "initializers": [tensor_to_dict(t) for t in sorted(g.initializers, key=lambda t: t.name)],
        "nodes": [node_to_dict(nm[i]) for i in order],
    }
    if g.value_info:
        d["value_info"] = [tensor_to_dict(t) for t in sorted(g.value_info, key=lambda t: t.name)]
    if g.metadata:
        d["metadata"] = dict(g.metadata)
    return d


def from_dict(d: dict) -> ComputeGraph:
    if not isinstance(d, dict):
        raise MalformedGraph("document root must be an object")
    missing = TOP_KEYS - d.keys()
    if missing:
        raise MalformedGraph(f"missing top-level keys: {sorted(missing)}")
    extra = d.keys() - TOP_KEYS - OPTIONAL_TOP_KEYS
    if extra:
        raise MalformedGraph(f"unknown top-level keys: {sorted(extra)}")
    for key in ("inputs", "outputs", "initializers", "nodes"):
        if not isinstance(d[key], list):
            raise MalformedGraph(f"{key!r} must be a list")
    return ComputeGraph(
        name=d["name"],
        inputs=tuple(tensor_from_dict(t) for t in d["inputs"]),
        outputs=tuple(tensor_from_dict(t) for t in d["outputs"]),
        nodes=tuple(node_from_dict(n) for n in d["nodes"]),
        initializers=tuple(tensor_from_dict(t) for t in d["initializers"]),
        value_info=tuple(tensor_from_dict(t) for t in d.get("value_info", [])),
        dynamic_input=bool(d["dynamic_input"]),
        metadata=dict(d.get("metadata", {})),
    )


def dumps(g: ComputeGraph) -> bytes:
    return json.dumps(to_dict(g), sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_graph(data: bytes | str, *, single_io: bool = False) -> ComputeGraph:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedGraph(f"not valid JSON: {e}") from None
    try:
        g = from_dict(doc)
    except GraphError:
        raise
    except (TypeError, ValueError, AttributeError) as e:
        raise MalformedGraph(str(e)) from None
    return validate(g, single_io=single_io)


def read_graph(path: str | Path) -> ComputeGraph:
    return load_graph(Path(path).read_bytes())


def write_graph(g: ComputeGraph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(g))
    return path


def canonical_equal(a: ComputeGraph, b: ComputeGraph, *, ignore_name: bool = True) -> bool:
    da, db = to_dict(a), to_dict(b)
    if ignore_name:
        da.pop("name")
        db.pop("name")
    dump = lambda x: json.dumps(x, sort_keys=True, separators=(",", ":"))  # noqa: E731
    return dump(da) == dump(db)
