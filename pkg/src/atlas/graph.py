"""Quantized computation-graph IR: parsing, shape inference, execution.

The prover's native input is a JSON document (schema below), not ONNX
protobuf; the exporter owns the protobuf side.  All values are signed
fixed-point integers at one global scale S.  Execution is deterministic
and bit-exact: elementwise adds stay integer, multiplies rescale by S with
truncation toward zero, divisions record their remainder as advice, and
non-linear operators evaluate through the same lookup tables the prover
commits to.

Schema (field names are load-bearing):
  { "scale": int, "inputs": [name], "outputs": [name],
    "tensors": [{"name": str, "shape": [int], "role": str}],
    "initializers": {name: [int]},             # row-major
    "nodes": [{"op": str, "inputs": [name], "outputs": [name],
               "attrs": {"axis": int, "equation": str, "target_shape": [int]}}] }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_OPS = {
    "Add", "Sub", "Mul", "Div",
    "Relu", "Sigmoid", "Softmax", "Tanh", "Erf",
    "Gte", "Eq", "Rsqrt",
    "Reshape", "Broadcast", "Gather", "Select",
    "ReduceSum", "ReduceMean",
    "Einsum",
}

EINSUM_PATTERNS = {"mk,kn->mn", "bmk,bkn->bmn"}

ROLES = {"input", "initializer", "intermediate", "output"}

# Working-range guard: anything past this is an overflow error, well before
# int64 wraps.
VALUE_LIMIT = 1 << 62

# Lookup operands must fit the 16-bit table domain.
LOOKUP_MIN, LOOKUP_MAX = -(1 << 15), (1 << 15) - 1


class GraphError(ValueError):
    """Parse/validation failure; message carries the offending node/tensor."""


@dataclass
class TensorSpec:
    name: str
    shape: tuple
    role: str

    @property
    def size(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n


@dataclass
class Node:
    op: str
    inputs: list
    outputs: list
    attrs: dict = field(default_factory=dict)
    name: str = ""


@dataclass
class Graph:
    nodes: list
    tensors: dict         # name -> TensorSpec
    initializers: dict    # name -> np.ndarray (int64, shaped)
    inputs: list
    outputs: list
    scale: int

    def tensor_order(self) -> list:
        """Declaration order; address_layout packs in this order."""
        return list(self.tensors)


def parse_graph(document) -> Graph:
    """Parse and validate a graph JSON document (bytes, str, or dict)."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise GraphError(f"invalid JSON: {e}") from e
    else:
        doc = document

    for key in ("scale", "inputs", "outputs", "tensors", "nodes"):
        if key not in doc:
            raise GraphError(f"missing top-level field '{key}'")
    scale = int(doc["scale"])
    if scale < 1:
        raise GraphError("scale must be a positive integer")

    tensors = {}
    for spec in doc["tensors"]:
        name = spec["name"]
        if name in tensors:
            raise GraphError(f"duplicate tensor '{name}'")
        shape = tuple(int(d) for d in spec["shape"])
        if any(d <= 0 for d in shape) or (shape and np.prod(shape) <= 0):
            raise GraphError(f"tensor '{name}' has non-positive dimensions")
        role = spec["role"]
        if role not in ROLES:
            raise GraphError(f"tensor '{name}' has unknown role '{role}'")
        tensors[name] = TensorSpec(name, shape, role)

    initializers = {}
    for name, data in doc.get("initializers", {}).items():
        if name not in tensors:
            raise GraphError(f"initializer for undeclared tensor '{name}'")
        spec = tensors[name]
        arr = np.array(data, dtype=np.int64).reshape(spec.shape)
        initializers[name] = arr
    for name, spec in tensors.items():
        if spec.role == "initializer" and name not in initializers:
            raise GraphError(f"tensor '{name}' has role initializer but no data")

    for io_name in list(doc["inputs"]) + list(doc["outputs"]):
        if io_name not in tensors:
            raise GraphError(f"graph io references undeclared tensor '{io_name}'")

    nodes = []
    for i, nd in enumerate(doc["nodes"]):
        op = nd["op"]
        if op not in SUPPORTED_OPS:
            raise GraphError(f"node {i}: unsupported op '{op}'")
        for t in list(nd["inputs"]) + list(nd["outputs"]):
            if t not in tensors:
                raise GraphError(f"node {i} ({op}): undeclared tensor '{t}'")
        nodes.append(Node(op, list(nd["inputs"]), list(nd["outputs"]),
                          dict(nd.get("attrs", {})), name=f"{op}#{i}"))

    g = Graph(nodes, tensors, initializers, list(doc["inputs"]), list(doc["outputs"]), scale)
    g.nodes = _toposort(g)
    shape_infer(g)  # validates shapes; raises on mismatch
    return g


def _toposort(g: Graph) -> list:
    """Topological node order, declaration order breaking ties."""
    produced = set(g.inputs) | set(
        n for n, s in g.tensors.items() if s.role == "initializer"
    )
    producers = {}
    for node in g.nodes:
        for out in node.outputs:
            if out in producers or out in produced:
                raise GraphError(f"tensor '{out}' produced more than once")
            producers[out] = node
    ordered = []
    pending = list(g.nodes)
    while pending:
        progressed = False
        remaining = []
        for node in pending:
            if all(t in produced for t in node.inputs):
                ordered.append(node)
                produced.update(node.outputs)
                progressed = True
            else:
                remaining.append(node)
        if not progressed:
            bad = remaining[0]
            missing = [t for t in bad.inputs if t not in produced]
            if any(m in producers for m in missing):
                raise GraphError(f"cycle involving node {bad.name}")
            raise GraphError(f"node {bad.name}: input tensor '{missing[0]}' never produced")
        pending = remaining
    return ordered


def broadcast_shapes(a: tuple, b: tuple, node: str) -> tuple:
    """Trailing-aligned broadcast; size-1 dimensions stretch."""
    out = []
    for i in range(1, max(len(a), len(b)) + 1):
        da = a[-i] if i <= len(a) else 1
        db = b[-i] if i <= len(b) else 1
        if da != db and da != 1 and db != 1:
            raise GraphError(f"node {node}: cannot broadcast {a} with {b}")
        out.append(max(da, db))
    return tuple(reversed(out))


def shape_infer(g: Graph) -> dict:
    """Assign a concrete shape to every tensor; validate per-op rules."""
    shapes = {name: spec.shape for name, spec in g.tensors.items()}

    def check(name, expect, node):
        if shapes[name] != tuple(expect):
            raise GraphError(
                f"node {node}: tensor '{name}' declared {shapes[name]}, inferred {tuple(expect)}"
            )

    for node in g.nodes:
        op = node.op
        if op in ("Add", "Sub", "Mul", "Div", "Gte", "Eq"):
            sa, sb = shapes[node.inputs[0]], shapes[node.inputs[1]]
            check(node.outputs[0], broadcast_shapes(sa, sb, node.name), node.name)
        elif op in ("Relu", "Sigmoid", "Tanh", "Erf", "Rsqrt", "Softmax"):
            check(node.outputs[0], shapes[node.inputs[0]], node.name)
        elif op == "Reshape":
            target = tuple(int(d) for d in node.attrs["target_shape"])
            if int(np.prod(target)) != int(np.prod(shapes[node.inputs[0]])):
                raise GraphError(
                    f"node {node.name}: reshape {shapes[node.inputs[0]]} -> {target} changes size"
                )
            check(node.outputs[0], target, node.name)
        elif op == "Broadcast":
            target = tuple(int(d) for d in node.attrs["target_shape"])
            broadcast_shapes(shapes[node.inputs[0]], target, node.name)
            check(node.outputs[0], target, node.name)
        elif op == "Gather":
            axis = int(node.attrs.get("axis", 0))
            data, idx = shapes[node.inputs[0]], shapes[node.inputs[1]]
            if axis < 0 or axis >= len(data):
                raise GraphError(f"node {node.name}: gather axis {axis} out of range")
            check(node.outputs[0], data[:axis] + idx + data[axis + 1 :], node.name)
        elif op == "Select":
            sc = shapes[node.inputs[0]]
            sx, sy = shapes[node.inputs[1]], shapes[node.inputs[2]]
            out = broadcast_shapes(broadcast_shapes(sc, sx, node.name), sy, node.name)
            check(node.outputs[0], out, node.name)
        elif op in ("ReduceSum", "ReduceMean"):
            axis = int(node.attrs.get("axis", -1))
            src = shapes[node.inputs[0]]
            axis = axis % len(src)
            check(node.outputs[0], src[:axis] + src[axis + 1 :], node.name)
        elif op == "Einsum":
            eq = node.attrs.get("equation", "")
            if eq not in EINSUM_PATTERNS:
                raise GraphError(f"node {node.name}: unsupported einsum equation '{eq}'")
            sa, sb = shapes[node.inputs[0]], shapes[node.inputs[1]]
            if eq == "mk,kn->mn":
                if len(sa) != 2 or len(sb) != 2 or sa[1] != sb[0]:
                    raise GraphError(f"node {node.name}: einsum shapes {sa} x {sb} mismatch")
                check(node.outputs[0], (sa[0], sb[1]), node.name)
            else:  # bmk,bkn->bmn
                if len(sa) != 3 or len(sb) != 3 or sa[0] != sb[0] or sa[2] != sb[1]:
                    raise GraphError(f"node {node.name}: einsum shapes {sa} x {sb} mismatch")
                check(node.outputs[0], (sa[0], sa[1], sb[2]), node.name)
        else:  # pragma: no cover
            raise GraphError(f"node {node.name}: no shape rule for '{op}'")
    return shapes


def address_layout(g: Graph) -> dict:
    """Base address per tensor in one flat space; 0 is the reserved null."""
    base = 1
    layout = {}
    for name in g.tensor_order():
        layout[name] = base
        base += g.tensors[name].size
    return layout


def div_trunc(a, b):
    """Elementwise truncated-toward-zero quotient and remainder (numpy)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if np.any(b == 0):
        raise GraphError("division by zero")
    q = np.sign(a) * np.sign(b) * (np.abs(a) // np.abs(b))
    r = a - q * b
    return q, r


class ExecutionResult:
    __slots__ = ("tensors", "advice")

    def __init__(self):
        self.tensors = {}
        self.advice = {}   # node name -> remainder array for Div-like ops


def _check_range(arr, node, limit=VALUE_LIMIT):
    m = np.abs(arr).max() if arr.size else 0
    if m >= limit:
        raise GraphError(f"node {node}: value overflow beyond working range")


def _check_lookup_range(arr, node):
    if arr.size and (arr.min() < LOOKUP_MIN or arr.max() > LOOKUP_MAX):
        raise GraphError(f"node {node}: lookup operand outside 16-bit range")


def execute(g: Graph, inputs: dict, registry=None) -> ExecutionResult:
    """Run the graph on integer input tensors with fixed-point semantics."""
    from .tables import default_registry  # deferred: tables depend on field only

    if registry is None:
        registry = default_registry(g.scale)
    S = g.scale
    res = ExecutionResult()
    vals = res.tensors

    for name in g.inputs:
        if name not in inputs:
            raise GraphError(f"missing input tensor '{name}'")
        arr = np.array(inputs[name], dtype=np.int64).reshape(g.tensors[name].shape)
        vals[name] = arr
    for name, arr in g.initializers.items():
        vals[name] = arr

    for node in g.nodes:
        op = node.op
        ins = [vals[t] for t in node.inputs]
        if op == "Add":
            out = ins[0] + ins[1]
        elif op == "Sub":
            out = ins[0] - ins[1]
        elif op == "Mul":
            raw = ins[0].astype(object) * ins[1].astype(object)
            if raw.size and max(abs(int(v)) for v in raw.flat) >= VALUE_LIMIT:
                raise GraphError(f"node {node.name}: value overflow beyond working range")
            out, rem = div_trunc((ins[0] * ins[1]), S)
            res.advice[node.name] = rem
        elif op == "Div":
            out, rem = div_trunc(ins[0] * S, np.broadcast_to(ins[1], broadcast_shapes(
                ins[0].shape, ins[1].shape, node.name)))
            res.advice[node.name] = rem
        elif op in ("Relu", "Sigmoid", "Tanh", "Erf", "Rsqrt"):
            _check_lookup_range(ins[0], node.name)
            out = registry[op.lower()].apply_np(ins[0])
        elif op == "Softmax":
            _check_lookup_range(ins[0], node.name)
            e = registry["exp"].apply_np(ins[0])
            axis = int(node.attrs.get("axis", -1)) % ins[0].ndim
            denom = e.sum(axis=axis, keepdims=True)
            out, rem = div_trunc(e * S, np.broadcast_to(denom, e.shape))
            res.advice[node.name] = rem
        elif op == "Gte":
            out = (ins[0] >= ins[1]).astype(np.int64)
        elif op == "Eq":
            out = (ins[0] == ins[1]).astype(np.int64)
        elif op == "Reshape":
            out = ins[0].reshape(tuple(node.attrs["target_shape"]))
        elif op == "Broadcast":
            out = np.broadcast_to(ins[0], tuple(node.attrs["target_shape"])).copy()
        elif op == "Gather":
            if node.inputs[1] not in g.initializers:
                raise GraphError(
                    f"node {node.name}: gather indices must be a static initializer"
                )
            axis = int(node.attrs.get("axis", 0))
            out = np.take(ins[0], ins[1], axis=axis)
        elif op == "Select":
            cond = ins[0]
            if cond.size and not np.isin(cond, (0, 1)).all():
                raise GraphError(f"node {node.name}: select condition must be boolean 0/1")
            shape = broadcast_shapes(
                broadcast_shapes(cond.shape, ins[1].shape, node.name),
                ins[2].shape, node.name)
            out = np.where(np.broadcast_to(cond, shape) == 1,
                           np.broadcast_to(ins[1], shape),
                           np.broadcast_to(ins[2], shape)).astype(np.int64)
        elif op == "ReduceSum":
            axis = int(node.attrs.get("axis", -1)) % ins[0].ndim
            out = ins[0].sum(axis=axis)
        elif op == "ReduceMean":
            axis = int(node.attrs.get("axis", -1)) % ins[0].ndim
            s = ins[0].sum(axis=axis)
            out, rem = div_trunc(s, ins[0].shape[axis])
            res.advice[node.name] = rem
        elif op == "Einsum":
            eq = node.attrs["equation"]
            kdim = ins[0].shape[-1]
            bound = (1 << 15) * (1 << 15) * kdim
            if bound >= VALUE_LIMIT and ins[0].size:
                _check_range(ins[0], node.name, limit=1 << 20)
            raw = np.einsum(eq, ins[0], ins[1])
            out, rem = div_trunc(raw, S)
            res.advice[node.name] = rem
        else:  # pragma: no cover
            raise GraphError(f"node {node.name}: no executor for '{op}'")
        _check_range(out, node.name)
        for oname in node.outputs:
            vals[oname] = out
    return res
