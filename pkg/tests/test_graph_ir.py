"""Graph parsing, shape inference, fixed-point execution, address layout."""

import json

import numpy as np
import pytest

from atlas.graph import (
    Graph,
    GraphError,
    address_layout,
    broadcast_shapes,
    div_trunc,
    execute,
    parse_graph,
    shape_infer,
)


def make_doc(**over):
    doc = {
        "scale": 1,
        "inputs": ["a", "b"],
        "outputs": ["c"],
        "tensors": [
            {"name": "a", "shape": [2], "role": "input"},
            {"name": "b", "shape": [2], "role": "input"},
            {"name": "c", "shape": [2], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "Add", "inputs": ["a", "b"], "outputs": ["c"], "attrs": {}}],
    }
    doc.update(over)
    return doc


def test_parse_single_add():
    g = parse_graph(json.dumps(make_doc()))
    assert len(g.nodes) == 1
    assert len(g.tensors) == 3
    assert g.scale == 1


def test_parse_rejects_undeclared_tensor():
    doc = make_doc(nodes=[{"op": "Add", "inputs": ["a", "zz"], "outputs": ["c"], "attrs": {}}])
    with pytest.raises(GraphError, match="zz"):
        parse_graph(doc)


def test_parse_rejects_unknown_op():
    doc = make_doc(nodes=[{"op": "Conv", "inputs": ["a", "b"], "outputs": ["c"], "attrs": {}}])
    with pytest.raises(GraphError, match="Conv"):
        parse_graph(doc)


def test_parse_rejects_cycle():
    doc = make_doc(
        tensors=[
            {"name": "a", "shape": [2], "role": "input"},
            {"name": "b", "shape": [2], "role": "input"},
            {"name": "x", "shape": [2], "role": "intermediate"},
            {"name": "y", "shape": [2], "role": "intermediate"},
            {"name": "c", "shape": [2], "role": "output"},
        ],
        nodes=[
            {"op": "Add", "inputs": ["a", "y"], "outputs": ["x"], "attrs": {}},
            {"op": "Add", "inputs": ["x", "b"], "outputs": ["y"], "attrs": {}},
            {"op": "Add", "inputs": ["x", "y"], "outputs": ["c"], "attrs": {}},
        ],
    )
    with pytest.raises(GraphError, match="cycle"):
        parse_graph(doc)


def test_parse_shape_mismatch_names_node():
    doc = make_doc(
        tensors=[
            {"name": "a", "shape": [2], "role": "input"},
            {"name": "b", "shape": [3], "role": "input"},
            {"name": "c", "shape": [2], "role": "output"},
        ],
    )
    with pytest.raises(GraphError, match="Add#0"):
        parse_graph(doc)


def test_execute_add_trivial():
    g = parse_graph(make_doc())
    res = execute(g, {"a": [1, 2], "b": [3, 4]})
    assert res.tensors["c"].tolist() == [4, 6]


def test_execute_einsum_hand_matmul():
    doc = {
        "scale": 1,
        "inputs": ["x", "w"],
        "outputs": ["y"],
        "tensors": [
            {"name": "x", "shape": [2, 2], "role": "input"},
            {"name": "w", "shape": [2, 2], "role": "input"},
            {"name": "y", "shape": [2, 2], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "Einsum", "inputs": ["x", "w"], "outputs": ["y"],
                   "attrs": {"equation": "mk,kn->mn"}}],
    }
    g = parse_graph(doc)
    res = execute(g, {"x": [[1, 2], [3, 4]], "w": [[5, 6], [7, 8]]})
    assert res.tensors["y"].tolist() == [[19, 22], [43, 50]]


def test_execute_relu_sign_rule():
    doc = {
        "scale": 128,
        "inputs": ["x"],
        "outputs": ["y"],
        "tensors": [
            {"name": "x", "shape": [2], "role": "input"},
            {"name": "y", "shape": [2], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "Relu", "inputs": ["x"], "outputs": ["y"], "attrs": {}}],
    }
    g = parse_graph(doc)
    res = execute(g, {"x": [-300, 300]})
    assert res.tensors["y"].tolist() == [0, 300]


def test_execute_mul_rescale_truncation():
    doc = make_doc(scale=128, nodes=[{"op": "Mul", "inputs": ["a", "b"],
                                      "outputs": ["c"], "attrs": {}}])
    g = parse_graph(doc)
    res = execute(g, {"a": [129, -129], "b": [129, 129]})
    # 129*129 = 16641 -> trunc(16641/128) = 130; negative truncates toward zero
    assert res.tensors["c"].tolist() == [130, -130]
    rem = res.advice["Mul#0"]
    assert rem.tolist() == [16641 - 130 * 128, -(16641 - 130 * 128)]


def test_div_trunc_invariant():
    a = np.array([7, -7, 100, -100, 0], dtype=np.int64)
    b = np.array([3, 3, -7, -7, 5], dtype=np.int64)
    q, r = div_trunc(a, b)
    assert (a == q * b + r).all()
    assert (np.abs(r) < np.abs(b)).all()
    # truncation toward zero: remainder carries the dividend's sign
    assert ((r == 0) | (np.sign(r) == np.sign(a))).all()


def test_execute_division_by_zero():
    doc = make_doc(scale=1, nodes=[{"op": "Div", "inputs": ["a", "b"],
                                    "outputs": ["c"], "attrs": {}}])
    g = parse_graph(doc)
    with pytest.raises(GraphError, match="zero"):
        execute(g, {"a": [1, 2], "b": [0, 1]})


def test_broadcast_shapes_rule():
    assert broadcast_shapes((2, 1), (1, 3), "t") == (2, 3)
    assert broadcast_shapes((4,), (2, 4), "t") == (2, 4)
    with pytest.raises(GraphError):
        broadcast_shapes((2,), (3,), "t")


def test_shape_infer_reshape_and_gather():
    doc = {
        "scale": 1,
        "inputs": ["x"],
        "outputs": ["g"],
        "tensors": [
            {"name": "x", "shape": [6], "role": "input"},
            {"name": "r", "shape": [2, 3], "role": "intermediate"},
            {"name": "idx", "shape": [2], "role": "initializer"},
            {"name": "g", "shape": [2, 3], "role": "output"},
        ],
        "initializers": {"idx": [1, 0]},
        "nodes": [
            {"op": "Reshape", "inputs": ["x"], "outputs": ["r"],
             "attrs": {"target_shape": [2, 3]}},
            {"op": "Gather", "inputs": ["r", "idx"], "outputs": ["g"],
             "attrs": {"axis": 0}},
        ],
    }
    g = parse_graph(doc)
    shapes = shape_infer(g)
    assert shapes["r"] == (2, 3)
    assert shapes["g"] == (2, 3)
    res = execute(g, {"x": [1, 2, 3, 4, 5, 6]})
    assert res.tensors["g"].tolist() == [[4, 5, 6], [1, 2, 3]]


def test_gather_reference_semantics():
    # axis-0 gather from [5,4] with index shape [3] -> [3,4]
    doc = {
        "scale": 1,
        "inputs": ["x"],
        "outputs": ["g"],
        "tensors": [
            {"name": "x", "shape": [5, 4], "role": "input"},
            {"name": "idx", "shape": [3], "role": "initializer"},
            {"name": "g", "shape": [3, 4], "role": "output"},
        ],
        "initializers": {"idx": [4, 0, 2]},
        "nodes": [{"op": "Gather", "inputs": ["x", "idx"], "outputs": ["g"],
                   "attrs": {"axis": 0}}],
    }
    g = parse_graph(doc)
    data = np.arange(20).reshape(5, 4)
    res = execute(g, {"x": data})
    assert res.tensors["g"].tolist() == data[[4, 0, 2]].tolist()


def test_select_and_comparisons():
    doc = {
        "scale": 1,
        "inputs": ["a", "b"],
        "outputs": ["s"],
        "tensors": [
            {"name": "a", "shape": [3], "role": "input"},
            {"name": "b", "shape": [3], "role": "input"},
            {"name": "c", "shape": [3], "role": "intermediate"},
            {"name": "s", "shape": [3], "role": "output"},
        ],
        "initializers": {},
        "nodes": [
            {"op": "Gte", "inputs": ["a", "b"], "outputs": ["c"], "attrs": {}},
            {"op": "Select", "inputs": ["c", "a", "b"], "outputs": ["s"], "attrs": {}},
        ],
    }
    g = parse_graph(doc)
    res = execute(g, {"a": [5, -2, 3], "b": [3, 0, 3]})
    assert res.tensors["c"].tolist() == [1, 0, 1]
    assert res.tensors["s"].tolist() == [5, 0, 3]  # elementwise max


def test_reduce_ops():
    doc = {
        "scale": 1,
        "inputs": ["x"],
        "outputs": ["m"],
        "tensors": [
            {"name": "x", "shape": [2, 4], "role": "input"},
            {"name": "m", "shape": [2], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "ReduceMean", "inputs": ["x"], "outputs": ["m"],
                   "attrs": {"axis": 1}}],
    }
    g = parse_graph(doc)
    res = execute(g, {"x": [[1, 2, 3, 5], [10, 10, 10, 11]]})
    assert res.tensors["m"].tolist() == [2, 10]  # trunc(11/4) = 2, trunc(41/4) = 10


def test_execution_determinism():
    g = parse_graph(make_doc(scale=128, nodes=[{"op": "Mul", "inputs": ["a", "b"],
                                                "outputs": ["c"], "attrs": {}}]))
    r1 = execute(g, {"a": [1000, -77], "b": [3, 999]})
    r2 = execute(g, {"a": [1000, -77], "b": [3, 999]})
    assert (r1.tensors["c"] == r2.tensors["c"]).all()


def test_address_layout_packing():
    doc = make_doc(
        tensors=[
            {"name": "a", "shape": [4], "role": "input"},
            {"name": "b", "shape": [2, 3], "role": "input"},
            {"name": "c", "shape": [4], "role": "output"},
        ],
        inputs=["a", "b"],
        nodes=[{"op": "Relu", "inputs": ["a"], "outputs": ["c"], "attrs": {}}],
    )
    g = parse_graph(doc)
    layout = address_layout(g)
    assert layout["a"] == 1
    assert layout["b"] == 5
    assert layout["c"] == 11
    total = 1 + sum(g.tensors[t].size for t in g.tensors)
    assert max(layout[t] + g.tensors[t].size for t in layout) == total


def test_address_layout_no_collisions():
    g = parse_graph(make_doc())
    layout = address_layout(g)
    seen = set()
    for name, base in layout.items():
        for i in range(g.tensors[name].size):
            addr = base + i
            assert addr != 0
            assert addr not in seen
            seen.add(addr)
