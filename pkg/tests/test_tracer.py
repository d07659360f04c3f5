"""Trace generation, padding, bytecode determinism, memory replay oracles."""

import io
import json

import numpy as np
import pytest

from atlas.graph import parse_graph
from atlas.tables import default_registry
from atlas.trace import (
    OPCLASSES,
    Trace,
    columns_from_trace,
    generate_trace,
    lower_graph,
    replay_read_consistency,
    verify_trace_against_execution,
)


def tiny_add_graph():
    return parse_graph({
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
    })


def small_mlp_graph(din=4, dh=3, dout=2, scale=128, seed=7):
    rng = np.random.default_rng(seed)
    w1 = (rng.standard_normal((din, dh)) * 0.5 * scale).astype(np.int64)
    b1 = (rng.standard_normal(dh) * 0.1 * scale).astype(np.int64)
    w2 = (rng.standard_normal((dh, dout)) * 0.5 * scale).astype(np.int64)
    b2 = (rng.standard_normal(dout) * 0.1 * scale).astype(np.int64)
    return parse_graph({
        "scale": scale,
        "inputs": ["x"],
        "outputs": ["y"],
        "tensors": [
            {"name": "x", "shape": [1, din], "role": "input"},
            {"name": "w1", "shape": [din, dh], "role": "initializer"},
            {"name": "b1", "shape": [1, dh], "role": "initializer"},
            {"name": "h0", "shape": [1, dh], "role": "intermediate"},
            {"name": "h1", "shape": [1, dh], "role": "intermediate"},
            {"name": "h2", "shape": [1, dh], "role": "intermediate"},
            {"name": "w2", "shape": [dh, dout], "role": "initializer"},
            {"name": "b2", "shape": [1, dout], "role": "initializer"},
            {"name": "y0", "shape": [1, dout], "role": "intermediate"},
            {"name": "y1", "shape": [1, dout], "role": "intermediate"},
            {"name": "y", "shape": [1, dout], "role": "output"},
        ],
        "initializers": {
            "w1": w1.reshape(-1).tolist(), "b1": b1.reshape(-1).tolist(),
            "w2": w2.reshape(-1).tolist(), "b2": b2.reshape(-1).tolist(),
        },
        "nodes": [
            {"op": "Einsum", "inputs": ["x", "w1"], "outputs": ["h0"],
             "attrs": {"equation": "mk,kn->mn"}},
            {"op": "Add", "inputs": ["h0", "b1"], "outputs": ["h1"], "attrs": {}},
            {"op": "Relu", "inputs": ["h1"], "outputs": ["h2"], "attrs": {}},
            {"op": "Einsum", "inputs": ["h2", "w2"], "outputs": ["y0"],
             "attrs": {"equation": "mk,kn->mn"}},
            {"op": "Add", "inputs": ["y0", "b2"], "outputs": ["y1"], "attrs": {}},
            {"op": "Relu", "inputs": ["y1"], "outputs": ["y"], "attrs": {}},
        ],
    })


def mlp_inputs(g, seed=3):
    rng = np.random.default_rng(seed)
    din = g.tensors["x"].size
    return {"x": (rng.standard_normal((1, din)) * 0.5 * g.scale).astype(np.int64)}


def test_trace_single_add_two_real_compute_steps():
    g = tiny_add_graph()
    prog = lower_graph(g)
    tr = generate_trace(prog, {"a": [1, 2], "b": [3, 4]})
    classes = [OPCLASSES[int(prog.arrays["opclass"][r])] for r in range(1, prog.n_rows + 1)]
    assert classes.count("add") == 2
    # const pool (scale) + 4 input writes + 2 adds + 2 output reads = 9 -> pad 16
    assert prog.n_rows == 9
    assert tr.length == 16
    verify_trace_against_execution(tr, {"a": [1, 2], "b": [3, 4]})


def test_padding_next_power_of_two():
    g = tiny_add_graph()
    prog = lower_graph(g)
    tr = generate_trace(prog, {"a": [0, 0], "b": [0, 0]})
    assert tr.length & (tr.length - 1) == 0
    cols = columns_from_trace(tr)
    for name in ("write_flag", "inc", "ts1_val"):
        tail = cols.cols[name][tr.n_real:]
        assert all(v == 0 for v in tail)


def test_micro_op_count_matches_independent_prediction():
    # independent micro-op count: consts + init writes + input writes +
    # einsum (M*N*K macs + M*N divs) + adds + relus + output reads
    din, dh, dout = 4, 3, 2
    g = small_mlp_graph(din, dh, dout)
    prog = lower_graph(g)
    expected = (
        1                      # scale constant
        + din * dh + dh + dh * dout + dout   # initializer writes
        + din                  # input writes
        + din * dh + dh        # einsum 1 macs + rescale divs
        + dh                   # bias add
        + dh                   # relu
        + dh * dout + dout     # einsum 2
        + dout + dout          # bias + relu
        + dout                 # output reads
    )
    assert prog.n_rows == expected
    tr = generate_trace(prog, mlp_inputs(g))
    assert tr.length == 1 << (expected - 1).bit_length()


def test_trace_matches_execution_on_mlp():
    g = small_mlp_graph()
    prog = lower_graph(g)
    inputs = mlp_inputs(g)
    tr = generate_trace(prog, inputs)
    verify_trace_against_execution(tr, inputs)


def test_read_consistency_replay_oracle():
    g = small_mlp_graph(5, 4, 3, seed=11)
    prog = lower_graph(g)
    tr = generate_trace(prog, mlp_inputs(g, seed=5))
    replay_read_consistency(tr)


def test_nextpc_is_shifted_pc():
    g = small_mlp_graph()
    tr = generate_trace(lower_graph(g), mlp_inputs(g))
    cols = columns_from_trace(tr)
    pc, nxt = cols.cols["pc"], cols.cols["next_pc"]
    assert nxt[:-1] == pc[1:]
    assert nxt[-1] == 0
    # pc bits reconstruct pc
    for j in (0, 1, tr.n_real - 1, tr.length - 1):
        val = sum(cols.cols[f"pb{b:02d}"][j] << (15 - b) for b in range(16))
        assert val == pc[j]


def test_inc_memory_replay_oracle():
    g = small_mlp_graph(6, 5, 2, seed=23)
    tr = generate_trace(lower_graph(g), mlp_inputs(g, seed=9))
    c = tr.columns
    # sum of increments per address reproduces the final memory image
    final = {}
    for j in range(tr.n_real):
        if int(c["write_flag"][j]):
            a = int(c["td_addr"][j])
            final[a] = final.get(a, 0) + int(c["inc"][j])
    for a, v in final.items():
        assert tr.memory_final[a] == v
    # and write-then-overwrite keeps inc = new - old semantics per address
    assert all(tr.memory_final[a] == v for a, v in final.items())


def test_bytecode_deterministic_and_weight_sensitive():
    g1 = small_mlp_graph(seed=7)
    g2 = small_mlp_graph(seed=7)
    p1, p2 = lower_graph(g1), lower_graph(g2)
    for f in p1.rows:
        assert p1.rows[f] == p2.rows[f]
    # change one weight -> different imm row
    g3 = small_mlp_graph(seed=8)
    p3 = lower_graph(g3)
    assert p1.rows["imm"] != p3.rows["imm"]
    assert p1.rows["opclass"] == p3.rows["opclass"]  # same structure


def test_trace_step_jsonl_dump():
    g = tiny_add_graph()
    tr = generate_trace(lower_graph(g), {"a": [1, 2], "b": [3, 4]})
    buf = io.StringIO()
    tr.dump_jsonl(buf)
    lines = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert len(lines) == tr.n_real
    for rec in lines:
        assert set(rec) == {"pc", "op", "ts1_addr", "ts1_val", "ts2_addr", "ts2_val",
                            "td_addr", "td_write_val", "advice", "write_flag",
                            "select_flag"}
    adds = [r for r in lines if r["op"] == "add"]
    assert adds[0]["ts1_val"] == 1 and adds[0]["ts2_val"] == 3
    assert adds[0]["td_write_val"] == 4 and adds[0]["write_flag"] == 1


def test_div_advice_semantics():
    g = parse_graph({
        "scale": 128,
        "inputs": ["a", "b"],
        "outputs": ["c"],
        "tensors": [
            {"name": "a", "shape": [2], "role": "input"},
            {"name": "b", "shape": [2], "role": "input"},
            {"name": "c", "shape": [2], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "Mul", "inputs": ["a", "b"], "outputs": ["c"], "attrs": {}}],
    })
    tr = generate_trace(lower_graph(g), {"a": [129, -129], "b": [129, 129]})
    c = tr.columns
    div_rows = [j for j in range(tr.n_real) if c["advice"][j] != 0 or
                (c["lookup_output"][j] != 0 and c["ts2_val"][j] == 128)]
    for j in div_rows:
        ts1, ts2 = int(c["ts1_val"][j]), int(c["ts2_val"][j])
        q, adv = int(c["td_write_val"][j]), int(c["advice"][j])
        assert ts1 == q * ts2 + adv
        assert abs(adv) < abs(ts2)
        assert adv == 0 or (adv > 0) == (ts1 > 0)
    verify_trace_against_execution(tr, {"a": [129, -129], "b": [129, 129]})


def test_select_lowering_and_flags():
    g = parse_graph({
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
    })
    inputs = {"a": [5, -2, 3], "b": [3, 0, 3]}
    tr = generate_trace(lower_graph(g), inputs)
    verify_trace_against_execution(tr, inputs)
    replay_read_consistency(tr)
    c = tr.columns
    flags = set(int(v) for v in c["select_flag"])
    assert flags <= {0, 1}
    selg = [j for j in range(tr.n_real) if int(c["select_flag"][j]) == 1]
    for j in selg:
        assert int(c["inc"][j]) == int(c["ts1_val"][j]) * int(c["select_flag"][j])


def test_gte_eq_lowering_values():
    g = parse_graph({
        "scale": 1,
        "inputs": ["a", "b"],
        "outputs": ["g", "e"],
        "tensors": [
            {"name": "a", "shape": [4], "role": "input"},
            {"name": "b", "shape": [4], "role": "input"},
            {"name": "g", "shape": [4], "role": "output"},
            {"name": "e", "shape": [4], "role": "output"},
        ],
        "initializers": {},
        "nodes": [
            {"op": "Gte", "inputs": ["a", "b"], "outputs": ["g"], "attrs": {}},
            {"op": "Eq", "inputs": ["a", "b"], "outputs": ["e"], "attrs": {}},
        ],
    })
    inputs = {"a": [5, -7, 0, 100], "b": [5, 7, 1, -100]}
    tr = generate_trace(lower_graph(g), inputs)
    verify_trace_against_execution(tr, inputs)
    layout = tr.program.layout
    gbase = layout["g"]
    assert tr.memory_final[gbase:gbase + 4].tolist() == [1, 0, 0, 1]
    ebase = layout["e"]
    assert tr.memory_final[ebase:ebase + 4].tolist() == [1, 0, 0, 0]


def test_softmax_lowering():
    g = parse_graph({
        "scale": 128,
        "inputs": ["x"],
        "outputs": ["y"],
        "tensors": [
            {"name": "x", "shape": [1, 4], "role": "input"},
            {"name": "y", "shape": [1, 4], "role": "output"},
        ],
        "initializers": {},
        "nodes": [{"op": "Softmax", "inputs": ["x"], "outputs": ["y"],
                   "attrs": {"axis": 1}}],
    })
    inputs = {"x": [[128, 256, -128, 0]]}
    tr = generate_trace(lower_graph(g), inputs)
    verify_trace_against_execution(tr, inputs)
    replay_read_consistency(tr)
    ybase = tr.program.layout["y"]
    probs = tr.memory_final[ybase:ybase + 4]
    assert abs(int(probs.sum()) - 128) <= 4  # rounds near S
    assert probs[1] == probs.max()
