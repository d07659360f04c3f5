"""Execution trace and bytecode for the proving pipeline.

`lower_graph` compiles a graph into a static micro-op program: one row per
scalar micro-operation, with operand/destination addresses, op-class and
table flags, and immediates all fixed by the graph alone.  `generate_trace`
replays the program on concrete inputs, producing the per-cycle value
columns.  The split matters: everything in the program becomes
preprocessing-committed verifying-key columns; only the value columns are
witness.

Micro-op classes
  NOP    padding row 0 (all zero)
  IMM    synthetic write of a static constant (initializers, const pool)
  INPUT  write of one public input element
  ADD    dest_inc = ts1 + ts2
  SUB    dest_inc = ts1 - ts2
  MAC    dest_inc = ts1 * ts2 (accumulates at td_addr; raw, no rescale)
  DIV    td_write_val * ts2 + advice = ts1, advice range-checked by lookup
  LUT    dest_inc = table[ts1] (unary 16-bit lookup)
  COPY   dest_inc = ts1 (gather / reshape / broadcast)
  SELG   dest_inc = ts1 * select_flag, select_flag tied to ts2 (condition)
  OUT    read of one public output element (no write)

Multiply rescaling, division scaling, comparisons, Select, Softmax, and
ReduceMean are all lowered onto these: Mul = MAC+DIV(S), Div = MAC(S)+DIV,
Gte = SUB, +2^16, DIV(256), -256, step lookup, Eq = two Gte's multiplied,
Select(c,x,y) = c*x + (y - c*y).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError, address_layout, div_trunc, execute
from .tables import TABLE_ORDER, default_registry

OPCLASSES = ["nop", "imm", "input", "add", "sub", "mac", "div", "lut", "copy", "selg", "out"]
OP = {name: i for i, name in enumerate(OPCLASSES)}

TABLE_ID = {name: i + 1 for i, name in enumerate(TABLE_ORDER)}  # 0 = no table

ADDR_BITS = 16
PC_BITS = 16

GATE_FLAGS = ["f_imm", "f_input", "f_add", "f_sub", "f_mac", "f_div",
              "f_lut", "f_copy", "f_selg", "f_out"]

_ROW_FIELDS = ["opclass", "table", "ts1_addr", "ts2_addr", "td_addr",
               "write_flag", "imm"]


class Program:
    """Static micro-op program: numpy arrays indexed by row (row 0 = NOP)."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.rows = {f: [0] for f in _ROW_FIELDS}
        self.blocks = []        # (opclass id, first_row, end_row): emission units
        self.layout = address_layout(graph)
        self.aux_base = 1 + sum(graph.tensors[t].size for t in graph.tensors)
        self.const_addr = {}
        self.input_rows = {}    # tensor -> (first_row, count)
        self.output_rows = {}   # tensor -> (first_row, count)
        self._arrays = None

    # -- construction ------------------------------------------------------

    def alloc_aux(self, count: int) -> int:
        base = self.aux_base
        self.aux_base += count
        return base

    def emit(self, opclass, ts1, ts2, td, write, table=0, imm=0):
        """Append one block of rows; no row may read what the block writes."""
        args = [np.atleast_1d(np.asarray(a, dtype=np.int64))
                for a in (ts1, ts2, td, write, imm)]
        n = max(a.size for a in args)
        first = len(self.rows["opclass"])
        for field, arr in zip(("ts1_addr", "ts2_addr", "td_addr", "write_flag", "imm"), args):
            self.rows[field].extend(np.broadcast_to(arr, (n,)).tolist())
        self.rows["opclass"].extend([OP[opclass]] * n)
        self.rows["table"].extend([table] * n)
        self.blocks.append((OP[opclass], first, first + n))
        return first

    def const(self, value: int) -> int:
        """Address of a pooled constant, emitting its IMM write on first use."""
        if value not in self.const_addr:
            addr = self.alloc_aux(1)
            self.const_addr[value] = addr
            self.emit("imm", 0, 0, addr, 1, imm=value)
        return self.const_addr[value]

    def finalize(self):
        self._arrays = {f: np.array(v, dtype=np.int64) for f, v in self.rows.items()}
        if self.n_rows > (1 << PC_BITS) - 1:
            raise GraphError("program exceeds the 16-bit pc space")
        if self.aux_base > (1 << ADDR_BITS) - 1:
            raise GraphError("address space exceeds 16 bits")

    # -- access ------------------------------------------------------------

    @property
    def arrays(self) -> dict:
        return self._arrays

    @property
    def n_rows(self) -> int:
        """Rows excluding the reserved NOP row 0 (= number of real cycles)."""
        return len(self.rows["opclass"]) - 1

    @property
    def padded_cycles(self) -> int:
        return max(2, 1 << (self.n_rows - 1).bit_length())

    def static_column(self, field: str) -> np.ndarray:
        """Cycle-indexed static column over the padded trace length."""
        T = self.padded_cycles
        out = np.zeros(T, dtype=np.int64)
        out[: self.n_rows] = self._arrays[field][1:]
        return out

    def pc_column(self) -> np.ndarray:
        T = self.padded_cycles
        out = np.zeros(T, dtype=np.int64)
        out[: self.n_rows] = np.arange(1, self.n_rows + 1)
        return out

    def nextpc_row_table(self) -> np.ndarray:
        """nextpc field per row index k: k+1 inside the program, else 0."""
        tbl = np.zeros(1 << PC_BITS, dtype=np.int64)
        if self.n_rows > 1:
            tbl[1 : self.n_rows] = np.arange(2, self.n_rows + 1)
        return tbl


def _flat_addrs(base: int, shape: tuple) -> np.ndarray:
    n = int(np.prod(shape)) if shape else 1
    return base + np.arange(n, dtype=np.int64)


def _broadcast_addrs(base, src_shape, out_shape) -> np.ndarray:
    """Flat source addresses for each element of the broadcast output."""
    idx = np.arange(int(np.prod(src_shape)) if src_shape else 1, dtype=np.int64)
    grid = idx.reshape(src_shape if src_shape else (1,))
    return (base + np.broadcast_to(grid, out_shape)).reshape(-1)


def lower_graph(g: Graph) -> Program:
    """Compile the graph to its static micro-op program (input-independent)."""
    prog = Program(g)
    S = g.scale
    layout = prog.layout
    shapes = {name: spec.shape for name, spec in g.tensors.items()}

    # constants first, then initializers, then input slots, then compute
    s_addr = prog.const(S)

    for name in g.tensor_order():
        if g.tensors[name].role == "initializer":
            data = g.initializers[name].reshape(-1)
            prog.emit("imm", 0, 0, _flat_addrs(layout[name], shapes[name]), 1,
                      imm=data)

    for name in g.inputs:
        addrs = _flat_addrs(layout[name], shapes[name])
        first = prog.emit("input", 0, 0, addrs, 1)
        prog.input_rows[name] = (first, len(addrs))

    def addrs_of(name):
        return _flat_addrs(layout[name], shapes[name])

    def binary_addrs(node, a, b):
        out_shape = shapes[node.outputs[0]]
        sa = _broadcast_addrs(layout[a], shapes[a], out_shape)
        sb = _broadcast_addrs(layout[b], shapes[b], out_shape)
        return sa, sb

    def emit_div(num_addrs, den_addrs, out_addrs, table):
        """num/den with truncation; advice range-checked by `table`."""
        prog.emit("div", num_addrs, den_addrs, out_addrs, 1, table=TABLE_ID[table])

    def emit_gte(sa, sb, out_addrs):
        n = len(out_addrs)
        d = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
        e = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
        q = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
        q2 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
        prog.emit("sub", sa, sb, d, 1)
        prog.emit("add", d, prog.const(1 << 16), e, 1)
        emit_div(e, prog.const(256), q, "rangeu8")
        prog.emit("sub", q, prog.const(256), q2, 1)
        prog.emit("lut", q2, 0, out_addrs, 1, table=TABLE_ID["gtez"])

    for node in g.nodes:
        op = node.op
        out = node.outputs[0]
        out_addrs = addrs_of(out)
        if op in ("Add", "Sub"):
            sa, sb = binary_addrs(node, node.inputs[0], node.inputs[1])
            prog.emit(op.lower(), sa, sb, out_addrs, 1)
        elif op == "Mul":
            sa, sb = binary_addrs(node, node.inputs[0], node.inputs[1])
            raw = prog.alloc_aux(len(out_addrs)) + np.arange(len(out_addrs), dtype=np.int64)
            prog.emit("mac", sa, sb, raw, 1)
            emit_div(raw, s_addr, out_addrs, "range_s")
        elif op == "Div":
            sa, sb = binary_addrs(node, node.inputs[0], node.inputs[1])
            num = prog.alloc_aux(len(out_addrs)) + np.arange(len(out_addrs), dtype=np.int64)
            prog.emit("mac", sa, s_addr, num, 1)
            emit_div(num, sb, out_addrs, "range16")
        elif op in ("Relu", "Sigmoid", "Tanh", "Erf", "Rsqrt"):
            src = addrs_of(node.inputs[0])
            prog.emit("lut", src, 0, out_addrs, 1, table=TABLE_ID[op.lower()])
        elif op == "Softmax":
            src = addrs_of(node.inputs[0])
            shape = shapes[node.inputs[0]]
            axis = int(node.attrs.get("axis", -1)) % len(shape)
            n_el = len(src)
            exps = prog.alloc_aux(n_el) + np.arange(n_el, dtype=np.int64)
            prog.emit("lut", src, 0, exps, 1, table=TABLE_ID["exp"])
            # per-slice denominator accumulators
            red = shape[axis]
            outer = n_el // red
            moved = np.moveaxis(exps.reshape(shape), axis, -1).reshape(outer, red)
            denom = prog.alloc_aux(outer) + np.arange(outer, dtype=np.int64)
            one = prog.const(1)
            prog.emit("mac", moved.reshape(-1), one,
                      np.repeat(denom, red), 1)
            scaled = prog.alloc_aux(n_el) + np.arange(n_el, dtype=np.int64)
            prog.emit("mac", exps, s_addr, scaled, 1)
            msh = tuple(np.moveaxis(np.empty(shape, dtype=np.int8), axis, -1).shape)
            den_map = denom[np.arange(outer).repeat(red)].reshape(msh)
            den_of_el = np.moveaxis(den_map, -1, axis).reshape(-1)
            emit_div(scaled, den_of_el, out_addrs, "range16")
        elif op == "Gte":
            sa, sb = binary_addrs(node, node.inputs[0], node.inputs[1])
            emit_gte(sa, sb, out_addrs)
        elif op == "Eq":
            sa, sb = binary_addrs(node, node.inputs[0], node.inputs[1])
            n = len(out_addrs)
            g1 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
            g2 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
            emit_gte(sa, sb, g1)
            emit_gte(sb, sa, g2)
            prog.emit("mac", g1, g2, out_addrs, 1)
        elif op == "Reshape":
            prog.emit("copy", addrs_of(node.inputs[0]), 0, out_addrs, 1)
        elif op == "Broadcast":
            src = _broadcast_addrs(layout[node.inputs[0]], shapes[node.inputs[0]],
                                   tuple(node.attrs["target_shape"]))
            prog.emit("copy", src, 0, out_addrs, 1)
        elif op == "Gather":
            if node.inputs[1] not in g.initializers:
                raise GraphError(f"node {node.name}: gather indices must be static")
            axis = int(node.attrs.get("axis", 0))
            data_shape = shapes[node.inputs[0]]
            idx = g.initializers[node.inputs[1]]
            flat = np.arange(int(np.prod(data_shape)), dtype=np.int64).reshape(data_shape)
            src = layout[node.inputs[0]] + np.take(flat, idx, axis=axis).reshape(-1)
            prog.emit("copy", src, 0, out_addrs, 1)
        elif op == "Select":
            out_shape = shapes[out]
            sc = _broadcast_addrs(layout[node.inputs[0]], shapes[node.inputs[0]], out_shape)
            sx = _broadcast_addrs(layout[node.inputs[1]], shapes[node.inputs[1]], out_shape)
            sy = _broadcast_addrs(layout[node.inputs[2]], shapes[node.inputs[2]], out_shape)
            n = len(out_addrs)
            p1 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
            p2 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
            p3 = prog.alloc_aux(n) + np.arange(n, dtype=np.int64)
            prog.emit("selg", sx, sc, p1, 1)   # c*x
            prog.emit("selg", sy, sc, p2, 1)   # c*y
            prog.emit("sub", sy, p2, p3, 1)    # y - c*y
            prog.emit("add", p1, p3, out_addrs, 1)
        elif op in ("ReduceSum", "ReduceMean"):
            shape = shapes[node.inputs[0]]
            axis = int(node.attrs.get("axis", -1)) % len(shape)
            src = addrs_of(node.inputs[0])
            red = shape[axis]
            outer = int(np.prod(shape)) // red
            moved = np.moveaxis(src.reshape(shape), axis, -1).reshape(outer, red)
            one = prog.const(1)
            if op == "ReduceSum":
                acc = out_addrs
            else:
                acc = prog.alloc_aux(outer) + np.arange(outer, dtype=np.int64)
            prog.emit("mac", moved.reshape(-1), one, np.repeat(acc, red), 1)
            if op == "ReduceMean":
                emit_div(acc, prog.const(red), out_addrs, "range16")
        elif op == "Einsum":
            eq = node.attrs["equation"]
            a, b = node.inputs[0], node.inputs[1]
            if eq == "mk,kn->mn":
                M, K = shapes[a]
                _, N = shapes[b]
                B = 1
                a_flat = layout[a] + np.arange(M * K, dtype=np.int64).reshape(1, M, K)
                b_flat = layout[b] + np.arange(K * N, dtype=np.int64).reshape(1, K, N)
            else:  # bmk,bkn->bmn
                B, M, K = shapes[a]
                _, _, N = shapes[b]
                a_flat = layout[a] + np.arange(B * M * K, dtype=np.int64).reshape(B, M, K)
                b_flat = layout[b] + np.arange(B * K * N, dtype=np.int64).reshape(B, K, N)
            acc = prog.alloc_aux(B * M * N)
            acc_arr = acc + np.arange(B * M * N, dtype=np.int64).reshape(B, M, N)
            # step order: output-major, contraction index innermost
            ts1 = np.broadcast_to(a_flat[:, :, None, :], (B, M, N, K)).reshape(-1)
            ts2 = np.broadcast_to(np.swapaxes(b_flat, 1, 2)[:, None, :, :], (B, M, N, K)).reshape(-1)
            td = np.repeat(acc_arr.reshape(-1), K)
            prog.emit("mac", ts1, ts2, td, 1)
            emit_div(acc_arr.reshape(-1), s_addr, out_addrs, "range_s")
        else:  # pragma: no cover
            raise GraphError(f"node {node.name}: no lowering for '{op}'")

    for name in g.outputs:
        addrs = addrs_of(name)
        first = prog.emit("out", addrs, 0, 0, 0)
        prog.output_rows[name] = (first, len(addrs))

    prog.finalize()
    return prog


@dataclass
class TraceStep:
    """Debug view of one cycle (the `trace` CLI dumps these as JSON lines)."""
    pc: int
    op: str
    ts1_addr: int
    ts1_val: int
    ts2_addr: int
    ts2_val: int
    td_addr: int
    td_write_val: int
    advice: int
    write_flag: int
    select_flag: int


class Trace:
    """Value columns over the padded cycle domain (int64 numpy arrays)."""

    def __init__(self, program: Program, columns: dict, memory_final: np.ndarray):
        self.program = program
        self.columns = columns
        self.memory_final = memory_final
        self.n_real = program.n_rows
        self.length = program.padded_cycles

    def step(self, j: int) -> TraceStep:
        c = self.columns
        if j < self.n_real:
            opclass = OPCLASSES[int(self.program.arrays["opclass"][j + 1])]
            pc = j + 1
        else:
            opclass, pc = "nop", 0
        return TraceStep(
            pc=pc, op=opclass,
            ts1_addr=int(c["ts1_addr"][j]), ts1_val=int(c["ts1_val"][j]),
            ts2_addr=int(c["ts2_addr"][j]), ts2_val=int(c["ts2_val"][j]),
            td_addr=int(c["td_addr"][j]), td_write_val=int(c["td_write_val"][j]),
            advice=int(c["advice"][j]), write_flag=int(c["write_flag"][j]),
            select_flag=int(c["select_flag"][j]),
        )

    def dump_jsonl(self, fh, real_only=True):
        end = self.n_real if real_only else self.length
        for j in range(end):
            fh.write(json.dumps(self.step(j).__dict__) + "\n")


def generate_trace(program: Program, inputs: dict, registry=None) -> Trace:
    """Replay the program on concrete inputs, producing value columns.

    The trace length is the program length padded to the next power of two;
    padding cycles are all-zero no-ops.
    """
    g = program.graph
    if registry is None:
        registry = default_registry(g.scale)
    S = g.scale
    arr = program.arrays
    R = program.n_rows
    T = program.padded_cycles

    mem = np.zeros(1 << ADDR_BITS, dtype=np.int64)
    cols = {name: np.zeros(T, dtype=np.int64) for name in
            ("ts1_addr", "ts2_addr", "td_addr", "ts1_val", "ts2_val",
             "td_write_val", "advice", "inc", "lookup_output",
             "left_input", "right_input", "write_flag", "select_flag",
             "lookup_index")}

    # locate per-input write rows and fill their imm-like values
    input_vals = np.zeros(R + 1, dtype=np.int64)
    for name, (first, count) in program.input_rows.items():
        if name not in inputs:
            raise GraphError(f"missing input tensor '{name}'")
        data = np.asarray(inputs[name], dtype=np.int64).reshape(-1)
        if data.size != count:
            raise GraphError(f"input '{name}' has {data.size} elements, expected {count}")
        input_vals[first : first + count] = data

    table_by_id = {TABLE_ID[name]: registry[name] for name in TABLE_ID}

    for oc_id, lo, hi in program.blocks:
        rows = np.arange(lo, hi)
        j = rows - 1  # cycle indices
        oc = OPCLASSES[oc_id]
        ts1_a, ts2_a, td_a = arr["ts1_addr"][rows], arr["ts2_addr"][rows], arr["td_addr"][rows]
        wf = arr["write_flag"][rows]
        v1 = mem[ts1_a]
        v2 = mem[ts2_a]
        cols["ts1_addr"][j], cols["ts2_addr"][j], cols["td_addr"][j] = ts1_a, ts2_a, td_a
        cols["ts1_val"][j], cols["ts2_val"][j] = v1, v2
        cols["write_flag"][j] = wf

        inc = np.zeros(len(rows), dtype=np.int64)
        wv = np.zeros(len(rows), dtype=np.int64)
        if oc == "imm":
            inc = arr["imm"][rows].copy()
            wv = inc.copy()
        elif oc == "input":
            inc = input_vals[rows].copy()
            wv = inc.copy()
        elif oc == "add":
            inc = v1 + v2
            wv = inc.copy()
        elif oc == "sub":
            inc = v1 - v2
            wv = inc.copy()
        elif oc == "mac":
            inc = v1 * v2
            # running value per destination; each destination occupies one
            # contiguous run inside an emitted block (einsum k-innermost)
            n = len(rows)
            csum = np.cumsum(inc)
            starts = np.concatenate(([True], td_a[1:] != td_a[:-1]))
            start_idx = np.maximum.accumulate(np.where(starts, np.arange(n), 0))
            within = csum - (csum[start_idx] - inc[start_idx])
            wv = mem[td_a] + within
        elif oc == "div":
            q, rem = div_trunc(v1, v2)
            inc = q
            wv = q.copy()
            cols["advice"][j] = rem
            tids = arr["table"][rows]
            for tid in np.unique(tids):
                m = tids == tid
                tbl = table_by_id[int(tid)]
                out_check = tbl.apply_np(rem[m])
                if not (out_check == rem[m]).all():
                    raise GraphError("division remainder outside its range table")
                cols["lookup_output"][j[m]] = out_check
            cols["left_input"][j] = rem
            cols["lookup_index"][j] = rem & 0xFFFF
        elif oc == "lut":
            tids = arr["table"][rows]
            out_v = np.zeros(len(rows), dtype=np.int64)
            for tid in np.unique(tids):
                m = tids == tid
                out_v[m] = table_by_id[int(tid)].apply_np(v1[m])
            inc = out_v
            wv = out_v.copy()
            cols["lookup_output"][j] = out_v
            cols["left_input"][j] = v1
            cols["lookup_index"][j] = v1 & 0xFFFF
        elif oc == "copy":
            inc = v1.copy()
            wv = inc.copy()
        elif oc == "selg":
            cols["select_flag"][j] = v2
            if not np.isin(v2, (0, 1)).all():
                raise GraphError("select condition must be boolean")
            inc = v1 * v2
            wv = inc.copy()
        elif oc == "out":
            pass
        else:  # pragma: no cover
            raise GraphError(f"unhandled opclass {oc}")

        cols["inc"][j] = inc
        cols["td_write_val"][j] = np.where(wf == 1, wv, 0)
        if oc == "mac":
            np.add.at(mem, td_a, inc)
        elif (wf == 1).any():
            mem[td_a[wf == 1]] = wv[wf == 1]

    # fixed-point range guard for lookup operands
    li = cols["left_input"]
    lookup_rows = cols["lookup_index"] != (li & 0xFFFF)
    if lookup_rows.any():
        raise GraphError("internal: lookup index inconsistent")
    if (np.abs(li) > (1 << 15) - 1).any():
        raise GraphError("lookup operand outside the 16-bit table domain")

    return Trace(program, cols, mem)


class StaticColumns:
    """Cycle-indexed columns fixed by the program alone (verifying-key side).

    Gate flags select which per-cycle constraint group applies, table flags
    select the lookup table, imm carries initializer constants, and the
    address-bit columns encode the static operand/destination addresses
    (16 bits each, MSB first).
    """

    def __init__(self, program: Program):
        self.program = program
        T = program.padded_cycles
        self.num_vars = (T - 1).bit_length()
        opclass = program.static_column("opclass")
        table = program.static_column("table")
        self.cols = {}
        for i, name in enumerate(OPCLASSES):
            if name == "nop":
                continue
            self.cols[f"f_{name}"] = (opclass == i).astype(np.int64).tolist()
        for tname, tid in TABLE_ID.items():
            self.cols[f"tbl_{tname}"] = (table == tid).astype(np.int64).tolist()
        self.cols["imm"] = field_list(program.static_column("imm"))
        for prefix, fieldname in (("ta", "td_addr"), ("r1", "ts1_addr"), ("r2", "ts2_addr")):
            addr = program.static_column(fieldname)
            for b in range(16):
                self.cols[f"{prefix}_b{b:02d}"] = ((addr >> (15 - b)) & 1).tolist()

    def names(self) -> list:
        return list(self.cols)

    def poly(self, name: str):
        from .mle import MultilinearPoly

        return MultilinearPoly(self.num_vars, self.cols[name])


class WitnessColumns:
    """One multilinear polynomial per trace column, all of length T.

    pc/next_pc and the lookup-index bit columns are derived views; the bit
    columns (ib for the lookup index, pb for the pc) are what actually gets
    committed, everything addressable stays reconstructible from them.
    """

    VALUE_COLUMNS = ["ts1_val", "ts2_val", "td_write_val", "advice", "left_input",
                     "right_input", "lookup_output", "inc", "write_flag", "select_flag"]

    def __init__(self, trace: Trace):
        self.trace = trace
        self.length = trace.length
        self.num_vars = (trace.length - 1).bit_length()
        c = trace.columns
        self.cols = {}
        for name in self.VALUE_COLUMNS:
            self.cols[name] = field_list(c[name])
        pc = trace.program.pc_column()
        self.cols["pc"] = pc.tolist()
        nxt = np.zeros_like(pc)
        nxt[:-1] = pc[1:]
        self.cols["next_pc"] = nxt.tolist()
        self.cols["td_addr"] = c["td_addr"].tolist()
        for b in range(16):
            shift = 15 - b
            self.cols[f"ib{b:02d}"] = ((c["lookup_index"] >> shift) & 1).tolist()
            self.cols[f"pb{b:02d}"] = ((pc >> shift) & 1).tolist()

    def poly(self, name: str):
        from .mle import MultilinearPoly

        return MultilinearPoly(self.num_vars, self.cols[name])

    def committed_names(self) -> list:
        """Columns committed per proof (bit columns carry pc and the index)."""
        return (self.VALUE_COLUMNS
                + [f"ib{b:02d}" for b in range(16)]
                + [f"pb{b:02d}" for b in range(16)])


def field_list(col: np.ndarray) -> list:
    """int64 column -> canonical field residues."""
    from .field import P

    out = col.tolist()
    return [v % P if v < 0 else v for v in out]


def columns_from_trace(trace: Trace) -> WitnessColumns:
    if trace.length & (trace.length - 1):
        raise ValueError("trace length must be a power of two")
    return WitnessColumns(trace)


def verify_trace_against_execution(trace: Trace, inputs: dict, registry=None) -> None:
    """Internal consistency: replayed memory matches the graph executor."""
    g = trace.program.graph
    res = execute(g, inputs, registry)
    layout = trace.program.layout
    for name, value in res.tensors.items():
        base = layout[name]
        got = trace.memory_final[base : base + value.size]
        if not (got == value.reshape(-1)).all():
            raise AssertionError(f"trace/execute divergence on tensor '{name}'")


def replay_read_consistency(trace: Trace) -> None:
    """Oracle: every read value equals the latest prior write at its address."""
    mem = {}
    c = trace.columns
    for j in range(trace.n_real):
        for addr_col, val_col in (("ts1_addr", "ts1_val"), ("ts2_addr", "ts2_val")):
            a = int(c[addr_col][j])
            if a != 0:
                assert mem.get(a, 0) == int(c[val_col][j]), (j, addr_col)
        if int(c["write_flag"][j]):
            td = int(c["td_addr"][j])
            mem[td] = mem.get(td, 0) + int(c["inc"][j])
            assert mem[td] == int(c["td_write_val"][j])
