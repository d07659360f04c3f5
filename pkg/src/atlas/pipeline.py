"""Proof-DAG orchestration: preprocessing, the staged prover, and the
verifier.

One code path drives both roles.  Each level builds its batch of sumcheck
instances (prover) or just their shapes (verifier), the engine runs or
replays the rounds, and a post hook registers the level's opening claims
and binding expressions.  Claims, challenges, and expressions are derived
from public data only, so prover and verifier assemble bit-identical stage
configurations; values attach on the prover side alone.

Level schedule (dependencies flow downward):
  L1  outer R1CS zero-check over (cycle, constraint) variables
  L2  inner + product virtualisation + read-raf + bytecode + instruction
      input + io binding + booleanity + hamming + memory read-check
  L3  pc shift, Val evaluation, one-hot level A (lookup/pc/read-address)
  L4  one-hot level B (grouped chunk products) + level A for the write side
  L5  one-hot level C (chunk-to-bit ties), hamming ties, write-side level B
  L6  write-side level C
  L7  multi-point opening reduction to one point
then the joint hiding PCS opening and the folding layer.
"""

from __future__ import annotations

import hashlib
import json
import os
import random

import numpy as np

from . import lookups, memory, spartan
from .accumulator import Expr, OpeningAccumulator, StageRecord
from .blindfold import (
    BlindfoldGens,
    RelaxedInstance,
    RelaxedWitness,
    StageConfig,
    assign_witness,
    blindfold_prove,
    blindfold_verify,
    build_verifier_circuit,
)
from .curve import IDENTITY, msm
from .field import P
from .graph import GraphError, parse_graph
from .mle import (
    MultilinearPoly,
    eq_evaluate,
    eq_shift_evaluate,
    eq_table,
    lt_evaluate,
)
from .pcs import PcsBlinds, PcsGens, pcs_commit, pcs_open_hiding, pcs_verify_hiding
from .proof import AtlasProof, digest_json
from .sumcheck import prove_batch, replay_batch_hiding
from .tables import TABLE_ORDER, default_registry, signed_value_mle
from .trace import (
    StaticColumns,
    TABLE_ID,
    WitnessColumns,
    columns_from_trace,
    generate_trace,
    lower_graph,
)
from .transcript import Transcript

_PCS_GENS = None


def pcs_gens() -> PcsGens:
    global _PCS_GENS
    if _PCS_GENS is None:
        _PCS_GENS = PcsGens()
    return _PCS_GENS


class Keys:
    """Proving/verifying key pair; both deterministic from the graph."""

    def __init__(self, graph_doc: dict):
        self.graph_doc = graph_doc
        self.graph = parse_graph(graph_doc)
        self.program = lower_graph(self.graph)
        self.statics = StaticColumns(self.program)
        self.digest = digest_json(graph_doc)
        self.n_cyc = (self.program.padded_cycles - 1).bit_length()
        self.T = self.program.padded_cycles
        self.registry = default_registry(self.graph.scale)
        self.used_tables = sorted(
            {TABLE_ORDER[t - 1] for t in self.program.arrays["table"] if t}
        )
        gens = pcs_gens()
        self.static_comms = {}
        for name in self.statics.names():
            poly = self.statics.poly(name)
            comm, _ = pcs_commit(poly, gens)   # static data is public: zero blinds
            self.static_comms[name] = comm

    def vk_digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(self.digest)
        for name in sorted(self.static_comms):
            for pt in self.static_comms[name].row_commitments:
                h.update(pt.to_bytes())
        return h.digest()


def preprocess(graph_doc) -> Keys:
    if isinstance(graph_doc, (bytes, str)):
        graph_doc = json.loads(graph_doc)
    return Keys(graph_doc)


class Ctx:
    """Everything one proof run carries across levels."""

    def __init__(self, keys: Keys, io: dict, role: str):
        self.keys = keys
        self.role = role
        self.io = io
        self.t = Transcript(b"atlas/proof")
        self.acc = OpeningAccumulator()
        self.proof = AtlasProof()
        self.n_cyc = keys.n_cyc
        self.T = keys.T
        self.level_idx = 0
        self.constraint_exprs = []
        # prover-side
        self.columns = None
        self.z = None
        self.blind_rng = None
        self.witness_blinds = {}
        self.eval_cache = {}
        self.bf_round_gens = None
        # shared per-level scratch
        self.pub = {}

    # -- claim helpers -------------------------------------------------------

    def claim(self, poly: str, point, value=None, kind="pcs") -> int:
        return self.acc.add_claim(poly, point, value, kind)

    def col_value(self, name: str, point_key, eqtab, source: list) -> int:
        key = (name, point_key)
        if key not in self.eval_cache:
            total = 0
            for w, v in zip(eqtab, source):
                if v:
                    total += w * v
            self.eval_cache[key] = int(total % P)
        return self.eval_cache[key]

    def open_column(self, name: str, point: list, eqtab=None) -> int:
        """Register a PCS claim on a committed or static column."""
        value = None
        if self.role == "prove":
            source = self._column_data(name)
            if eqtab is None:
                eqtab = eq_table(point)
            value = self.col_value(name, tuple(int(x) % P for x in point), eqtab, source)
        return self.claim(name, point, value)

    def _column_data(self, name: str) -> list:
        kind, col = name.split("/", 1)
        if kind == "col":
            return self.columns.cols[col]
        if kind == "static":
            return self.keys.statics.cols[col]
        raise KeyError(name)

    def all_poly_names(self) -> list:
        return ([f"col/{n}" for n in self.columns_names()]
                + [f"static/{n}" for n in self.keys.statics.names()])

    def columns_names(self) -> list:
        return (WitnessColumns.VALUE_COLUMNS
                + [f"ib{b:02d}" for b in range(16)]
                + [f"pb{b:02d}" for b in range(16)])


def _run_level(ctx: Ctx, label: bytes, builder):
    shapes, instances, input_exprs, post = builder(ctx)
    if ctx.role == "prove":
        res = prove_batch(instances, ctx.t, label, hiding=True,
                          gens=ctx.bf_round_gens, blind_rng=ctx.blind_rng)
        messages, challenges, alpha = res.messages, res.challenges, res.alpha
        n_rounds, degree, pads = res.n_rounds, res.degree, res.pad_bits
        ctx.proof.stage_labels.append(label)
        ctx.proof.stage_messages.append(messages)
    else:
        idx = ctx.level_idx
        if idx >= len(ctx.proof.stage_messages) or ctx.proof.stage_labels[idx] != label:
            raise ValueError(f"proof is missing stage {label.decode()}")
        messages = ctx.proof.stage_messages[idx]
        n_rounds = max(n for n, _ in shapes)
        degree = max(d for _, d in shapes)
        if len(messages) != n_rounds:
            raise ValueError(f"stage {label.decode()}: wrong round count")
        challenges, alpha = replay_batch_hiding(messages, len(shapes), ctx.t, label)
        pads = [n_rounds - n for n, _ in shapes]
    ctx.level_idx += 1
    output_exprs = post(challenges, instances)
    rec = StageRecord(label, n_rounds, degree, pads, alpha,
                      input_exprs, output_exprs, messages, challenges)
    ctx.acc.add_stage(rec)
    return challenges


# ---------------------------------------------------------------------------
# level builders


def _build_l1(ctx: Ctx):
    n_all = ctx.n_cyc + spartan.N_CON_VARS
    ctx.pub["tau"] = ctx.t.challenges(b"tau", n_all)
    instances = None
    if ctx.role == "prove":
        instances = [spartan.outer_instance(ctx.z, ctx.pub["tau"])]
    input_exprs = [Expr.public(0)]
    shapes = [(n_all, 3)]

    def post(challenges, insts):
        r_cycle = challenges[: ctx.n_cyc]
        r_con = challenges[ctx.n_cyc:]
        ctx.pub["r_cycle"] = r_cycle
        ctx.pub["r_con"] = r_con
        ctx.pub["eq_r_cycle"] = eq_table(r_cycle)
        vals = (None, None, None)
        if insts:
            arr = insts[0].arrays
            vals = (int(arr[1][0]) % P, int(arr[2][0]) % P, int(arr[3][0]) % P)
        w_az = ctx.claim("virt/Az", challenges, vals[0], kind="virtual")
        w_bz = ctx.claim("virt/Bz", challenges, vals[1], kind="virtual")
        w_cz = ctx.claim("virt/Cz", challenges, vals[2], kind="virtual")
        ctx.pub["spartan_claims"] = (w_az, w_bz, w_cz)
        eqv = eq_evaluate(ctx.pub["tau"], challenges)
        out = Expr()
        out.add_quad(eqv, w_az, w_bz)
        out.add_linear(-eqv % P, w_cz)
        return [out]

    return shapes, instances, input_exprs, post


def _register_r_cycle_openings(ctx: Ctx):
    """All claims at r_cycle that the inner sumcheck's z-slots reference."""
    r_cycle = ctx.pub["r_cycle"]
    eqtab = ctx.pub["eq_r_cycle"]
    omegas = {}
    for name in spartan.COMMITTED_SLOTS:
        omegas[name] = ctx.open_column(f"col/{name}", r_cycle, eqtab)
    for name in spartan.STATIC_SLOTS:
        omegas[name] = ctx.open_column(f"static/{name}", r_cycle, eqtab)
    for name in [f"tbl_{t}" for t in TABLE_ORDER]:
        omegas[name] = ctx.open_column(f"static/{name}", r_cycle, eqtab)
    for b in range(16):
        omegas[f"ta_b{b:02d}"] = ctx.open_column(f"static/ta_b{b:02d}", r_cycle, eqtab)
        omegas[f"pb{b:02d}"] = ctx.open_column(f"col/pb{b:02d}", r_cycle, eqtab)
    # virtual slots at r_cycle
    for virt, lname, rname in spartan.PRODUCTS:
        value = None
        if ctx.role == "prove":
            value = 0
            for e, l, r in zip(eqtab, ctx.z[lname], ctx.z[rname]):
                if l and r:
                    value = (value + e * (l * r % P)) % P
        omegas[virt] = ctx.claim(f"virt/{virt}", r_cycle, value, kind="virtual")
    value = None
    if ctx.role == "prove":
        value = ctx.col_value("col/next_pc", tuple(int(x) % P for x in r_cycle),
                              eqtab, ctx.columns.cols["next_pc"])
    omegas["next_pc"] = ctx.claim("virt/next_pc", r_cycle, value, kind="virtual")
    ctx.pub["omega_rc"] = omegas
    return omegas


def _td_addr_expr(omegas: dict, bit_prefix: str = "ta_b") -> Expr:
    e = Expr()
    for b in range(16):
        e.add_linear(1 << (15 - b), omegas[f"{bit_prefix}{b:02d}"])
    return e


def _build_l2(ctx: Ctx):
    n_cyc = ctx.n_cyc
    r_cycle = ctx.pub["r_cycle"]
    eqj = ctx.pub["eq_r_cycle"]
    om = _register_r_cycle_openings(ctx)
    w_az, w_bz, w_cz = ctx.pub["spartan_claims"]

    rho = ctx.t.challenge(b"rho")
    g_rr = ctx.t.challenge(b"gamma/readraf")
    zeta = ctx.t.challenge(b"zeta")
    g_ii = ctx.t.challenge(b"gamma/instr")
    g_bool = ctx.t.challenge(b"gamma/bool")
    r_bool = ctx.t.challenges(b"r/bool", 2 + n_cyc)
    g_ham = ctx.t.challenge(b"gamma/hamming")
    g_hpc = ctx.t.challenge(b"gamma/hamming-pc")
    r_mem = ctx.t.challenges(b"r/mem", memory.A_BITS + n_cyc)
    g_mem = ctx.t.challenge(b"gamma/mem")
    ctx.pub.update(rho=rho, g_rr=g_rr, zeta=zeta, g_ii=g_ii, g_bool=g_bool,
                   r_bool=r_bool, g_ham=g_ham, g_hpc=g_hpc, r_mem=r_mem,
                   g_mem=g_mem)

    # input expressions, in batch order
    inner_in = Expr()
    inner_in.add_linear(1, w_az)
    inner_in.add_linear(rho, w_bz)
    inner_in.add_linear(rho * rho % P, w_cz)
    input_exprs = [inner_in]
    for virt, _, _ in spartan.PRODUCTS:
        input_exprs.append(Expr().add_linear(1, om[virt]))
    rr_in = Expr()
    rr_in.add_linear(1, om["lookup_output"])
    rr_in.add_linear(g_rr, om["left_input"])
    input_exprs.append(rr_in)
    bc_in = _td_addr_expr(om, "pb")
    bc_in.add_linear(zeta, om["next_pc"])
    bc_in.add_linear(zeta * zeta % P, om["write_flag"])
    input_exprs.append(bc_in)
    input_exprs.append(Expr.public(0))      # instruction input
    io_in_pub, io_out_pub = _io_public_sums(ctx)
    input_exprs.append(Expr.public(io_in_pub))
    input_exprs.append(Expr.public(io_out_pub))
    input_exprs.append(Expr.public(0))      # booleanity
    input_exprs.append(Expr.public(sum(pow(g_ham, i, P) for i in range(8)) % P))
    input_exprs.append(Expr.public(sum(pow(g_hpc, i, P) for i in range(8)) % P))
    input_exprs.append(Expr.public(0))      # memory read-check

    shapes = ([(5, 2)] + [(n_cyc, 3)] * 6 + [(16 + n_cyc, 3), (16 + n_cyc, 3)]
              + [(n_cyc, 3), (n_cyc, 3), (n_cyc, 3), (2 + n_cyc, 3), (2, 1), (2, 1),
                 (memory.A_BITS + n_cyc, 3)])

    instances = None
    if ctx.role == "prove":
        cols = ctx.columns
        tr = cols.trace
        inner, z_at_r = spartan.inner_instance(ctx.z, r_cycle, ctx.pub["r_con"], rho)
        ctx.pub["z_at_r"] = z_at_r
        prods = spartan.product_instances(ctx.z, r_cycle)
        # read-raf
        active = []
        table_arr = ctx.keys.program.static_column("table")
        for j in range(ctx.T):
            tid = int(table_arr[j])
            if tid:
                active.append((j, int(tr.columns["lookup_index"][j]), TABLE_ORDER[tid - 1]))
        tables = {name: ctx.keys.registry[name] for name in ctx.keys.used_tables}
        rr_claim = (ctx.acc.values[om["lookup_output"]]
                    + g_rr * ctx.acc.values[om["left_input"]]) % P
        rr = lookups.ReadRafInstance(active, eqj, tables, g_rr, n_cyc, rr_claim)
        ctx.pub["readraf_inst"] = rr
        # bytecode
        bt = _bytecode_table(ctx, zeta)
        bc_claim = (ctx.acc.values[om["next_pc"]] * zeta
                    + ctx.acc.values[om["write_flag"]] * (zeta * zeta % P)) % P
        pc_at_r = 0
        for b in range(16):
            pc_at_r = (pc_at_r + (1 << (15 - b)) * ctx.acc.values[om[f"pb{b:02d}"]]) % P
        bc_claim = (bc_claim + pc_at_r) % P
        bc = lookups.BytecodeInstance(cols.cols["pc"], eqj, bt, n_cyc, bc_claim)
        # instruction input
        diff1 = [(li - t1) % P for li, t1 in zip(cols.cols["left_input"], cols.cols["ts1_val"])]
        diff2 = [(li - ad) % P for li, ad in zip(cols.cols["left_input"], cols.cols["advice"])]
        from .sumcheck import DenseProduct

        instr = DenseProduct(
            [eqj, ctx.keys.statics.cols["f_lut"], diff1,
             ctx.keys.statics.cols["f_div"], diff2],
            [(1, [1, 2, 0]), (g_ii, [3, 4, 0])], degree=3, claim=0)
        # io binding
        sel_in, sel_out = _io_selectors(ctx)
        io_in = DenseProduct([eqj, sel_in, cols.cols["td_write_val"]],
                             [(1, [1, 2, 0])], degree=3, claim=io_in_pub)
        io_out = DenseProduct([eqj, sel_out, cols.cols["ts1_val"]],
                              [(1, [1, 2, 0])], degree=3, claim=io_out_pub)
        # booleanity + hamming
        ib = [cols.cols[f"ib{b:02d}"] for b in range(16)]
        pb = [cols.cols[f"pb{b:02d}"] for b in range(16)]
        chunks = lookups.chunk_onehot_columns(ib) + lookups.chunk_onehot_columns(pb)
        ctx.pub["chunks"] = chunks
        boolean = lookups.BooleanityInstance(chunks, r_bool, g_bool, n_cyc)
        ham = lookups.hamming_instance(chunks[:8], eqj, g_ham)
        ham_pc = lookups.hamming_instance(chunks[8:], eqj, g_hpc)
        # memory read-check
        reads = [(tr.columns["ts1_addr"], cols.cols["ts1_val"]),
                 (tr.columns["ts2_addr"], cols.cols["ts2_val"])]
        mem = memory.MemDagInstance(reads, cols.cols["inc"], tr.columns["td_addr"],
                                    r_mem, g_mem, n_cyc)
        ctx.pub["memdag_inst"] = mem
        instances = [inner] + prods + [rr, bc, instr, io_in, io_out, boolean,
                                       ham, ham_pc, mem]

    def post(challenges, insts):
        rho_j = challenges[-n_cyc:]
        rho_k = challenges[:16]
        rho_y = challenges[-5:]
        rho_b2 = challenges[-(n_cyc + 2):-n_cyc]
        rho_h2 = challenges[-2:]
        ctx.pub.update(rho_j=rho_j, rho_k=rho_k, rho_b2=rho_b2, rho_h2=rho_h2)
        eq_rho_j = eq_table(rho_j)
        ctx.pub["eq_rho_j"] = eq_rho_j

        # openings at rho_j used by several outputs
        om_j = {}
        for name in ("left_input", "right_input", "ts1_val", "ts2_val",
                     "select_flag", "td_write_val", "write_flag", "advice", "inc"):
            om_j[name] = ctx.open_column(f"col/{name}", rho_j, eq_rho_j)
        for name in ("f_lut", "f_div"):
            om_j[name] = ctx.open_column(f"static/{name}", rho_j, eq_rho_j)
        for tname in ctx.keys.used_tables:
            om_j[f"tbl_{tname}"] = ctx.open_column(f"static/tbl_{tname}", rho_j, eq_rho_j)
        for b in range(16):
            om_j[f"ta_b{b:02d}"] = ctx.open_column(f"static/ta_b{b:02d}", rho_j, eq_rho_j)
        td_val = None
        if ctx.role == "prove":
            td_val = 0
            for b in range(16):
                td_val = (td_val + (1 << (15 - b)) * ctx.acc.values[om_j[f"ta_b{b:02d}"]]) % P
        om_td = ctx.claim("virt/td_addr_rho", rho_j, td_val, kind="virtual")
        glue = Expr().add_linear(P - 1, om_td)
        for b in range(16):
            glue.add_linear(1 << (15 - b), om_j[f"ta_b{b:02d}"])
        ctx.constraint_exprs.append(glue)
        ctx.pub["om_j"] = om_j

        outputs = []
        # inner
        m_val = 0
        rho2 = ctx.pub["rho"] * ctx.pub["rho"] % P
        for side, w in ((0, 1), (1, ctx.pub["rho"]), (2, rho2)):
            m_val = (m_val + w * spartan.matrix_mle(side, ctx.pub["r_con"], rho_y)) % P
        eqy = eq_table(rho_y)
        om_rc = ctx.pub["omega_rc"]
        inner_out = Expr(const=m_val * eqy[0] % P)   # u slot
        for s, name in enumerate(spartan.Z_SLOTS):
            if name == "u":
                continue
            w = m_val * eqy[s] % P
            if name == "td_addr":
                for b in range(16):
                    inner_out.add_linear(w * (1 << (15 - b)) % P, om_rc[f"ta_b{b:02d}"])
            else:
                inner_out.add_linear(w, om_rc[name])
        outputs.append(inner_out)
        # products
        eq_rc_rho = eq_evaluate(r_cycle, rho_j)
        for virt, lname, rname in spartan.PRODUCTS:
            e = Expr()
            if lname == "td_addr":
                e.add_quad(eq_rc_rho, om_td, om_j[rname])
            else:
                e.add_quad(eq_rc_rho, om_j[lname], om_j[rname])
            outputs.append(e)
        # read-raf
        ra_val = None
        if insts:
            ra_val = insts[7].ra_final()
        om_ra = ctx.claim("virt/ra_lookup", list(rho_k) + list(rho_j), ra_val,
                          kind="virtual")
        ctx.pub["om_ra_lookup"] = om_ra
        sv = signed_value_mle(rho_k)
        rr_out = Expr()
        for tname in ctx.keys.used_tables:
            t_eval = ctx.keys.registry[tname].mle_eval(rho_k)
            rr_out.add_quad(eq_rc_rho * t_eval % P, om_ra, om_j[f"tbl_{tname}"])
        coef = eq_rc_rho * ctx.pub["g_rr"] % P * sv % P
        rr_out.add_quad(coef, om_ra, om_j["f_lut"])
        rr_out.add_quad(coef, om_ra, om_j["f_div"])
        outputs.append(rr_out)
        # bytecode
        ra_pc_val = insts[8].ra_pc_final() if insts else None
        om_rapc = ctx.claim("virt/ra_pc", list(rho_k) + list(rho_j), ra_pc_val,
                            kind="virtual")
        ctx.pub["om_ra_pc"] = om_rapc
        bt_pub = _bytecode_table_eval(ctx, ctx.pub["zeta"], rho_k)
        outputs.append(Expr().add_linear(eq_rc_rho * bt_pub % P, om_rapc))
        # instruction input
        ii = Expr()
        ii.add_quad(eq_rc_rho, om_j["f_lut"], om_j["left_input"])
        ii.add_quad(-eq_rc_rho % P, om_j["f_lut"], om_j["ts1_val"])
        gi = ctx.pub["g_ii"] * eq_rc_rho % P
        ii.add_quad(gi, om_j["f_div"], om_j["left_input"])
        ii.add_quad(-gi % P, om_j["f_div"], om_j["advice"])
        outputs.append(ii)
        # io binding
        sel_in_v, sel_out_v = _io_selector_evals(ctx, rho_j)
        outputs.append(Expr().add_linear(eq_rc_rho * sel_in_v % P, om_j["td_write_val"]))
        outputs.append(Expr().add_linear(eq_rc_rho * sel_out_v % P, om_j["ts1_val"]))
        # booleanity: eq(r_bool, point) sum gamma^i (ra_i^2 - ra_i)
        bool_pt = list(rho_b2) + list(rho_j)
        eqb = eq_evaluate(ctx.pub["r_bool"], bool_pt)
        bool_out = Expr()
        omegas_bool = []
        for ci in range(16):
            val = None
            if insts:
                val = int(insts[12].cols[ci][0][0]) % P
            w = ctx.claim(f"virt/bool_ra_{ci}", bool_pt, val, kind="virtual")
            omegas_bool.append(w)
            gpow = pow(ctx.pub["g_bool"], ci, P)
            bool_out.add_quad(eqb * gpow % P, w, w)
            bool_out.add_linear(-(eqb * gpow) % P, w)
        ctx.pub["omegas_bool"] = (omegas_bool, bool_pt)
        outputs.append(bool_out)
        # hamming (index, then pc): claims ra_i(rho_h2, r_cycle)
        for fam, gpowbase in ((0, ctx.pub["g_ham"]), (1, ctx.pub["g_hpc"])):
            e = Expr()
            oms = []
            for i in range(8):
                ci = fam * 8 + i
                val = None
                if insts:
                    val = int(insts[13 + fam].arrays[ci - fam * 8][0]) % P
                w = ctx.claim(f"virt/ham_ra_{ci}", list(rho_h2) + list(r_cycle),
                              val, kind="virtual")
                oms.append(w)
                e.add_linear(pow(gpowbase, i, P), w)
            ctx.pub.setdefault("omegas_ham", []).append(oms)
            outputs.append(e)
        # memory read-check
        mem_pt = challenges[: memory.A_BITS] + list(rho_j)
        rho_a = challenges[: memory.A_BITS]
        ctx.pub["rho_a"] = rho_a
        val_v = ra1_v = ra2_v = None
        if insts:
            fin = insts[15].final_values()
            ts1_v = ctx.acc.values[om_j["ts1_val"]]
            val_claim = (ts1_v - fin["diff"][0]) % P
            val_v = val_claim
            ra1_v, ra2_v = fin["ra"]
        om_val = ctx.claim("virt/val_mem", list(rho_a) + list(rho_j), val_v,
                           kind="virtual")
        om_ra1 = ctx.claim("virt/ra_read1", list(rho_a) + list(rho_j), ra1_v,
                           kind="virtual")
        om_ra2 = ctx.claim("virt/ra_read2", list(rho_a) + list(rho_j), ra2_v,
                           kind="virtual")
        ctx.pub["om_val_mem"] = om_val
        ctx.pub["om_ra_read"] = (om_ra1, om_ra2)
        ea = 1
        for l in range(memory.A_BITS):
            rl = ctx.pub["r_mem"][l]
            al = rho_a[l]
            ea = ea * ((rl * al + (1 - rl) * (1 - al)) % P) % P
        eqmj = eq_evaluate(ctx.pub["r_mem"][memory.A_BITS:], rho_j)
        mem_out = Expr()
        for s, (om_rs, tname) in enumerate(((om_ra1, "ts1_val"), (om_ra2, "ts2_val"))):
            w = ea * eqmj % P * pow(ctx.pub["g_mem"], s, P) % P
            mem_out.add_quad(w, om_rs, om_j[tname])
            mem_out.add_quad(-w % P, om_rs, om_val)
        outputs.append(mem_out)
        return outputs

    return shapes, instances, input_exprs, post


def _bytecode_table(ctx: Ctx, zeta) -> list:
    prog = ctx.keys.program
    z2 = zeta * zeta % P
    nextrow = prog.nextpc_row_table()
    bt = [0] * (1 << 16)
    opcl = prog.arrays["write_flag"]
    for k in range(prog.n_rows + 1):
        bt[k] = (k + zeta * int(nextrow[k]) + z2 * int(opcl[k])) % P
    for k in range(prog.n_rows + 1, 1 << 16):
        bt[k] = k % P
    return bt


def _bytecode_table_eval(ctx: Ctx, zeta, point) -> int:
    col = _bytecode_table(ctx, zeta)
    for r in point:
        half = len(col) >> 1
        col = [(col[i] + r * (col[half + i] - col[i])) % P for i in range(half)]
    return int(col[0])


def _io_selectors(ctx: Ctx):
    T = ctx.T
    sel_in = [0] * T
    sel_out = [0] * T
    for name, (first, count) in ctx.keys.program.input_rows.items():
        for k in range(count):
            sel_in[first - 1 + k] = 1
    for name, (first, count) in ctx.keys.program.output_rows.items():
        for k in range(count):
            sel_out[first - 1 + k] = 1
    return sel_in, sel_out


def _io_values(ctx: Ctx):
    """(cycle, value) pairs for input writes and claimed output reads."""
    pairs_in, pairs_out = [], []
    for name, (first, count) in ctx.keys.program.input_rows.items():
        data = np.asarray(ctx.io["inputs"][name], dtype=np.int64).reshape(-1)
        if data.size != count:
            raise GraphError(f"io input '{name}' has wrong element count")
        for k in range(count):
            pairs_in.append((first - 1 + k, int(data[k]) % P))
    for name, (first, count) in ctx.keys.program.output_rows.items():
        data = np.asarray(ctx.io["outputs"][name], dtype=np.int64).reshape(-1)
        if data.size != count:
            raise GraphError(f"io output '{name}' has wrong element count")
        for k in range(count):
            pairs_out.append((first - 1 + k, int(data[k]) % P))
    return pairs_in, pairs_out


def _point_eq(point, index, n) -> int:
    acc = 1
    for i, r in enumerate(point):
        bit = (index >> (n - 1 - i)) & 1
        acc = acc * ((r if bit else (1 - r)) % P) % P
    return int(acc)


def _io_public_sums(ctx: Ctx):
    r_cycle = ctx.pub["r_cycle"]
    n = ctx.n_cyc
    pairs_in, pairs_out = _io_values(ctx)
    s_in = 0
    for j, v in pairs_in:
        s_in = (s_in + _point_eq(r_cycle, j, n) * v) % P
    s_out = 0
    for j, v in pairs_out:
        s_out = (s_out + _point_eq(r_cycle, j, n) * v) % P
    return int(s_in), int(s_out)


def _io_selector_evals(ctx: Ctx, point):
    n = ctx.n_cyc
    pairs_in, pairs_out = _io_values(ctx)
    s_in = 0
    for j, _ in pairs_in:
        s_in = (s_in + _point_eq(point, j, n)) % P
    s_out = 0
    for j, _ in pairs_out:
        s_out = (s_out + _point_eq(point, j, n)) % P
    return int(s_in), int(s_out)


def _build_l3(ctx: Ctx):
    n_cyc = ctx.n_cyc
    rho_j = ctx.pub["rho_j"]
    rho_k = ctx.pub["rho_k"]
    rho_a = ctx.pub["rho_a"]
    om = ctx.pub["omega_rc"]
    shapes = [(n_cyc, 2), (n_cyc, 3), (n_cyc, 3), (n_cyc, 3), (n_cyc, 3), (n_cyc, 3)]
    input_exprs = [
        Expr().add_linear(1, om["next_pc"]),
        Expr().add_linear(1, ctx.pub["om_val_mem"]),
        Expr().add_linear(1, ctx.pub["om_ra_lookup"]),
        Expr().add_linear(1, ctx.pub["om_ra_pc"]),
        Expr().add_linear(1, ctx.pub["om_ra_read"][0]),
        Expr().add_linear(1, ctx.pub["om_ra_read"][1]),
    ]
    instances = None
    fam_bits = _family_bits(ctx)
    if ctx.role == "prove":
        cols = ctx.columns
        tr = cols.trace
        pcshift = lookups.pc_shift_instance(cols.cols["pc"], ctx.pub["r_cycle"])
        val_inst, wa = memory.val_evaluation_instance(
            cols.cols["inc"], tr.columns["td_addr"], rho_a, rho_j,
            ctx.acc.values[ctx.pub["om_val_mem"]])
        ctx.pub["wa_array"] = wa
        las = []
        cvs_by_fam = {}
        for fam, kappa, pt in (("lookup", rho_k, rho_j), ("pc", rho_k, rho_j),
                               ("ra1", rho_a, rho_j), ("ra2", rho_a, rho_j)):
            cvs = memory.chunk_values(fam_bits[fam], kappa)
            cvs_by_fam[fam] = cvs
            claim_omega = {"lookup": ctx.pub["om_ra_lookup"], "pc": ctx.pub["om_ra_pc"],
                           "ra1": ctx.pub["om_ra_read"][0],
                           "ra2": ctx.pub["om_ra_read"][1]}[fam]
            las.append(memory.level_a_instance(cvs, pt, ctx.acc.values[claim_omega]))
        ctx.pub["cvs_by_fam"] = cvs_by_fam
        instances = [pcshift, val_inst] + las

    def post(challenges, insts):
        rho3 = challenges
        eq_rho3 = eq_table(rho3)
        ctx.pub["rho3"] = rho3
        outputs = []
        # pc shift: PC(rho3) * eq_shift(r_cycle, rho3)
        es = eq_shift_evaluate(ctx.pub["r_cycle"], rho3)
        e = Expr()
        for b in range(16):
            w = ctx.open_column(f"col/pb{b:02d}", rho3, eq_rho3)
            e.add_linear(es * (1 << (15 - b)) % P, w)
        outputs.append(e)
        # val evaluation: Inc(rho3) * Wa(rho_a, rho3) * Lt(rho3, rho_j)
        om_inc = ctx.open_column("col/inc", rho3, eq_rho3)
        wa_v = None
        if insts:
            wa_v = int(insts[1].arrays[1][0]) % P
        om_wa = ctx.claim("virt/wa", list(rho_a) + list(rho3), wa_v, kind="virtual")
        ctx.pub["om_wa"] = om_wa
        lt_pub = lt_evaluate(rho3, rho_j)
        outputs.append(Expr().add_quad(lt_pub, om_inc, om_wa))
        # level A outputs: eq(pt, rho3) * G0 * G1
        ctx.pub.setdefault("chain_g", {})
        for idx, fam in enumerate(("lookup", "pc", "ra1", "ra2")):
            g0v = g1v = None
            if insts:
                inst = insts[2 + idx]
                g0v = int(inst.arrays[1][0]) % P
                g1v = int(inst.arrays[2][0]) % P
            w0 = ctx.claim(f"virt/{fam}_g0", rho3, g0v, kind="virtual")
            w1 = ctx.claim(f"virt/{fam}_g1", rho3, g1v, kind="virtual")
            ctx.pub["chain_g"][fam] = (w0, w1)
            eqv = eq_evaluate(rho_j, rho3)
            outputs.append(Expr().add_quad(eqv, w0, w1))
        return outputs

    return shapes, instances, input_exprs, post


def _family_bits(ctx: Ctx) -> dict:
    cols = ctx.columns
    statics = ctx.keys.statics
    if ctx.role == "prove":
        ib = [cols.cols[f"ib{b:02d}"] for b in range(16)]
        pb = [cols.cols[f"pb{b:02d}"] for b in range(16)]
    else:
        ib = pb = None
    r1 = [statics.cols[f"r1_b{b:02d}"] for b in range(16)]
    r2 = [statics.cols[f"r2_b{b:02d}"] for b in range(16)]
    ta = [statics.cols[f"ta_b{b:02d}"] for b in range(16)]
    return {"lookup": ib, "pc": pb, "ra1": r1, "ra2": r2, "wa": ta}


_FAMILY_COLS = {"lookup": "col/ib", "pc": "col/pb", "ra1": "static/r1_b",
                "ra2": "static/r2_b", "wa": "static/ta_b"}


def _build_l4(ctx: Ctx):
    n_cyc = ctx.n_cyc
    rho3 = ctx.pub["rho3"]
    rho_a = ctx.pub["rho_a"]
    shapes = [(n_cyc, 5)] * 8 + [(n_cyc, 3)]
    input_exprs = []
    for fam in ("lookup", "pc", "ra1", "ra2"):
        w0, w1 = ctx.pub["chain_g"][fam]
        input_exprs.append(Expr().add_linear(1, w0))
        input_exprs.append(Expr().add_linear(1, w1))
    input_exprs.append(Expr().add_linear(1, ctx.pub["om_wa"]))
    instances = None
    if ctx.role == "prove":
        instances = []
        for fam in ("lookup", "pc", "ra1", "ra2"):
            cvs = ctx.pub["cvs_by_fam"][fam]
            for grp in (0, 1):
                w = ctx.pub["chain_g"][fam][grp]
                instances.append(memory.level_b_instance(cvs, grp, rho3,
                                                         ctx.acc.values[w]))
        wa_cvs = memory.chunk_values(_family_bits(ctx)["wa"], rho_a)
        ctx.pub["cvs_by_fam"]["wa"] = wa_cvs
        instances.append(memory.level_a_instance(wa_cvs, rho3,
                                                 ctx.acc.values[ctx.pub["om_wa"]]))

    def post(challenges, insts):
        rho4 = challenges
        ctx.pub["rho4"] = rho4
        outputs = []
        ctx.pub["chain_cv"] = {}
        eqv = eq_evaluate(rho3, rho4)
        for idx, fam in enumerate(("lookup", "pc", "ra1", "ra2")):
            oms = []
            for i in range(8):
                val = None
                if insts:
                    inst = insts[2 * idx + (0 if i < 4 else 1)]
                    val = int(inst.arrays[1 + (i % 4)][0]) % P
                oms.append(ctx.claim(f"virt/{fam}_cv{i}", rho4, val, kind="virtual"))
            ctx.pub["chain_cv"][fam] = oms
            for grp in (0, 1):
                h1 = h2 = None
                if insts:
                    a = ctx.acc.values[oms[4 * grp]] * ctx.acc.values[oms[4 * grp + 1]] % P
                    b = ctx.acc.values[oms[4 * grp + 2]] * ctx.acc.values[oms[4 * grp + 3]] % P
                    h1, h2 = a, b
                wh1 = ctx.claim(f"virt/{fam}_h{grp}0", rho4, h1, kind="virtual")
                wh2 = ctx.claim(f"virt/{fam}_h{grp}1", rho4, h2, kind="virtual")
                g1 = Expr().add_linear(P - 1, wh1)
                g1.add_quad(1, oms[4 * grp], oms[4 * grp + 1])
                ctx.constraint_exprs.append(g1)
                g2 = Expr().add_linear(P - 1, wh2)
                g2.add_quad(1, oms[4 * grp + 2], oms[4 * grp + 3])
                ctx.constraint_exprs.append(g2)
                outputs.append(Expr().add_quad(eqv, wh1, wh2))
        # wa level A
        g0v = g1v = None
        if insts:
            g0v = int(insts[8].arrays[1][0]) % P
            g1v = int(insts[8].arrays[2][0]) % P
        w0 = ctx.claim("virt/wa_g0", rho4, g0v, kind="virtual")
        w1 = ctx.claim("virt/wa_g1", rho4, g1v, kind="virtual")
        ctx.pub["chain_g"]["wa"] = (w0, w1)
        outputs.append(Expr().add_quad(eqv, w0, w1))
        return outputs

    return shapes, instances, input_exprs, post


def _merged_level_c(ctx: Ctx, fam: str, kappa: list, point_j: list, chi,
                    claim_omegas: list):
    """One instance proving all eight chunk claims of a family at once."""
    from .sumcheck import DenseProduct

    bits = _family_bits(ctx)[fam]
    eq = eq_table(point_j)
    arrays = [eq]
    terms = []
    for i in range(8):
        k0, k1 = int(kappa[2 * i]) % P, int(kappa[2 * i + 1]) % P
        f_hi = [(k0 if b else (1 - k0)) % P for b in bits[2 * i]]
        f_lo = [(k1 if b else (1 - k1)) % P for b in bits[2 * i + 1]]
        arrays.append(f_hi)
        arrays.append(f_lo)
        terms.append((pow(chi, i, P), [0, 1 + 2 * i, 2 + 2 * i]))
    claim = 0
    for i, w in enumerate(claim_omegas):
        claim = (claim + pow(chi, i, P) * ctx.acc.values[w]) % P
    return DenseProduct(arrays, terms, degree=3, claim=claim)


def _level_c_io(ctx: Ctx, fam: str, kappa: list, chi, claim_omegas: list,
                rho_next: list, eq_rho_next):
    """(input expr, output expr) for a merged chunk-tie instance."""
    e_in = Expr()
    for i, w in enumerate(claim_omegas):
        e_in.add_linear(pow(chi, i, P), w)
    prefix = _FAMILY_COLS[fam]
    e_out = Expr()
    for i in range(8):
        om_hi = ctx.open_column(f"{prefix}{2 * i:02d}", rho_next, eq_rho_next)
        om_lo = ctx.open_column(f"{prefix}{2 * i + 1:02d}", rho_next, eq_rho_next)
        part = memory.level_c_output_expr(pow(chi, i, P), kappa[2 * i: 2 * i + 2],
                                          om_hi, om_lo)
        e_out = e_out.plus(part)
    return e_in, e_out


def _build_l5(ctx: Ctx):
    n_cyc = ctx.n_cyc
    rho4 = ctx.pub["rho4"]
    rho_k = ctx.pub["rho_k"]
    rho_a = ctx.pub["rho_a"]
    rho_h2 = ctx.pub["rho_h2"]
    r_cycle = ctx.pub["r_cycle"]
    chis = {fam: ctx.t.challenge(b"chi/" + fam.encode())
            for fam in ("lookup", "pc", "ra1", "ra2")}
    chi_ham = ctx.t.challenge(b"chi/hamming")
    ctx.pub["chis"] = chis
    ctx.pub["chi_ham"] = chi_ham
    shapes = [(n_cyc, 3)] * 4 + [(n_cyc, 5), (n_cyc, 5), (n_cyc, 3)]
    input_exprs = []
    kappas = {"lookup": rho_k, "pc": rho_k, "ra1": rho_a, "ra2": rho_a}
    for fam in ("lookup", "pc", "ra1", "ra2"):
        e = Expr()
        for i, w in enumerate(ctx.pub["chain_cv"][fam]):
            e.add_linear(pow(chis[fam], i, P), w)
        input_exprs.append(e)
    w0, w1 = ctx.pub["chain_g"]["wa"]
    input_exprs.append(Expr().add_linear(1, w0))
    input_exprs.append(Expr().add_linear(1, w1))
    ham_in = Expr()
    ham_all = ctx.pub["omegas_ham"][0] + ctx.pub["omegas_ham"][1]
    for i, w in enumerate(ham_all):
        ham_in.add_linear(pow(chi_ham, i, P), w)
    input_exprs.append(ham_in)

    instances = None
    if ctx.role == "prove":
        instances = []
        for fam in ("lookup", "pc", "ra1", "ra2"):
            instances.append(_merged_level_c(ctx, fam, kappas[fam], rho4,
                                             chis[fam], ctx.pub["chain_cv"][fam]))
        wa_cvs = ctx.pub["cvs_by_fam"]["wa"]
        for grp in (0, 1):
            w = ctx.pub["chain_g"]["wa"][grp]
            instances.append(memory.level_b_instance(wa_cvs, grp, rho4,
                                                     ctx.acc.values[w]))
        # hamming ties: chunks at kappa = rho_h2, cycle point r_cycle
        from .sumcheck import DenseProduct

        ib_pb = _family_bits(ctx)["lookup"] + _family_bits(ctx)["pc"]
        eqc = ctx.pub["eq_r_cycle"]
        arrays = [eqc]
        terms = []
        k0, k1 = int(rho_h2[0]) % P, int(rho_h2[1]) % P
        for ci in range(16):
            f_hi = [(k0 if b else (1 - k0)) % P for b in ib_pb[2 * ci]]
            f_lo = [(k1 if b else (1 - k1)) % P for b in ib_pb[2 * ci + 1]]
            arrays.append(f_hi)
            arrays.append(f_lo)
            terms.append((pow(chi_ham, ci, P), [0, 1 + 2 * ci, 2 + 2 * ci]))
        instances.append(DenseProduct(arrays, terms, degree=3,
                                      claim=ham_in.evaluate(ctx.acc.values)))

    def post(challenges, insts):
        rho5 = challenges
        eq_rho5 = eq_table(rho5)
        ctx.pub["rho5"] = rho5
        outputs = []
        for fam in ("lookup", "pc", "ra1", "ra2"):
            _, e_out = _level_c_io(ctx, fam, kappas[fam], chis[fam],
                                   ctx.pub["chain_cv"][fam], rho5, eq_rho5)
            e_out = e_out.scaled(eq_evaluate(rho4, rho5))
            outputs.append(e_out)
        ctx.pub["chain_cv"]["wa"] = []
        eqv = eq_evaluate(rho4, rho5)
        for grp in (0, 1):
            oms = []
            for i in range(4):
                val = None
                if insts:
                    val = int(insts[4 + grp].arrays[1 + i][0]) % P
                oms.append(ctx.claim(f"virt/wa_cv{4 * grp + i}", rho5, val,
                                     kind="virtual"))
            ctx.pub["chain_cv"]["wa"].extend(oms)
            h1 = h2 = None
            if insts:
                h1 = ctx.acc.values[oms[0]] * ctx.acc.values[oms[1]] % P
                h2 = ctx.acc.values[oms[2]] * ctx.acc.values[oms[3]] % P
            wh1 = ctx.claim(f"virt/wa_h{grp}0", rho5, h1, kind="virtual")
            wh2 = ctx.claim(f"virt/wa_h{grp}1", rho5, h2, kind="virtual")
            g1 = Expr().add_linear(P - 1, wh1)
            g1.add_quad(1, oms[0], oms[1])
            ctx.constraint_exprs.append(g1)
            g2 = Expr().add_linear(P - 1, wh2)
            g2.add_quad(1, oms[2], oms[3])
            ctx.constraint_exprs.append(g2)
            outputs.append(Expr().add_quad(eqv, wh1, wh2))
        # hamming tie output: bit openings at rho5 over ib then pb
        e_out = Expr()
        eq_rc_rho5 = eq_evaluate(r_cycle, rho5)
        for ci in range(16):
            prefix = "col/ib" if ci < 8 else "col/pb"
            idx = ci % 8
            om_hi = ctx.open_column(f"{prefix}{2 * idx:02d}", rho5, eq_rho5)
            om_lo = ctx.open_column(f"{prefix}{2 * idx + 1:02d}", rho5, eq_rho5)
            part = memory.level_c_output_expr(pow(ctx.pub["chi_ham"], ci, P),
                                              rho_h2, om_hi, om_lo)
            e_out = e_out.plus(part)
        outputs.append(e_out.scaled(eq_rc_rho5))
        return outputs

    return shapes, instances, input_exprs, post


def _build_l6(ctx: Ctx):
    n_cyc = ctx.n_cyc
    rho5 = ctx.pub["rho5"]
    rho_a = ctx.pub["rho_a"]
    chi = ctx.t.challenge(b"chi/wa")
    shapes = [(n_cyc, 3)]
    e_in = Expr()
    for i, w in enumerate(ctx.pub["chain_cv"]["wa"]):
        e_in.add_linear(pow(chi, i, P), w)
    instances = None
    if ctx.role == "prove":
        instances = [_merged_level_c(ctx, "wa", rho_a, rho5, chi,
                                     ctx.pub["chain_cv"]["wa"])]

    def post(challenges, insts):
        rho6 = challenges
        eq_rho6 = eq_table(rho6)
        ctx.pub["rho6"] = rho6
        _, e_out = _level_c_io(ctx, "wa", rho_a, chi,
                               ctx.pub["chain_cv"]["wa"], rho6, eq_rho6)
        return [e_out.scaled(eq_evaluate(rho5, rho6))]

    return shapes, instances, [e_in], post


def _build_l7(ctx: Ctx):
    """Multi-point to single-point reduction over all committed-poly claims."""
    n_cyc = ctx.n_cyc
    betas = {}
    pcs_claims = ctx.acc.pcs_claims()
    beta_seed = ctx.t.challenge(b"beta")
    for i, c in enumerate(pcs_claims):
        betas[c.omega] = pow(beta_seed, i + 1, P)
    ctx.pub["betas"] = betas
    by_point = {}
    for c in pcs_claims:
        by_point.setdefault(c.point, []).append(c)
    points = sorted(by_point)
    ctx.pub["reduction_points"] = points
    e_in = Expr()
    for c in pcs_claims:
        e_in.add_linear(betas[c.omega], c.omega)
    shapes = [(n_cyc, 2)]
    instances = None
    if ctx.role == "prove":
        from .sumcheck import DenseProduct

        arrays = []
        terms = []
        claim = 0
        for pt in points:
            eqp = eq_table(list(pt))
            combo = [0] * ctx.T
            for c in by_point[pt]:
                w = betas[c.omega]
                col = ctx._column_data(c.poly)
                for j, v in enumerate(col):
                    if v:
                        combo[j] = (combo[j] + w * v) % P
                claim = (claim + w * ctx.acc.values[c.omega]) % P
            arrays.append(eqp)
            arrays.append(combo)
            terms.append((1, [len(arrays) - 2, len(arrays) - 1]))
        instances = [DenseProduct(arrays, terms, degree=2, claim=claim)]

    def post(challenges, insts):
        r_star = challenges
        eq_star = eq_table(r_star)
        ctx.pub["r_star"] = r_star
        final_oms = {}
        for name in ctx.all_poly_names():
            final_oms[name] = ctx.open_column(name, r_star, eq_star)
        # mark them as final (consumed by the joint opening, not re-reduced)
        for name, omg in final_oms.items():
            ctx.acc.claims[omg].kind = "final"
        ctx.pub["final_oms"] = final_oms
        e_out = Expr()
        for pt in points:
            eqv = eq_evaluate(list(pt), r_star)
            for c in by_point[pt]:
                e_out.add_linear(eqv * betas[c.omega] % P, final_oms[c.poly])
        return [e_out]

    return shapes, instances, [e_in], post


# ---------------------------------------------------------------------------
# prove / verify drivers


def _statement_digest(keys: Keys, io: dict) -> int:
    h = hashlib.sha256()
    h.update(keys.vk_digest())
    h.update(digest_json(io))
    return int.from_bytes(h.digest(), "big") % P


def _absorb_preamble(ctx: Ctx):
    ctx.t.absorb(b"vk", ctx.keys.vk_digest())
    ctx.t.absorb(b"io", digest_json(ctx.io))
    for name in ctx.columns_names():
        rows = ctx.proof.witness_commitments[f"col/{name}"]
        ctx.t.absorb_points(b"com/" + name.encode(), rows)


def _run_all_levels(ctx: Ctx):
    _run_level(ctx, b"L1", _build_l1)
    _run_level(ctx, b"L2", _build_l2)
    _run_level(ctx, b"L3", _build_l3)
    _run_level(ctx, b"L4", _build_l4)
    _run_level(ctx, b"L5", _build_l5)
    _run_level(ctx, b"L6", _build_l6)
    # base-case claim (pinned by a circuit constraint): PC at cycle 0 is row 1
    zeros = [0] * ctx.n_cyc
    eq0 = eq_table(zeros)
    pc0 = Expr(const=P - 1)
    for b in range(16):
        w = ctx.open_column(f"col/pb{b:02d}", zeros, eq0)
        pc0.add_linear(1 << (15 - b), w)
    ctx.constraint_exprs.append(pc0)
    _run_level(ctx, b"L7", _build_l7)


def _stage_configs(ctx: Ctx) -> list:
    cfgs = []
    for rec in ctx.acc.stages:
        cfgs.append(StageConfig(rec.label, rec.n_rounds, rec.degree, rec.challenges,
                                rec.combined_input_expr(), rec.combined_output_expr()))
    return cfgs


def _pcs_binding(ctx: Ctx, delta) -> list:
    weights = []
    for p_idx, name in enumerate(ctx.all_poly_names()):
        weights.append((pow(delta, p_idx + 1, P), ctx.pub["final_oms"][name]))
    return [weights]


def prove(keys: Keys, inputs: dict, rng=None) -> bytes:
    """Generate a serialized proof for execute(graph, inputs)."""
    if rng is None:
        seed = os.environ.get("ATLAS_SEED")
        rng = random.Random(int(seed)) if seed is not None else random.SystemRandom()

    trace = generate_trace(keys.program, inputs, keys.registry)
    columns = columns_from_trace(trace)
    outputs = {}
    for name in keys.graph.outputs:
        base = keys.program.layout[name]
        size = keys.graph.tensors[name].size
        outputs[name] = [int(v) for v in trace.memory_final[base: base + size]]
    io = {"inputs": {k: np.asarray(v, dtype=np.int64).reshape(-1).tolist()
                     for k, v in inputs.items()},
          "outputs": outputs}

    proof_bytes, _ = _prove_with_io(keys, columns, io, rng)
    return proof_bytes, io


def _prove_with_io(keys: Keys, columns, io: dict, rng, unchecked: bool = False) -> tuple:
    """Full prover path; `unchecked` skips the final satisfaction refusal so
    mutation batteries can exercise verifier-side rejection."""
    ctx = Ctx(keys, io, "prove")
    ctx.columns = columns
    ctx.blind_rng = rng
    ctx.z = spartan.build_z_columns(columns, keys.statics)
    from .pedersen import PedersenGens

    ctx.bf_round_gens = _round_gens()
    gens = pcs_gens()

    # commit witness columns
    for name in ctx.columns_names():
        poly = columns.poly(name)
        rows = 1 << gens.split(poly.num_vars)[0]
        blinds = PcsBlinds([rng.randrange(P) for _ in range(rows)])
        comm, _ = pcs_commit(poly, gens, blinds)
        ctx.witness_blinds[f"col/{name}"] = blinds
        ctx.proof.witness_commitments[f"col/{name}"] = comm.row_commitments
    _absorb_preamble(ctx)
    _run_all_levels(ctx)

    # joint opening of the delta-combined polynomial at r_star
    delta = ctx.t.challenge(b"delta")
    r_star = ctx.pub["r_star"]
    names = ctx.all_poly_names()
    q_evals = [0] * ctx.T
    for p_idx, name in enumerate(names):
        w = pow(delta, p_idx + 1, P)
        col = ctx._column_data(name)
        for j, v in enumerate(col):
            if v:
                q_evals[j] = (q_evals[j] + w * v) % P
    q_poly = MultilinearPoly(ctx.n_cyc, q_evals)
    rows = 1 << gens.split(ctx.n_cyc)[0]
    q_blinds = [0] * rows
    for p_idx, name in enumerate(names):
        w = pow(delta, p_idx + 1, P)
        b = ctx.witness_blinds.get(name)
        if b is not None:
            for ri in range(rows):
                q_blinds[ri] = (q_blinds[ri] + w * b.row_blinds[ri]) % P
    y_joint, b_joint, opening = pcs_open_hiding(
        q_poly, r_star, PcsBlinds(q_blinds), gens, ctx.t, rng)
    ctx.proof.pcs_opening = opening

    # folding layer
    cfgs = _stage_configs(ctx)
    pcs_binding = _pcs_binding(ctx, delta)
    circ = build_verifier_circuit(cfgs, [c.omega for c in ctx.acc.claims],
                                  pcs_binding, n_pub=1,
                                  constraint_exprs=ctx.constraint_exprs)
    stage_msgs = [rec.messages for rec in ctx.acc.stages]
    w_vec = assign_witness(circ, cfgs, stage_msgs, ctx.acc.values,
                           [(y_joint, b_joint)])
    bf_gens = _bf_gens(circ)
    from .pedersen import pedersen_commit

    r_w = rng.randrange(P)
    w_comm = pedersen_commit(w_vec, r_w, bf_gens.wit)
    round_comms = []
    round_blinds = []
    for rec in ctx.acc.stages:
        for m in rec.messages:
            round_comms.append(m.commitment)
            round_blinds.append(m.blind)
    x_pub = [_statement_digest(keys, io)]
    inst1 = RelaxedInstance(IDENTITY, 1, w_comm, x_pub, round_comms,
                            [opening.value_commitment])
    wit1 = RelaxedWitness([0] * circ.n_constraints, 0, w_vec, r_w, round_blinds)
    bf_proof = blindfold_prove(circ, inst1, wit1, bf_gens, ctx.t, rng,
                               unchecked=unchecked)
    ctx.proof.blindfold = bf_proof
    return ctx.proof.to_bytes(), ctx


_ROUND_GENS = None


def _round_gens():
    global _ROUND_GENS
    if _ROUND_GENS is None:
        from .pedersen import PedersenGens

        _ROUND_GENS = PedersenGens(8, label=b"blindfold-rounds")
    return _ROUND_GENS


_BF_GENS_CACHE = {}


def _bf_gens(circ) -> BlindfoldGens:
    key = (circ.n_wit, circ.n_constraints)
    if key not in _BF_GENS_CACHE:
        gens = BlindfoldGens.__new__(BlindfoldGens)
        from .curve import GENERATOR
        from .pedersen import PedersenGens

        gens.wit = PedersenGens(circ.n_wit, label=b"blindfold-witness")
        gens.err = PedersenGens(circ.n_constraints, label=b"blindfold-error")
        gens.rounds = _round_gens()
        gens.value_g = GENERATOR
        gens.value_h = pcs_gens().h
        _BF_GENS_CACHE[key] = gens
    return _BF_GENS_CACHE[key]


class VerificationError(ValueError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def verify(keys: Keys, io: dict, proof_bytes: bytes) -> None:
    """Raises VerificationError naming the failed stage; returns on accept."""
    try:
        proof = AtlasProof.from_bytes(proof_bytes)
    except ValueError as e:
        raise VerificationError("decode", str(e)) from e
    ctx = Ctx(keys, io, "verify")
    ctx.proof = proof
    gens = pcs_gens()
    for name in ctx.columns_names():
        key = f"col/{name}"
        if key not in proof.witness_commitments:
            raise VerificationError("decode", f"missing commitment for {key}")
        rows = 1 << gens.split(ctx.n_cyc)[0]
        if len(proof.witness_commitments[key]) != rows:
            raise VerificationError("decode", f"bad commitment shape for {key}")
    try:
        _absorb_preamble(ctx)
        _run_all_levels(ctx)
    except ValueError as e:
        raise VerificationError("sumcheck-dag", str(e)) from e

    delta = ctx.t.challenge(b"delta")
    r_star = ctx.pub["r_star"]
    names = ctx.all_poly_names()
    # RLC of all row commitments under delta-weights
    from .pcs import PcsCommitment

    weights = [pow(delta, i + 1, P) for i in range(len(names))]
    comms = []
    for name in names:
        kind, col = name.split("/", 1)
        if kind == "col":
            comms.append(PcsCommitment(ctx.n_cyc, proof.witness_commitments[name]))
        else:
            comms.append(keys.static_comms[col])
    try:
        pcs_verify_hiding(comms[0], r_star, proof.pcs_opening, gens, ctx.t,
                          multi=(comms, weights))
    except ValueError as e:
        raise VerificationError("pcs-opening", str(e)) from e

    cfgs = _stage_configs(ctx)
    pcs_binding = _pcs_binding(ctx, delta)
    circ = build_verifier_circuit(cfgs, [c.omega for c in ctx.acc.claims],
                                  pcs_binding, n_pub=1,
                                  constraint_exprs=ctx.constraint_exprs)
    bf_gens = _bf_gens(circ)
    round_comms = []
    for msgs in proof.stage_messages:
        for m in msgs:
            round_comms.append(m.commitment)
    x_pub = [_statement_digest(keys, io)]
    bf = proof.blindfold
    inst1 = RelaxedInstance(IDENTITY, 1, bf.inst1.w_comm, x_pub, round_comms,
                            [proof.pcs_opening.value_commitment])
    from .blindfold import BlindfoldError, BlindfoldProof

    rebuilt = BlindfoldProof(inst1, bf.inst2, bf.t_comm, bf.w_folded,
                             bf.r_w, bf.r_e, bf.round_blinds)
    try:
        blindfold_verify(circ, rebuilt, bf_gens, ctx.t)
    except BlindfoldError as e:
        raise VerificationError(f"blindfold-{e.check}", str(e)) from e
