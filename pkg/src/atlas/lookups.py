"""Stage-3 lookup sumchecks: read-raf, bytecode read, booleanity, Hamming
weight, instruction-input binding, and the PC-transition shift check.

The read-raf prover streams: during the sixteen address rounds it keeps,
per lookup table, either a halving dense column or the bound prefix-suffix
factor tables (never the 2^16 table for decomposable ops), and per active
cycle a single running one-hot factor.  The one-hot collapse makes each
round linear in the number of lookup-active cycles.
"""

from __future__ import annotations

import numpy as np

from .field import P
from .mle import eq_shift_table, eq_table, fold_first_var
from .sumcheck import DenseProduct, SumcheckInstance
from .tables import COUNTER, LookupTable, WIDTH, signed_value_mle


class DenseTableState:
    """Halving bound column of a dense 16-bit table."""

    def __init__(self, table: LookupTable):
        self.column = list(table.field_column())

    def value_at(self, x_point: int, suffix: int):
        half = len(self.column) >> 1
        lo = self.column[suffix]
        hi = self.column[half + suffix]
        if x_point == 0:
            return lo
        return (lo + x_point * (hi - lo)) % P

    def bind(self, r):
        self.column = fold_first_var(self.column, r)

    def final(self) -> int:
        return int(self.column[0]) % P


class DecompTableState:
    """Bound prefix-suffix factors; materializes at most C * 2^b entries."""

    def __init__(self, table: LookupTable):
        dec = table.decomposition
        self.op = table.id
        self.bits = dec.bits
        self.chunks = dec.chunks
        self.round = 0
        # per term: list of per-chunk factor state: ('table', column) |
        # ('one',) | ('notmsb',); plus the scalar of fully-bound factors
        self.terms = []
        peak = 0
        for term in dec.terms:
            factors = []
            for f in term:
                if f.kind == "table":
                    factors.append(["table", list(f.table)])
                    peak += len(f.table)
                else:
                    factors.append([f.kind])
            self.terms.append({"scalar": 1, "factors": factors})
        COUNTER.add(f"{self.op}/bound", 0)  # presence marker
        self.peak_entries = peak

    def _chunk_of_round(self, rnd: int) -> int:
        return rnd // self.bits

    def value_at(self, x_point: int, suffix: int):
        """Term-sum at (bound prefix, x, suffix bits of the rest)."""
        rnd = self.round
        chunk = self._chunk_of_round(rnd)
        bit_in_chunk = rnd - chunk * self.bits
        rem_in_chunk = self.bits - bit_in_chunk          # incl. current var
        suffix_bits_total = WIDTH - rnd - 1
        in_chunk_sfx_bits = rem_in_chunk - 1
        total = 0
        for term in self.terms:
            prod = term["scalar"]
            for ci in range(chunk, self.chunks):
                f = term["factors"][ci]
                if ci == chunk:
                    sfx = (suffix >> (suffix_bits_total - in_chunk_sfx_bits)) \
                        if in_chunk_sfx_bits else 0
                    sfx &= (1 << in_chunk_sfx_bits) - 1
                    if f[0] == "table":
                        col = f[1]
                        half = len(col) >> 1
                        lo, hi = col[sfx], col[half + sfx]
                        v = lo if x_point == 0 else (lo + x_point * (hi - lo)) % P
                    elif f[0] == "one":
                        v = 1
                    else:  # notmsb: 1 - top bit of this chunk
                        if bit_in_chunk == 0:
                            v = (1 - x_point) % P
                        else:
                            # msb already bound into the scalar at an earlier
                            # round of this chunk; factor contributes 1 now
                            v = 1
                else:
                    shift_from_low = (self.chunks - 1 - ci) * self.bits
                    cb = (suffix >> shift_from_low) & ((1 << self.bits) - 1)
                    if f[0] == "table":
                        v = f[1][cb]
                    elif f[0] == "one":
                        v = 1
                    else:
                        v = 1 - (cb >> (self.bits - 1))
                prod = prod * v % P
            total = (total + prod) % P
        return int(total)

    def bind(self, r):
        rnd = self.round
        chunk = self._chunk_of_round(rnd)
        bit_in_chunk = rnd - chunk * self.bits
        for term in self.terms:
            f = term["factors"][chunk]
            if f[0] == "table":
                f[1] = fold_first_var(f[1], r)
                if len(f[1]) == 1:
                    term["scalar"] = term["scalar"] * f[1][0] % P
            elif f[0] == "notmsb":
                if bit_in_chunk == 0:
                    term["scalar"] = term["scalar"] * (1 - r) % P
            # 'one' contributes nothing
        self.round += 1

    def final(self) -> int:
        total = 0
        for term in self.terms:
            total = (total + term["scalar"]) % P
        return int(total)


class ReadRafInstance(SumcheckInstance):
    """Lookup-read + address-fingerprint sumcheck over (index, cycle).

    claim = LookupOutput(r_cycle) + gamma * LeftInput(r_cycle)
          = sum_{k,j} ra(k,j) eq(r_cycle,j) [valsel(k,j) + gamma f_act(j) sv(k)]
    """

    def __init__(self, active, eqj, tables: dict, gamma, n_cyc: int, claim: int):
        # active: list of (cycle j, index u16, table name)
        self.n_rounds = WIDTH + n_cyc
        self.degree = 3
        self.n_cyc = n_cyc
        self.gamma = int(gamma) % P
        self._claim = claim % P
        self.eqj = eqj
        self.kround = 0
        self.states = {}
        for name, table in tables.items():
            if table.is_decomposable():
                self.states[name] = DecompTableState(table)
            else:
                self.states[name] = DenseTableState(table)
        self.active = [
            {"j": j, "idx": idx, "table": name, "m": 1,
             "w": eqj[j]}
            for j, idx, name in active
        ]
        # signed-value linear form bookkeeping
        self.sv_weights = [(-(1 << (WIDTH - 1))) % P] + \
                          [(1 << (WIDTH - 1 - b)) for b in range(1, WIDTH)]
        self.sv_bound = 0
        self.zero_m = 1          # bound one-hot factor of the all-zero index
        self.phase2 = None
        self.T = len(eqj)

    def input_claim(self) -> int:
        return self._claim

    # -- k rounds ------------------------------------------------------------

    def _sv_suffix(self, idx: int, rnd: int) -> int:
        s = 0
        for b in range(rnd + 1, WIDTH):
            if (idx >> (WIDTH - 1 - b)) & 1:
                s += self.sv_weights[b]
        return s % P

    def round_evals(self, points: list) -> list:
        if self.kround < WIDTH:
            rnd = self.kround
            shift = WIDTH - 1 - rnd
            out = [0] * len(points)
            g = self.gamma
            w_cur = self.sv_weights[rnd]
            for ent in self.active:
                bit = (ent["idx"] >> shift) & 1
                suffix = ent["idx"] & ((1 << shift) - 1)
                base = ent["w"] * ent["m"] % P
                sv_sfx = (self.sv_bound + self._sv_suffix(ent["idx"], rnd)) % P
                st = self.states[ent["table"]]
                for pi, x in enumerate(points):
                    bf = x if bit else (1 - x)
                    val = st.value_at(x, suffix)
                    sv = (sv_sfx + w_cur * x) % P
                    out[pi] += base * bf % P * ((val + g * sv) % P)
            return [int(v % P) for v in out]
        return self.phase2.round_evals(points)

    def bind(self, r) -> None:
        if self.kround < WIDTH:
            rnd = self.kround
            shift = WIDTH - 1 - rnd
            for ent in self.active:
                bit = (ent["idx"] >> shift) & 1
                ent["m"] = ent["m"] * (r if bit else (1 - r)) % P
            for st in self.states.values():
                st.bind(r)
            self.sv_bound = (self.sv_bound + self.sv_weights[rnd] * r) % P
            self.zero_m = self.zero_m * (1 - r) % P
            self.kround += 1
            if self.kround == WIDTH:
                self._enter_phase2()
        else:
            self.phase2.bind(r)

    def _enter_phase2(self):
        ra = [self.zero_m] * self.T
        vs = [0] * self.T
        sv_final = self.sv_bound
        g = self.gamma
        finals = {name: st.final() for name, st in self.states.items()}
        for ent in self.active:
            j = ent["j"]
            ra[j] = ent["m"]
            vs[j] = (finals[ent["table"]] + g * sv_final) % P
        self.table_finals = finals
        self.sv_final = sv_final
        self.phase2 = DenseProduct([self.eqj, ra, vs], [(1, [0, 1, 2])], degree=3)

    def final_claim(self) -> int:
        return self.phase2.final_claim()

    def ra_final(self) -> int:
        return int(self.phase2.arrays[1][0]) % P

    def peak_decomposable_entries(self, op: str) -> int:
        st = self.states.get(op)
        return st.peak_entries if isinstance(st, DecompTableState) else 0


class BytecodeInstance(SumcheckInstance):
    """PC-indexed lookup of the zeta-combined bytecode row table.

    claim = PC(r_cycle) + zeta NextPC(r_cycle) + zeta^2 write_flag(r_cycle)
          = sum_{k,j} ra_pc(k,j) eq(r_cycle,j) BT(k)
    """

    def __init__(self, pc_column, eqj, bt_table: list, n_cyc: int, claim: int):
        self.n_rounds = WIDTH + n_cyc
        self.degree = 3
        self._claim = claim % P
        self.eqj = eqj
        self.T = len(eqj)
        self.kround = 0
        self.column = list(bt_table)
        self.pc = [int(v) for v in pc_column]
        self.m = [1] * self.T                # bound one-hot factor per cycle
        self.w = [int(x) % P for x in eqj]   # eqj * m, for bucket sums
        self.phase2 = None

    def input_claim(self) -> int:
        return self._claim

    def round_evals(self, points: list) -> list:
        if self.kround < WIDTH:
            shift = WIDTH - 1 - self.kround
            half = len(self.column) >> 1
            mask = (1 << shift) - 1
            s0 = [0] * half
            s1 = [0] * half
            for j in range(self.T):
                pcv = self.pc[j]
                sfx = pcv & mask
                if (pcv >> shift) & 1:
                    s1[sfx] += self.w[j]
                else:
                    s0[sfx] += self.w[j]
            col = self.column
            out = [0] * len(points)
            for sfx in range(half):
                a, b = s0[sfx], s1[sfx]
                if a == 0 and b == 0:
                    continue
                lo, hi = col[sfx], col[half + sfx]
                d = hi - lo
                for pi, x in enumerate(points):
                    sel = (a * (1 - x) + b * x) % P
                    out[pi] += sel * ((lo + x * d) % P)
            return [int(v % P) for v in out]
        return self.phase2.round_evals(points)

    def bind(self, r) -> None:
        if self.kround < WIDTH:
            shift = WIDTH - 1 - self.kround
            rm1 = (1 - r) % P
            for j in range(self.T):
                f = r if (self.pc[j] >> shift) & 1 else rm1
                self.m[j] = self.m[j] * f % P
                self.w[j] = self.w[j] * f % P
            self.column = fold_first_var(self.column, r)
            self.kround += 1
            if self.kround == WIDTH:
                self.bt_final = int(self.column[0]) % P
                self.phase2 = DenseProduct(
                    [self.eqj, self.m], [(self.bt_final, [0, 1])], degree=2)
        else:
            self.phase2.bind(r)

    def final_claim(self) -> int:
        return self.phase2.final_claim()

    def ra_pc_final(self) -> int:
        """ra_pc(rho_k, rho_j) — the bound one-hot alone, eq excluded."""
        return int(self.phase2.arrays[1][0]) % P


class BooleanityInstance(SumcheckInstance):
    """Batched zero-check: sum eq(r,(k,j)) sum_i gamma^i (ra_i^2 - ra_i) = 0.

    chunk_cols: per chunk, four cycle-indexed one-hot columns (k-major).
    """

    def __init__(self, chunk_cols: list, r_point: list, gamma, n_cyc: int):
        self.n_rounds = 2 + n_cyc
        self.degree = 3
        self.gammas = [pow(int(gamma), i, P) for i in range(len(chunk_cols))]
        self.cols = [[list(map(int, c)) for c in chunk] for chunk in chunk_cols]
        self.rk = [int(r) % P for r in r_point[:2]]   # chunk-address eq point
        self.eqj = eq_table(r_point[2:])              # cycle-variable eq table
        self.kround = 0

    def input_claim(self) -> int:
        return 0

    def _pair_contrib(self, a, b, w, points, out):
        # (v^2 - v) at v = a + x(b - a), weighted by w per point
        if a == b:
            if a == 0 or a == 1:
                return
            c = (a * a - a) % P
            for pi, x in enumerate(points):
                out[pi] += w * c
            return
        d = b - a
        for pi, x in enumerate(points):
            v = (a + x * d) % P
            out[pi] += w * ((v * v - v) % P)

    def round_evals(self, points: list) -> list:
        out = [0] * len(points)
        if self.kround == 0:
            # pairs (col0,col2),(col1,col3); eq over (X, k1) x cycles
            rk1 = self.rk[1]
            for ci, chunk in enumerate(self.cols):
                g = self.gammas[ci]
                for k1 in (0, 1):
                    wk = g * (rk1 if k1 else (1 - rk1) % P) % P
                    lo, hi = chunk[k1], chunk[2 + k1]
                    eqj = self.eqj
                    for j, (a, b) in enumerate(zip(lo, hi)):
                        if a == b and (a == 0 or a == 1):
                            continue
                        self._pair_contrib(a, b, wk * eqj[j] % P, points, out)
            rb0 = self.rk[0]
            return [int(v % P * ((rb0 * x + (1 - rb0) * (1 - x)) % P) % P)
                    for v, x in zip(out, points)]
        if self.kround == 1:
            for ci, chunk in enumerate(self.cols):
                g = self.gammas[ci]
                lo, hi = chunk[0], chunk[1]
                eqj = self.eqj
                for j, (a, b) in enumerate(zip(lo, hi)):
                    if a == b and (a == 0 or a == 1):
                        continue
                    self._pair_contrib(a, b, g * eqj[j] % P, points, out)
            rb1 = self.rk[1]
            s0 = self._eq_scalar0
            return [int(v % P * ((rb1 * x + (1 - rb1) * (1 - x)) % P) % P * s0 % P)
                    for v, x in zip(out, points)]
        # cycle rounds: one column per chunk
        half = len(self.cols[0][0]) >> 1
        eqj = self.eqj
        for ci, chunk in enumerate(self.cols):
            g = self.gammas[ci]
            col = chunk[0]
            for i in range(half):
                a, b = col[i], col[half + i]
                if a == b and (a == 0 or a == 1):
                    continue
                d = b - a
                we = eqj[i]
                wd = eqj[half + i] - we
                for pi, x in enumerate(points):
                    v = (a + x * d) % P
                    out[pi] += g * ((we + x * wd) % P) % P * ((v * v - v) % P)
        return [int(v % P) for v in out]

    def bind(self, r) -> None:
        if self.kround == 0:
            for chunk in self.cols:
                chunk[0] = [(a + r * (b - a)) % P for a, b in zip(chunk[0], chunk[2])]
                chunk[1] = [(a + r * (b - a)) % P for a, b in zip(chunk[1], chunk[3])]
                del chunk[2:]
            rb = self.rk[0]
            self._eq_scalar0 = (rb * r + (1 - rb) * (1 - r)) % P
        elif self.kround == 1:
            for chunk in self.cols:
                chunk[0] = [(a + r * (b - a)) % P for a, b in zip(chunk[0], chunk[1])]
                del chunk[1:]
            rb = self.rk[1]
            s = self._eq_scalar0 * ((rb * r + (1 - rb) * (1 - r)) % P) % P
            # fold the bound k-eq scalar into the cycle eq weights once
            self.eqj = [w * s % P for w in self.eqj]
        else:
            half = len(self.cols[0][0]) >> 1
            for chunk in self.cols:
                col = chunk[0]
                chunk[0] = [(col[i] + r * (col[half + i] - col[i])) % P
                            for i in range(half)]
            self.eqj = fold_first_var(self.eqj, r)
        self.kround += 1

    def final_claim(self) -> int:
        total = 0
        for ci, chunk in enumerate(self.cols):
            v = chunk[0][0]
            total = (total + self.gammas[ci] * ((v * v - v) % P)) % P
        return int(total * self.eqj[0] % P)


def hamming_instance(chunk_cols: list, eqj, gamma) -> DenseProduct:
    """2-round sumcheck over k: claim sum_i gamma^i sum_k ra_i(k, r_cycle)."""
    bound = []
    for chunk in chunk_cols:
        vals = []
        for col in chunk:
            s = 0
            for w, v in zip(eqj, col):
                if v:
                    s += w if v == 1 else w * v
            vals.append(int(s % P))
        bound.append(vals)
    gammas = [pow(int(gamma), i, P) for i in range(len(bound))]
    terms = [(g, [i]) for i, g in enumerate(gammas)]
    claim = 0
    for g, vals in zip(gammas, bound):
        claim = (claim + g * sum(vals)) % P
    return DenseProduct(bound, terms, degree=1, claim=claim)


def chunk_onehot_columns(bit_cols: list) -> list:
    """Per-chunk one-hot columns [4][T] from 16 MSB-first bit columns."""
    out = []
    T = len(bit_cols[0])
    for i in range(8):
        b_hi = np.asarray(bit_cols[2 * i], dtype=np.int64)
        b_lo = np.asarray(bit_cols[2 * i + 1], dtype=np.int64)
        crumb = 2 * b_hi + b_lo
        out.append([(crumb == k).astype(np.int64).tolist() for k in range(4)])
    return out


def pc_shift_instance(pc_col: list, r_prev: list) -> DenseProduct:
    """NextPC(r_prev) = sum_t PC(t) eq_shift(r_prev, t)."""
    es = eq_shift_table(r_prev)
    pc = [int(v) % P for v in pc_col]
    claim = 0
    for a, b in zip(pc, es):
        if a:
            claim = (claim + a * b) % P
    return DenseProduct([pc, es], [(1, [0, 1])], degree=2, claim=claim)
