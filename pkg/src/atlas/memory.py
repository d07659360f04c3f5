"""Stage-4/5 memory checking: read-write consistency over the write history
and the Val-evaluation sumcheck over increments.

The read check is a zero-check over (address, cycle):

  0 = sum_{a,j} eq(r_m,(a,j)) sum_s gamma^s ra_s(a,j) (ts_s_val(j) - Val(a,j))

where ra_s is the static read-address indicator and Val(a,j) is the value
written before cycle j, i.e. sum_{j'<j} Inc(j') eq_A(a, td(j')).  Address
rounds run first: the one-hot collapse turns each round into one pass over
the trace with per-rest-bits bucket accumulators carrying the partially
bound write history.  The final claim hands a single Val(r_addr, r_cycle)
to Stage 5, which proves it as sum_j Inc(j) Wa(j) Lt(j, r_cycle).

The one-hot virtualization chain (shared with the lookup/pc families)
reduces a full indicator claim down to committed bit columns in three
batched levels: full = G0*G1, each G = product of four 2-bit chunks, each
chunk = product of two bit-affine factors.
"""

from __future__ import annotations

from .accumulator import Expr
from .field import P
from .mle import eq_table, fold_first_var, lt_table
from .sumcheck import DenseProduct, SumcheckInstance

A_BITS = 16


def addr_bits(addr: int, b: int = A_BITS) -> list:
    return [(addr >> (b - 1 - i)) & 1 for i in range(b)]


class MemDagInstance(SumcheckInstance):
    """Batched read-write consistency zero-check over (address, cycle)."""

    def __init__(self, reads: list, inc, td_addr, r_point: list, gamma, n_cyc: int):
        """reads: per slot s, (addr array, value array) over the padded T."""
        self.n_rounds = A_BITS + n_cyc
        self.degree = 3
        self.gamma = int(gamma) % P
        self.r_a = [int(x) % P for x in r_point[:A_BITS]]
        self.eqj = eq_table(r_point[A_BITS:])
        self.T = len(self.eqj)
        self.reads = []
        g = 1
        for addr_arr, val_arr in reads:
            self.reads.append({
                "addr": [int(a) for a in addr_arr],
                "val": [int(v) % P for v in val_arr],
                "m": [1] * self.T,
                "gamma": g,
            })
            g = g * self.gamma % P
        self.inc = [int(v) % P for v in inc]
        self.td = [int(a) for a in td_addr]
        self.mw = [1] * self.T
        self.ea_bound = 1
        self.around = 0
        # eq-a suffix products per slot, per round (built lazily per round)
        self._suffix = None
        self._build_suffixes()
        self.phase2 = None

    def input_claim(self) -> int:
        return 0

    def _build_suffixes(self):
        """suffix_s[l][j] = prod_{l''>l} eqbit(r_a[l''], bit(addr_s(j)))."""
        self._suffix = []
        for rd in self.reads:
            rows = [None] * A_BITS
            cur = [1] * self.T
            for l in range(A_BITS - 1, -1, -1):
                rows[l] = cur
                if l:
                    r = self.r_a[l]
                    nxt = [0] * self.T
                    for j in range(self.T):
                        bit = (rd["addr"][j] >> (A_BITS - 1 - l)) & 1
                        nxt[j] = cur[j] * (r if bit else (1 - r)) % P
                    cur = nxt
            self._suffix.append(rows)

    def round_evals(self, points: list) -> list:
        if self.around < A_BITS:
            l = self.around
            shift = A_BITS - 1 - l
            mask = (1 << shift) - 1
            r_al = self.r_a[l]
            # eqbit(r_a[l], X) and the one-hot bit factor, precombined per
            # (bit value, point)
            combo = {}
            for bit in (0, 1):
                for pi, x in enumerate(points):
                    bf = x if bit else (1 - x)
                    eb = (r_al * x + (1 - r_al) * (1 - x)) % P
                    combo[(bit, pi)] = bf * eb % P
            n_rest = 1 << shift
            b0 = [0] * n_rest
            b1 = [0] * n_rest
            out = [0] * len(points)
            ea = self.ea_bound
            for j in range(self.T):
                for si, rd in enumerate(self.reads):
                    a = rd["addr"][j]
                    rest = a & mask
                    bit = (a >> shift) & 1
                    w = self.eqj[j] * rd["gamma"] % P * rd["m"][j] % P \
                        * self._suffix[si][l][j] % P
                    if w == 0:
                        continue
                    tsv = rd["val"][j]
                    v0, v1 = b0[rest], b1[rest]
                    dv = v1 - v0
                    for pi, x in enumerate(points):
                        val = (v0 + x * dv) % P
                        out[pi] += w * combo[(bit, pi)] % P * ((tsv - val) % P)
                # apply cycle j's write to the buckets
                incv = self.inc[j]
                if incv:
                    td = self.td[j]
                    contrib = incv * self.mw[j] % P
                    if (td >> shift) & 1:
                        b1[td & mask] = (b1[td & mask] + contrib) % P
                    else:
                        b0[td & mask] = (b0[td & mask] + contrib) % P
            return [int(v % P * ea % P) for v in out]
        return self.phase2.round_evals(points)

    def bind(self, r) -> None:
        if self.around < A_BITS:
            l = self.around
            shift = A_BITS - 1 - l
            r_al = self.r_a[l]
            rm1 = (1 - r) % P
            for rd in self.reads:
                m = rd["m"]
                addr = rd["addr"]
                for j in range(self.T):
                    bit = (addr[j] >> shift) & 1
                    m[j] = m[j] * (r if bit else rm1) % P
            for j in range(self.T):
                bit = (self.td[j] >> shift) & 1
                self.mw[j] = self.mw[j] * (r if bit else rm1) % P
            self.ea_bound = self.ea_bound * ((r_al * r + (1 - r_al) * (1 - r)) % P) % P
            self.around += 1
            if self.around == A_BITS:
                self._enter_phase2()
        else:
            self.phase2.bind(r)

    def _enter_phase2(self):
        # Val(rho_a, j) for boolean j: prefix sums of Inc * eq_A(rho_a, td)
        val = [0] * self.T
        acc = 0
        for j in range(self.T):
            val[j] = acc
            if self.inc[j]:
                acc = (acc + self.inc[j] * self.mw[j]) % P
        arrays = [self.eqj]
        terms = []
        for rd in self.reads:
            diff = [(v - val[j]) % P for j, v in enumerate(rd["val"])]
            arrays.append(rd["m"])
            arrays.append(diff)
            k = len(arrays)
            terms.append((rd["gamma"] * self.ea_bound % P, [0, k - 2, k - 1]))
        self._val_array = val
        self.phase2 = DenseProduct(arrays, terms, degree=3)

    def final_claim(self) -> int:
        return self.phase2.final_claim()

    def final_values(self) -> dict:
        """Bound values at the challenge point for the output bindings."""
        arrs = self.phase2.arrays
        out = {"ea": self.ea_bound, "ra": [], "diff": []}
        for si in range(len(self.reads)):
            out["ra"].append(int(arrs[1 + 2 * si][0]) % P)
            out["diff"].append(int(arrs[2 + 2 * si][0]) % P)
        return out


def val_evaluation_instance(inc, td_addr, r_addr: list, r_cycle: list,
                            claim: int) -> tuple:
    """Stage 5: Val(r_addr, r_cycle) = sum_j Inc(j) Wa(j) Lt(j, r_cycle)."""
    T = len(inc)
    wa = [1] * T
    for l, r in enumerate(r_addr):
        shift = A_BITS - 1 - l
        rm1 = (1 - r) % P
        for j in range(T):
            wa[j] = wa[j] * (r if (int(td_addr[j]) >> shift) & 1 else rm1) % P
    lt = lt_table(r_cycle)
    inc_f = [int(v) % P for v in inc]
    inst = DenseProduct([inc_f, wa, lt], [(1, [0, 1, 2])], degree=3, claim=claim)
    return inst, wa


def brute_force_val(inc, td_addr, r_addr: list, r_cycle: list) -> int:
    """Direct triple-product oracle sum_j Inc(j) eq(r_addr, td(j)) Lt(j, r_cycle)."""
    from .mle import eq_evaluate, lt_evaluate

    total = 0
    n = len(r_cycle)
    for j in range(len(inc)):
        if int(inc[j]) % P == 0:
            continue
        jb = [(j >> (n - 1 - i)) & 1 for i in range(n)]
        wa = eq_evaluate(r_addr, addr_bits(int(td_addr[j])))
        total = (total + int(inc[j]) * wa % P * lt_evaluate(jb, r_cycle)) % P
    return int(total)


# ---------------------------------------------------------------------------
# one-hot virtualization chain (D = 8 chunks of 2 bits, grouped d = 2 x 4)


def chunk_values(bit_cols: list, kappa: list) -> list:
    """Per-chunk bound indicators cv_i(j) = eq2(kappa_chunk_i, crumb_i(j))."""
    T = len(bit_cols[0])
    out = []
    for i in range(8):
        k0, k1 = kappa[2 * i], kappa[2 * i + 1]
        hi, lo = bit_cols[2 * i], bit_cols[2 * i + 1]
        col = [0] * T
        f0 = [(1 - k0) % P, k0]
        f1 = [(1 - k1) % P, k1]
        for j in range(T):
            col[j] = f0[hi[j]] * f1[lo[j]] % P
        out.append(col)
    return out


def level_a_instance(cvs: list, point_j: list, claim: int) -> DenseProduct:
    """full(kappa, point_j) = sum_j eq(point_j, j) G0(j) G1(j)."""
    T = len(cvs[0])
    g0 = [1] * T
    g1 = [1] * T
    for i in range(4):
        for j in range(T):
            g0[j] = g0[j] * cvs[i][j] % P
    for i in range(4, 8):
        for j in range(T):
            g1[j] = g1[j] * cvs[i][j] % P
    eq = eq_table(point_j)
    return DenseProduct([eq, g0, g1], [(1, [0, 1, 2])], degree=3, claim=claim)


def level_b_instance(cvs: list, group: int, point_j: list, claim: int) -> DenseProduct:
    """G_g(point_j) = sum_j eq(point_j, j) prod_{i in group} cv_i(j)."""
    eq = eq_table(point_j)
    arrays = [eq] + [cvs[4 * group + i] for i in range(4)]
    return DenseProduct(arrays, [(1, [0, 1, 2, 3, 4])], degree=5, claim=claim)


def level_c_instance(bit_cols: list, chunk: int, kappa_pair: list,
                     point_j: list, claim: int) -> DenseProduct:
    """cv_i(point_j) = sum_j eq(point_j, j) f_hi(j) f_lo(j), bit-affine factors."""
    k0, k1 = kappa_pair
    hi, lo = bit_cols[2 * chunk], bit_cols[2 * chunk + 1]
    f_hi = [(k0 if b else (1 - k0)) % P for b in hi]
    f_lo = [(k1 if b else (1 - k1)) % P for b in lo]
    eq = eq_table(point_j)
    return DenseProduct([eq, f_hi, f_lo], [(1, [0, 1, 2])], degree=3, claim=claim)


def level_c_output_expr(eq_pub, kappa_pair, omega_hi: int, omega_lo: int) -> Expr:
    """eq * (a0 + a1 b_hi) * (c0 + c1 b_lo) expanded over the bit openings."""
    k0, k1 = int(kappa_pair[0]) % P, int(kappa_pair[1]) % P
    a0, a1 = (1 - k0) % P, (2 * k0 - 1) % P
    c0, c1 = (1 - k1) % P, (2 * k1 - 1) % P
    e = Expr(const=eq_pub * a0 % P * c0 % P)
    e.add_linear(eq_pub * a1 % P * c0 % P, omega_hi)
    e.add_linear(eq_pub * a0 % P * c1 % P, omega_lo)
    e.add_quad(eq_pub * a1 % P * c1 % P, omega_hi, omega_lo)
    return e
