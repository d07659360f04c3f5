"""Uniform per-cycle R1CS and its outer/inner sumchecks, plus the
product-virtualization sumchecks.

One small constraint system holds at every cycle; the big system is its
T-fold block repetition, so the outer zero-check runs over (cycle,
constraint) variables and the inner sumcheck reduces the three matrix
claims to per-column evaluations z(y) at r_cycle.  Witness slots defined
as products of two columns (the virtual polynomials) are never committed:
their claims reduce to the committed factors through dedicated degree-3
sumchecks at r_cycle.
"""

from __future__ import annotations

from .accumulator import Expr
from .field import P
from .mle import eq_table
from .sumcheck import DenseProduct

# per-cycle witness layout: z = [u | committed columns | static columns | virtuals]
Z_SLOTS = [
    "u",
    "ts1_val", "ts2_val", "td_write_val", "advice", "left_input",
    "right_input", "lookup_output", "inc", "write_flag", "select_flag",
    "f_imm", "f_input", "f_add", "f_sub", "f_mac", "f_div", "f_lut",
    "f_copy", "f_selg", "f_out", "imm",
    "td_addr",
    "p_lookup", "p_write", "p_cond", "p_result", "p_operand", "p_divisor",
]
SLOT = {name: i for i, name in enumerate(Z_SLOTS)}
N_SLOT_VARS = 5          # 32 padded slots
COMMITTED_SLOTS = Z_SLOTS[1:11]
STATIC_SLOTS = Z_SLOTS[11:22]
VIRTUAL_SLOTS = Z_SLOTS[22:]

# the four products quoted by the proof DAG plus the two this artifact's
# division and multiply-accumulate gates require
PRODUCTS = [
    ("p_lookup", "left_input", "right_input"),
    ("p_write", "td_addr", "write_flag"),
    ("p_cond", "ts1_val", "select_flag"),
    ("p_result", "td_write_val", "select_flag"),
    ("p_operand", "ts1_val", "ts2_val"),
    ("p_divisor", "td_write_val", "ts2_val"),
]


def _c(**kw):
    return [(coef, SLOT[name]) for name, coef in kw.items()]


# (A, B, C) rows; (A z)(B z) = C z per cycle
CONSTRAINTS = [
    (_c(write_flag=1), _c(write_flag=1), _c(write_flag=1)),
    (_c(select_flag=1), _c(select_flag=1), _c(select_flag=1)),
    (_c(left_input=1), _c(right_input=1), _c(p_lookup=1)),
    (_c(td_addr=1), _c(write_flag=1), _c(p_write=1)),
    (_c(ts1_val=1), _c(select_flag=1), _c(p_cond=1)),
    (_c(td_write_val=1), _c(select_flag=1), _c(p_result=1)),
    (_c(ts1_val=1), _c(ts2_val=1), _c(p_operand=1)),
    (_c(td_write_val=1), _c(ts2_val=1), _c(p_divisor=1)),
    (_c(u=1, write_flag=-1), _c(inc=1), []),
    (_c(u=1, write_flag=-1), _c(td_addr=1), []),
    (_c(u=1, write_flag=-1), _c(td_write_val=1), []),
    (_c(f_add=1), _c(inc=1, ts1_val=-1, ts2_val=-1), []),
    (_c(f_sub=1), _c(inc=1, ts1_val=-1, ts2_val=1), []),
    (_c(f_mac=1), _c(inc=1, p_operand=-1), []),
    (_c(f_div=1), _c(ts1_val=1, advice=-1, p_divisor=-1), []),
    (_c(f_div=1), _c(lookup_output=1, advice=-1), []),
    (_c(f_lut=1), _c(inc=1, lookup_output=-1), []),
    (_c(f_copy=1), _c(inc=1, ts1_val=-1), []),
    (_c(f_selg=1), _c(select_flag=1, ts2_val=-1), []),
    (_c(f_selg=1), _c(inc=1, p_cond=-1), []),
    (_c(u=1, f_selg=-1), _c(select_flag=1), []),
    (_c(f_imm=1), _c(td_write_val=1, imm=-1), []),
    (_c(f_imm=1, f_input=1, f_add=1, f_sub=1, f_div=1, f_lut=1, f_copy=1, f_selg=1),
     _c(td_write_val=1, inc=-1), []),
    (_c(u=1, f_div=-1), _c(advice=1), []),
    (_c(u=1, f_lut=-1, f_div=-1), _c(lookup_output=1), []),
    (_c(u=1, f_lut=-1, f_div=-1), _c(left_input=1), []),
    (_c(u=1), _c(right_input=1), []),
]
N_CON_VARS = 5           # 32 padded constraint rows


def build_z_columns(columns, statics) -> dict:
    """All per-cycle z-slot columns as plain-int lists over the padded T."""
    T = columns.length
    z = {"u": [1] * T}
    for name in COMMITTED_SLOTS:
        z[name] = columns.cols[name]
    for name in STATIC_SLOTS:
        z[name] = statics.cols[name]
    td_addr = columns.cols["td_addr"]
    z["td_addr"] = list(td_addr)
    for virt, lname, rname in PRODUCTS:
        left, right = z[lname], z[rname]
        z[virt] = [l * r % P for l, r in zip(left, right)]
    return z


def constraint_vectors(z: dict) -> tuple:
    """Dense Az, Bz, Cz over index (cycle << 5) | constraint."""
    T = len(z["u"])
    n_rows = 1 << N_CON_VARS
    az = [0] * (T * n_rows)
    bz = [0] * (T * n_rows)
    cz = [0] * (T * n_rows)
    for c, (arow, brow, crow) in enumerate(CONSTRAINTS):
        for target, rows in ((az, arow), (bz, brow), (cz, crow)):
            for coef, slot in rows:
                col = z[Z_SLOTS[slot]]
                if coef == 1:
                    for j in range(T):
                        target[(j << N_CON_VARS) | c] += col[j]
                else:
                    for j in range(T):
                        target[(j << N_CON_VARS) | c] += coef * col[j]
    for vec in (az, bz, cz):
        for i, v in enumerate(vec):
            vec[i] = v % P
    return az, bz, cz


def check_constraints(z: dict) -> list:
    """Cycle indices violating any per-cycle constraint (prover-side oracle)."""
    bad = []
    T = len(z["u"])
    cols = [z[name] for name in Z_SLOTS]
    for j in range(T):
        vals = [col[j] for col in cols]
        for arow, brow, crow in CONSTRAINTS:
            a = sum(coef * vals[s] for coef, s in arow) % P
            b = sum(coef * vals[s] for coef, s in brow) % P
            cv = sum(coef * vals[s] for coef, s in crow) % P
            if a * b % P != cv:
                bad.append(j)
                break
    return bad


def outer_instance(z: dict, tau: list) -> DenseProduct:
    """Zero-check: sum eq(tau, x) (Az Bz - Cz) = 0 over x = (cycle, con)."""
    az, bz, cz = constraint_vectors(z)
    eq = eq_table(tau)
    # sparse factors first so zero rows short-circuit before touching eq
    return DenseProduct([eq, az, bz, cz],
                        [(1, [1, 2, 0]), (P - 1, [3, 0])], degree=3, claim=0)


def matrix_mle(matrix_side: int, r_con: list, y_point: list) -> int:
    """A~/B~/C~_small(r_con, y): the sparse small-matrix MLE (verifier work)."""
    eqc = eq_table(r_con)
    eqy = eq_table(y_point)
    total = 0
    for c, rows in enumerate(CONSTRAINTS):
        for coef, slot in rows[matrix_side]:
            total = (total + eqc[c] * coef % P * eqy[slot]) % P
    return int(total)


def matrix_row_table(matrix_side: int, r_con: list) -> list:
    """M(y) = sum_c eq(r_con, c) * M[c][y] over the 32 slots."""
    eqc = eq_table(r_con)
    out = [0] * (1 << N_SLOT_VARS)
    for c, rows in enumerate(CONSTRAINTS):
        for coef, slot in rows[matrix_side]:
            out[slot] = (out[slot] + eqc[c] * coef) % P
    return out


def inner_instance(z: dict, r_cycle: list, r_con: list, rho) -> tuple:
    """Inner sumcheck arrays: returns (instance, z_at_r_cycle per slot)."""
    from .mle import fold_first_var

    z_at_r = {}
    for name in Z_SLOTS:
        col = [v % P for v in z[name]]
        for r in r_cycle:
            col = fold_first_var(col, r)
        z_at_r[name] = int(col[0])
    zr = [z_at_r[name] for name in Z_SLOTS] + [0] * ((1 << N_SLOT_VARS) - len(Z_SLOTS))
    m = [0] * (1 << N_SLOT_VARS)
    rho2 = rho * rho % P
    for side, w in ((0, 1), (1, rho), (2, rho2)):
        row = matrix_row_table(side, r_con)
        for y in range(len(m)):
            m[y] = (m[y] + w * row[y]) % P
    inst = DenseProduct([m, zr], [(1, [0, 1])], degree=2)
    return inst, z_at_r


def product_instances(z: dict, r_cycle: list) -> list:
    """The six product-virtualization sumchecks at r_cycle."""
    eq = eq_table(r_cycle)
    out = []
    for virt, lname, rname in PRODUCTS:
        left = [v % P for v in z[lname]]
        right = [v % P for v in z[rname]]
        claim = 0
        for e, l, r in zip(eq, left, right):
            claim = (claim + e * l % P * r) % P
        out.append(DenseProduct([eq, left, right], [(1, [1, 2, 0])],
                                degree=3, claim=claim))
    return out
