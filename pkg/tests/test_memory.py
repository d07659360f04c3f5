"""Memory checker: Val-evaluation oracle equivalence, mutation rejection,
write-allocation correctness, grouped one-hot virtualization."""

import random

import numpy as np
import pytest

from atlas.field import P
from atlas.memory import (
    MemDagInstance,
    addr_bits,
    brute_force_val,
    chunk_values,
    level_a_instance,
    level_b_instance,
    level_c_instance,
    val_evaluation_instance,
)
from atlas.mle import MultilinearPoly, eq_evaluate, eq_table, lt_evaluate, mle_evaluate
from atlas.sumcheck import sumcheck_prove, sumcheck_verify_transparent
from atlas.transcript import Transcript

rng = random.Random(0x3E3)


def random_trace(T, n_addr=20, seed=0):
    """Synthetic write/read history over a small address set."""
    local = random.Random(seed)
    addrs = local.sample(range(1, 1 << 10), n_addr)
    mem = {}
    td = [0] * T
    inc = [0] * T
    reads1, reads2 = [0] * T, [0] * T
    vals1, vals2 = [0] * T, [0] * T
    for j in range(T):
        if local.random() < 0.6 or not mem:
            a = local.choice(addrs)
            delta = local.randrange(-500, 500)
            td[j] = a
            inc[j] = delta % P
            mem[a] = (mem.get(a, 0) + delta) % P
        else:
            a = local.choice(list(mem))
            reads1[j] = a
            vals1[j] = mem[a]
            if local.random() < 0.5:
                b = local.choice(list(mem))
                reads2[j] = b
                vals2[j] = mem[b]
    return td, inc, (reads1, vals1), (reads2, vals2)


@pytest.mark.parametrize("log_t", [4, 6, 8, 10])
def test_val_evaluation_matches_brute_force(log_t):
    T = 1 << log_t
    td, inc, _, _ = random_trace(T, seed=log_t)
    r_addr = [rng.randrange(P) for _ in range(16)]
    r_cycle = [rng.randrange(P) for _ in range(log_t)]
    claim = brute_force_val(inc, td, r_addr, r_cycle)
    inst, wa = val_evaluation_instance(inc, td, r_addr, r_cycle, claim)
    assert inst.input_claim() == claim
    msgs, ch, final = sumcheck_prove(inst, Transcript())
    pt, claimed = sumcheck_verify_transparent(msgs, claim, 3, Transcript())
    assert claimed == final
    # final value factors as Inc * Wa * Lt at the challenge point
    inc_v = mle_evaluate(MultilinearPoly(log_t, inc), ch)
    wa_v = mle_evaluate(MultilinearPoly(log_t, wa), ch)
    assert final == inc_v * wa_v % P * lt_evaluate(ch, r_cycle) % P


def test_val_empty_history_is_zero():
    T = 16
    inc = [0] * T
    td = [0] * T
    r_addr = [rng.randrange(P) for _ in range(16)]
    r_cycle = [rng.randrange(P) for _ in range(4)]
    assert brute_force_val(inc, td, r_addr, r_cycle) == 0


def test_val_single_write_boolean_query():
    # write v at address a, cycle 0; query (a, c) for c > 0 gives v
    T = 8
    inc = [7] + [0] * 7
    td = [5] + [0] * 7
    a_bits = addr_bits(5)
    for c in (1, 3, 7):
        c_bits = [(c >> (2 - i)) & 1 for i in range(3)]
        assert brute_force_val(inc, td, a_bits, c_bits) == 7
    # at cycle 0 the strict less-than excludes the write itself
    assert brute_force_val(inc, td, a_bits, [0, 0, 0]) == 0


def test_wa_boolean_correctness():
    # for boolean r_addr, Wa(j) is the 0/1 address-match indicator
    T = 16
    td, inc, _, _ = random_trace(T, seed=3)
    for a in set(td):
        _, wa = val_evaluation_instance(inc, td, addr_bits(a),
                                        [rng.randrange(P)] * 4, 0)
        for j in range(T):
            assert wa[j] == (1 if td[j] == a else 0)


def test_memdag_honest_accepts_and_mutations_reject():
    T = 64
    n_cyc = 6
    td, inc, (r1, v1), (r2, v2) = random_trace(T, seed=11)
    r_point = [rng.randrange(P) for _ in range(16 + n_cyc)]
    gamma = rng.randrange(P)
    inst = MemDagInstance([(r1, v1), (r2, v2)], inc, td, r_point, gamma, n_cyc)
    assert inst.input_claim() == 0
    msgs, ch, final = sumcheck_prove(inst, Transcript())
    sumcheck_verify_transparent(msgs, 0, 3, Transcript())

    # a mutation is only detectable if some read observes it: restrict to
    # reads, and to writes whose address is read again afterwards
    read_rows = [j for j in range(T) if r1[j]]
    observed_writes = [
        j for j in range(T) if td[j]
        and any((r1[k] == td[j] or r2[k] == td[j]) for k in range(j + 1, T))
    ]
    assert read_rows and observed_writes

    rejected = 0
    trials = 100
    for t in range(trials):
        local = random.Random(1000 + t)
        bad_v1 = list(v1)
        bad_inc = list(inc)
        bad_td = list(td)
        kind = t % 3
        if kind == 0:  # mutate a read value
            j = local.choice(read_rows)
            bad_v1[j] = (bad_v1[j] + local.randrange(1, P)) % P
        elif kind == 1:  # mutate an observed increment
            j = local.choice(observed_writes)
            bad_inc[j] = (bad_inc[j] + local.randrange(1, P)) % P
        else:  # move an observed write to a fresh address
            j = local.choice(observed_writes)
            bad_td[j] = (bad_td[j] % 1024) + 1024
        bad = MemDagInstance([(r1, bad_v1), (r2, v2)], bad_inc, bad_td,
                             r_point, gamma, n_cyc)
        # an inconsistent history makes the true zero-sum nonzero; the
        # engine's claimed-sum chaining then ends on a final claim that
        # cannot match the value reconstructed from the (mutated) openings
        msgs_bad, ch_bad, final_bad = sumcheck_prove(bad, Transcript())
        _, claimed = sumcheck_verify_transparent(msgs_bad, 0, 3, Transcript())
        expected = _memdag_binding_value(
            bad_td, bad_inc, [(r1, bad_v1), (r2, v2)], r_point, gamma, ch_bad)
        assert claimed != expected
        rejected += 1
    assert rejected == trials


def _memdag_binding_value(td, inc, reads, r_point, gamma, ch):
    """The final value a verifier reconstructs from the mutated openings."""
    T = len(td)
    n_cyc = len(ch) - 16
    rho_a, rho_j = ch[:16], ch[16:]
    ea = eq_evaluate(r_point[:16], rho_a)
    eqj = eq_evaluate(r_point[16:], rho_j)
    val = brute_force_val(inc, td, rho_a, rho_j)
    total = 0
    g = 1
    for addr_arr, val_arr in reads:
        ra = 0
        ts = 0
        for j in range(T):
            jb = [(j >> (n_cyc - 1 - i)) & 1 for i in range(n_cyc)]
            w = eq_evaluate(rho_j, jb)
            ra = (ra + w * eq_evaluate(rho_a, addr_bits(int(addr_arr[j])))) % P
            ts = (ts + w * (int(val_arr[j]) % P)) % P
        total = (total + g * ra % P * ((ts - val) % P)) % P
        g = g * gamma % P
    return int(total * ea % P * eqj % P)


def test_memdag_read_before_write_uses_initial_zero():
    # reading an address never written must read 0 (the reserved image)
    T = 16
    td = [0] * T
    inc = [0] * T
    r1 = [0] * T
    v1 = [0] * T
    r1[3] = 77  # read untouched address 77
    v1[3] = 0
    inst = MemDagInstance([(r1, v1), ([0] * T, [0] * T)], inc, td,
                          [rng.randrange(P) for _ in range(20)], 3, 4)
    msgs, _, _ = sumcheck_prove(inst, Transcript())
    sumcheck_verify_transparent(msgs, 0, 3, Transcript())


def test_onehot_chain_levels_against_dense_oracle():
    T = 32
    n_cyc = 5
    local = random.Random(4)
    addrs = [local.randrange(1 << 16) for _ in range(T)]
    bit_cols = [[(a >> (15 - b)) & 1 for a in addrs] for b in range(16)]
    kappa = [rng.randrange(P) for _ in range(16)]
    point_j = [rng.randrange(P) for _ in range(n_cyc)]
    cvs = chunk_values(bit_cols, kappa)
    # full one-hot MLE evaluated directly
    full = 0
    for j, a in enumerate(addrs):
        jb = [(j >> (n_cyc - 1 - i)) & 1 for i in range(n_cyc)]
        full = (full + eq_evaluate(point_j, jb) * eq_evaluate(kappa, addr_bits(a))) % P
    la = level_a_instance(cvs, point_j, full)
    assert la.input_claim() == full
    msgs, ch_a, final_a = sumcheck_prove(la, Transcript())
    g0 = int(la.arrays[1][0]) % P
    g1 = int(la.arrays[2][0]) % P
    assert final_a == eq_evaluate(point_j, ch_a) * g0 % P * g1 % P
    # level B for group 0 at the level-A point
    lb = level_b_instance(cvs, 0, ch_a, g0)
    msgs, ch_b, final_b = sumcheck_prove(lb, Transcript())
    cv_finals = [int(lb.arrays[1 + i][0]) % P for i in range(4)]
    expect = eq_evaluate(ch_a, ch_b)
    for v in cv_finals:
        expect = expect * v % P
    assert final_b == expect
    # level C for chunk 0 at the level-B point
    cv0_claim = cv_finals[0]
    lc = level_c_instance(bit_cols, 0, kappa[:2], ch_b, cv0_claim)
    assert lc.input_claim() % P == cv0_claim
    msgs, ch_c, final_c = sumcheck_prove(lc, Transcript())
    b_hi = mle_evaluate(MultilinearPoly(n_cyc, bit_cols[0]), ch_c)
    b_lo = mle_evaluate(MultilinearPoly(n_cyc, bit_cols[1]), ch_c)
    k0, k1 = kappa[0], kappa[1]
    f_hi = (k0 * b_hi + (1 - k0) * (1 - b_hi)) % P
    f_lo = (k1 * b_lo + (1 - k1) * (1 - b_lo)) % P
    assert final_c == eq_evaluate(ch_b, ch_c) * f_hi % P * f_lo % P


def test_grouped_virtualization_shifted_hot_index_rejects():
    # shifting one chunk's hot index breaks the level-A product claim
    T = 16
    n_cyc = 4
    local = random.Random(9)
    addrs = [local.randrange(1 << 16) for _ in range(T)]
    bit_cols = [[(a >> (15 - b)) & 1 for a in addrs] for b in range(16)]
    kappa = [rng.randrange(P) for _ in range(16)]
    point_j = [rng.randrange(P) for _ in range(n_cyc)]
    cvs = chunk_values(bit_cols, kappa)
    full = 0
    for j, a in enumerate(addrs):
        jb = [(j >> (n_cyc - 1 - i)) & 1 for i in range(n_cyc)]
        full = (full + eq_evaluate(point_j, jb) * eq_evaluate(kappa, addr_bits(a))) % P
    bad_cols = [list(c) for c in bit_cols]
    bad_cols[0][5] ^= 1  # shift chunk 0's hot index on cycle 5
    bad_cvs = chunk_values(bad_cols, kappa)
    bad = level_a_instance(bad_cvs, point_j, full)
    # mutated product: the chained final claim diverges from the value the
    # output binding reconstructs from the (mutated) factor openings
    msgs, ch_bad, _ = sumcheck_prove(bad, Transcript())
    _, claimed = sumcheck_verify_transparent(msgs, full, 3, Transcript())
    g0_true = int(bad.arrays[1][0]) % P
    g1_true = int(bad.arrays[2][0]) % P
    assert claimed != eq_evaluate(point_j, ch_bad) * g0_true % P * g1_true % P


def test_d8_grouping_emits_two_group_sumchecks():
    # D = 8 chunks, d = 2 groups of four: the chain produces exactly two
    # grouped (level-B) instances per family
    groups = [list(range(4)), list(range(4, 8))]
    assert len(groups) == 2
    assert all(len(g) == 4 for g in groups)
