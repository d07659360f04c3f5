"""Relaxed R1CS folding and the sumcheck-verifier circuit."""

import random

import pytest

from atlas.accumulator import Expr
from atlas.blindfold import (
    BlindfoldError,
    BlindfoldGens,
    RelaxedInstance,
    RelaxedWitness,
    StageConfig,
    assign_witness,
    blindfold_prove,
    blindfold_verify,
    build_verifier_circuit,
    check_relaxed_satisfaction,
    compute_cross_term,
    fold,
    residual,
    sample_random_instance,
    z_vector,
)
from atlas.curve import IDENTITY
from atlas.field import P
from atlas.pedersen import pedersen_commit
from atlas.sumcheck import DenseProduct, prove_batch
from atlas.transcript import Transcript

rng = random.Random(0xB11D)


def toy_pipeline(seed=0):
    """A miniature but complete instance: one real sumcheck feeding the circuit.

    Proves sum over {0,1}^3 of f*g for random f, g; openings f(rho), g(rho)
    are the circuit's opening slots, bound by the output expression
    sigma_N = f(rho) * g(rho).
    """
    local = random.Random(seed)
    n = 3
    f = [local.randrange(P) for _ in range(1 << n)]
    g = [local.randrange(P) for _ in range(1 << n)]
    inst = DenseProduct([f, g], [(1, [0, 1])])
    claim = inst.input_claim()
    t = Transcript()
    res = prove_batch([inst], t, b"toy")
    from atlas.mle import MultilinearPoly, mle_evaluate

    y_f = mle_evaluate(MultilinearPoly(n, f), res.challenges)
    y_g = mle_evaluate(MultilinearPoly(n, g), res.challenges)

    input_expr = Expr.public(claim)
    output_expr = Expr().add_quad(1, 0, 1)  # omega 0 * omega 1
    cfg = StageConfig(b"toy", n, 2, res.challenges, input_expr, output_expr)
    pcs_binding = [[(1, 0), (7, 1)]]  # y_joint = y_f + 7 y_g
    circ = build_verifier_circuit([cfg], [0, 1], pcs_binding)
    opening_values = {0: y_f, 1: y_g}
    y_joint = (y_f + 7 * y_g) % P
    b_val = local.randrange(P)
    w = assign_witness(circ, [cfg], [res.messages], opening_values, [(y_joint, b_val)])
    return circ, cfg, res, w, opening_values, (y_joint, b_val)


def make_honest_pair(circ, w, gens, seed=1):
    local = random.Random(seed)
    r_w = local.randrange(P)
    w_comm = pedersen_commit(w, r_w, gens.wit)
    round_blinds = []
    round_comms = []
    for slots in circ.round_coeff_slots:
        rho = local.randrange(P)
        round_blinds.append(rho)
        round_comms.append(pedersen_commit([w[s] for s in slots], rho, gens.rounds))
    from atlas.curve import msm

    eval_comms = [msm([gens.value_g, gens.value_h], [w[y], w[b]])
                  for y, b in circ.pcs_slots]
    inst = RelaxedInstance(IDENTITY, 1, w_comm, [local.randrange(P)],
                           round_comms, eval_comms)
    wit = RelaxedWitness([0] * circ.n_constraints, 0, w, r_w, round_blinds)
    return inst, wit


@pytest.fixture(scope="module")
def setup():
    circ, cfg, res, w, vals, pcs_vals = toy_pipeline()
    gens = BlindfoldGens(circ.n_wit, circ.n_constraints, cfg.degree + 1)
    return circ, cfg, res, w, vals, pcs_vals, gens


def test_circuit_size_formula(setup):
    circ, cfg, *_ = setup
    assert circ.n_round_constraints == cfg.n_rounds * (cfg.degree + 1)
    assert circ.n_constraints == circ.n_round_constraints + circ.n_binding_constraints


def test_single_round_degree2_constraint_count():
    cfg = StageConfig(b"one", 1, 2, [5], Expr.public(7), Expr.public(17))
    circ = build_verifier_circuit([cfg], [], [])
    # 1 identity + 2 horner = 3 round constraints, plus the two bindings
    assert circ.n_round_constraints == 3
    assert circ.n_binding_constraints == 2


def test_ten_rounds_degree3_gives_forty():
    cfg = StageConfig(b"ten", 10, 3, [rng.randrange(P) for _ in range(10)],
                      Expr.public(0), Expr.public(0))
    circ = build_verifier_circuit([cfg], [], [])
    assert circ.n_round_constraints == 40


def test_honest_witness_satisfies(setup):
    circ, cfg, res, w, *_ = setup
    z = z_vector(circ, 1, [0], w)
    assert all(v == 0 for v in residual(circ, z, 1))


def test_hand_assigned_degree1_round():
    # c = [2, 3], r = 5, sigma_0 = 7: slots hold (2, 3, sigma_1 = 17)
    cfg = StageConfig(b"hand", 1, 1, [5], Expr.public(7), Expr.public(17))
    circ = build_verifier_circuit([cfg], [], [])

    class Msg:
        coefficients = [2, 3]

    w = assign_witness(circ, [cfg], [[Msg()]], {}, [])
    slots = circ.round_slots[0]
    assert [w[s] for s in slots["coeffs"]] == [2, 3]
    assert w[slots["sigma_next"]] == 17
    z = z_vector(circ, 1, [0], w)
    assert all(v == 0 for v in residual(circ, z, 1))


def test_zeroed_intermediate_detected(setup):
    circ, cfg, res, w, *_ = setup
    bad = list(w)
    ts = circ.round_slots[0]["ts"]
    if ts:
        bad[ts[0]] = 0
        z = z_vector(circ, 1, [0], bad)
        assert any(v != 0 for v in residual(circ, z, 1))


def test_sample_random_instance_satisfies(setup):
    circ, cfg, *_ , gens = setup
    inst, wit, z2 = sample_random_instance(circ, gens, random.Random(2),
                                           circ.round_coeff_slots)
    assert check_relaxed_satisfaction(circ, inst, wit)
    assert inst.u != 0
    inst_b, wit_b, _ = sample_random_instance(circ, gens, random.Random(3),
                                              circ.round_coeff_slots)
    assert inst.w_comm != inst_b.w_comm


def test_cross_term_zero_cases(setup):
    circ, *_ = setup
    z1 = [1] + [rng.randrange(P) for _ in range(circ.n_vars - 1)]
    z0 = [0] * circ.n_vars
    t = compute_cross_term(circ, z1, 1, z0, 0)
    assert all(v == 0 for v in t)
    t_sym = compute_cross_term(circ, z1, 1, z1, 1)
    res1 = residual(circ, z1, 1)
    az = circ.A.apply(z1)
    bz = circ.B.apply(z1)
    cz = circ.C.apply(z1)
    expect = [(2 * (a * b - c)) % P for a, b, c in zip(az, bz, cz)]
    assert t_sym == expect


def test_cross_term_expansion_identity(setup):
    circ, *_ = setup
    for trial in range(5):
        z1 = [rng.randrange(P) for _ in range(circ.n_vars)]
        z2 = [rng.randrange(P) for _ in range(circ.n_vars)]
        u1, u2 = z1[0], z2[0]
        t = compute_cross_term(circ, z1, u1, z2, u2)
        for r in (0, 1, rng.randrange(P)):
            zf = [(a + r * b) % P for a, b in zip(z1, z2)]
            uf = (u1 + r * u2) % P
            lhs = residual(circ, zf, uf)
            r1 = residual(circ, z1, u1)
            r2 = residual(circ, z2, u2)
            rhs = [(a + r * tt + r * r % P * b) % P for a, tt, b in zip(r1, t, r2)]
            assert lhs == rhs


def test_fold_preserves_satisfaction(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    for trial in range(20):
        local = random.Random(100 + trial)
        i1, w1, _ = sample_random_instance(circ, gens, local, circ.round_coeff_slots)
        i2, w2, _ = sample_random_instance(circ, gens, local, circ.round_coeff_slots)
        z1 = z_vector(circ, i1.u, i1.x, w1.w)
        z2 = z_vector(circ, i2.u, i2.x, w2.w)
        t_vec = compute_cross_term(circ, z1, i1.u, z2, i2.u)
        r_t = local.randrange(P)
        t_comm = pedersen_commit(t_vec, r_t, gens.err)
        r = local.randrange(P)
        fi, fw = fold(i1, w1, i2, w2, t_vec, t_comm, r_t, r)
        assert check_relaxed_satisfaction(circ, fi, fw)
        assert pedersen_commit(fw.w, fw.r_w, gens.wit) == fi.w_comm
        assert pedersen_commit(fw.e, fw.r_e, gens.err) == fi.e_comm


def test_fold_r_zero_is_instance1(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    local = random.Random(55)
    i1, w1, _ = sample_random_instance(circ, gens, local, circ.round_coeff_slots)
    i2, w2, _ = sample_random_instance(circ, gens, local, circ.round_coeff_slots)
    z1 = z_vector(circ, i1.u, i1.x, w1.w)
    z2 = z_vector(circ, i2.u, i2.x, w2.w)
    t_vec = compute_cross_term(circ, z1, i1.u, z2, i2.u)
    t_comm = pedersen_commit(t_vec, 9, gens.err)
    fi, fw = fold(i1, w1, i2, w2, t_vec, t_comm, 9, 0)
    assert fi.u == i1.u and fi.w_comm == i1.w_comm and fi.x == i1.x
    assert fi.e_comm == i1.e_comm
    assert fw.w == w1.w


def test_pedersen_homomorphism_on_fold(setup):
    circ, *_rest, gens = setup
    local = random.Random(77)
    w1 = [local.randrange(P) for _ in range(circ.n_wit)]
    w2 = [local.randrange(P) for _ in range(circ.n_wit)]
    r1, r2, r = local.randrange(P), local.randrange(P), local.randrange(P)
    lhs = pedersen_commit([(a + r * b) % P for a, b in zip(w1, w2)],
                          (r1 + r * r2) % P, gens.wit)
    rhs = pedersen_commit(w1, r1, gens.wit) + r * pedersen_commit(w2, r2, gens.wit)
    assert lhs == rhs


def test_prove_verify_roundtrip(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    inst, wit = make_honest_pair(circ, w, gens)
    proof = blindfold_prove(circ, inst, wit, gens, Transcript(b"bf"), random.Random(8))
    blindfold_verify(circ, proof, gens, Transcript(b"bf"))


def test_prove_refuses_unsatisfied(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    inst, wit = make_honest_pair(circ, w, gens)
    bad = RelaxedWitness(wit.e, wit.r_e, list(wit.w), wit.r_w, wit.round_blinds)
    bad.w[circ.round_slots[0]["coeffs"][0]] = (bad.w[circ.round_slots[0]["coeffs"][0]] + 1) % P
    with pytest.raises(ValueError, match="refusing|unsatisfied"):
        blindfold_prove(circ, inst, bad, gens, Transcript(b"bf"), random.Random(8))


def forced_prove(circ, inst1, wit1, gens, seed=8):
    """Prover internals without the honesty refusal (dishonest-prover tests)."""
    from atlas.blindfold import BlindfoldProof, _absorb_instance
    from atlas.pedersen import pedersen_commit as com

    rng_l = random.Random(seed)
    inst2, wit2, _ = sample_random_instance(circ, gens, rng_l, circ.round_coeff_slots)
    z1 = z_vector(circ, inst1.u, inst1.x, wit1.w)
    z2 = z_vector(circ, inst2.u, inst2.x, wit2.w)
    t_vec = compute_cross_term(circ, z1, inst1.u, z2, inst2.u)
    r_t = rng_l.randrange(P)
    t_comm = com(t_vec, r_t, gens.err)
    t = Transcript(b"bf")
    _absorb_instance(t, b"bf/U1", inst1)
    _absorb_instance(t, b"bf/U2", inst2)
    t.absorb_point(b"bf/T", t_comm)
    r = t.challenge(b"bf/r")
    _, fw = fold(inst1, wit1, inst2, wit2, t_vec, t_comm, r_t, r)
    return BlindfoldProof(inst1, inst2, t_comm, fw.w, fw.r_w, fw.r_e, fw.round_blinds)


def test_each_check_falsifiable(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup

    def fresh_proof(seed=8):
        inst, wit = make_honest_pair(circ, w, gens)
        return blindfold_prove(circ, inst, wit, gens, Transcript(b"bf"), random.Random(seed))

    def expect_check(proof, n):
        with pytest.raises(BlindfoldError) as e:
            blindfold_verify(circ, proof, gens, Transcript(b"bf"))
        assert e.value.check == n, e.value

    # check 1: u_1 != 1 / nonidentity E-bar_1 (prover lies about relaxedness)
    inst, wit = make_honest_pair(circ, w, gens)
    inst.u = 2
    expect_check(forced_prove(circ, inst, wit, gens), 1)
    inst, wit = make_honest_pair(circ, w, gens)
    inst.e_comm = gens.wit.h
    expect_check(forced_prove(circ, inst, wit, gens), 1)

    # checks 2+3 (replay + refold): tampering any absorbed commitment after
    # proving diverges the replayed challenge and the refolded instance
    p = fresh_proof()
    p.t_comm = p.t_comm + gens.value_g
    with pytest.raises(BlindfoldError) as e:
        blindfold_verify(circ, p, gens, Transcript(b"bf"))
    assert e.value.check >= 4  # caught strictly after replay/refold

    # check 4: folded witness slot perturbed post-hoc
    p = fresh_proof()
    p.w_folded[0] = (p.w_folded[0] + 1) % P
    expect_check(p, 4)

    # check 5: round commitment binds different coefficients than W carries
    inst, wit = make_honest_pair(circ, w, gens)
    slots = circ.round_coeff_slots[0]
    bad_coeffs = [(wit.w[s] + 1) % P for s in slots]
    inst.round_comms[0] = pedersen_commit(bad_coeffs, wit.round_blinds[0], gens.rounds)
    expect_check(forced_prove(circ, inst, wit, gens), 5)

    # check 6: witness y_joint diverges from the evaluation commitment
    inst, wit = make_honest_pair(circ, w, gens)
    y_slot, _ = circ.pcs_slots[0]
    wit.w[y_slot] = (wit.w[y_slot] + 1) % P
    inst.w_comm = pedersen_commit(wit.w, wit.r_w, gens.wit)  # commit the lie
    expect_check(forced_prove(circ, inst, wit, gens), 6)

    # check 7: a satisfaction-breaking slot committed consistently everywhere
    inst, wit = make_honest_pair(circ, w, gens)
    sig_in, _ = circ.stage_sigma_slots[0]
    wit.w[sig_in] = (wit.w[sig_in] + 1) % P
    inst.w_comm = pedersen_commit(wit.w, wit.r_w, gens.wit)
    expect_check(forced_prove(circ, inst, wit, gens), 7)


def test_proof_hides_plaintext_coefficients(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    inst, wit = make_honest_pair(circ, w, gens)
    proof = blindfold_prove(circ, inst, wit, gens, Transcript(b"bf"), random.Random(8))
    blob = b"".join(int(v).to_bytes(32, "big") for v in proof.w_folded)
    for msg in res.messages:
        for c in msg.coefficients:
            if int(c):
                assert int(c).to_bytes(32, "big") not in blob


def test_repeat_proofs_differ(setup):
    circ, cfg, res, w, vals, pcs_vals, gens = setup
    inst, wit = make_honest_pair(circ, w, gens)
    p1 = blindfold_prove(circ, inst, wit, gens, Transcript(b"bf"), random.Random(1))
    p2 = blindfold_prove(circ, inst, wit, gens, Transcript(b"bf"), random.Random(2))
    assert p1.w_folded != p2.w_folded
    blindfold_verify(circ, p1, gens, Transcript(b"bf"))
    blindfold_verify(circ, p2, gens, Transcript(b"bf"))
