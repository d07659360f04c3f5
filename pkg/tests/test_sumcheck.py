"""Sumcheck engine: completeness, soundness under mutation, Horner, batching."""

import random

import pytest

from atlas.field import P
from atlas.mle import MultilinearPoly, mle_evaluate
from atlas.pedersen import PedersenGens
from atlas.sumcheck import (
    DenseProduct,
    RoundMessage,
    eval_coeffs,
    horner_eval,
    interpolate_coeffs,
    prove_batch,
    sumcheck_prove,
    sumcheck_verify_transparent,
    verify_batch_transparent,
)
from atlas.transcript import Transcript

rng = random.Random(0x5C)


def brute_force_sum(arrays, terms):
    total = 0
    for coeff, refs in terms:
        for i in range(len(arrays[0])):
            prod = coeff
            for k in refs:
                prod = prod * arrays[k][i] % P
            total = (total + prod) % P
    return total


def test_horner_trivial():
    value, ts = horner_eval([2, 3], 5)
    assert value == 17
    assert ts == []


def test_horner_hand_computation():
    value, ts = horner_eval([1, 2, 3], 2)
    assert ts == [8]  # t_0 = 2 + 2*3
    assert value == 17  # 1 + 2*8


def test_horner_against_power_sum_oracle():
    coeffs = [rng.randrange(P) for _ in range(6)]
    r = rng.randrange(P)
    naive = sum(c * pow(r, i, P) for i, c in enumerate(coeffs)) % P
    value, ts = horner_eval(coeffs, r)
    assert value == naive
    # intermediates satisfy the recurrence t_{i-1} = c_i + r t_i
    assert ts[-1] == (coeffs[-2] + r * coeffs[-1]) % P
    for i in range(len(ts) - 1, 0, -1):
        assert ts[i - 1] == (coeffs[i] + r * ts[i]) % P


def test_interpolation_roundtrip():
    for d in range(1, 7):
        coeffs = [rng.randrange(P) for _ in range(d + 1)]
        evals = [eval_coeffs(coeffs, x) for x in range(d + 1)]
        assert interpolate_coeffs(evals) == coeffs


def test_constant_three_poly():
    # g = 3 on all four boolean points: claim = 12
    inst = DenseProduct([[3, 3, 3, 3]], [(1, [0])])
    assert inst.input_claim() == 12
    t = Transcript()
    messages, challenges, final = sumcheck_prove(inst, t)
    tv = Transcript()
    point, claimed_final = sumcheck_verify_transparent(messages, 12, 1, tv)
    assert point == challenges
    assert claimed_final == final == 3


def test_zero_polynomial():
    inst = DenseProduct([[0] * 8], [(1, [0])])
    assert inst.input_claim() == 0
    t = Transcript()
    messages, _, final = sumcheck_prove(inst, t)
    assert final == 0
    assert all(c == 0 for m in messages for c in m.coefficients)


def test_product_of_two_mles():
    f = MultilinearPoly(3, [rng.randrange(P) for _ in range(8)])
    g = MultilinearPoly(3, [rng.randrange(P) for _ in range(8)])
    inst = DenseProduct([f.evals, g.evals], [(1, [0, 1])])
    t = Transcript()
    messages, challenges, final = sumcheck_prove(inst, t)
    assert final == mle_evaluate(f, challenges) * mle_evaluate(g, challenges) % P
    tv = Transcript()
    point, claimed = sumcheck_verify_transparent(messages, inst.input_claim(), 2, tv)
    assert claimed == final


def test_hand_identity_example():
    # g(X) = 2 + 3X with claim 7: 2*2 + 3 = 7; at r = 5 the next claim is 17
    assert (2 * 2 + 3) == 7
    value, _ = horner_eval([2, 3], 5)
    assert value == 17


def test_completeness_random_instances():
    for trial in range(40):
        n = rng.randrange(1, 7)
        n_polys = rng.randrange(1, 4)
        arrays = [[rng.randrange(P) for _ in range(1 << n)] for _ in range(n_polys)]
        terms = [(rng.randrange(1, P), list(range(n_polys)))]
        inst = DenseProduct(arrays, terms)
        claim = inst.input_claim()
        assert claim == brute_force_sum([list(a) for a in arrays], terms)
        t = Transcript()
        messages, challenges, final = sumcheck_prove(inst, t)
        tv = Transcript()
        point, claimed = sumcheck_verify_transparent(messages, claim, inst.degree, tv)
        assert point == challenges
        assert claimed == final
        polys = [MultilinearPoly(n, a) for a in arrays]
        expect = terms[0][0]
        for p_ in polys:
            expect = expect * mle_evaluate(p_, challenges) % P
        assert final == expect


def test_mutation_rejected_with_round_index():
    arrays = [[rng.randrange(P) for _ in range(16)] for _ in range(2)]
    inst = DenseProduct(arrays, [(1, [0, 1])])
    claim = inst.input_claim()
    t = Transcript()
    messages, _, _ = sumcheck_prove(inst, t)
    # flip one coefficient in round 0: must reject at round 0
    bad = [RoundMessage(list(m.coefficients)) for m in messages]
    bad[0].coefficients[1] = (bad[0].coefficients[1] + 1) % P
    with pytest.raises(ValueError, match="round 0"):
        sumcheck_verify_transparent(bad, claim, 2, Transcript())
    # flipped claim also rejects at round 0
    with pytest.raises(ValueError, match="round 0"):
        sumcheck_verify_transparent(messages, (claim + 1) % P, 2, Transcript())
    # a later-round mutation rejects at that round
    bad2 = [RoundMessage(list(m.coefficients)) for m in messages]
    bad2[2].coefficients[0] = (bad2[2].coefficients[0] + 5) % P
    with pytest.raises(ValueError, match="round 2"):
        sumcheck_verify_transparent(bad2, claim, 2, Transcript())


def test_batched_instances_same_length():
    n = 4
    insts = []
    arrays_all = []
    for _ in range(3):
        arrays = [[rng.randrange(P) for _ in range(1 << n)] for _ in range(2)]
        arrays_all.append(arrays)
        insts.append(DenseProduct(arrays, [(1, [0, 1])]))
    claims = [i.input_claim() for i in insts]
    t = Transcript()
    res = prove_batch(insts, t, b"batch")
    tv = Transcript()
    challenges, alpha, final = verify_batch_transparent(
        res.messages, claims, [n] * 3, 2, tv, b"batch"
    )
    assert challenges == res.challenges
    # final combined value equals alpha-weighted product of MLE evaluations
    expect = 0
    for i, arrays in enumerate(arrays_all):
        v = 1
        for a in arrays:
            v = v * mle_evaluate(MultilinearPoly(n, a), challenges) % P
        expect = (expect + pow(alpha, i, P) * v) % P
    assert final == expect == res.combined_final()


def test_batched_instances_mixed_lengths():
    big = DenseProduct([[rng.randrange(P) for _ in range(16)]], [(1, [0])])
    small = DenseProduct([[rng.randrange(P) for _ in range(4)]], [(1, [0])])
    claims = [big.input_claim(), small.input_claim()]
    big_evals, small_evals = list(big.arrays[0]), list(small.arrays[0])
    t = Transcript()
    res = prove_batch([big, small], t, b"mix")
    tv = Transcript()
    challenges, alpha, final = verify_batch_transparent(
        res.messages, claims, [4, 2], 1, tv, b"mix"
    )
    # small instance binds only the challenge suffix
    assert res.instance_point(1) == challenges[2:]
    expect_big = mle_evaluate(MultilinearPoly(4, big_evals), challenges)
    expect_small = mle_evaluate(MultilinearPoly(2, small_evals), challenges[2:])
    assert final == (expect_big + alpha * expect_small) % P


def test_degenerate_zero_round_instance():
    # a 0-round instance's claim passes through as its final value
    class Point(DenseProduct):
        pass

    inst = Point([[7]], [(1, [0])])
    assert inst.n_rounds == 0
    other = DenseProduct([[rng.randrange(P) for _ in range(8)]], [(1, [0])])
    t = Transcript()
    res = prove_batch([other, inst], t, b"deg")
    assert res.finals[1] == 7


def test_hiding_mode_hides_coefficients():
    gens = PedersenGens(8, label=b"sumcheck-test")
    arrays = [[rng.randrange(P) for _ in range(16)] for _ in range(2)]
    inst = DenseProduct(arrays, [(1, [0, 1])])
    t = Transcript()
    blind_rng = random.Random(1234)
    messages, challenges, final = sumcheck_prove(
        inst, t, hiding=True, gens=gens, blind_rng=blind_rng
    )
    # serialized form = commitments only; scan for coefficient encodings
    blob = b"".join(m.commitment.to_bytes() for m in messages)
    for m in messages:
        for c in m.coefficients:
            if c:
                assert int(c).to_bytes(32, "big") not in blob
    # transcript replay from commitments alone reproduces the challenges
    from atlas.sumcheck import replay_batch_hiding

    out, _ = replay_batch_hiding(messages, 1, Transcript(), b"sumcheck")
    assert out == challenges
