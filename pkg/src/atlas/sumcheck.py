"""Batched sumcheck prover/verifier over the boolean hypercube.

Round polynomials travel in coefficient form (the folding layer's circuit
consumes coefficients directly).  In hiding mode the serialized proof
carries only a Pedersen commitment per round; plaintext coefficients and
blinds stay in the opening accumulator for the folding witness.

Batching: instances of possibly different round counts and degrees combine
under powers of one transcript challenge.  An instance with n_i rounds in
an N-round batch is treated as a polynomial over N variables that ignores
the leading N - n_i of them, so its claim scales by 2^(N - n_i) and it
halves passively until its own variables come up.  All active instances
share the challenge suffix, which keeps opening points aligned.
"""

from __future__ import annotations

from .field import P, finv
from .pedersen import PedersenGens, pedersen_commit
from .transcript import Transcript

_INV2 = finv(2)

# inverse Vandermonde rows for interpolation on points 0..d, cached per degree
_VINV_CACHE: dict = {}


def _vandermonde_inv(d: int) -> list:
    if d in _VINV_CACHE:
        return _VINV_CACHE[d]
    pts = list(range(d + 1))
    n = d + 1
    mat = [[pow(x, j, P) for j in range(n)] for x in pts]
    # Gauss-Jordan over F_P
    inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if mat[r][col] % P)
        mat[col], mat[piv] = mat[piv], mat[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        s = finv(mat[col][col])
        mat[col] = [v * s % P for v in mat[col]]
        inv[col] = [v * s % P for v in inv[col]]
        for r in range(n):
            if r != col and mat[r][col] % P:
                f = mat[r][col]
                mat[r] = [(a - f * b) % P for a, b in zip(mat[r], mat[col])]
                inv[r] = [(a - f * b) % P for a, b in zip(inv[r], inv[col])]
    _VINV_CACHE[d] = inv
    return inv


def interpolate_coeffs(evals: list) -> list:
    """Coefficients of the unique degree-(len-1) polynomial through
    (0, evals[0]), (1, evals[1]), ..."""
    vinv = _vandermonde_inv(len(evals) - 1)
    return [sum(row[i] * evals[i] for i in range(len(evals))) % P for row in vinv]


def horner_eval(coeffs: list, r) -> tuple:
    """Evaluate c_0 + c_1 r + ... by Horner's rule.

    Returns (value, intermediates t_0..t_{d-2}); the intermediates feed the
    folding circuit's multiplication gates:
      t_{d-2} = c_{d-1} + r c_d,  t_{i-1} = c_i + r t_i,  value = c_0 + r t_0.
    """
    if len(coeffs) < 2:
        raise ValueError("horner_eval needs at least two coefficients")
    ts = []
    acc = coeffs[-1]
    for c in reversed(coeffs[1:-1]):
        acc = (c + r * acc) % P
        ts.append(acc)
    value = (coeffs[0] + r * acc) % P
    ts.reverse()  # ts[0] = t_0 ... ts[d-2]
    return int(value), [int(t) for t in ts]


def eval_coeffs(coeffs: list, r) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * r + c) % P
    return int(acc)


def fold_sparse(a: list, r) -> list:
    """Bind the leading variable, skipping the zero entries sparse columns
    are full of."""
    half = len(a) >> 1
    out = [0] * half
    for i in range(half):
        lo = a[i]
        hi = a[half + i]
        if lo == 0:
            if hi:
                out[i] = r * hi % P
        elif lo == hi:
            out[i] = lo
        else:
            out[i] = (lo + r * (hi - lo)) % P
    return out


class RoundMessage:
    __slots__ = ("coefficients", "commitment", "blind")

    def __init__(self, coefficients, commitment=None, blind=None):
        self.coefficients = coefficients
        self.commitment = commitment
        self.blind = blind


class SumcheckInstance:
    """One summand family: Σ over {0,1}^n of an oracle-defined integrand."""

    n_rounds: int = 0
    degree: int = 1

    def input_claim(self) -> int:
        raise NotImplementedError

    def round_evals(self, points: list) -> list:
        """Values of this round's univariate g at the given X points."""
        raise NotImplementedError

    def bind(self, r) -> None:
        raise NotImplementedError

    def final_claim(self) -> int:
        """Integrand value at the bound challenge point (after all rounds)."""
        raise NotImplementedError


class DenseProduct(SumcheckInstance):
    """Σ_x Σ_terms coeff_t · Π_k arrays[t_k](x), arrays as dense tables.

    Covers every stage whose integrand is a short sum of products of
    polynomials the prover can materialize over the current domain.
    """

    def __init__(self, arrays: list, terms: list, degree: int | None = None, claim=None):
        self.arrays = [list(a) for a in arrays]
        self.terms = terms
        sizes = {len(a) for a in self.arrays}
        if len(sizes) != 1:
            raise ValueError("all arrays must share one domain size")
        size = sizes.pop()
        self.n_rounds = (size - 1).bit_length()
        if 1 << self.n_rounds != size:
            raise ValueError("array length must be a power of two")
        self.degree = degree if degree is not None else max(
            (len(refs) for _, refs in terms), default=1
        )
        self._claim = claim

    def input_claim(self) -> int:
        if self._claim is None:
            total = 0
            size = len(self.arrays[0])
            for coeff, refs in self.terms:
                s = 0
                for i in range(size):
                    prod = coeff
                    for k in refs:
                        prod = prod * self.arrays[k][i] % P
                    s += prod
                total = (total + s) % P
            self._claim = int(total)
        return self._claim

    def round_evals(self, points: list) -> list:
        half = len(self.arrays[0]) >> 1
        npts = len(points)
        out = [0] * npts
        arrays = self.arrays
        rng_pts = range(npts)
        for coeff, refs in self.terms:
            if len(refs) == 2:
                a0, a1 = arrays[refs[0]], arrays[refs[1]]
                for i in range(half):
                    lo0 = a0[i]
                    hi0 = a0[half + i]
                    if lo0 == 0 and hi0 == 0:
                        continue
                    lo1 = a1[i]
                    hi1 = a1[half + i]
                    if lo1 == 0 and hi1 == 0:
                        continue
                    d0 = hi0 - lo0
                    d1 = hi1 - lo1
                    for pi in rng_pts:
                        x = points[pi]
                        out[pi] += coeff * ((lo0 + x * d0) % P) % P * ((lo1 + x * d1) % P)
            elif len(refs) == 3:
                a0, a1, a2 = arrays[refs[0]], arrays[refs[1]], arrays[refs[2]]
                for i in range(half):
                    lo0 = a0[i]
                    hi0 = a0[half + i]
                    if lo0 == 0 and hi0 == 0:
                        continue
                    lo1 = a1[i]
                    hi1 = a1[half + i]
                    if lo1 == 0 and hi1 == 0:
                        continue
                    lo2 = a2[i]
                    hi2 = a2[half + i]
                    if lo2 == 0 and hi2 == 0:
                        continue
                    d0 = hi0 - lo0
                    d1 = hi1 - lo1
                    d2 = hi2 - lo2
                    for pi in rng_pts:
                        x = points[pi]
                        out[pi] += (coeff * ((lo0 + x * d0) % P) % P
                                    * ((lo1 + x * d1) % P) % P
                                    * ((lo2 + x * d2) % P))
            else:
                cols = [arrays[k] for k in refs]
                for i in range(half):
                    los = [c[i] for c in cols]
                    deltas = [c[half + i] - lo for c, lo in zip(cols, los)]
                    if all(lo == 0 and d == 0 for lo, d in zip(los, deltas)):
                        continue
                    for pi in rng_pts:
                        x = points[pi]
                        prod = coeff
                        for lo, dl in zip(los, deltas):
                            prod = prod * ((lo + x * dl) % P) % P
                        out[pi] += prod
        return [int(v % P) for v in out]

    def bind(self, r) -> None:
        for k, a in enumerate(self.arrays):
            self.arrays[k] = fold_sparse(a, r)

    def final_claim(self) -> int:
        total = 0
        for coeff, refs in self.terms:
            prod = coeff
            for k in refs:
                prod = prod * self.arrays[k][0] % P
            total = (total + prod) % P
        return int(total)


class BatchResult:
    __slots__ = ("messages", "challenges", "finals", "alpha", "claims", "pad_bits", "n_rounds", "degree")

    def __init__(self, messages, challenges, finals, alpha, claims, pad_bits, degree):
        self.messages = messages
        self.challenges = challenges
        self.finals = finals
        self.alpha = alpha
        self.claims = claims
        self.pad_bits = pad_bits
        self.n_rounds = len(challenges)
        self.degree = degree

    def instance_point(self, i: int) -> list:
        """Challenge suffix bound to instance i's variables."""
        n_i = self.n_rounds - self.pad_bits[i]
        return self.challenges[self.n_rounds - n_i :]

    def combined_claim(self) -> int:
        total = 0
        for i, (c, pad) in enumerate(zip(self.claims, self.pad_bits)):
            total = (total + pow(self.alpha, i, P) * (c << pad)) % P
        return int(total)

    def combined_final(self) -> int:
        total = 0
        for i, f in enumerate(self.finals):
            total = (total + pow(self.alpha, i, P) * f) % P
        return int(total)


def prove_batch(
    instances: list,
    transcript: Transcript,
    label: bytes,
    hiding: bool = False,
    gens: PedersenGens | None = None,
    blind_rng=None,
) -> BatchResult:
    """Run the batched protocol; absorbs messages and draws challenges."""
    if not instances:
        raise ValueError("empty batch")
    n_rounds = max(inst.n_rounds for inst in instances)
    degree = max(inst.degree for inst in instances)
    claims = [inst.input_claim() % P for inst in instances]
    pad_bits = [n_rounds - inst.n_rounds for inst in instances]

    if hiding:
        # claims are already pinned by absorbed commitments; plaintext values
        # stay out of the transcript so the folding layer can hide them
        transcript.absorb(label + b"/claims", b"hidden")
    else:
        transcript.absorb_fields(label + b"/claims", claims)
    alpha = transcript.challenge(label + b"/alpha") if len(instances) > 1 else 1

    # running per-instance claims, scaled into the padded domain
    sigma = [(c << pad) % P for c, pad in zip(claims, pad_bits)]
    combined_sigma = 0
    for i, s in enumerate(sigma):
        combined_sigma = (combined_sigma + pow(alpha, i, P) * s) % P

    points = [0] + list(range(2, degree + 1))
    messages = []
    challenges = []
    for rnd in range(n_rounds):
        evals = [0] * (degree + 1)  # g at 0..degree; slot 1 filled from identity
        per_inst_evals = []
        for i, inst in enumerate(instances):
            active = rnd >= pad_bits[i] and inst.n_rounds > 0
            if active:
                vals = inst.round_evals(points)
                ev = {pt: v for pt, v in zip(points, vals)}
                ev[1] = (sigma[i] - ev[0]) % P
            else:
                half = sigma[i] * _INV2 % P
                ev = {pt: half for pt in range(degree + 1)}
                ev[1] = half
            per_inst_evals.append(ev)
            w = pow(alpha, i, P)
            for pt in range(degree + 1):
                if pt == 1:
                    continue
                evals[pt] = (evals[pt] + w * ev[pt]) % P
        evals[1] = (combined_sigma - evals[0]) % P
        coeffs = interpolate_coeffs(evals)
        if hiding:
            if gens is None:
                raise ValueError("hiding mode requires generators")
            rho = blind_rng.randrange(P) if blind_rng is not None else 0
            comm = pedersen_commit(coeffs, rho, gens)
            transcript.absorb_point(label + b"/round", comm)
            messages.append(RoundMessage(coeffs, comm, rho))
        else:
            transcript.absorb_fields(label + b"/round", coeffs)
            messages.append(RoundMessage(coeffs))
        r = transcript.challenge(label + b"/r")
        challenges.append(r)
        for i, inst in enumerate(instances):
            ev = per_inst_evals[i]
            if rnd >= pad_bits[i] and inst.n_rounds > 0:
                inst.bind(r)
                # evaluate instance's round poly at r via interpolation
                inst_coeffs = interpolate_coeffs([ev[pt] for pt in range(degree + 1)])
                sigma[i] = eval_coeffs(inst_coeffs, r)
            else:
                sigma[i] = sigma[i] * _INV2 % P
        combined_sigma = eval_coeffs(coeffs, r)

    finals = []
    for inst, pad in zip(instances, pad_bits):
        if inst.n_rounds == 0:
            finals.append(inst.input_claim() % P)
        else:
            finals.append(inst.final_claim() % P)
    return BatchResult(messages, challenges, finals, alpha, claims, pad_bits, degree)


def verify_batch_transparent(
    messages: list,
    claims: list,
    n_rounds_each: list,
    degree: int,
    transcript: Transcript,
    label: bytes,
):
    """Replay a transparent batch; returns (challenges, alpha, final value).

    Rejects (ValueError, with the round index) on any violated round
    identity 2 c_0 + Σ_{l>=1} c_l = σ.  The caller still must check the
    returned final value against an oracle evaluation of the integrand.
    """
    n_rounds = max(n_rounds_each)
    if len(messages) != n_rounds:
        raise ValueError(f"expected {n_rounds} round messages, got {len(messages)}")
    transcript.absorb_fields(label + b"/claims", claims)
    alpha = transcript.challenge(label + b"/alpha") if len(claims) > 1 else 1
    sigma = 0
    for i, (c, n_i) in enumerate(zip(claims, n_rounds_each)):
        sigma = (sigma + pow(alpha, i, P) * (c << (n_rounds - n_i))) % P
    challenges = []
    for rnd, msg in enumerate(messages):
        coeffs = msg.coefficients
        if len(coeffs) != degree + 1:
            raise ValueError(f"round {rnd}: bad coefficient count")
        total = (2 * coeffs[0] + sum(coeffs[1:])) % P
        if total != sigma % P:
            raise ValueError(f"round {rnd}: sumcheck identity violated")
        transcript.absorb_fields(label + b"/round", coeffs)
        r = transcript.challenge(label + b"/r")
        challenges.append(r)
        sigma = eval_coeffs(coeffs, r)
    return challenges, alpha, int(sigma)


def replay_batch_hiding(
    messages: list,
    n_instances: int,
    transcript: Transcript,
    label: bytes,
):
    """Verifier-side replay of a hiding batch: absorbs the round commitments
    and re-derives (challenges, alpha); the identity checks live in the
    folding circuit."""
    transcript.absorb(label + b"/claims", b"hidden")
    alpha = transcript.challenge(label + b"/alpha") if n_instances > 1 else 1
    challenges = []
    for msg in messages:
        if msg.commitment is None:
            raise ValueError("hiding replay requires round commitments")
        transcript.absorb_point(label + b"/round", msg.commitment)
        challenges.append(transcript.challenge(label + b"/r"))
    return challenges, alpha


def sumcheck_prove(
    instance: SumcheckInstance,
    transcript: Transcript,
    hiding: bool = False,
    gens: PedersenGens | None = None,
    blind_rng=None,
    label: bytes = b"sumcheck",
):
    """Single-instance surface: (messages, challenges, final_claim)."""
    res = prove_batch([instance], transcript, label, hiding, gens, blind_rng)
    return res.messages, res.challenges, res.finals[0]


def sumcheck_verify_transparent(
    messages: list,
    claim,
    degree: int,
    transcript: Transcript,
    n_rounds: int | None = None,
    label: bytes = b"sumcheck",
):
    """Single-instance transparent verification: (point, final_claim)."""
    n = n_rounds if n_rounds is not None else len(messages)
    challenges, _, final = verify_batch_transparent(
        messages, [int(claim) % P], [n], degree, transcript, label
    )
    return challenges, final
