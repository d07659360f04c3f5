"""Zero-knowledge layer: relaxed R1CS, the sumcheck-verifier circuit, and
Nova-style folding with a random satisfying instance.

The circuit encodes every sumcheck round of the proof DAG as one identity
constraint plus Horner multiplication gates, chains claimed sums between
rounds, wires stage inputs/outputs to opening slots through binding
expressions, and adds one constraint tying the batched opening value to
the PCS evaluation commitment.  Folding the honest instance with a random
satisfying one hides the entire witness behind a single random linear
combination; the folded witness travels in the clear.
"""

from __future__ import annotations

from .accumulator import Expr
from .curve import GroupElement, msm
from .field import P
from .pedersen import PedersenGens, pedersen_commit
from .sumcheck import horner_eval
from .transcript import Transcript


class SparseMatrix:
    """Rows of (coefficient, z-index) pairs."""

    def __init__(self):
        self.rows = []

    def add_row(self, entries):
        self.rows.append([(int(c) % P, int(i)) for c, i in entries if int(c) % P])

    def apply(self, z: list) -> list:
        out = []
        for row in self.rows:
            acc = 0
            for c, i in row:
                acc += c * z[i]
            out.append(acc % P)
        return out

    def __len__(self):
        return len(self.rows)


class StageConfig:
    """Deterministic description of one batched sumcheck level."""

    __slots__ = ("label", "n_rounds", "degree", "challenges", "input_expr", "output_expr")

    def __init__(self, label, n_rounds, degree, challenges, input_expr, output_expr):
        self.label = label
        self.n_rounds = n_rounds
        self.degree = degree
        self.challenges = challenges
        self.input_expr = input_expr
        self.output_expr = output_expr


class VerifierCircuit:
    """R1CS (A z) o (B z) = C z over z = [u | x | W] plus slot maps."""

    def __init__(self, n_pub: int):
        self.n_pub = n_pub
        self.A = SparseMatrix()
        self.B = SparseMatrix()
        self.C = SparseMatrix()
        self.n_wit = 0
        self.opening_slot = {}        # omega -> witness-relative index
        self.round_coeff_slots = []   # per round: witness-relative coeff indices
        self.round_slots = []         # per round: dict of all allocated slots
        self.stage_sigma_slots = []   # per stage: (input slot, output slot)
        self.pcs_slots = []           # (y_joint slot, blind slot) per joint opening
        self.n_round_constraints = 0
        self.n_binding_constraints = 0
        self._aux_cache = {}

    # -- slot helpers (witness-relative) ------------------------------------

    def alloc(self, n=1) -> int:
        idx = self.n_wit
        self.n_wit += n
        return idx

    def z_index(self, wit_idx: int) -> int:
        return 1 + self.n_pub + wit_idx

    @property
    def n_vars(self) -> int:
        return 1 + self.n_pub + self.n_wit

    @property
    def n_constraints(self) -> int:
        return len(self.A)

    # -- constraint emitters -------------------------------------------------

    def gate(self, a_entries, b_entries, c_entries, binding=False):
        self.A.add_row(a_entries)
        self.B.add_row(b_entries)
        self.C.add_row(c_entries)
        if binding:
            self.n_binding_constraints += 1
        else:
            self.n_round_constraints += 1

    def linear_zero(self, entries, binding=True):
        """Constraint (sum entries) * u = 0."""
        self.gate(entries, [(1, 0)], [], binding=binding)

    def _expr_entries(self, expr: Expr, negate=False):
        """z-entries of the affine part of expr (quads must be pre-lowered)."""
        s = -1 if negate else 1
        entries = [(s * expr.const, 0)]
        for c, omega in expr.linear:
            entries.append((s * c, self.z_index(self.opening_slot[omega])))
        return entries

    def lower_quads(self, expr: Expr):
        """Emit product gates for quadratic terms; returns affine entries."""
        entries = []
        for c, a, b in expr.quad:
            key = (min(a, b), max(a, b))
            if key not in self._aux_cache:
                aux = self.alloc()
                self._aux_cache[key] = aux
                self.gate(
                    [(1, self.z_index(self.opening_slot[a]))],
                    [(1, self.z_index(self.opening_slot[b]))],
                    [(1, self.z_index(aux))],
                    binding=True,
                )
            entries.append((c, self.z_index(self._aux_cache[key])))
        return entries

    def bind_slot_to_expr(self, slot: int, expr: Expr):
        """slot = expr (one linear constraint; quads via cached aux gates)."""
        quad_entries = self.lower_quads(expr)
        entries = [(1, self.z_index(slot))] + self._expr_entries(expr, negate=True)
        entries += [(-c % P, zi) for c, zi in quad_entries]
        self.linear_zero(entries)


def build_verifier_circuit(stage_configs: list, opening_ids: list,
                           pcs_bindings: list, n_pub: int = 1,
                           constraint_exprs: list | None = None) -> VerifierCircuit:
    """Assemble the full verifier R1CS from deterministic stage metadata.

    pcs_bindings: list of delta_weights ([(coef, omega)]) — one per joint
    opening; each adds the y_joint slot, blind slot, and the linear
    constraint y_joint = sum coef * y_omega.  constraint_exprs are extra
    relations over opening slots that must evaluate to zero (glue between
    virtual claims, e.g. an address value and its bit columns).
    """
    circ = VerifierCircuit(n_pub)
    for omega in opening_ids:
        circ.opening_slot[omega] = circ.alloc()

    for expr in constraint_exprs or []:
        quad_entries = circ.lower_quads(expr)
        entries = circ._expr_entries(expr)
        entries += [(c, zi) for c, zi in quad_entries]
        circ.linear_zero(entries)

    for cfg in stage_configs:
        sigma_in = circ.alloc()
        circ.bind_slot_to_expr(sigma_in, cfg.input_expr)
        sigma = sigma_in
        d = cfg.degree
        for j in range(cfg.n_rounds):
            r_j = int(cfg.challenges[j]) % P
            coeffs = [circ.alloc() for _ in range(d + 1)]
            circ.round_coeff_slots.append(coeffs)
            # sumcheck identity: 2 c_0 + c_1 + ... + c_d = sigma_j
            entries = [(2, circ.z_index(coeffs[0]))]
            entries += [(1, circ.z_index(c)) for c in coeffs[1:]]
            entries.append((-1 % P, circ.z_index(sigma)))
            circ.gate(entries, [(1, 0)], [])
            # Horner gates with intermediates t_{d-2} .. t_0
            sigma_next = circ.alloc()
            if d == 1:
                # sigma' = c_0 + r c_1
                circ.gate([(1, circ.z_index(coeffs[1]))], [(r_j, 0)],
                          [(1, circ.z_index(sigma_next)), (-1 % P, circ.z_index(coeffs[0]))])
                ts = []
            else:
                ts = [circ.alloc() for _ in range(d - 1)]
                # innermost: c_d * r = t_{d-2} - c_{d-1}
                circ.gate([(1, circ.z_index(coeffs[d]))], [(r_j, 0)],
                          [(1, circ.z_index(ts[d - 2])), (-1 % P, circ.z_index(coeffs[d - 1]))])
                for i in range(d - 2, 0, -1):
                    circ.gate([(1, circ.z_index(ts[i]))], [(r_j, 0)],
                              [(1, circ.z_index(ts[i - 1])), (-1 % P, circ.z_index(coeffs[i]))])
                circ.gate([(1, circ.z_index(ts[0]))], [(r_j, 0)],
                          [(1, circ.z_index(sigma_next)), (-1 % P, circ.z_index(coeffs[0]))])
            circ.round_slots.append({"coeffs": coeffs, "ts": ts, "sigma_next": sigma_next})
            sigma = sigma_next
        circ.bind_slot_to_expr(sigma, cfg.output_expr)
        circ.stage_sigma_slots.append((sigma_in, sigma))

    for weights in pcs_bindings:
        y_joint = circ.alloc()
        blind = circ.alloc()
        expr = Expr()
        for coef, omega in weights:
            expr.add_linear(coef, omega)
        circ.bind_slot_to_expr(y_joint, expr)
        circ.pcs_slots.append((y_joint, blind))
    return circ


def assign_witness(circ: VerifierCircuit, stage_configs: list, stage_messages: list,
                   opening_values: dict, pcs_values: list) -> list:
    """Populate the witness vector W from the prover's records.

    stage_messages: per stage, the list of RoundMessage (plaintext coeffs).
    pcs_values: (y_joint, blind) per joint opening.
    """
    w = [0] * circ.n_wit
    for omega, slot in circ.opening_slot.items():
        w[slot] = opening_values[omega] % P

    def eval_expr(expr: Expr) -> int:
        total = expr.const
        for c, o in expr.linear:
            total = (total + c * opening_values[o]) % P
        for c, a, b in expr.quad:
            total = (total + c * opening_values[a] % P * opening_values[b]) % P
        return int(total)

    round_idx = 0
    for cfg, messages in zip(stage_configs, stage_messages):
        for j in range(cfg.n_rounds):
            slots = circ.round_slots[round_idx]
            coeffs = [int(c) % P for c in messages[j].coefficients]
            for slot, val in zip(slots["coeffs"], coeffs):
                w[slot] = val
            r_j = int(cfg.challenges[j]) % P
            value, ts = horner_eval(coeffs, r_j)
            for slot, val in zip(slots["ts"], ts):
                w[slot] = val
            w[slots["sigma_next"]] = value
            round_idx += 1

    # stage input-claim slots
    for cfg, (sigma_in, _) in zip(stage_configs, circ.stage_sigma_slots):
        w[sigma_in] = eval_expr(cfg.input_expr)

    # aux product slots
    for (a, b), aux in circ._aux_cache.items():
        w[aux] = opening_values[a] * opening_values[b] % P

    for (y_slot, b_slot), (y_val, b_val) in zip(circ.pcs_slots, pcs_values):
        w[y_slot] = int(y_val) % P
        w[b_slot] = int(b_val) % P
    return w


# ---------------------------------------------------------------------------
# relaxed R1CS instances and folding


class RelaxedInstance:
    __slots__ = ("e_comm", "u", "w_comm", "x", "round_comms", "eval_comms")

    def __init__(self, e_comm, u, w_comm, x, round_comms, eval_comms):
        self.e_comm = e_comm
        self.u = u
        self.w_comm = w_comm
        self.x = list(x)
        self.round_comms = list(round_comms)
        self.eval_comms = list(eval_comms)


class RelaxedWitness:
    __slots__ = ("e", "r_e", "w", "r_w", "round_blinds")

    def __init__(self, e, r_e, w, r_w, round_blinds):
        self.e = list(e)
        self.r_e = r_e
        self.w = list(w)
        self.r_w = r_w
        self.round_blinds = list(round_blinds)


class BlindfoldGens:
    """Bases for the folding layer, disjoint from the PCS bases by label.

    value_g/value_h are the PCS evaluation-commitment pair (G, H): the
    binding check must open V-bar against the same bases the PCS used.
    """

    def __init__(self, n_wit: int, n_constraints: int, max_coeffs: int):
        self.wit = PedersenGens(n_wit, label=b"blindfold-witness")
        self.err = PedersenGens(n_constraints, label=b"blindfold-error")
        self.rounds = PedersenGens(max_coeffs, label=b"blindfold-rounds")
        from .curve import GENERATOR
        from .pedersen import PedersenGens as _PG

        self.value_g = GENERATOR
        self.value_h = _PG(1, label=b"pcs").h


def z_vector(circ: VerifierCircuit, u, x, w) -> list:
    return [int(u) % P] + [int(v) % P for v in x] + [int(v) % P for v in w]


def residual(circ: VerifierCircuit, z: list, u) -> list:
    """(A z) o (B z) - u (C z), entrywise."""
    az = circ.A.apply(z)
    bz = circ.B.apply(z)
    cz = circ.C.apply(z)
    u = int(u) % P
    return [(a * b - u * c) % P for a, b, c in zip(az, bz, cz)]


def check_relaxed_satisfaction(circ: VerifierCircuit, inst: RelaxedInstance,
                               wit: RelaxedWitness) -> bool:
    z = z_vector(circ, inst.u, inst.x, wit.w)
    res = residual(circ, z, inst.u)
    return all((r - e) % P == 0 for r, e in zip(res, wit.e))


def compute_cross_term(circ: VerifierCircuit, z1, u1, z2, u2) -> list:
    """T_i = (Az1)(Bz2) + (Az2)(Bz1) - u1(Cz2) - u2(Cz1)."""
    az1, bz1, cz1 = circ.A.apply(z1), circ.B.apply(z1), circ.C.apply(z1)
    az2, bz2, cz2 = circ.A.apply(z2), circ.B.apply(z2), circ.C.apply(z2)
    u1, u2 = int(u1) % P, int(u2) % P
    return [
        (a1 * b2 + a2 * b1 - u1 * c2 - u2 * c1) % P
        for a1, b1, c1, a2, b2, c2 in zip(az1, bz1, cz1, az2, bz2, cz2)
    ]


def fold(inst1: RelaxedInstance, wit1: RelaxedWitness,
         inst2: RelaxedInstance, wit2: RelaxedWitness,
         t_vec: list, t_comm, r_t, r) -> tuple:
    """Fold two satisfying pairs under challenge r."""
    r = int(r) % P
    r2 = r * r % P
    inst = RelaxedInstance(
        e_comm=inst1.e_comm + r * t_comm + r2 * inst2.e_comm,
        u=(inst1.u + r * inst2.u) % P,
        w_comm=inst1.w_comm + r * inst2.w_comm,
        x=[(a + r * b) % P for a, b in zip(inst1.x, inst2.x)],
        round_comms=[c1 + r * c2 for c1, c2 in zip(inst1.round_comms, inst2.round_comms)],
        eval_comms=[c1 + r * c2 for c1, c2 in zip(inst1.eval_comms, inst2.eval_comms)],
    )
    wit = RelaxedWitness(
        e=[(e1 + r * t + r2 * e2) % P for e1, t, e2 in zip(wit1.e, t_vec, wit2.e)],
        r_e=(wit1.r_e + r * r_t + r2 * wit2.r_e) % P,
        w=[(a + r * b) % P for a, b in zip(wit1.w, wit2.w)],
        r_w=(wit1.r_w + r * wit2.r_w) % P,
        round_blinds=[(a + r * b) % P for a, b in zip(wit1.round_blinds, wit2.round_blinds)],
    )
    return inst, wit


def sample_random_instance(circ: VerifierCircuit, gens: BlindfoldGens, rng,
                           n_rounds_coeffs: list) -> tuple:
    """Random satisfying pair with the honest structural layout.

    n_rounds_coeffs: per round, the coefficient slot list (for R-commits).
    """
    w2 = [rng.randrange(P) for _ in range(circ.n_wit)]
    u2 = rng.randrange(1, P)
    x2 = [rng.randrange(P) for _ in range(circ.n_pub)]
    z2 = z_vector(circ, u2, x2, w2)
    e2 = residual(circ, z2, u2)
    r_w2 = rng.randrange(P)
    r_e2 = rng.randrange(P)
    w_comm = pedersen_commit(w2, r_w2, gens.wit)
    e_comm = pedersen_commit(e2, r_e2, gens.err)
    round_blinds = []
    round_comms = []
    for slots in n_rounds_coeffs:
        rho = rng.randrange(P)
        round_blinds.append(rho)
        round_comms.append(pedersen_commit([w2[s] for s in slots], rho, gens.rounds))
    eval_comms = []
    for y_slot, b_slot in circ.pcs_slots:
        eval_comms.append(msm([gens.value_g, gens.value_h], [w2[y_slot], w2[b_slot]]))
    inst = RelaxedInstance(e_comm, u2, w_comm, x2, round_comms, eval_comms)
    wit = RelaxedWitness(e2, r_e2, w2, r_w2, round_blinds)
    return inst, wit, z2


class BlindfoldProof:
    __slots__ = ("inst1", "inst2", "t_comm", "w_folded", "r_w", "r_e", "round_blinds")

    def __init__(self, inst1, inst2, t_comm, w_folded, r_w, r_e, round_blinds):
        self.inst1 = inst1
        self.inst2 = inst2
        self.t_comm = t_comm
        self.w_folded = w_folded
        self.r_w = r_w
        self.r_e = r_e
        self.round_blinds = round_blinds


def _absorb_instance(t: Transcript, label: bytes, inst: RelaxedInstance):
    t.absorb_point(label + b"/E", inst.e_comm)
    t.absorb_field(label + b"/u", inst.u)
    t.absorb_point(label + b"/W", inst.w_comm)
    t.absorb_fields(label + b"/x", inst.x)
    t.absorb_points(label + b"/R", inst.round_comms)
    t.absorb_points(label + b"/V", inst.eval_comms)


def blindfold_prove(circ: VerifierCircuit, inst1: RelaxedInstance,
                    wit1: RelaxedWitness, gens: BlindfoldGens,
                    transcript: Transcript, rng,
                    unchecked: bool = False) -> BlindfoldProof:
    if inst1.u != 1 or any(e % P for e in wit1.e):
        raise ValueError("blindfold requires a non-relaxed input instance")
    if not unchecked and not check_relaxed_satisfaction(circ, inst1, wit1):
        raise ValueError("refusing to fold an unsatisfied witness")

    inst2, wit2, z2 = sample_random_instance(circ, gens, rng, circ.round_coeff_slots)
    z1 = z_vector(circ, inst1.u, inst1.x, wit1.w)
    t_vec = compute_cross_term(circ, z1, inst1.u, z2, inst2.u)
    r_t = rng.randrange(P)
    t_comm = pedersen_commit(t_vec, r_t, gens.err)

    _absorb_instance(transcript, b"bf/U1", inst1)
    _absorb_instance(transcript, b"bf/U2", inst2)
    transcript.absorb_point(b"bf/T", t_comm)
    r = transcript.challenge(b"bf/r")

    _, wit_folded = fold(inst1, wit1, inst2, wit2, t_vec, t_comm, r_t, r)
    return BlindfoldProof(inst1, inst2, t_comm, wit_folded.w,
                          wit_folded.r_w, wit_folded.r_e, wit_folded.round_blinds)


class BlindfoldError(ValueError):
    def __init__(self, check: int, message: str):
        super().__init__(f"blindfold check {check}: {message}")
        self.check = check


def blindfold_verify(circ: VerifierCircuit, proof: BlindfoldProof,
                     gens: BlindfoldGens, transcript: Transcript) -> None:
    """The seven checks, each with a distinct failure code."""
    inst1, inst2 = proof.inst1, proof.inst2
    # 1. non-relaxed input
    if inst1.u != 1:
        raise BlindfoldError(1, "u_1 != 1")
    if not inst1.e_comm.is_identity():
        raise BlindfoldError(1, "E-bar_1 is not the identity")
    # 2. Fiat-Shamir replay
    _absorb_instance(transcript, b"bf/U1", inst1)
    _absorb_instance(transcript, b"bf/U2", inst2)
    transcript.absorb_point(b"bf/T", proof.t_comm)
    r = transcript.challenge(b"bf/r")
    # 3. folded instance from public data
    r2 = r * r % P
    e_comm = inst1.e_comm + r * proof.t_comm + r2 * inst2.e_comm
    u = (inst1.u + r * inst2.u) % P
    w_comm = inst1.w_comm + r * inst2.w_comm
    x = [(a + r * b) % P for a, b in zip(inst1.x, inst2.x)]
    eval_comms = [c1 + r * c2 for c1, c2 in zip(inst1.eval_comms, inst2.eval_comms)]
    # 4. witness commitment opening
    if pedersen_commit(proof.w_folded, proof.r_w, gens.wit) != w_comm:
        raise BlindfoldError(4, "W-bar opening failed")
    # 5. coefficient consistency against folded round commitments, batched
    # under verifier-local randomness into a single multi-scalar check
    if len(proof.round_blinds) != len(circ.round_coeff_slots):
        raise BlindfoldError(5, "round blind count mismatch")
    if circ.round_coeff_slots:
        import random as _random

        local = _random.SystemRandom()
        deltas = [local.randrange(1, P) for _ in circ.round_coeff_slots]
        width = max(len(s) for s in circ.round_coeff_slots)
        combo_coeffs = [0] * width
        combo_blind = 0
        for d, slots, rho in zip(deltas, circ.round_coeff_slots, proof.round_blinds):
            for k, s in enumerate(slots):
                combo_coeffs[k] = (combo_coeffs[k] + d * proof.w_folded[s]) % P
            combo_blind = (combo_blind + d * rho) % P
        lhs = pedersen_commit(combo_coeffs, combo_blind, gens.rounds)
        pts = list(inst1.round_comms) + list(inst2.round_comms)
        scs = deltas + [d * r % P for d in deltas]
        if lhs != msm(pts, scs):
            raise BlindfoldError(5, "round coefficient commitments mismatch")
    # 6. evaluation commitment (PCS binding)
    for (y_slot, b_slot), vbar in zip(circ.pcs_slots, eval_comms):
        expect = msm([gens.value_g, gens.value_h],
                     [proof.w_folded[y_slot], proof.w_folded[b_slot]])
        if expect != vbar:
            raise BlindfoldError(6, "evaluation commitment mismatch")
    # 7. R1CS satisfaction: the residual must open E-bar'
    z = z_vector(circ, u, x, proof.w_folded)
    e_vec = residual(circ, z, u)
    if pedersen_commit(e_vec, proof.r_e, gens.err) != e_comm:
        raise BlindfoldError(7, "relaxed R1CS satisfaction failed")
