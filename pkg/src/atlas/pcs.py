"""Transparent Hyrax-style multilinear polynomial commitment.

Evaluations are arranged as a 2^row_vars x 2^col_vars matrix and each row
gets a blinded Pedersen vector commitment.  Opening combines rows under
the eq-weights of the high variables and proves the inner product with the
low-variable eq-weights.  Two opening modes:

* transparent: the combined row and the evaluation travel in the clear
  (tests and debugging);
* committed-value (the pipeline's mode): a sigma-protocol masks the
  combined row and binds the evaluation inside V = y*G + b*H, which is
  exactly the commitment the folding layer's binding constraint consumes.

The matrix split leans wide (more columns than rows) instead of square:
row commitments dominate proof size and column length only enters the one
combined-row reveal, so a rectangular split keeps desk-scale proofs small.
"""

from __future__ import annotations

from .curve import GENERATOR, GroupElement, msm
from .field import P
from .mle import eq_table, mle_evaluate
from .pedersen import PedersenGens, pedersen_commit
from .transcript import Transcript

# columns target 2^11; polynomials smaller than that become a single row
COL_VARS_TARGET = 11


def split_vars(num_vars: int, col_vars_max: int = COL_VARS_TARGET) -> tuple:
    row_vars = max(0, num_vars - col_vars_max)
    return row_vars, num_vars - row_vars


class PcsGens:
    """Column basis + value base pair (G, H) shared by all commitments."""

    def __init__(self, max_col_vars: int = COL_VARS_TARGET):
        self.col_vars = max_col_vars
        self.gens = PedersenGens(1 << max_col_vars, label=b"pcs")
        self.value_g = GENERATOR
        self.h = self.gens.h

    def basis(self, n_cols: int):
        return self.gens.bases[:n_cols]

    def split(self, num_vars: int) -> tuple:
        return split_vars(num_vars, self.col_vars)


class PcsCommitment:
    __slots__ = ("num_vars", "row_commitments")

    def __init__(self, num_vars: int, row_commitments: list):
        self.num_vars = num_vars
        self.row_commitments = row_commitments

    def rlc(self, others: list, weights: list) -> "PcsCommitment":
        """Row-wise random linear combination (Pedersen homomorphism)."""
        rows = len(self.row_commitments)
        combined = []
        for r in range(rows):
            pts = [self.row_commitments[r]] + [o.row_commitments[r] for o in others]
            combined.append(msm(pts, weights))
        return PcsCommitment(self.num_vars, combined)


class PcsBlinds:
    __slots__ = ("row_blinds",)

    def __init__(self, row_blinds: list):
        self.row_blinds = row_blinds


def pcs_commit(poly, gens: PcsGens, blinds: PcsBlinds | None = None):
    """Commit to a dense multilinear polynomial; returns (commitment, blinds).

    Pass explicit blinds to recommit deterministically.
    """
    n = poly.num_vars
    row_vars, col_vars = gens.split(n)
    rows, cols = 1 << row_vars, 1 << col_vars
    if blinds is None:
        blinds = PcsBlinds([0] * rows)
    basis = gens.basis(cols)
    comms = []
    evals = poly.evals
    for r in range(rows):
        row = evals[r * cols : (r + 1) * cols]
        comms.append(pedersen_commit(row, blinds.row_blinds[r], gens.gens))
    return PcsCommitment(n, comms), blinds


class EvalProof:
    """Transparent opening: revealed combined row + blind + evaluation pair."""

    __slots__ = ("combined_row", "row_blind", "value", "value_commitment", "value_blind")

    def __init__(self, combined_row, row_blind, value, value_commitment, value_blind):
        self.combined_row = combined_row
        self.row_blind = row_blind
        self.value = value
        self.value_commitment = value_commitment
        self.value_blind = value_blind


def _combine_rows(poly, blinds, point_row):
    row_vars = len(point_row)
    cols = 1 << (poly.num_vars - row_vars)
    weights = eq_table(point_row)
    combined = [0] * cols
    for r, w in enumerate(weights):
        if w == 0:
            continue
        base = r * cols
        row = poly.evals
        for c in range(cols):
            combined[c] = (combined[c] + w * row[base + c]) % P
    blind = 0
    for r, w in enumerate(weights):
        blind = (blind + w * blinds.row_blinds[r]) % P
    return combined, blind, weights


def pcs_open(poly, point, blinds: PcsBlinds, gens: PcsGens, value_blind=0):
    """Transparent opening at `point`; returns (value, EvalProof)."""
    n = poly.num_vars
    if len(point) != n:
        raise ValueError("point length mismatch")
    row_vars, col_vars = gens.split(n)
    combined, row_blind, _ = _combine_rows(poly, blinds, point[:row_vars])
    y = mle_evaluate(poly, point)
    vcomm = msm([gens.value_g, gens.h], [y, value_blind])
    return y, EvalProof(combined, row_blind, y, vcomm, value_blind)


def pcs_verify(comm: PcsCommitment, point, proof: EvalProof, gens: PcsGens) -> None:
    """Transparent verification; raises ValueError naming the failed check."""
    row_vars, col_vars = gens.split(comm.num_vars)
    point_row, point_col = point[:row_vars], point[row_vars:]
    weights = eq_table(point_row)
    expected = msm(comm.row_commitments, weights)
    actual = pedersen_commit(proof.combined_row, proof.row_blind, gens.gens)
    if expected != actual:
        raise ValueError("pcs: combined-row commitment check failed")
    col_weights = eq_table(point_col)
    y = 0
    for v, w in zip(proof.combined_row, col_weights):
        y = (y + v * w) % P
    if y != proof.value % P:
        raise ValueError("pcs: inner-product check failed")
    expect_v = msm([gens.value_g, gens.h], [proof.value, proof.value_blind])
    if expect_v != proof.value_commitment:
        raise ValueError("pcs: evaluation commitment check failed")


class HidingOpening:
    """Committed-value opening: sigma protocol over the combined row.

    Reveals u = m + c*row (masked), never the row or the value; the value
    is bound inside value_commitment V = y*G + b*H.
    """

    __slots__ = ("mask_commitment", "mask_value_commitment", "value_commitment",
                 "masked_row", "masked_row_blind", "blind_response")

    def __init__(self, mask_commitment, mask_value_commitment, value_commitment,
                 masked_row, masked_row_blind, blind_response):
        self.mask_commitment = mask_commitment
        self.mask_value_commitment = mask_value_commitment
        self.value_commitment = value_commitment
        self.masked_row = masked_row
        self.masked_row_blind = masked_row_blind
        self.blind_response = blind_response


def pcs_open_hiding(poly, point, blinds: PcsBlinds, gens: PcsGens,
                    transcript: Transcript, rng) -> tuple:
    """Open with the value kept committed; returns (y, b, HidingOpening)."""
    n = poly.num_vars
    row_vars, col_vars = gens.split(n)
    cols = 1 << col_vars
    combined, row_blind, _ = _combine_rows(poly, blinds, point[:row_vars])
    y = mle_evaluate(poly, point)
    b = rng.randrange(P)
    vcomm = msm([gens.value_g, gens.h], [y, b])

    mask = [rng.randrange(P) for _ in range(cols)]
    r_m = rng.randrange(P)
    mask_comm = pedersen_commit(mask, r_m, gens.gens)
    col_weights = eq_table(point[row_vars:])
    mask_value = 0
    for v, w in zip(mask, col_weights):
        mask_value = (mask_value + v * w) % P
    b_m = rng.randrange(P)
    mask_vcomm = msm([gens.value_g, gens.h], [mask_value, b_m])

    transcript.absorb_point(b"pcs/mask", mask_comm)
    transcript.absorb_point(b"pcs/mask-value", mask_vcomm)
    transcript.absorb_point(b"pcs/value", vcomm)
    c = transcript.challenge(b"pcs/sigma")

    masked_row = [(m + c * v) % P for m, v in zip(mask, combined)]
    masked_blind = (r_m + c * row_blind) % P
    blind_resp = (b_m + c * b) % P
    proof = HidingOpening(mask_comm, mask_vcomm, vcomm, masked_row,
                          masked_blind, blind_resp)
    return y, b, proof


def pcs_verify_hiding(comm: PcsCommitment, point, proof: HidingOpening,
                      gens: PcsGens, transcript: Transcript,
                      multi: tuple | None = None) -> None:
    """Check the sigma relations; the value itself stays hidden in V.

    `multi` = (commitment list, rlc weights) verifies an opening of the
    weighted combination without materializing its row commitments: the
    row-eq weighting and the combination weights fuse into one large MSM.
    """
    row_vars, col_vars = gens.split(comm.num_vars)
    transcript.absorb_point(b"pcs/mask", proof.mask_commitment)
    transcript.absorb_point(b"pcs/mask-value", proof.mask_value_commitment)
    transcript.absorb_point(b"pcs/value", proof.value_commitment)
    c = transcript.challenge(b"pcs/sigma")

    weights = eq_table(point[:row_vars])
    if multi is None:
        row_combo = msm(comm.row_commitments, weights)
    else:
        comms, rlc_weights = multi
        pts, scs = [], []
        for cm, wp in zip(comms, rlc_weights):
            for rw, pt in zip(weights, cm.row_commitments):
                pts.append(pt)
                scs.append(wp * rw % P)
        row_combo = msm(pts, scs)
    lhs = pedersen_commit(proof.masked_row, proof.masked_row_blind, gens.gens)
    rhs = proof.mask_commitment + c * row_combo
    if lhs != rhs:
        raise ValueError("pcs: masked-row commitment check failed")

    col_weights = eq_table(point[row_vars:])
    ip = 0
    for v, w in zip(proof.masked_row, col_weights):
        ip = (ip + v * w) % P
    lhs_v = msm([gens.value_g, gens.h], [ip, proof.blind_response])
    rhs_v = proof.mask_value_commitment + c * proof.value_commitment
    if lhs_v != rhs_v:
        raise ValueError("pcs: masked evaluation check failed")


def joint_open_values(claims: list, betas: list) -> int:
    """y_joint = sum_i beta_i * y_i (plaintext side of the joint claim)."""
    total = 0
    for claim, beta in zip(claims, betas):
        total = (total + beta * claim) % P
    return int(total)
