"""Pedersen vector commitments over secp256k1.

Generators are derived deterministically from the public seed
"atlas/pedersen/v1" (hash-to-curve with a counter), so prover and verifier
always agree on the basis.  Distinct derivation labels keep the folding
layer's witness basis free of relations with the PCS basis.
"""

from __future__ import annotations

from .curve import FixedBase, GroupElement, hash_to_curve, msm

PEDERSEN_SEED = b"atlas/pedersen/v1"


class PedersenGens:
    """A vector basis G_0..G_{n-1} plus the blinding base H."""

    __slots__ = ("bases", "h", "label", "_h_table")

    def __init__(self, n: int, label: bytes = b"pcs"):
        seed = PEDERSEN_SEED + b"/" + label
        self.label = label
        self.bases = [hash_to_curve(seed + b"/g/%d" % i) for i in range(n)]
        self.h = hash_to_curve(seed + b"/h")
        self._h_table = FixedBase(self.h)

    def __len__(self) -> int:
        return len(self.bases)

    def blind_mul(self, r) -> GroupElement:
        return self._h_table.mul(int(r))


def pedersen_commit(values, blind, gens: PedersenGens) -> GroupElement:
    """Com(v, r) = Σ v_i·G_i + r·H.  Empty vector with zero blind is O."""
    if len(values) > len(gens.bases):
        raise ValueError(
            f"vector of length {len(values)} exceeds basis size {len(gens.bases)}"
        )
    acc = msm(gens.bases[: len(values)], [int(v) for v in values])
    r = int(blind)
    if r:
        acc = acc + gens.blind_mul(r)
    return acc
