"""Opening accumulator: the running collection of proof artifacts.

Every sumcheck stage deposits its round coefficients, blinds, commitments,
challenges, and claims here; every evaluation claim gets a stable opening
id.  The folding layer consumes the whole record: binding expressions
(constant + linear + quadratic forms over opening ids, with public
coefficients) say how each stage's input and output claims relate to
openings, and the joint PCS opening binds the committed-polynomial subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .field import P


@dataclass
class OpeningClaim:
    omega: int
    poly: str          # polynomial name ("col/inc", "static/f_add", "virt/...")
    point: tuple
    kind: str          # "pcs" (committed, joint-opened) or "virtual"
    value: int | None  # prover-side only; None on the verifier path


class Expr:
    """constant + sum coef*slot + sum coef*slotA*slotB over opening ids.

    Coefficients are public (transcript- or key-derived); slots are opening
    ids resolved to witness positions when the circuit is assembled.
    """

    __slots__ = ("const", "linear", "quad")

    def __init__(self, const=0, linear=None, quad=None):
        self.const = int(const) % P
        self.linear = list(linear or [])   # (coef, omega)
        self.quad = list(quad or [])       # (coef, omega_a, omega_b)

    def add_linear(self, coef, omega):
        self.linear.append((int(coef) % P, omega))
        return self

    def add_quad(self, coef, omega_a, omega_b):
        self.quad.append((int(coef) % P, omega_a, omega_b))
        return self

    def scaled(self, c) -> "Expr":
        c = int(c) % P
        return Expr(
            self.const * c,
            [(w * c % P, o) for w, o in self.linear],
            [(w * c % P, a, b) for w, a, b in self.quad],
        )

    def plus(self, other: "Expr") -> "Expr":
        return Expr(
            (self.const + other.const) % P,
            self.linear + other.linear,
            self.quad + other.quad,
        )

    def evaluate(self, values: dict) -> int:
        """Plaintext evaluation (prover-side checks and transparent tests)."""
        total = self.const
        for c, o in self.linear:
            total = (total + c * values[o]) % P
        for c, a, b in self.quad:
            total = (total + c * values[a] % P * values[b]) % P
        return int(total)

    @staticmethod
    def public(value) -> "Expr":
        return Expr(const=value)


@dataclass
class StageRecord:
    """One batched sumcheck level of the proof DAG."""

    label: bytes
    n_rounds: int
    degree: int
    pad_bits: list
    alpha: int
    input_exprs: list          # Expr per instance (unscaled claims)
    output_exprs: list         # Expr per instance (final-value relations)
    messages: list = field(default_factory=list)   # RoundMessage (prover/proof)
    challenges: list = field(default_factory=list)

    def combined_input_expr(self) -> Expr:
        out = Expr()
        for i, (e, pad) in enumerate(zip(self.input_exprs, self.pad_bits)):
            out = out.plus(e.scaled(pow(self.alpha, i, P) * (1 << pad)))
        return out

    def combined_output_expr(self) -> Expr:
        out = Expr()
        for i, e in enumerate(self.output_exprs):
            out = out.plus(e.scaled(pow(self.alpha, i, P)))
        return out


class OpeningAccumulator:
    def __init__(self):
        self.claims: list[OpeningClaim] = []
        self.stages: list[StageRecord] = []
        self._next = 0
        self.values: dict[int, int] = {}   # omega -> plaintext value (prover)
        self._index: dict[tuple, int] = {}

    def add_claim(self, poly: str, point, value, kind: str = "pcs") -> int:
        """Record an evaluation claim; returns its opening id.

        Claims on the same (poly, point) pair collapse to one id (the
        opening map is a function).
        """
        key = (poly, tuple(int(x) % P for x in point))
        if key in self._index:
            omega = self._index[key]
            if value is not None:
                existing = self.values.get(omega)
                if existing is not None and existing != int(value) % P:
                    raise ValueError(f"conflicting values for claim {poly}")
                self.values[omega] = int(value) % P
            return omega
        omega = self._next
        self._next += 1
        claim = OpeningClaim(omega, poly, key[1], kind, None)
        self.claims.append(claim)
        self._index[key] = omega
        if value is not None:
            claim.value = int(value) % P
            self.values[omega] = claim.value
        return omega

    def add_stage(self, record: StageRecord) -> None:
        self.stages.append(record)

    def pcs_claims(self) -> list:
        return [c for c in self.claims if c.kind == "pcs"]

    def claim_by_id(self, omega: int) -> OpeningClaim:
        return self.claims[omega]
