"""Scalar-field arithmetic for the proving pipeline.

The proof field is the scalar field of secp256k1 (a prime of ~2^256,
comfortably above the 2^250 floor the commitment layer needs).  Hot paths
throughout the package work on plain canonical integers in [0, P) — the
``FieldElement`` wrapper exists for API-level code and tests, and is
interchangeable with raw residues via ``int()`` / ``fe()``.

gmpy2's mpz is used where it pays (transcript challenges seed most hot
arrays, so products inherit mpz arithmetic automatically).
"""

from __future__ import annotations

from gmpy2 import mpz

# Order of the secp256k1 group; the proof field F_P.
P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
P_MPZ = mpz(P)

P_BYTES = 32


def fe(x) -> int:
    """Canonical residue of x in [0, P)."""
    return int(x) % P


def finv(x) -> int:
    if x % P == 0:
        raise ZeroDivisionError("cannot invert 0 in field")
    return pow(int(x), P - 2, P)


def fneg(x) -> int:
    return -int(x) % P


def to_signed(x) -> int:
    """Map a residue back to the centered integer it encodes (|v| < P/2)."""
    x = int(x) % P
    return x - P if x > P // 2 else x


def batch_inverse(xs: list) -> list:
    """Montgomery batch inversion; all inputs must be nonzero."""
    n = len(xs)
    if n == 0:
        return []
    prefix = [0] * n
    acc = 1
    for i, x in enumerate(xs):
        prefix[i] = acc
        acc = acc * x % P
    inv = finv(acc)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = prefix[i] * inv % P
        inv = inv * xs[i] % P
    return out


class FieldElement:
    """Element of F_P with canonical representation in [0, P)."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = int(value) % P

    def __add__(self, other):
        return FieldElement(self.value + _val(other))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - _val(other))

    def __rsub__(self, other):
        return FieldElement(_val(other) - self.value)

    def __mul__(self, other):
        return FieldElement(self.value * _val(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * FieldElement(_val(other)).inverse()

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, P))

    def __neg__(self):
        return FieldElement(-self.value)

    def __eq__(self, other):
        if isinstance(other, (FieldElement, int, type(P_MPZ))):
            return self.value == _val(other) % P
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value:#x})"

    def inverse(self) -> "FieldElement":
        return FieldElement(finv(self.value))

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(P_BYTES, "big")

    @classmethod
    def from_bytes(cls, b: bytes) -> "FieldElement":
        return cls(int.from_bytes(b, "big"))


def _val(x) -> int:
    return x.value if isinstance(x, FieldElement) else int(x)
