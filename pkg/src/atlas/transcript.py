"""Fiat-Shamir transcript with label domain separation.

SHA-256 chained state.  Every absorption is framed as
(len(label) || label || len(data) || data), so distinct absorption
sequences can never collide by concatenation, and challenges are pure
functions of the absorption history.
"""

from __future__ import annotations

import hashlib

from gmpy2 import mpz

from .field import P

_PROTOCOL_TAG = b"atlas/fs/v1"


class Transcript:
    __slots__ = ("state", "counter")

    def __init__(self, domain: bytes = b"atlas"):
        self.state = hashlib.sha256(_PROTOCOL_TAG + domain).digest()
        self.counter = 0

    def absorb(self, label: bytes, data: bytes) -> None:
        h = hashlib.sha256()
        h.update(self.state)
        h.update(len(label).to_bytes(4, "big"))
        h.update(label)
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
        self.state = h.digest()

    def absorb_field(self, label: bytes, x) -> None:
        self.absorb(label, (int(x) % P).to_bytes(32, "big"))

    def absorb_fields(self, label: bytes, xs) -> None:
        self.absorb(label, b"".join((int(x) % P).to_bytes(32, "big") for x in xs))

    def absorb_point(self, label: bytes, pt) -> None:
        self.absorb(label, pt.to_bytes())

    def absorb_points(self, label: bytes, pts) -> None:
        self.absorb(label, b"".join(pt.to_bytes() for pt in pts))

    def challenge(self, label: bytes):
        """Draw one field element; mutates state so successive calls differ."""
        h = hashlib.sha256()
        h.update(self.state)
        h.update(b"challenge")
        h.update(len(label).to_bytes(4, "big"))
        h.update(label)
        h.update(self.counter.to_bytes(8, "big"))
        wide = h.digest() + hashlib.sha256(h.digest() + b"x").digest()
        self.counter += 1
        self.state = hashlib.sha256(self.state + h.digest()).digest()
        # 512-bit reduction keeps the modular bias below 2^-250
        return mpz(int.from_bytes(wide, "big") % P)

    def challenges(self, label: bytes, n: int) -> list:
        return [self.challenge(label + b"/%d" % i) for i in range(n)]
