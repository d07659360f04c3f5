"""secp256k1 group arithmetic and multi-scalar multiplication.

One widely deployed 128-bit-security prime-order curve, fixed as a build
constant; its scalar field (field.P) is the proof field.  Points are held
in Jacobian coordinates internally (gmpy2 mpz coordinates) and normalized
lazily.  The MSM paths matter: Pippenger for long products, subset sums
for 0/1 scalars, and signed-digit recoding so small *negative* residues
(p - small) stay cheap.
"""

from __future__ import annotations

import hashlib

from gmpy2 import mpz

from .field import P

# Base-field modulus and standard generator of secp256k1.
Q = mpz(0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F)
_GX = mpz(0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798)
_GY = mpz(0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)

_ZERO = mpz(0)
_ONE = mpz(1)


class GroupElement:
    """Point on secp256k1 (Jacobian coordinates; Z == 0 is the identity O)."""

    __slots__ = ("x", "y", "z")

    def __init__(self, x, y, z=_ONE):
        self.x = x
        self.y = y
        self.z = z

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(_ONE, _ONE, _ZERO)

    def is_identity(self) -> bool:
        return self.z == 0

    def __add__(self, other: "GroupElement") -> "GroupElement":
        if self.z == 0:
            return other
        if other.z == 0:
            return self
        return _jac_add(self, other)

    def __neg__(self) -> "GroupElement":
        if self.z == 0:
            return self
        return GroupElement(self.x, -self.y % Q, self.z)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def double(self) -> "GroupElement":
        if self.z == 0:
            return self
        return _jac_dbl(self)

    def __mul__(self, k) -> "GroupElement":
        return scalar_mul(self, int(k) % P)

    __rmul__ = __mul__

    def affine(self):
        """(x, y) affine coordinates, or None for the identity."""
        if self.z == 0:
            return None
        zinv = _minv(self.z)
        z2 = zinv * zinv % Q
        return (self.x * z2 % Q, self.y * z2 * zinv % Q)

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if self.z == 0 or other.z == 0:
            return self.z == other.z
        # X1 Z2^2 == X2 Z1^2 and Y1 Z2^3 == Y2 Z1^3
        z1s = self.z * self.z % Q
        z2s = other.z * other.z % Q
        if (self.x * z2s - other.x * z1s) % Q != 0:
            return False
        return (self.y * z2s * other.z - other.y * z1s * self.z) % Q == 0

    def __hash__(self):
        return hash(self.to_bytes())

    def to_bytes(self) -> bytes:
        """33-byte compressed encoding; identity is 33 zero bytes."""
        aff = self.affine()
        if aff is None:
            return bytes(33)
        x, y = aff
        return bytes([2 + int(y & 1)]) + int(x).to_bytes(32, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupElement":
        if len(data) != 33:
            raise ValueError("group element encoding must be 33 bytes")
        if data == bytes(33):
            return cls.identity()
        tag = data[0]
        if tag not in (2, 3):
            raise ValueError("bad point compression tag")
        x = mpz(int.from_bytes(data[1:], "big"))
        if x >= Q:
            raise ValueError("point x out of range")
        y2 = (x * x * x + 7) % Q
        y = _sqrt_q(y2)
        if y is None:
            raise ValueError("point not on curve")
        if int(y & 1) != tag - 2:
            y = -y % Q
        return cls(x, y)

    def __repr__(self):
        if self.z == 0:
            return "GroupElement(O)"
        x, y = self.affine()
        return f"GroupElement({int(x):#x}, {int(y):#x})"


GENERATOR = GroupElement(_GX, _GY)
IDENTITY = GroupElement.identity()


def _minv(a):
    return pow(a, Q - 2, Q)


def _sqrt_q(a):
    # Q % 4 == 3, so a^((Q+1)/4) is a root when one exists.
    r = pow(a, (Q + 1) // 4, Q)
    if r * r % Q != a % Q:
        return None
    return r


def _jac_dbl(p: GroupElement) -> GroupElement:
    X1, Y1, Z1 = p.x, p.y, p.z
    A = X1 * X1 % Q
    B = Y1 * Y1 % Q
    C = B * B % Q
    t = X1 + B
    D = 2 * (t * t - A - C) % Q
    E = 3 * A % Q
    F = E * E % Q
    X3 = (F - 2 * D) % Q
    Y3 = (E * (D - X3) - 8 * C) % Q
    Z3 = 2 * Y1 * Z1 % Q
    return GroupElement(X3, Y3, Z3)


def _jac_add(p: GroupElement, q: GroupElement) -> GroupElement:
    X1, Y1, Z1 = p.x, p.y, p.z
    X2, Y2, Z2 = q.x, q.y, q.z
    Z1Z1 = Z1 * Z1 % Q
    Z2Z2 = Z2 * Z2 % Q
    U1 = X1 * Z2Z2 % Q
    U2 = X2 * Z1Z1 % Q
    S1 = Y1 * Z2 * Z2Z2 % Q
    S2 = Y2 * Z1 * Z1Z1 % Q
    H = (U2 - U1) % Q
    if H == 0:
        if (S2 - S1) % Q == 0:
            return _jac_dbl(p)
        return GroupElement.identity()
    I = 4 * H * H % Q
    J = H * I % Q
    r = 2 * (S2 - S1) % Q
    V = U1 * I % Q
    X3 = (r * r - J - 2 * V) % Q
    Y3 = (r * (V - X3) - 2 * S1 * J) % Q
    Z3 = ((Z1 + Z2) * (Z1 + Z2) - Z1Z1 - Z2Z2) * H % Q
    return GroupElement(X3, Y3, Z3)


def scalar_mul(p: GroupElement, k: int) -> GroupElement:
    """Double-and-add with a 4-bit window; k is reduced mod P."""
    k = int(k) % P
    if k == 0 or p.z == 0:
        return GroupElement.identity()
    if k > P - k:  # negative residues are cheaper negated
        return -scalar_mul(p, P - k)
    table = [p]
    for _ in range(14):
        table.append(table[-1] + p)
    acc = GroupElement.identity()
    started = False
    for shift in range((k.bit_length() + 3) // 4 * 4 - 4, -1, -4):
        if started:
            acc = acc.double().double().double().double()
        d = (k >> shift) & 0xF
        if d:
            acc = acc + table[d - 1]
            started = True
    return acc


def msm(points: list, scalars: list) -> GroupElement:
    """Multi-scalar multiplication Σ scalars_i · points_i.

    Dispatches per scalar magnitude: 0/1 subset sum, Pippenger buckets for
    the rest.  Scalars that are small when negated (p - s small) are folded
    in as negated points, keeping fixed-point trace columns cheap.
    """
    n = len(scalars)
    if n != len(points):
        raise ValueError("msm length mismatch")
    acc = GroupElement.identity()
    pts = []
    ks = []
    for pt, s in zip(points, scalars):
        s = int(s) % P
        if s == 0:
            continue
        if s == 1:
            acc = acc + pt
            continue
        if s > P - s:
            s = P - s
            pt = -pt
        pts.append(pt)
        ks.append(s)
    if not ks:
        return acc
    return acc + _pippenger(pts, ks)


def _pippenger(points: list, scalars: list) -> GroupElement:
    maxbits = max(k.bit_length() for k in scalars)
    n = len(points)
    # window size tuned for n; 256-bit worst case
    if n < 8:
        out = GroupElement.identity()
        for pt, k in zip(points, scalars):
            out = out + scalar_mul(pt, k)
        return out
    c = 4
    while (1 << c) < n and c < 16:
        c += 1
    c = min(c, 12)
    nwin = (maxbits + c - 1) // c
    mask = (1 << c) - 1
    result = GroupElement.identity()
    for w in range(nwin - 1, -1, -1):
        if not result.is_identity():
            for _ in range(c):
                result = result.double()
        buckets = [None] * (1 << c)
        shift = w * c
        for pt, k in zip(points, scalars):
            d = (k >> shift) & mask
            if d:
                b = buckets[d]
                buckets[d] = pt if b is None else b + pt
        running = GroupElement.identity()
        windowsum = GroupElement.identity()
        for d in range(mask, 0, -1):
            b = buckets[d]
            if b is not None:
                running = running + b
            windowsum = windowsum + running
        result = result + windowsum
    return result


def hash_to_curve(label: bytes) -> GroupElement:
    """Deterministic point with unknown discrete log (try-and-increment)."""
    ctr = 0
    while True:
        h = hashlib.sha256(b"atlas/htc/" + label + b"/" + ctr.to_bytes(4, "big")).digest()
        x = mpz(int.from_bytes(h, "big") % Q)
        y2 = (x * x * x + 7) % Q
        y = _sqrt_q(y2)
        if y is not None:
            # pick the even-y representative for determinism
            if int(y & 1):
                y = -y % Q
            return GroupElement(x, y)
        ctr += 1


class FixedBase:
    """Window tables for repeated scalar multiplication on one base."""

    __slots__ = ("tables", "c")

    def __init__(self, base: GroupElement, bits: int = 256, c: int = 8):
        self.c = c
        nwin = (bits + c - 1) // c
        tables = []
        step = base
        for _ in range(nwin):
            row = [None] * ((1 << c) - 1)
            acc = step
            for d in range((1 << c) - 1):
                row[d] = acc
                acc = acc + step
            tables.append(row)
            step = acc  # step * 2^c
        self.tables = tables

    def mul(self, k: int) -> GroupElement:
        k = int(k) % P
        acc = GroupElement.identity()
        w = 0
        mask = (1 << self.c) - 1
        while k:
            d = k & mask
            if d:
                acc = acc + self.tables[w][d - 1]
            k >>= self.c
            w += 1
        return acc
