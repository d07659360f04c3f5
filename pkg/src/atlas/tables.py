"""Lookup tables for non-linear operators.

All tables live on a 16-bit index domain (two's-complement encoding of
signed fixed-point values).  Two classes:

* decomposable tables (relu, the range checks, the sign step) factor as a
  short sum of products of per-chunk subtables (prefix-suffix form, C=2
  chunks of b=8 bits), so the prover never materializes more than C*2^b
  entries for them;
* dense tables (sigmoid, tanh, erf, exp, rsqrt) are materialized in full,
  with neural teleportation shrinking the effective input range so one
  16-bit table suffices: the stored value is round(f(x/(S*tau))*S).

Saturating activations are exact under teleportation wherever both the
scaled and unscaled inputs sit in a saturation region; the error lives in
the narrow transition band and stays small at S=128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import P
from .mle import eq_evaluate

WIDTH = 16
HALF = WIDTH // 2
SIGN_BIT = 1 << (WIDTH - 1)
MASK = (1 << WIDTH) - 1

# ra chunking for the lookup-address one-hots: D chunks of CHUNK_BITS bits
D_CHUNKS = 8
CHUNK_BITS = 2

# stable table ordering; flag columns and registry digests follow it
TABLE_ORDER = [
    "relu", "range_s", "range16", "rangeu8", "gtez",
    "sigmoid", "tanh", "erf", "exp", "rsqrt",
]


def to_unsigned(x: int) -> int:
    return x & MASK


def to_signed16(k: int) -> int:
    k &= MASK
    return k - (1 << WIDTH) if k & SIGN_BIT else k


def round_half_away(v: float) -> int:
    return int(math.floor(abs(v) + 0.5)) * (1 if v >= 0 else -1)


@dataclass
class TeleportConfig:
    """Global one-sided input scaling y' = f(x / tau)."""

    tau: int = 4
    scale: int = 128

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("teleport divisor tau must be >= 1")


class SubtableCounter:
    """Tracks materialized subtable entries; the streaming bound assertion
    reads the per-op peak."""

    def __init__(self):
        self.per_op = {}

    def add(self, op: str, entries: int):
        self.per_op[op] = self.per_op.get(op, 0) + entries

    def materialized(self, op: str) -> int:
        return self.per_op.get(op, 0)


COUNTER = SubtableCounter()


class Factor:
    """One per-chunk factor of a prefix-suffix term.

    kind 'table': materialized 2^b entries (counted); kind 'one': constant;
    kind 'notmsb': 1 - (top bit of the chunk), evaluated in closed form.
    """

    __slots__ = ("kind", "table")

    def __init__(self, kind: str, table=None):
        self.kind = kind
        self.table = table

    def at_boolean(self, chunk_value: int) -> int:
        if self.kind == "table":
            return self.table[chunk_value]
        if self.kind == "one":
            return 1
        if self.kind == "notmsb":
            return 1 - (chunk_value >> (HALF - 1))
        raise ValueError(self.kind)

    def at_point(self, point: list) -> int:
        """MLE of the factor at a field point over the chunk's b variables."""
        if self.kind == "one":
            return 1
        if self.kind == "notmsb":
            return (1 - point[0]) % P
        acc = list(self.table)
        for r in point:
            half = len(acc) >> 1
            acc = [(acc[i] + r * (acc[half + i] - acc[i])) % P for i in range(half)]
        return int(acc[0] % P)


class PrefixSuffixDecomposition:
    """T(x) = sum_i prod_j s_{i,j}(x^{(j)}) over C chunks of b bits each."""

    def __init__(self, op: str, width: int, chunks: int, terms: list):
        if width % chunks:
            raise ValueError("chunk count must divide the width")
        self.op = op
        self.width = width
        self.chunks = chunks
        self.bits = width // chunks
        self.terms = terms  # list of [Factor per chunk]
        for term in terms:
            for f in term:
                if f.kind == "table":
                    COUNTER.add(op, len(f.table))

    @property
    def storage_entries(self) -> int:
        return sum(
            len(f.table) for term in self.terms for f in term if f.kind == "table"
        )

    def value_at(self, index: int) -> int:
        total = 0
        for term in self.terms:
            prod = 1
            for j, f in enumerate(term):
                shift = self.width - (j + 1) * self.bits
                prod = prod * f.at_boolean((index >> shift) & ((1 << self.bits) - 1)) % P
            total = (total + prod) % P
        return int(total)

    def evaluate(self, point: list) -> int:
        """prefix_suffix_evaluate: never touches a 2^w table."""
        if len(point) != self.width:
            raise ValueError("point length must equal table width")
        total = 0
        for term in self.terms:
            prod = 1
            for j, f in enumerate(term):
                chunk_pt = point[j * self.bits : (j + 1) * self.bits]
                prod = prod * f.at_point(chunk_pt) % P
            total = (total + prod) % P
        return int(total)


class LookupTable:
    """Unary 16-bit table; either dense entries or a decomposition."""

    def __init__(self, op: str, decomposition=None, dense=None, chunking=None, np_fast=None):
        self.id = op
        self.width = WIDTH
        self.np_fast = np_fast  # vectorized twin of the decomposition, if any
        self.decomposition = decomposition
        if decomposition is not None:
            self.chunking = (decomposition.chunks, decomposition.bits)
        else:
            self.chunking = chunking or (1, WIDTH)
        C, b = self.chunking
        if C * b != WIDTH:
            raise ValueError("chunking must satisfy C*b = w")
        if dense is not None and len(dense) > (1 << WIDTH):
            raise ValueError("table width overflow")
        self._dense_signed = dense  # np.int64 array of signed values, or None
        self._dense_field = None

    @property
    def entry_count(self) -> int:
        return 1 << WIDTH

    def is_decomposable(self) -> bool:
        return self.decomposition is not None

    def lookup(self, index: int) -> int:
        """Field value at an unsigned 16-bit index."""
        if self.decomposition is not None:
            return self.decomposition.value_at(index)
        return int(self._dense_signed[index]) % P

    def lookup_signed(self, x: int) -> int:
        """Signed output for a signed input (execution semantics)."""
        idx = to_unsigned(int(x))
        if self.decomposition is not None:
            v = self.decomposition.value_at(idx)
            return v - P if v > P // 2 else v
        return int(self._dense_signed[idx])

    def apply_np(self, arr: np.ndarray) -> np.ndarray:
        """Vectorized signed lookup over an int64 array."""
        idx = (arr & MASK).astype(np.int64)
        if self._dense_signed is not None:
            return self._dense_signed[idx]
        if self.np_fast is not None:
            return self.np_fast(np.asarray(arr, dtype=np.int64))
        flat = np.array(
            [self.lookup_signed(int(v)) for v in arr.reshape(-1)], dtype=np.int64
        )
        return flat.reshape(arr.shape)

    def field_column(self) -> list:
        """Dense field-residue table (verifier-side MLE evaluation only)."""
        if self._dense_field is None:
            if self._dense_signed is not None:
                self._dense_field = [int(v) % P for v in self._dense_signed]
            else:
                self._dense_field = [
                    self.decomposition.value_at(i) for i in range(1 << WIDTH)
                ]
        return self._dense_field

    def mle_eval(self, point: list) -> int:
        """Table MLE at a 16-variable field point."""
        if self.decomposition is not None:
            return self.decomposition.evaluate(point)
        acc = self.field_column()
        for r in point:
            half = len(acc) >> 1
            acc = [(acc[i] + r * (acc[half + i] - acc[i])) % P for i in range(half)]
        return int(acc[0] % P)


def signed_value_mle(point: list) -> int:
    """MLE of k -> signed16(k): linear, verifier-computable in O(w)."""
    total = (-(1 << (WIDTH - 1))) * point[0] % P
    for i in range(1, WIDTH):
        total = (total + (1 << (WIDTH - 1 - i)) * point[i]) % P
    return int(total)


def _val_table(width: int, scale: int = 1, offset: int = 0, predicate=None) -> list:
    out = []
    for k in range(1 << width):
        v = (k + offset) * scale if predicate is None or predicate(k) else 0
        out.append(v % P)
    return out


def decompose_relu(width: int = WIDTH) -> PrefixSuffixDecomposition:
    """relu(x) = p_Relu(hi) * 1(lo) + (1 - msb)(hi) * val(lo).

    Exactly two terms; the high half contributes (1-b0)*val(hi)*2^(w/2) and
    negative inputs kill both terms through the sign bit.
    """
    if width % 2:
        raise ValueError("width must be even")
    b = width // 2
    p_relu = [((1 - (k >> (b - 1))) * k << b) % P for k in range(1 << b)]
    s_relu = [k % P for k in range(1 << b)]
    return PrefixSuffixDecomposition(
        "relu", width, 2,
        [
            [Factor("table", p_relu), Factor("one")],
            [Factor("notmsb"), Factor("table", s_relu)],
        ],
    )


def decompose_gtez() -> PrefixSuffixDecomposition:
    """step(x) = [x >= 0] = 1 - sign bit; no materialized storage at all."""
    return PrefixSuffixDecomposition(
        "gtez", WIDTH, 2, [[Factor("notmsb"), Factor("one")]]
    )


def decompose_range_s(bound: int) -> PrefixSuffixDecomposition:
    """Identity on signed values with |v| < bound, 0 outside.

    Used to range-check division advice: the prover can only match advice
    values the table actually outputs.
    """
    lo_pos = [(k if k < bound else 0) % P for k in range(1 << HALF)]
    lo_neg = [((k - (1 << HALF)) if (1 << HALF) - k < bound else 0) % P
              for k in range(1 << HALF)]
    ind_zero = [1 if k == 0 else 0 for k in range(1 << HALF)]
    ind_ones = [1 if k == (1 << HALF) - 1 else 0 for k in range(1 << HALF)]
    return PrefixSuffixDecomposition(
        "range_s", WIDTH, 2,
        [
            [Factor("table", ind_zero), Factor("table", lo_pos)],
            [Factor("table", ind_ones), Factor("table", lo_neg)],
        ],
    )


def decompose_range16() -> PrefixSuffixDecomposition:
    """Identity on all signed 16-bit values: val_signed(hi)*2^8 + val(lo)."""
    hi_val = [
        (((k - (1 << HALF)) if k >> (HALF - 1) else k) << HALF) % P
        for k in range(1 << HALF)
    ]
    lo_val = [k % P for k in range(1 << HALF)]
    return PrefixSuffixDecomposition(
        "range16", WIDTH, 2,
        [
            [Factor("table", hi_val), Factor("one")],
            [Factor("one"), Factor("table", lo_val)],
        ],
    )


def decompose_rangeu8() -> PrefixSuffixDecomposition:
    """Identity on [0, 256), 0 elsewhere (remainders of the div-by-256 step)."""
    ind_zero = [1 if k == 0 else 0 for k in range(1 << HALF)]
    lo_val = [k % P for k in range(1 << HALF)]
    return PrefixSuffixDecomposition(
        "rangeu8", WIDTH, 2, [[Factor("table", ind_zero), Factor("table", lo_val)]]
    )


def _dense_from_float(fn, scale: int, tau: int, clamp=None) -> np.ndarray:
    lo, hi = clamp if clamp else (-(1 << 15), (1 << 15) - 1)
    denom = float(scale * tau)
    k = np.arange(1 << WIDTH, dtype=np.int64)
    x = np.where(k & SIGN_BIT, k - (1 << WIDTH), k)
    z = x / denom
    v = fn(z) * scale
    out = (np.sign(v) * np.floor(np.abs(v) + 0.5)).astype(np.int64)
    return np.clip(out, lo, hi)


def build_table(op: str, scale: int = 128, teleport: TeleportConfig | None = None) -> LookupTable:
    """Construct the table for one operator tag.

    Teleported tables store round(f(x_int/(S*tau))*S); table size is always
    2^16 entries or less.
    """
    op = op.lower()
    if op == "relu":
        return LookupTable("relu", decomposition=decompose_relu(WIDTH),
                           np_fast=lambda a: np.maximum(a, 0))
    if op == "gtez":
        return LookupTable("gtez", decomposition=decompose_gtez(),
                           np_fast=lambda a: (a >= 0).astype(np.int64))
    if op == "range_s":
        return LookupTable("range_s", decomposition=decompose_range_s(scale),
                           np_fast=lambda a: np.where(np.abs(a) < scale, a, 0))
    if op == "range16":
        return LookupTable("range16", decomposition=decompose_range16(),
                           np_fast=lambda a: a.copy())
    if op == "rangeu8":
        return LookupTable("rangeu8", decomposition=decompose_rangeu8(),
                           np_fast=lambda a: np.where((a >= 0) & (a < 256), a, 0))

    tau = teleport.tau if teleport else 1
    if op == "sigmoid":
        dense = _dense_from_float(
            lambda z: 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0))), scale, tau
        )
    elif op == "tanh":
        dense = _dense_from_float(np.tanh, scale, tau)
    elif op == "erf":
        dense = _dense_from_float(np.vectorize(math.erf), scale, tau)
    elif op == "exp":
        dense = _dense_from_float(
            lambda z: np.exp(np.minimum(z, 25.0)), scale, tau,
            clamp=(0, (1 << 15) - 1),
        )
    elif op == "rsqrt":
        dense = _dense_from_float(
            lambda z: np.where(z > 0, 1.0 / np.sqrt(np.where(z > 0, z, 1.0)), 0.0),
            scale, tau,
        )
    else:
        raise ValueError(f"no table builder for op '{op}'")
    return LookupTable(op, dense=dense)


# teleport defaults: tanh/erf/sigmoid compress by 4, exp range-reduces by 16
TAU_DEFAULT = 4
TAU_EXP = 16

_REGISTRY_CACHE: dict = {}


def default_registry(scale: int = 128) -> dict:
    """Tables keyed by operator tag, built with the documented defaults."""
    if scale in _REGISTRY_CACHE:
        return _REGISTRY_CACHE[scale]
    saturating = TeleportConfig(tau=TAU_DEFAULT, scale=scale)
    expcfg = TeleportConfig(tau=TAU_EXP, scale=scale)
    reg = _build_registry(scale, saturating, expcfg)
    _REGISTRY_CACHE[scale] = reg
    return reg


def _build_registry(scale, saturating, expcfg) -> dict:
    return {
        "relu": build_table("relu", scale),
        "range_s": build_table("range_s", scale),
        "range16": build_table("range16", scale),
        "rangeu8": build_table("rangeu8", scale),
        "gtez": build_table("gtez", scale),
        "sigmoid": build_table("sigmoid", scale, saturating),
        "tanh": build_table("tanh", scale, saturating),
        "erf": build_table("erf", scale, saturating),
        "exp": build_table("exp", scale, expcfg),
        "rsqrt": build_table("rsqrt", scale),
    }
