"""Multilinear-extension primitives.

Index convention, used everywhere in the pipeline: a polynomial over n
variables stores evaluations in lexicographic order with variable 0 as the
most significant bit of the index.  eq_shift and lt depend on this
orientation; do not reorder.
"""

from __future__ import annotations

from .field import P, fe


class MultilinearPoly:
    """Dense evaluation table over the boolean hypercube {0,1}^n."""

    __slots__ = ("num_vars", "evals")

    def __init__(self, num_vars: int, evals):
        if len(evals) != 1 << num_vars:
            raise ValueError(
                f"expected {1 << num_vars} evaluations for {num_vars} vars, got {len(evals)}"
            )
        self.num_vars = num_vars
        self.evals = list(evals)

    @classmethod
    def constant(cls, num_vars: int, c) -> "MultilinearPoly":
        return cls(num_vars, [fe(c)] * (1 << num_vars))

    @classmethod
    def from_ints(cls, values, num_vars: int | None = None) -> "MultilinearPoly":
        """Pad a value list with zeros up to the next power of two."""
        n = len(values)
        if num_vars is None:
            num_vars = max(1, (n - 1).bit_length()) if n > 1 else 0
            while (1 << num_vars) < n:
                num_vars += 1
        evals = [v % P for v in values] + [0] * ((1 << num_vars) - n)
        return cls(num_vars, evals)

    def evaluate(self, point) -> int:
        return mle_evaluate(self, point)

    def __eq__(self, other):
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self.num_vars == other.num_vars and [int(x) % P for x in self.evals] == [
            int(x) % P for x in other.evals
        ]

    def __repr__(self):
        return f"MultilinearPoly(num_vars={self.num_vars})"


def mle_evaluate(poly: MultilinearPoly, point) -> int:
    """Evaluate the MLE at an arbitrary field point (O(2^n) fold)."""
    if len(point) != poly.num_vars:
        raise ValueError(
            f"point has {len(point)} coordinates, polynomial has {poly.num_vars} variables"
        )
    evals = poly.evals
    for r in point:  # bind variable 0 (MSB) first
        half = len(evals) >> 1
        evals = [(evals[i] + r * (evals[half + i] - evals[i])) % P for i in range(half)]
    return int(evals[0]) % P


def fold_first_var(evals: list, r) -> list:
    """Bind the most significant variable of a dense table to r."""
    half = len(evals) >> 1
    return [(evals[i] + r * (evals[half + i] - evals[i])) % P for i in range(half)]


def eq_evaluate(r, x) -> int:
    """eq(r, x) = prod_i (r_i x_i + (1-r_i)(1-x_i))."""
    if len(r) != len(x):
        raise ValueError("eq: dimension mismatch")
    acc = 1
    for a, b in zip(r, x):
        acc = acc * ((a * b + (1 - a) * (1 - b)) % P) % P
    return int(acc)


def eq_table(r) -> list:
    """Dense table [eq(r, x)] for all boolean x, lex order, O(2^n)."""
    table = [1]
    for ri in r:
        nxt = [0] * (2 * len(table))
        for i, v in enumerate(table):
            hi = v * ri % P
            nxt[2 * i] = (v - hi) % P
            nxt[2 * i + 1] = hi
        table = nxt
    return table


def eq_shift_evaluate(r, t) -> int:
    """MLE of the successor indicator [int(t) = int(r) + 1] (big-endian).

    Sum over the carry position i (lowest zero bit of r): below i all bits
    of r are 1 and of t are 0, at i they are 0/1, above i they match.
    """
    if len(r) != len(t):
        raise ValueError("eq_shift: dimension mismatch")
    n = len(r)
    total = 0
    prefix_eq = 1  # prod_{j<i} eq(r_j, t_j)
    suffix = [1] * (n + 1)  # suffix[i] = prod_{j>=i} r_j (1 - t_j)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] * (r[i] * (1 - t[i]) % P) % P
    for i in range(n):
        term = (1 - r[i]) * t[i] % P
        total = (total + prefix_eq * term % P * suffix[i + 1]) % P
        prefix_eq = prefix_eq * ((r[i] * t[i] + (1 - r[i]) * (1 - t[i])) % P) % P
    return int(total)


def eq_shift_table(r) -> list:
    """[eq_shift(r, t)] over boolean t: the eq table shifted right by one."""
    e = eq_table(r)
    return [0] + e[:-1]


def lt_evaluate(j, r) -> int:
    """MLE of [int(j) < int(r)]: sum_i (1-j_i) r_i prod_{k<i} eq(j_k, r_k)."""
    if len(j) != len(r):
        raise ValueError("lt: dimension mismatch")
    total = 0
    prefix_eq = 1
    for a, b in zip(j, r):
        total = (total + prefix_eq * ((1 - a) * b % P)) % P
        prefix_eq = prefix_eq * ((a * b + (1 - a) * (1 - b)) % P) % P
    return int(total)


def lt_table(r) -> list:
    """Dense table [lt(bits(j), r)] over boolean j, O(2^n).

    Joint recursion on (lt, eq) tables, appending one low-order bit per step.
    """
    lt = [0]
    eq = [1]
    for ri in r:
        m = len(lt)
        nlt = [0] * (2 * m)
        neq = [0] * (2 * m)
        for i in range(m):
            e = eq[i]
            l = lt[i]
            nlt[2 * i] = (l + e * ri) % P
            nlt[2 * i + 1] = l
            ehi = e * ri % P
            neq[2 * i] = (e - ehi) % P
            neq[2 * i + 1] = ehi
        lt, eq = nlt, neq
    return lt
