"""Exact arithmetic in a prime field GF(q).

All protocol values (shares, blinding numbers, chain keys, session keys) are
canonical residues mod a prime q.  This module provides the element and
vector types plus the one piece of linear algebra the sharing layer needs:
expressing a vector as a linear combination of others (Gaussian elimination
with free coefficients fixed to zero).
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .errors import ConfigurationError, ContractViolation

MAX_MODULUS = 1 << 63

# Deterministic Miller-Rabin witness set, valid for all n < 3.3e24 (> 2^64).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test for n < 2^64."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeField:
    """Shared context for one prime modulus q."""

    __slots__ = ("q",)

    def __init__(self, q: int):
        if not isinstance(q, int) or not 2 <= q < MAX_MODULUS:
            raise ConfigurationError(f"modulus must be an integer in [2, 2^63), got {q!r}")
        if not is_prime(q):
            raise ConfigurationError(f"modulus {q} is not prime")
        self.q = q

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value % self.q, self)

    def vector(self, values: Iterable[int]) -> "FieldVector":
        return FieldVector(tuple(v % self.q for v in values), self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def element_bits(self) -> int:
        """Bits needed per element: ceil(log2 q)."""
        return (self.q - 1).bit_length()

    def element_width(self) -> int:
        """Wire bytes per element (bit width rounded up to whole bytes)."""
        return (self.element_bits() + 7) // 8

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("PrimeField", self.q))

    def __repr__(self) -> str:
        return f"PrimeField({self.q})"


class FieldElement:
    """Canonical residue in [0, q). Immutable."""

    __slots__ = ("value", "field")

    def __init__(self, value: int, field: PrimeField):
        if not 0 <= value < field.q:
            raise ContractViolation(f"non-canonical value {value} for modulus {field.q}")
        self.value = value
        self.field = field

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise ContractViolation(f"expected FieldElement, got {type(other).__name__}")
        if other.field.q != self.field.q:
            raise ContractViolation(f"modulus mismatch: {self.field.q} vs {other.field.q}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement((self.value + other.value) % self.field.q, self.field)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement((self.value - other.value) % self.field.q, self.field)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value * other.value % self.field.q, self.field)

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value % self.field.q, self.field)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return FieldElement(pow(self.value, self.field.q - 2, self.field.q), self.field)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldElement)
            and other.field.q == self.field.q
            and other.value == self.value
        )

    def __hash__(self) -> int:
        return hash((self.field.q, self.value))

    def __repr__(self) -> str:
        return f"{self.value}@GF({self.field.q})"


class FieldVector:
    """Fixed-length tuple of residues over one field. Immutable and hashable."""

    __slots__ = ("values", "field")

    def __init__(self, values: tuple[int, ...], field: PrimeField):
        if len(values) < 1:
            raise ContractViolation("vectors must have length >= 1")
        for v in values:
            if not 0 <= v < field.q:
                raise ContractViolation(f"non-canonical component {v} for modulus {field.q}")
        self.values = values
        self.field = field

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> FieldElement:
        return FieldElement(self.values[i], self.field)

    def _check(self, other: "FieldVector") -> None:
        if not isinstance(other, FieldVector):
            raise ContractViolation(f"expected FieldVector, got {type(other).__name__}")
        if other.field.q != self.field.q:
            raise ContractViolation(f"modulus mismatch: {self.field.q} vs {other.field.q}")
        if len(other) != len(self):
            raise ContractViolation(f"length mismatch: {len(self)} vs {len(other)}")

    def dot(self, other: "FieldVector") -> FieldElement:
        self._check(other)
        q = self.field.q
        acc = 0
        for a, b in zip(self.values, other.values):
            acc += a * b
        return FieldElement(acc % q, self.field)

    def __add__(self, other: "FieldVector") -> "FieldVector":
        self._check(other)
        q = self.field.q
        return FieldVector(tuple((a + b) % q for a, b in zip(self.values, other.values)), self.field)

    def scale(self, c: FieldElement) -> "FieldVector":
        if c.field.q != self.field.q:
            raise ContractViolation(f"modulus mismatch: {self.field.q} vs {c.field.q}")
        q = self.field.q
        return FieldVector(tuple(a * c.value % q for a in self.values), self.field)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldVector)
            and other.field.q == self.field.q
            and other.values == self.values
        )

    def __hash__(self) -> int:
        return hash((self.field.q, self.values))

    def __repr__(self) -> str:
        return f"{self.values}@GF({self.field.q})"


def dot(u: FieldVector, v: FieldVector) -> FieldElement:
    """Inner product modulo q."""
    return u.dot(v)


def solve_combination(
    targets: Sequence[FieldVector], goal: FieldVector
) -> Optional[list[FieldElement]]:
    """Express `goal` as a linear combination of `targets`, if possible.

    Gaussian elimination over GF(q): first nonzero pivot per column, free
    coefficients fixed to zero.  Returns the coefficient list (one per
    target, in order) or None when `goal` lies outside the span.  Any
    returned combination is re-multiplied out and checked before return.
    """
    field = goal.field
    for t in targets:
        goal._check(t)
    q = field.q
    n = len(targets)
    l = len(goal)
    # One row per dimension; columns are the unknown coefficients, last
    # column is the goal.
    rows = [[t.values[r] for t in targets] + [goal.values[r]] for r in range(l)]
    pivots: list[tuple[int, int]] = []
    rank = 0
    for col in range(n):
        pivot_row = next((r for r in range(rank, l) if rows[r][col]), None)
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        inv = pow(rows[rank][col], q - 2, q)
        rows[rank] = [x * inv % q for x in rows[rank]]
        for r in range(l):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(a - f * b) % q for a, b in zip(rows[r], rows[rank])]
        pivots.append((rank, col))
        rank += 1
        if rank == l:
            break
    # Rows without a pivot are all-zero on the coefficient side; a nonzero
    # goal entry there means the system is inconsistent.
    for r in range(rank, l):
        if rows[r][n]:
            return None
    coeffs = [0] * n
    for r, c in pivots:
        coeffs[c] = rows[r][n]
    # Recombination check: the solution must reproduce the goal exactly.
    for r in range(l):
        acc = sum(coeffs[k] * targets[k].values[r] for k in range(n)) % q
        if acc != goal.values[r]:
            raise AssertionError("solver produced a non-solution; this is a bug")
    return [FieldElement(c, field) for c in coeffs]
